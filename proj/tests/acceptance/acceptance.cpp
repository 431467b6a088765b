// One PASS/FAIL line per acceptance criterion, with the measured values and
// runtime. Exit status is nonzero when any criterion fails.

#include "../support/oracles.hpp"
#include "qpf/qpf.hpp"

#include <sys/wait.h>

#include <chrono>
#include <cstdio>
#include <functional>
#include <map>
#include <numbers>
#include <random>
#include <sstream>

using namespace qpf;
using std::numbers::pi;

namespace {

struct Outcome {
    bool pass = true;
    std::ostringstream detail;

    void require(bool ok, const std::string& what) {
        if (!ok) {
            pass = false;
            detail << " [violated: " << what << "]";
        }
    }
};

int failures = 0;

void criterion(int id, const char* title, double budget_s, const std::function<void(Outcome&)>& body) {
    Outcome o;
    const auto t0 = std::chrono::steady_clock::now();
    try {
        body(o);
    } catch (const std::exception& e) {
        o.pass = false;
        o.detail << " [exception: " << e.what() << "]";
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (budget_s > 0 && secs >= budget_s) {
        o.pass = false;
        o.detail << " [runtime above " << budget_s << " s]";
    }
    std::printf("%s criterion %2d: %s |%s | runtime %.2f s\n", o.pass ? "PASS" : "FAIL", id, title, o.detail.str().c_str(),
                secs);
    std::fflush(stdout);
    failures += !o.pass;
}

Vector random_voltage(int n_bus, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> mag(0.9, 1.1), ang(-0.3, 0.3);
    Vector u(2 * n_bus);
    for (int k = 0; k < n_bus; ++k) {
        const double m = mag(rng), a = ang(rng);
        u[2 * k] = m * std::cos(a);
        u[2 * k + 1] = m * std::sin(a);
    }
    return u;
}

int max_degree(const GridCase& gc) {
    int d = 0;
    for (const auto& nb : gc.adjacency()) d = std::max(d, static_cast<int>(nb.size()));
    return d;
}

std::string run_cli(const std::string& args, int& code) {
    const std::string cmd = std::string("'") + QPF_CLI_PATH + "' " + args + " 2>/dev/null";
    FILE* pipe = ::popen(cmd.c_str(), "r");
    if (!pipe) throw std::runtime_error("cannot start the CLI");
    std::string out;
    char buf[4096];
    std::size_t n;
    while ((n = std::fread(buf, 1, sizeof buf, pipe)) > 0) out.append(buf, n);
    const int status = ::pclose(pipe);
    code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    return out;
}

std::string case_arg(const std::string& name) { return "'" + (assets_dir() / "cases" / (name + ".json")).string() + "'"; }

void classical_baseline(Outcome& o) {
    std::mt19937_64 rng(1);
    for (const auto& name : fixture_names()) {
        const PowerFlowProblem p = build_quadratic_forms(load_fixture(name).grid);
        const auto [u, trace] = newton_raphson(p);
        double worst_fd = 0.0;
        for (const Vector& at : {flat_start(p.n_bus), u, random_voltage(p.n_bus, rng)}) {
            const Matrix J(jacobian(p, at));
            const Matrix Jfd =
                oracle::finite_difference_jacobian([&](const Vector& v) { return residual(p, v); }, at, 1e-6);
            worst_fd = std::max(worst_fd, (J - Jfd).cwiseAbs().maxCoeff() / J.cwiseAbs().maxCoeff());
        }
        o.detail << " " << name << ": iters " << trace.iterations << ", |F| " << trace.records.back().residual
                 << ", fd rel " << worst_fd << ";";
        o.require(trace.converged && trace.records.back().residual < 1e-8, name + " converges below 1e-8");
        o.require(trace.iterations <= 10, name + " within 10 iterations");
        o.require(worst_fd < 1e-5, name + " Jacobian vs finite differences");
    }
}

void sparsity_claim(Outcome& o) {
    int s3 = 0, s14 = 0;
    for (const auto& name : fixture_names()) {
        const Fixture f = load_fixture(name);
        const PowerFlowProblem p = build_quadratic_forms(f.grid);
        const auto [u, trace] = newton_raphson(p);
        int s_max = 0, s_min = 1 << 30;
        for (const Vector& at : {flat_start(p.n_bus), u}) {
            const int s = structural_sparsity(jacobian(p, at));
            s_max = std::max(s_max, s);
            s_min = std::min(s_min, s);
        }
        const int d = max_degree(f.grid);
        o.detail << " " << name << ": s " << s_max << " (N_bus " << p.n_bus << ", max degree " << d << ");";
        o.require(s_max == s_min, name + " sparsity constant along the run");
        o.require(s_max == 2 * (d + 1), name + " sparsity fixed by max degree, not by size");
        if (name == "case3") s3 = s_max;
        if (name == "case14") s14 = s_max;
    }
    o.detail << " raw case3 -> case14: " << s3 << " -> " << s14
             << " (a 3-bus graph caps s at 6; case14 has a degree-5 bus);";
    o.require(s14 <= 30, "case14 sparsity at most 30");
}

void condition_shape(Outcome& o) {
    const auto [u, trace] = newton_raphson(build_quadratic_forms(load_fixture("case14").grid));
    std::size_t argmax = 0;
    o.detail << " kappa:";
    for (std::size_t k = 0; k < trace.records.size(); ++k) {
        o.detail << " " << trace.records[k].kappa;
        if (trace.records[k].kappa > trace.records[argmax].kappa) argmax = k;
    }
    o.detail << "; argmax " << argmax << " of 0.." << trace.records.size() - 1 << ";";
    o.require(trace.converged, "case14 converges");
    o.require(argmax > 0 && argmax + 1 < trace.records.size(), "argmax strictly inside the iteration range");
}

void hhl_correctness(Outcome& o) {
    std::mt19937_64 rng(4);
    double worst = 1.0;
    HHLConfig cfg;
    cfg.clock_bits = 5;
    cfg.window = ClockWindow{15.5 * 0.25, 2 * pi / (32 * 0.25)};
    for (int trial = 0; trial < 50; ++trial) {
        const int n = 1 + trial % 3, dim = 1 << n;
        std::vector<int> ks(31);
        for (int i = 0; i < 31; ++i) ks[i] = i + 1;
        std::shuffle(ks.begin(), ks.end(), rng);
        CVector ev(dim);
        for (int i = 0; i < dim; ++i) ev[i] = (ks[i] - 15.5) * 0.25;
        Eigen::SelfAdjointEigenSolver<CMatrix> es(oracle::random_hermitian(dim, rng));
        const CMatrix A = es.eigenvectors() * ev.asDiagonal() * es.eigenvectors().adjoint();
        const CVector b = oracle::random_state(dim, rng);
        const HHLResult r = hhl_solve(A, b, cfg);
        worst = std::min(worst, oracle::fidelity(r.x_state, A.inverse() * b));
    }
    Matrix D = Matrix::Zero(2, 2);
    D(0, 0) = 1;
    D(1, 1) = 0.5;
    HHLConfig c2;
    c2.clock_bits = 2;
    c2.window = ClockWindow{0.0, pi};
    const HHLResult r = hhl_solve(D, Vector(Vector::Ones(2) / std::sqrt(2.0)), c2);
    CVector expect(2);
    expect << 1, 2;
    const double fd = oracle::fidelity(r.x_state, expect);
    o.detail << " worst fidelity over 50 dyadic systems " << 1 - worst << " below 1; diag(1,0.5) fidelity " << fd << ";";
    o.require(worst >= 1 - 1e-8, "random dyadic systems fidelity >= 1 - 1e-8");
    o.require(fd > 0.999, "diag(1, 0.5) fidelity > 0.999");
}

void qpf_hhl_end_to_end(Outcome& o) {
    const PowerFlowProblem p = build_quadratic_forms(load_fixture("case3").grid);
    HHLConfig hc;
    hc.clock_bits = 8;
    const auto [u, trace] = qpf_hhl(p, NewtonConfig{}, hc, DownloadConfig{});
    const auto [uc, tc] = newton_raphson(p);
    const double err = (u - uc).cwiseAbs().maxCoeff();
    double min_cos = 1.0;
    for (const auto& r : trace.records)
        if (r.direction_cosine) min_cos = std::min(min_cos, *r.direction_cosine);
    o.detail << " iters " << trace.iterations << ", |u - u_newton|_inf " << err << ", min direction cosine " << min_cos
             << ";";
    o.require(trace.converged, "QPF-HHL converges");
    o.require(err < 1e-4, "matches classical Newton to 1e-4");
    o.require(min_cos >= 0.999, "direction cosine >= 0.999");
}

void lcu_properties(Outcome& o) {
    std::mt19937_64 rng(6);
    double worst_rt = 0.0, worst_parseval = 0.0;
    for (int n = 1; n <= 6; ++n) {
        const CMatrix A = oracle::random_hermitian(1 << n, rng);
        const LCUDecomposition d = pauli_decompose(A, 0.0);
        worst_rt = std::max(worst_rt, (reconstruct(d) - A).cwiseAbs().maxCoeff());
        double s = 0.0;
        for (const auto& t : d.terms) s += t.coeff * t.coeff;
        worst_parseval = std::max(worst_parseval, std::abs(A.squaredNorm() - std::ldexp(s, n)) / A.squaredNorm());
    }
    const auto Js = harvest_jacobians(load_fixture("case14").grid, 102, 0);
    std::vector<CMatrix> mats;
    for (const auto& J : Js) mats.push_back(hermitian_dilation(Matrix(J), Vector::Zero(J.rows())).matrix.cast<Complex>());
    const LCUStatistics st = lcu_statistics(mats);
    o.detail << " round-trip max err " << worst_rt << ", Parseval rel err " << worst_parseval << "; case14 102 dilations ("
             << mats.front().rows() << "x" << mats.front().rows() << "): " << st.mean << " +/- " << st.std
             << " terms of 4096 (reference 835 +/- 8);";
    o.require(worst_rt < 1e-12, "round trip exact for n <= 6");
    o.require(worst_parseval < 1e-10, "Parseval identity");
    o.require(st.mean >= 100 && st.mean <= 1000, "mean count in [10^2, 10^3]");
    o.require(st.mean < 4096 / 4.0, "mean count far below 4096");
}

void vqls_properties(Outcome& o) {
    std::mt19937_64 rng(7);
    std::normal_distribution<double> g;
    static const char letters[] = "IXYZ";
    int violations = 0;
    for (int t = 0; t < 300; ++t) {
        const int n = 1 + t % 4;
        LCUDecomposition A{n, {{PauliString(std::string(static_cast<std::size_t>(n), 'I')), 3.0}}};
        for (int k = 0; k < 5; ++k) {
            std::string w;
            for (int q = 0; q < n; ++q) w += letters[rng() % 4];
            A.terms.push_back({PauliString(w), g(rng)});
        }
        Vector b(1 << n);
        for (Eigen::Index i = 0; i < b.size(); ++i) b[i] = g(rng);
        const Ansatz x = Ansatz::random(n, 1 + t % 3, derive_seed(70, static_cast<std::uint64_t>(t)));
        const double lg = vqls_loss_global(x, A, StateVector::from_real(b.normalized()));
        const double ll = vqls_loss_local(x, A, StatePrep(b));
        if (!(ll <= lg + 1e-9 && lg <= n * ll + 1e-9)) ++violations;
    }

    const LCUDecomposition I3{3, {{PauliString("III"), 1.0}}};
    const Vector target = apply_ansatz(Ansatz::random(3, 0, 71)).amplitudes().real();
    OptimizerConfig id_opt;
    id_opt.eta = 0.5;
    id_opt.max_steps = 200;
    const VqlsResult id = vqls_solve(I3, target, Ansatz::random(3, 0, 72), id_opt);

    // 6-qubit instance: raw flat-start case14 Jacobian, dilated to 64, top 3 Pauli terms.
    const PowerFlowProblem p = build_quadratic_forms(load_fixture("case14").grid);
    const Vector u0 = flat_start(p.n_bus);
    const EmbeddedStep e = embed_newton_system(jacobian(p, u0), residual(p, u0), false);
    const LCUDecomposition A3 = truncate(pauli_decompose(e.dilation.matrix), 3);
    OptimizerConfig opt;
    opt.eta = 0.5;
    opt.max_steps = 500;
    opt.tol = 1e-9;
    const VqlsResult r = vqls_solve(A3, e.dilation.rhs, Ansatz::random(6, 1, derive_seed(7, 0)), opt);
    const StateVector psi = apply_ansatz(r.descent.ansatz);
    const double lg = vqls_loss_global(r.descent.ansatz, A3, StateVector::from_real(e.dilation.rhs.normalized()));
    const CMatrix M3 = reconstruct(A3);
    const CVector exact = M3.fullPivLu().solve(CVector(e.dilation.rhs.cast<Complex>()));
    const double sol_infid = 1 - oracle::fidelity(psi.amplitudes(), exact);

    o.detail << " sandwich violations " << violations << "/300; identity loss " << id.descent.final_loss << " in "
             << id.descent.steps << " steps; 6-qubit 3-term 1-layer: steps " << r.descent.steps << ", L_L "
             << r.descent.final_loss << ", infidelity 1 - |<b|A psi>|^2/|A psi|^2 = " << lg
             << ", infidelity vs exact truncated solution " << sol_infid << ";";
    o.require(violations == 0, "sandwich bound on 300 triples");
    o.require(id.descent.final_loss < 1e-6, "identity instance below 1e-6");
    o.require(r.descent.steps <= 500, "within 500 steps");
    o.require(lg <= 0.1, "6-qubit instance infidelity at most 10%");
}

void vqpf_properties(Outcome& o) {
    const GridCase gc = parse_case(R"({"buses":[{"id":1,"kind":"slack","v_set":1.0},
        {"id":2,"kind":"pq","p_load":0.5,"q_load":0.2}],"branches":[{"from":1,"to":2,"r":0.02,"x":0.1}]})");
    const PowerFlowProblem p = build_quadratic_forms(gc);
    const auto [uc, tc] = newton_raphson(p);
    const VQPFProblem v = VQPFProblem::from_power_flow(p);
    const VqpfResult r = vqpf_solve_restarts(v, 2, OptimizerConfig{0.005, 3000, 1e-10, {}, 0}, 8);
    const double err = (r.u - uc).cwiseAbs().maxCoeff();
    Vector psi = Vector::Zero(Eigen::Index{1} << v.n);
    psi.head(p.dim()) = uc;
    const double at_truth = vqpf_objective(v).combine(vqpf_expectations(v, StateVector::from_real(psi)));
    o.detail << " |u - u_newton|_inf " << err << " after " << r.descent.steps << " steps (loss " << r.descent.final_loss
             << "); loss at the embedded Newton solution " << at_truth << ";";
    o.require(err < 1e-3, "2-bus toy within 1e-3 of Newton");
    o.require(at_truth < 1e-15, "loss vanishes at the true solution up to rounding");
}

void shadow_properties(Outcome& o) {
    std::mt19937_64 rng(9);
    const StateVector s = StateVector::from_amplitudes(oracle::random_state(8, rng));
    const std::size_t N = 30000;
    const auto snaps = collect_shadows(s, N, 90);
    double worst_z = 0.0;
    for (const char* w : {"XII", "IZI", "YYI", "XZY", "ZZZ", "IIX"}) {
        const PauliString pw(w);
        double sum = 0.0;
        for (const auto& sn : snaps) sum += single_snapshot_estimate(sn, pw);
        const double truth = s.amplitudes().dot(oracle::pauli_matrix(w) * s.amplitudes()).real();
        const double sigma = std::sqrt((std::pow(3.0, pw.weight()) - truth * truth) / N);
        worst_z = std::max(worst_z, std::abs(sum / N - truth) / sigma);
    }
    StateVector bell(2);
    bell.h(0);
    bell.cnot(0, 1);
    const auto bs = collect_shadows(bell, 100000, 91);
    const Vector x = reconstruct_real_state(bs, std::nullopt, 2);
    const double fid = std::pow(x.dot(bell.amplitudes().real()), 2);

    ShadowAccumulator left(PauliString("ZZ"), 10), right(PauliString("ZZ"), 10), whole(PauliString("ZZ"), 10);
    for (std::size_t i = 0; i < bs.size(); ++i) (i < 37013 ? left : right).add(bs[i]);
    whole.add(bs);
    left.merge(right);
    const bool merged_equal = left.estimate().value == whole.estimate().value;

    o.detail << " worst |bias|/sigma " << worst_z << "; Bell fidelity " << fid << "; merged == union " << merged_equal
             << ";";
    o.require(worst_z <= 3.0, "unbiased within 3 sigma");
    o.require(fid > 0.99, "Bell reconstruction fidelity > 0.99");
    o.require(merged_equal, "merged batches equal the union estimate");
}

void resource_tables(Outcome& o) {
    // Published table; 0 marks a printed "...".
    const std::vector<std::int64_t> cols{1, 4, 9, 16, 25, 36, 49, 64, 81, 100};
    const std::map<int, std::vector<std::int64_t>> table{
        {1, {75, 0, 0, 0, 0, 0, 0, 0, 0, 0}},
        {2, {273, 274, 575, 2215, 0, 0, 0, 0, 0, 0}},
        {3, {613, 1500, 3110, 5086, 5970, 8853, 15048, 22922, 0, 0}},
        {4, {1161, 3090, 6466, 10071, 16165, 23831, 33136, 42836, 49425, 52547}},
        {5, {2663, 7309, 14553, 23229, 33493, 45654, 58951, 79403, 99607, 124791}},
        {6, {3542, 9845, 18376, 33799, 50641, 719064, 97064, 126624, 160138, 192351}},
    };
    double rmin = 1e9, rmax = 0.0, worst_factor = 0.0;
    bool counts_ok = true, monotone = true, flags_ok = true;
    std::map<std::pair<int, std::int64_t>, std::int64_t> ours;
    std::ostringstream mismatched_flags, skipped;
    for (int n = 1; n <= 6; ++n) {
        for (std::size_t j = 0; j < cols.size(); ++j) {
            const std::int64_t l = cols[j], cap = std::int64_t{1} << (2 * n);
            const bool flag = l > cap;
            const auto b = hhl_depth_breakdown(DepthQuery{n, std::min(l, cap), 10, 0});
            ours[{n, l}] = b.total.depth;
            if (!flag) {
                const double ratio = static_cast<double>(b.total.depth) / static_cast<double>(b.qpe.depth);
                rmin = std::min(rmin, ratio);
                rmax = std::max(rmax, ratio);
            }
            counts_ok = counts_ok && b.total.ctrl_rotation - 2 * b.qpe.ctrl_rotation == eigeninversion_gate_count(n) &&
                        eigeninversion_gate_count(n) == (std::int64_t{1} << n) - 1;
            const std::int64_t printed = table.at(n)[j];
            const bool printed_flag = printed == 0;
            if (flag != printed_flag) {
                // The table caption caps L at 4^n; a printed "..." with L <= 4^n contradicts it.
                mismatched_flags << " (" << n << "," << l << ")";
                if (flag || l > cap) flags_ok = false;
            }
            if (!printed_flag && !flag) {
                if (n == 6 && l == 36) {
                    skipped << " (6,36) printed " << printed << " vs ours " << b.total.depth;
                    continue;
                }
                const double f = std::max(static_cast<double>(b.total.depth) / printed, static_cast<double>(printed) / b.total.depth);
                worst_factor = std::max(worst_factor, f);
            }
        }
    }
    for (int n = 1; n <= 6; ++n)
        for (std::size_t j = 1; j < cols.size(); ++j) monotone = monotone && ours[{n, cols[j]}] >= ours[{n, cols[j - 1]}];
    for (std::int64_t l : cols)
        for (int n = 2; n <= 6; ++n) monotone = monotone && ours[{n, l}] >= ours[{n - 1, l}];
    o.detail << " HHL/QPE depth ratio in [" << rmin << ", " << rmax << "]; worst per-cell factor vs table "
             << worst_factor << "; first cells n=1: " << ours[{1, 1}] << " (75), n=2: " << ours[{2, 1}]
             << " (273); excluded typo" << skipped.str() << "; flag differences vs printed '...':"
             << (mismatched_flags.str().empty() ? " none" : mismatched_flags.str())
             << " (a printed '...' at L <= 4^n contradicts the table's own L > 4^n rule);";
    o.require(rmin >= 1.8 && rmax <= 2.6, "HHL/QPE ratio in [1.8, 2.6]");
    o.require(counts_ok, "eigeninversion count 2^c - 1");
    o.require(worst_factor <= 3.0, "every cell within x3");
    o.require(monotone, "monotone in n and L");
    o.require(flags_ok, "flags exactly where L > 4^n, matching every printed '...' consistent with that rule");
}

void qram_budget(Outcome& o) {
    const double eps = qram_epsilon_for(1e-4, 1e5);
    const QramBudget b;
    const double floor = qram_epsilon_hardware(b);
    o.detail << " epsilon(N=1e5, 1-F=1e-4, log2) " << eps << "; hardware floor at kappa+gamma=0 " << floor << ";";
    o.require(std::abs(eps - 1.45e-6) / 1.45e-6 < 0.01, "epsilon about 1.45e-6");
    o.require(std::abs(floor - 1e-8) < 1e-14, "floor (g_d/nu)^2 = 1e-8");
}

void determinism(Outcome& o) {
    const std::vector<std::string> cmds{
        "solve " + case_arg("case3") + " --method newton",
        "solve " + case_arg("case3") + " --method hhl --clock-bits 6 --downloader shadows --shots 20000 --seed 4",
        "solve " + case_arg("case3") + " --method vqls --layers 2 --inner-steps 150 --max-iter 2 --seed 4",
        "lcu " + case_arg("case14") + " --stats --count 6 --seed 2",
        "resources --n 4 --l 16",
        "qram --n-data 1000 --n-data 100000 --target-infidelity 1e-4 --csv",
        "diagnostics " + case_arg("case14"),
    };
    int identical = 0;
    for (const auto& c : cmds) {
        int c1 = 0, c2 = 0;
        const std::string a = run_cli(c, c1), b = run_cli(c, c2);
        const bool same = c1 == c2 && a == b && !a.empty();
        identical += same;
        o.require(same, "byte-identical output for: " + c);
    }
    o.detail << " " << identical << "/" << cmds.size() << " commands byte-identical across repeated runs;";
}

}  // namespace

int main() {
    criterion(1, "classical Newton baseline", 1.0, classical_baseline);
    criterion(2, "Jacobian sparsity", 1.0, sparsity_claim);
    criterion(3, "condition-number shape on case14", 0, condition_shape);
    criterion(4, "HHL correctness", 10.0, hhl_correctness);
    criterion(5, "QPF-HHL end to end on case3", 60.0, qpf_hhl_end_to_end);
    criterion(6, "LCU decomposition", 30.0, lcu_properties);
    criterion(7, "VQLS", 300.0, vqls_properties);
    criterion(8, "VQPF", 60.0, vqpf_properties);
    criterion(9, "classical shadows", 120.0, shadow_properties);
    criterion(10, "resource tables", 30.0, resource_tables);
    criterion(11, "QRAM budget", 1.0, qram_budget);
    criterion(12, "CLI determinism", 0, determinism);
    std::printf("%d of 12 criteria failed\n", failures);
    return failures == 0 ? 0 : 1;
}
