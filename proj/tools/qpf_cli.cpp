// qpf: command-line front end for the power-flow solvers and resource tools.
// Exit codes: 0 success or convergence, 2 non-convergence, 1 input error.

#include "qpf/qpf.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace {

using nlohmann::json;
using namespace qpf;

constexpr int kExitOk = 0;
constexpr int kExitInput = 1;
constexpr int kExitNotConverged = 2;

const std::vector<std::string> kSubcommands{"solve", "lcu", "resources", "qram", "diagnostics"};

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw InvalidArgument("cannot open file " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

json read_json_file(const std::string& path) {
    try {
        return json::parse(read_file(path));
    } catch (const json::exception& e) {
        throw ParseError("malformed JSON in " + path + ": " + e.what());
    }
}

// Output is assembled completely before anything is written, so failing runs
// never leave a partial file behind.
void emit(const std::string& out_path, const std::string& content) {
    if (out_path.empty() || out_path == "-") {
        std::cout << content;
        std::cout.flush();
        return;
    }
    std::ofstream out(out_path, std::ios::binary | std::ios::trunc);
    if (!out) throw InvalidArgument("cannot write output file " + out_path);
    out << content;
    if (!out) throw InvalidArgument("failed writing output file " + out_path);
}

std::string dump(const json& j) { return j.dump(2) + "\n"; }

json json_number(double v) {
    if (std::isfinite(v)) return v;
    if (std::isnan(v)) return "nan";
    return v > 0 ? "inf" : "-inf";
}

// A config file holds a flat object keyed by long option names without dashes.
// Its entries become tokens placed right after the subcommand, so flags given
// on the command line come later and win.
std::vector<std::string> expand_config(std::vector<std::string> args) {
    std::optional<std::string> config_path;
    for (std::size_t i = 0; i < args.size(); ++i) {
        if (args[i] == "--config") {
            if (i + 1 >= args.size()) throw InvalidArgument("--config needs a file argument");
            config_path = args[i + 1];
            args.erase(args.begin() + static_cast<std::ptrdiff_t>(i), args.begin() + static_cast<std::ptrdiff_t>(i + 2));
            break;
        }
        if (args[i].rfind("--config=", 0) == 0) {
            config_path = args[i].substr(9);
            args.erase(args.begin() + static_cast<std::ptrdiff_t>(i));
            break;
        }
    }
    if (!config_path) return args;
    const json cfg = read_json_file(*config_path);
    if (!cfg.is_object()) throw InvalidArgument("config file must hold a JSON object");
    std::size_t sub = args.size();
    for (std::size_t i = 0; i < args.size(); ++i)
        if (std::find(kSubcommands.begin(), kSubcommands.end(), args[i]) != kSubcommands.end()) {
            sub = i;
            break;
        }
    if (sub == args.size()) throw InvalidArgument("--config needs a subcommand");
    auto scalar = [](const json& v) -> std::string {
        if (v.is_string()) return v.get<std::string>();
        if (v.is_number() || v.is_boolean()) return v.dump();
        throw InvalidArgument("config values must be scalars or arrays of scalars");
    };
    std::vector<std::string> injected;
    for (const auto& [key, value] : cfg.items()) {
        const std::string flag = "--" + key;
        if (value.is_boolean()) {
            if (value.get<bool>()) injected.push_back(flag);
        } else if (value.is_array()) {
            injected.push_back(flag);
            for (const auto& v : value) injected.push_back(scalar(v));
        } else {
            injected.push_back(flag);
            injected.push_back(scalar(value));
        }
    }
    args.insert(args.begin() + static_cast<std::ptrdiff_t>(sub + 1), injected.begin(), injected.end());
    return args;
}

json record_to_json(const IterationRecord& r) {
    json j{{"iter", r.iter},
           {"residual", json_number(r.residual)},
           {"kappa", json_number(r.kappa)},
           {"sparsity", r.sparsity},
           {"step_norm", json_number(r.step_norm)}};
    if (r.direction_cosine) j["direction_cosine"] = json_number(*r.direction_cosine);
    if (r.success_prob) j["success_prob"] = json_number(*r.success_prob);
    if (r.inner_iterations) j["inner_iterations"] = *r.inner_iterations;
    return j;
}

json voltages_to_json(const GridCase& gc, const Vector& u) {
    json buses = json::array();
    for (int k = 0; k < gc.n_bus(); ++k) {
        const double re = u[2 * k], im = u[2 * k + 1];
        buses.push_back({{"id", gc.original_ids.empty() ? k + 1 : gc.original_ids[static_cast<std::size_t>(k)]},
                         {"re", re},
                         {"im", im},
                         {"vm", std::hypot(re, im)},
                         {"va_deg", std::atan2(im, re) * 180.0 / std::numbers::pi}});
    }
    return buses;
}

json vector_to_json(const Vector& v) {
    json a = json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(json_number(v[i]));
    return a;
}

struct SolveOptions {
    std::string case_path;
    std::string method = "newton";
    int max_iter = 20;
    double tol = 1e-8;
    int clock_bits = 8;
    int trotter_m = 10;
    std::string evolution = "exact";
    std::optional<int> layers;
    std::optional<double> eta;
    int inner_steps = 3000;
    std::optional<double> loss_tol;
    int restarts = 8;
    std::string downloader = "exact";
    std::size_t shots = 100000;
    std::optional<int> truncate;
    std::string out;
};

int run_solve(const SolveOptions& o, std::uint64_t seed) {
    const GridCase gc = load_case(o.case_path);
    const PowerFlowProblem p = build_quadratic_forms(gc);
    NewtonConfig nc;
    nc.k_max = o.max_iter;
    nc.eps0 = o.tol;

    DownloadConfig dl;
    dl.seed = seed;
    dl.shots = o.shots;
    if (o.downloader == "shadows") dl.kind = Downloader::Shadows;
    if (o.shots < 1) throw InvalidArgument("--shots must be positive");

    json doc{{"method", o.method}, {"case", o.case_path}, {"seed", seed}};
    Vector u;
    SolveTrace trace;
    bool converged = false;

    if (o.method == "newton" || o.method == "hhl" || o.method == "vqls") {
        if (o.method == "newton") {
            std::tie(u, trace) = newton_raphson(p, nc);
        } else if (o.method == "hhl") {
            HHLConfig hc;
            hc.clock_bits = o.clock_bits;
            hc.trotter_m = o.trotter_m;
            hc.evolution = o.evolution == "trotter" ? Evolution::Trotter : Evolution::Exact;
            hc.seed = seed;
            std::tie(u, trace) = qpf_hhl(p, nc, hc, dl);
            doc["clock_bits"] = o.clock_bits;
            doc["evolution"] = o.evolution;
            if (hc.evolution == Evolution::Trotter) doc["trotter_m"] = o.trotter_m;
        } else {
            VqlsSettings vs;
            if (o.layers) vs.layers = *o.layers;
            if (o.eta) vs.opt.eta = *o.eta;
            if (o.loss_tol) vs.opt.tol = *o.loss_tol;
            vs.opt.max_steps = o.inner_steps;
            vs.opt.seed = seed;
            vs.truncate_terms = o.truncate;
            std::tie(u, trace) = qpf_vqls(p, nc, vs, dl);
            doc["layers"] = vs.layers;
            doc["eta"] = vs.opt.eta;
            json curves = json::array();
            for (const auto& c : trace.inner_loss_curves) curves.push_back(c);
            doc["inner_loss_curves"] = curves;
        }
        if (o.method != "newton") doc["downloader"] = o.downloader;
        converged = trace.converged;
        json recs = json::array();
        for (const auto& r : trace.records) recs.push_back(record_to_json(r));
        doc["trace"] = recs;
        doc["iterations"] = trace.iterations;
    } else if (o.method == "vqpf") {
        const VQPFProblem vp = VQPFProblem::from_power_flow(p);
        OptimizerConfig opt;
        opt.eta = o.eta.value_or(0.005);
        opt.max_steps = o.inner_steps;
        opt.tol = o.loss_tol.value_or(1e-10);
        opt.seed = seed;
        const int layers = o.layers.value_or(2);
        const VqpfResult r = vqpf_solve_restarts(vp, layers, opt, o.restarts);
        u = r.u;
        converged = r.descent.converged;
        doc["layers"] = layers;
        doc["eta"] = opt.eta;
        doc["restarts"] = o.restarts;
        doc["qubits"] = vp.n;
        doc["steps"] = r.descent.steps;
        doc["final_loss"] = json_number(r.descent.final_loss);
        doc["scale_c"] = r.c;
        doc["loss_curve"] = r.descent.loss_curve;
        doc["fit_residual"] = vector_to_json(r.fit_residual);
    } else {
        throw InvalidArgument("unknown method " + o.method);
    }

    doc["converged"] = converged;
    doc["residual"] = json_number(inf_norm(residual(p, u)));
    doc["solution"] = vector_to_json(u);
    doc["buses"] = voltages_to_json(gc, u);
    emit(o.out, dump(doc));
    return converged ? kExitOk : kExitNotConverged;
}

struct LcuOptions {
    std::string case_path;
    std::string matrix_path;
    int iterate = 0;
    std::optional<int> truncate;
    bool stats = false;
    int count = 102;
    double drop_tol = kDefaultDropTol;
    int bins = 30;
    std::string out;
};

Matrix parse_matrix(const json& j) {
    if (!j.is_array() || j.empty()) throw InvalidArgument("matrix file must hold a nonempty array of rows");
    const auto rows = static_cast<Eigen::Index>(j.size());
    Matrix M(rows, rows);
    for (Eigen::Index r = 0; r < rows; ++r) {
        const json& row = j[static_cast<std::size_t>(r)];
        if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != rows)
            throw InvalidArgument("matrix must be square");
        for (Eigen::Index c = 0; c < rows; ++c) {
            if (!row[static_cast<std::size_t>(c)].is_number()) throw InvalidArgument("matrix entries must be numbers");
            M(r, c) = row[static_cast<std::size_t>(c)].get<double>();
        }
    }
    return M;
}

std::vector<SparseMatrix> newton_jacobians(const PowerFlowProblem& p) {
    std::vector<SparseMatrix> out;
    NewtonConfig cfg;
    cfg.record_kappa = false;
    newton_raphson(p, cfg, [&](const SparseMatrix& J, const Vector& b) {
        out.push_back(J);
        return lu_solve(J, b);
    });
    return out;
}

int run_lcu(const LcuOptions& o, std::uint64_t seed) {
    const bool have_case = !o.case_path.empty(), have_matrix = !o.matrix_path.empty();
    if (have_case == have_matrix) throw InvalidArgument("give exactly one of a case file or --matrix");
    if (have_matrix && o.stats) throw InvalidArgument("--stats needs a case file");
    if (o.drop_tol < 0) throw InvalidArgument("--drop-tol must be non-negative");
    json doc;
    if (o.stats) {
        if (o.count < 1) throw InvalidArgument("--count must be positive");
        const GridCase gc = load_case(o.case_path);
        const auto jacs = harvest_jacobians(gc, static_cast<std::size_t>(o.count), seed);
        std::vector<CMatrix> mats;
        for (const auto& J : jacs)
            mats.push_back(hermitian_dilation(Matrix(J), Vector::Zero(J.rows())).matrix.cast<Complex>());
        doc = lcu_statistics(mats, o.drop_tol, o.bins).to_json();
        doc["case"] = o.case_path;
        doc["seed"] = seed;
        doc["jacobians"] = o.count;
        doc["dilated_size"] = mats.front().rows();
        doc["full_basis"] = mats.front().rows() * mats.front().rows();
    } else {
        Matrix H;
        if (have_matrix) {
            const Matrix A = parse_matrix(read_json_file(o.matrix_path));
            const bool hermitian = (A - A.transpose()).cwiseAbs().maxCoeff() <= 1e-12;
            H = hermitian && is_power_of_two(static_cast<std::size_t>(A.rows()))
                    ? A
                    : hermitian_dilation(A, Vector::Zero(A.rows())).matrix;
            doc["source"] = o.matrix_path;
            doc["dilated"] = H.rows() != A.rows();
        } else {
            const auto jacs = newton_jacobians(build_quadratic_forms(load_case(o.case_path)));
            if (o.iterate < 0 || o.iterate >= static_cast<int>(jacs.size()))
                throw InvalidArgument("--iterate must lie in 0.." + std::to_string(jacs.size() - 1));
            const SparseMatrix& J = jacs[static_cast<std::size_t>(o.iterate)];
            H = hermitian_dilation(Matrix(J), Vector::Zero(J.rows())).matrix;
            doc["source"] = o.case_path;
            doc["iterate"] = o.iterate;
            doc["dilated"] = true;
        }
        LCUDecomposition d = pauli_decompose(H, o.drop_tol);
        if (o.truncate) d = truncate(d, *o.truncate);
        const json terms = lcu_to_json(d);
        doc["n"] = terms["n"];
        doc["count"] = terms["count"];
        doc["one_norm"] = d.one_norm();
        doc["terms"] = terms["terms"];
    }
    emit(o.out, dump(doc));
    return kExitOk;
}

struct ResourceOptions {
    std::optional<int> n;
    std::optional<std::int64_t> l;
    int trotter_m = 10;
    int clock_bits = 0;
    std::string sweep_path;
    std::string out;
};

template <class T>
std::vector<T> sweep_list(const json& cfg, const char* key, std::vector<T> fallback) {
    if (!cfg.contains(key)) return fallback;
    const json& v = cfg.at(key);
    if (!v.is_array() || v.empty()) throw InvalidArgument(std::string("sweep key ") + key + " must be a nonempty array");
    std::vector<T> out;
    for (const auto& x : v) {
        if (!x.is_number_integer()) throw InvalidArgument(std::string("sweep key ") + key + " must hold integers");
        out.push_back(x.get<T>());
    }
    return out;
}

int run_resources(const ResourceOptions& o) {
    if (!o.sweep_path.empty()) {
        if (o.n || o.l) throw InvalidArgument("--sweep excludes --n and --l");
        const json cfg = read_json_file(o.sweep_path);
        if (!cfg.is_object()) throw InvalidArgument("sweep file must hold a JSON object");
        for (const auto& [key, _] : cfg.items())
            if (key != "n" && key != "L" && key != "M" && key != "clock_bits")
                throw InvalidArgument("unknown sweep key " + key);
        SweepRanges r;
        r.n = sweep_list<int>(cfg, "n", {});
        r.l = sweep_list<std::int64_t>(cfg, "L", {});
        r.trotter_m = sweep_list<int>(cfg, "M", {o.trotter_m});
        r.clock_bits = sweep_list<int>(cfg, "clock_bits", {o.clock_bits});
        emit(o.out, sweep(r));
        return kExitOk;
    }
    if (!o.n || !o.l) throw InvalidArgument("resources needs --n and --l, or --sweep");
    const DepthQuery q{*o.n, *o.l, o.trotter_m, o.clock_bits};
    const HhlDepthBreakdown b = hhl_depth_breakdown(q);
    json doc{{"n", q.n},
             {"L", q.l},
             {"M", q.trotter_m},
             {"clock_bits", q.clock()},
             {"hhl", b.total.to_json()},
             {"qpe", b.qpe.to_json()},
             {"hhl_over_qpe", static_cast<double>(b.total.depth) / static_cast<double>(b.qpe.depth)},
             {"eigeninversion_rotations", eigeninversion_gate_count(q.clock())}};
    emit(o.out, dump(doc));
    return kExitOk;
}

struct QramOptions {
    std::vector<double> n_data;
    std::optional<double> target_infidelity;
    std::optional<double> epsilon;
    std::optional<double> kappa_gamma;
    std::optional<double> g_d;
    std::optional<double> nu;
    std::optional<double> c_d;
    bool csv = false;
    std::string out;
};

constexpr const char* kLogNote = "log N is taken base 2; a natural log would scale the infidelity by (ln 2)^2 = 0.48";

int run_qram(const QramOptions& o) {
    const int sources = (o.epsilon ? 1 : 0) + (o.target_infidelity ? 1 : 0) + (o.kappa_gamma ? 1 : 0);
    if (sources != 1)
        throw InvalidArgument("give exactly one of --epsilon, --target-infidelity or --kappa-gamma");
    const bool hardware_flags = o.g_d || o.nu || o.c_d;
    if (hardware_flags && o.epsilon) throw InvalidArgument("hardware parameters contradict an explicit --epsilon");
    if (o.target_infidelity && o.n_data.empty()) throw InvalidArgument("--target-infidelity needs --n-data");
    if (o.epsilon && o.n_data.empty()) throw InvalidArgument("--epsilon needs --n-data");
    for (double n : o.n_data)
        if (!(n >= 2)) throw InvalidArgument("--n-data values must be at least 2");

    QramBudget hw;
    if (o.g_d) hw.g_d = *o.g_d;
    if (o.nu) hw.nu = *o.nu;
    if (o.c_d) hw.c_d = *o.c_d;
    if (o.kappa_gamma) hw.kappa_gamma = *o.kappa_gamma;
    if (!(hw.c_d > 0)) throw InvalidArgument("--c-d must be positive");

    struct Row {
        double n, eps, infid;
    };
    std::vector<Row> rows;
    json doc{{"log_base", 2}, {"note", kLogNote}};
    if (o.target_infidelity) {
        doc["mode"] = "epsilon_for_target";
        doc["target_infidelity"] = *o.target_infidelity;
        for (double n : o.n_data) rows.push_back({n, qram_epsilon_for(*o.target_infidelity, n), *o.target_infidelity});
    } else {
        const double eps = o.epsilon ? *o.epsilon : qram_epsilon_hardware(hw);
        if (o.epsilon && eps < 0) throw InvalidArgument("--epsilon must be non-negative");
        doc["mode"] = o.epsilon ? "infidelity_for_epsilon" : "hardware_epsilon";
        doc["epsilon"] = eps;
        for (double n : o.n_data) rows.push_back({n, eps, qram_infidelity(eps, n)});
    }
    if (!o.epsilon) {
        doc["hardware"] = {{"kappa_gamma", hw.kappa_gamma},
                           {"g_d", hw.g_d},
                           {"nu", hw.nu},
                           {"c_d", hw.c_d},
                           {"epsilon_floor", (hw.g_d / hw.nu) * (hw.g_d / hw.nu)}};
        if (o.target_infidelity) {
            json maxdec = json::array();
            for (const auto& r : rows) maxdec.push_back(qram_max_decoherence(r.eps, hw));
            doc["hardware"]["max_kappa_gamma"] = maxdec;
        }
    }
    if (o.csv) {
        std::string out = std::string("# ") + kLogNote + "\nN,epsilon,infidelity\n";
        for (const auto& r : rows)
            out += format_double(r.n) + "," + format_double(r.eps) + "," + format_double(r.infid) + "\n";
        emit(o.out, out);
        return kExitOk;
    }
    json table = json::array();
    for (const auto& r : rows) table.push_back({{"N", r.n}, {"epsilon", r.eps}, {"infidelity", r.infid}});
    doc["rows"] = table;
    emit(o.out, dump(doc));
    return kExitOk;
}

struct DiagOptions {
    std::string case_path;
    int max_iter = 20;
    double tol = 1e-8;
    std::string out;
};

int run_diagnostics(const DiagOptions& o) {
    const PowerFlowProblem p = build_quadratic_forms(load_case(o.case_path));
    NewtonConfig nc;
    nc.k_max = o.max_iter;
    nc.eps0 = o.tol;
    const auto [u, trace] = newton_raphson(p, nc);
    emit(o.out, diagnostics_csv(trace));
    return trace.converged ? kExitOk : kExitNotConverged;
}

template <class T>
void optional_option(CLI::App* app, const std::string& name, std::optional<T>& target, const std::string& help) {
    app->add_option_function<T>(name, [&target](const T& v) { target = v; }, help);
}

int run(int argc, char** argv) {
    std::vector<std::string> args(argv + 1, argv + argc);
    args = expand_config(std::move(args));

    CLI::App app{"Power-flow solvers on simulated quantum linear algebra"};
    app.name("qpf");
    app.require_subcommand(1);
    app.fallthrough();
    app.option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);

    std::uint64_t seed = 0;
    app.add_option("--seed", seed, "Random seed (falls back to QPF_SEED, then 0)")->envname("QPF_SEED");
    std::string unused_config;
    app.add_option("--config", unused_config, "JSON file with option values; command-line flags override it");

    SolveOptions so;
    auto* solve = app.add_subcommand("solve", "Solve the power flow of a case file");
    solve->add_option("case", so.case_path, "Case JSON file")->required();
    solve->add_option("--method", so.method, "newton, hhl, vqls or vqpf")
        ->check(CLI::IsMember({"newton", "hhl", "vqls", "vqpf"}));
    solve->add_option("--max-iter", so.max_iter, "Outer Newton iteration limit")->check(CLI::PositiveNumber);
    solve->add_option("--tol", so.tol, "Residual tolerance on the infinity norm")->check(CLI::PositiveNumber);
    solve->add_option("--clock-bits", so.clock_bits, "HHL clock register size")->check(CLI::Range(1, 16));
    solve->add_option("--trotter-m", so.trotter_m, "Trotter steps per base evolution")->check(CLI::PositiveNumber);
    solve->add_option("--evolution", so.evolution, "exact or trotter")->check(CLI::IsMember({"exact", "trotter"}));
    optional_option(solve, "--layers", so.layers, "Ansatz layers (vqls 4, vqpf 2)");
    optional_option(solve, "--eta", so.eta, "Gradient step size (vqls 0.2, vqpf 0.005)");
    solve->add_option("--inner-steps", so.inner_steps, "Optimizer step limit")->check(CLI::NonNegativeNumber);
    optional_option(solve, "--loss-tol", so.loss_tol, "Optimizer loss tolerance (vqls 1e-9, vqpf 1e-10)");
    solve->add_option("--restarts", so.restarts, "VQPF restarts, the first from the flat start")->check(CLI::PositiveNumber);
    optional_option(solve, "--truncate", so.truncate, "Keep this many LCU terms (vqls)");
    solve->add_option("--downloader", so.downloader, "exact or shadows")
        ->check(CLI::IsMember({"exact", "shadows"}));
    solve->add_option("--shots", so.shots, "Shadow snapshots per download");
    solve->add_option("--out", so.out, "Output JSON path (stdout when absent)");

    LcuOptions lo;
    auto* lcu = app.add_subcommand("lcu", "Pauli decomposition of dilated Jacobians");
    lcu->add_option("case", lo.case_path, "Case JSON file");
    lcu->add_option("--matrix", lo.matrix_path, "JSON matrix file (array of rows)");
    auto* iter_opt = lcu->add_option("--iterate", lo.iterate, "Newton iterate whose Jacobian is decomposed");
    optional_option(lcu, "--truncate", lo.truncate, "Keep the k largest terms");
    auto* stats_opt = lcu->add_flag("--stats", lo.stats, "Term-count statistics over harvested Jacobians");
    lcu->add_option("--count", lo.count, "Jacobians harvested for --stats");
    lcu->add_option("--drop-tol", lo.drop_tol, "Coefficients at or below this magnitude are dropped");
    lcu->add_option("--bins", lo.bins, "Histogram bins for --stats")->check(CLI::PositiveNumber);
    lcu->add_option("--out", lo.out, "Output JSON path (stdout when absent)");
    stats_opt->excludes(iter_opt);

    ResourceOptions ro;
    auto* res = app.add_subcommand("resources", "Gate-depth estimates for QPF-HHL circuits");
    optional_option(res, "--n", ro.n, "System qubits");
    optional_option(res, "--l", ro.l, "Number of LCU terms");
    res->add_option("--trotter-m", ro.trotter_m, "Trotter steps")->check(CLI::PositiveNumber);
    res->add_option("--clock-bits", ro.clock_bits, "Clock qubits (0 selects n)")->check(CLI::NonNegativeNumber);
    res->add_option("--sweep", ro.sweep_path, "JSON sweep file with arrays n, L and optional M, clock_bits");
    res->add_option("--out", ro.out, "Output path (stdout when absent)");

    QramOptions qo;
    auto* qram = app.add_subcommand("qram", "QRAM error budget");
    qram->add_option("--n-data", qo.n_data, "Data sizes N");
    optional_option(qram, "--target-infidelity", qo.target_infidelity, "Target 1 - F, inverted for epsilon");
    optional_option(qram, "--epsilon", qo.epsilon, "Per-step error epsilon");
    optional_option(qram, "--kappa-gamma", qo.kappa_gamma, "Decoherence rate sum in rad/s");
    optional_option(qram, "--g-d", qo.g_d, "Direct coupling in rad/s (default 2 pi 1e3)");
    optional_option(qram, "--nu", qo.nu, "Free spectral range in rad/s (default 2 pi 1e7)");
    optional_option(qram, "--c-d", qo.c_d, "Gate-duration constant (default 4.5)");
    qram->add_flag("--csv", qo.csv, "Emit the N,epsilon,infidelity table as CSV");
    qram->add_option("--out", qo.out, "Output path (stdout when absent)");

    DiagOptions dgo;
    auto* diag = app.add_subcommand("diagnostics", "Per-iteration sparsity and condition number CSV");
    diag->add_option("case", dgo.case_path, "Case JSON file")->required();
    diag->add_option("--max-iter", dgo.max_iter, "Newton iteration limit")->check(CLI::PositiveNumber);
    diag->add_option("--tol", dgo.tol, "Residual tolerance")->check(CLI::PositiveNumber);
    diag->add_option("--out", dgo.out, "Output CSV path (stdout when absent)");

    std::reverse(args.begin(), args.end());
    try {
        app.parse(args);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kExitOk : kExitInput;
    }

    if (*solve) return run_solve(so, seed);
    if (*lcu) return run_lcu(lo, seed);
    if (*res) return run_resources(ro);
    if (*qram) return run_qram(qo);
    return run_diagnostics(dgo);
}

}  // namespace

int main(int argc, char** argv) {
    try {
        return run(argc, argv);
    } catch (const qpf::ParseError& e) {
        std::cerr << "qpf: input error: " << e.what() << "\n";
        return kExitInput;
    } catch (const qpf::InvalidArgument& e) {
        std::cerr << "qpf: input error: " << e.what() << "\n";
        return kExitInput;
    } catch (const qpf::Error& e) {
        std::cerr << "qpf: solver failed: " << e.what() << "\n";
        return kExitNotConverged;
    } catch (const std::exception& e) {
        std::cerr << "qpf: error: " << e.what() << "\n";
        return kExitInput;
    }
}
