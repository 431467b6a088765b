#include <catch_amalgamated.hpp>

#include "../support/oracles.hpp"
#include "qpf/qpf.hpp"

#include <limits>
#include <numbers>
#include <random>

using namespace qpf;
using Catch::Approx;
using std::numbers::pi;

namespace {

const char* kTwoBus = R"({"buses":[{"id":1,"kind":"slack","v_set":1.0},{"id":2,"kind":"pq","p_load":0.5,"q_load":0.2}],
                          "branches":[{"from":1,"to":2,"r":0.02,"x":0.1}]})";

LCUDecomposition random_lcu(int n, int terms, std::mt19937_64& rng) {
    static const char letters[] = "IXYZ";
    std::normal_distribution<double> g;
    LCUDecomposition d{n, {}};
    std::string id(static_cast<std::size_t>(n), 'I');
    d.terms.push_back({PauliString(id), 3.0});
    for (int t = 0; t < terms; ++t) {
        std::string w;
        for (int q = 0; q < n; ++q) w += letters[rng() % 4];
        d.terms.push_back({PauliString(w), g(rng)});
    }
    return d;
}

Vector random_real(int dim, std::mt19937_64& rng) {
    std::normal_distribution<double> g;
    Vector v(dim);
    for (int i = 0; i < dim; ++i) v[i] = g(rng);
    return v.normalized();
}

double global_oracle(const CMatrix& A, const CVector& psi, const CVector& b) {
    const CVector y = A * psi;
    return 1.0 - std::norm(b.normalized().dot(y)) / y.squaredNorm();
}

// Dense tree preparation: layer q is sum_h |h><h| (x) RY(theta_qh) (x) I on
// qubit q under high bits h, applied from the top qubit down, then phases.
CMatrix dense_tree_prep(const CVector& b) {
    const Eigen::Index dim = b.size();
    const int n = log2_exact(static_cast<std::size_t>(dim));
    const CVector bn = b.normalized();
    auto block_weight = [&](int q, std::uint64_t prefix) {
        double w = 0.0;
        for (Eigen::Index x = 0; x < dim; ++x)
            if ((static_cast<std::uint64_t>(x) >> q) == prefix) w += std::norm(bn[x]);
        return w;
    };
    CMatrix B = CMatrix::Identity(dim, dim);
    for (int q = n - 1; q >= 0; --q) {
        CMatrix layer = CMatrix::Zero(dim, dim);
        for (Eigen::Index col = 0; col < dim; ++col) {
            const auto x = static_cast<std::uint64_t>(col);
            const std::uint64_t h = x >> (q + 1);
            const double th = 2 * std::atan2(std::sqrt(block_weight(q, 2 * h + 1)), std::sqrt(block_weight(q, 2 * h)));
            const int bit = static_cast<int>((x >> q) & 1);
            const auto x0 = static_cast<Eigen::Index>(x & ~(std::uint64_t{1} << q));
            const Eigen::Index x1 = x0 | (Eigen::Index{1} << q);
            // Column `bit` of RY(th).
            layer(x0, col) = bit ? -std::sin(th / 2) : std::cos(th / 2);
            layer(x1, col) = bit ? std::cos(th / 2) : std::sin(th / 2);
        }
        B = layer * B;
    }
    CVector ph(dim);
    for (Eigen::Index x = 0; x < dim; ++x) ph[x] = std::abs(bn[x]) > 0 ? bn[x] / std::abs(bn[x]) : Complex(1.0);
    return ph.asDiagonal() * B;
}

// Local loss with the dense tree B and P built from Kronecker Z's.
double local_oracle(const CMatrix& A, const CVector& psi, const CVector& b, int n) {
    const Eigen::Index dim = b.size();
    const CMatrix B = dense_tree_prep(b);
    CMatrix P = 0.5 * CMatrix::Identity(dim, dim);
    for (int j = 0; j < n; ++j) {
        std::string word(static_cast<std::size_t>(n), 'I');
        word[static_cast<std::size_t>(j)] = 'Z';
        P += oracle::pauli_matrix(word) / (2.0 * n);
    }
    const CVector y = A * psi;
    const CVector phi = B.adjoint() * y;
    return 1.0 - phi.dot(P * phi).real() / y.squaredNorm();
}

}  // namespace

TEST_CASE("ansatz state basics", "[variational][ansatz]") {
    const StateVector z = apply_ansatz(Ansatz::zeros(3, 0));
    CHECK(std::abs(z[0] - Complex(1.0)) < 1e-15);

    Ansatz a = Ansatz::zeros(1, 0);
    a.theta[0] = pi;
    CHECK(std::norm(apply_ansatz(a)[1]) == Approx(1.0));

    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        const StateVector s = apply_ansatz(Ansatz::random(4, 3, seed));
        CHECK(s.norm() == Approx(1.0).epsilon(1e-14));
        CHECK(s.amplitudes().imag().norm() == 0.0);
    }
    Ansatz bad = Ansatz::zeros(2, 1);
    bad.theta.resize(3);
    CHECK_THROWS_AS(apply_ansatz(bad), InvalidArgument);
}

TEST_CASE("tree preparation maps |0> to |b> and matches its dense form", "[variational][prep]") {
    std::mt19937_64 rng(31);
    for (int t = 0; t < 12; ++t) {
        const int dim = 2 << (t % 3);
        const CVector b = oracle::random_state(dim, rng);
        const StatePrep B(b);
        CVector e0 = CVector::Zero(dim);
        e0[0] = 1.0;
        CHECK((B.apply(e0) - b).norm() < 1e-12);
        const CVector v = oracle::random_state(dim, rng);
        CHECK((B.apply_adjoint(B.apply(v)) - v).norm() < 1e-12);
        const CMatrix D = dense_tree_prep(b);
        CHECK((B.apply(v) - D * v).norm() < 1e-12);
        CHECK((B.apply_adjoint(v) - D.adjoint() * v).norm() < 1e-12);
    }
    // Zero entries: the preparation still lands exactly on b.
    Vector sparse = Vector::Zero(8);
    sparse[5] = -2.0;
    sparse[6] = 1.0;
    CVector e0 = CVector::Zero(8);
    e0[0] = 1.0;
    CHECK((StatePrep(sparse).apply(e0) - CVector(sparse.normalized().cast<Complex>())).norm() < 1e-12);
}

TEST_CASE("local loss separates over qubits for product targets", "[variational][vqls][property]") {
    // With A = I, a product |b> and a product ansatz, L_L = (1/n) sum_q (1 - |<b_q|x_q>|^2).
    for (int n = 1; n <= 4; ++n) {
        for (std::uint64_t seed = 0; seed < 5; ++seed) {
            const Ansatz tb = Ansatz::random(n, 0, 500 + seed), tx = Ansatz::random(n, 0, 600 + seed);
            const LCUDecomposition I{n, {{PauliString(std::string(static_cast<std::size_t>(n), 'I')), 1.0}}};
            double expect = 0.0;
            for (int q = 0; q < n; ++q) expect += std::pow(std::sin((tb.theta[q] - tx.theta[q]) / 2), 2);
            expect /= n;
            CHECK(vqls_loss_local(tx, I, StatePrep(apply_ansatz(tb).amplitudes())) == Approx(expect).margin(1e-12));
        }
    }
}

TEST_CASE("global loss limits and dense oracle", "[variational][vqls]") {
    const Ansatz a = Ansatz::random(2, 1, 4);
    const StateVector psi = apply_ansatz(a);
    const LCUDecomposition I{2, {{PauliString("II"), 1.0}}};
    CHECK(vqls_loss_global(a, I, psi) == Approx(0.0).margin(1e-14));

    // A real vector orthogonal to psi.
    Vector perp = Vector::Zero(4);
    const Vector r = psi.amplitudes().real();
    perp << -r[1], r[0], -r[3], r[2];
    CHECK(vqls_loss_global(a, I, StateVector::from_real(perp)) == Approx(1.0).epsilon(1e-12));

    std::mt19937_64 rng(32);
    for (int t = 0; t < 20; ++t) {
        const int n = 1 + t % 3;
        const LCUDecomposition A = random_lcu(n, 4, rng);
        const Ansatz x = Ansatz::random(n, 2, 100 + t);
        const CVector b = oracle::random_state(1 << n, rng);
        const double got = vqls_loss_global(x, A, StateVector::from_amplitudes(b));
        CHECK(got == Approx(global_oracle(reconstruct(A), apply_ansatz(x).amplitudes(), b)).margin(1e-10));
    }
}

TEST_CASE("local loss matches its dense oracle and vanishes at the solution", "[variational][vqls]") {
    std::mt19937_64 rng(33);
    for (int t = 0; t < 20; ++t) {
        const int n = 1 + t % 3;
        const LCUDecomposition A = random_lcu(n, 3, rng);
        const Ansatz x = Ansatz::random(n, 2, 200 + t);
        const CVector b = oracle::random_state(1 << n, rng);
        const double got = vqls_loss_local(x, A, StatePrep(b));
        CHECK(got == Approx(local_oracle(reconstruct(A), apply_ansatz(x).amplitudes(), b, n)).margin(1e-10));
    }
    const Ansatz a = Ansatz::random(3, 1, 5);
    const LCUDecomposition I{3, {{PauliString("III"), 2.0}}};
    CHECK(vqls_loss_local(a, I, StatePrep(apply_ansatz(a).amplitudes())) == Approx(0.0).margin(1e-13));
}

TEST_CASE("local and global losses obey the sandwich bound", "[variational][vqls][property]") {
    std::mt19937_64 rng(34);
    for (int t = 0; t < 100; ++t) {
        const int n = 1 + t % 4;
        const LCUDecomposition A = random_lcu(n, 5, rng);
        const Ansatz x = Ansatz::random(n, 1 + t % 3, 300 + t);
        const Vector b = random_real(1 << n, rng);
        const double lg = vqls_loss_global(x, A, StateVector::from_real(b));
        const double ll = vqls_loss_local(x, A, StatePrep(b));
        CHECK(ll <= lg + 1e-9);
        CHECK(lg <= n * ll + 1e-9);
        if (n == 1) CHECK(ll == Approx(lg).margin(1e-12));
    }
}

TEST_CASE("parameter shift agrees with finite differences", "[variational][gradient][property]") {
    std::mt19937_64 rng(35);
    for (int t = 0; t < 10; ++t) {
        const int n = 2 + t % 2;
        const LCUDecomposition A = random_lcu(n, 4, rng);
        const Vector b = random_real(1 << n, rng);
        const Ansatz x = Ansatz::random(n, 2, 400 + t);
        for (const ExpectationLoss& L : {vqls_local_objective(A, StatePrep(b)),
                                         vqls_global_objective(A, CVector(b.cast<Complex>()))}) {
            const Vector gs = gradient(L, x, GradientMode::parameter_shift());
            const Vector gf = gradient(L, x, GradientMode::finite_diff(1e-5));
            CHECK((gs - gf).cwiseAbs().maxCoeff() < 1e-4);
        }
    }
}

TEST_CASE("gradient vanishes at a minimum and for constant losses", "[variational][gradient]") {
    const Ansatz a = Ansatz::random(2, 1, 6);
    const LCUDecomposition I{2, {{PauliString("II"), 1.0}}};
    const ExpectationLoss at_min = vqls_global_objective(I, apply_ansatz(a).amplitudes());
    CHECK(gradient(at_min, a, GradientMode::parameter_shift()).norm() < 1e-6);

    ExpectationLoss constant;
    constant.expectations = [](const StateVector& s) { return Vector::Constant(1, s.norm()); };
    constant.combine = [](const Vector& e) { return e[0]; };
    constant.combine_gradient = [](const Vector&) { return Vector::Ones(1); };
    CHECK(gradient(constant, a, GradientMode::parameter_shift()).norm() < 1e-12);
    CHECK(gradient(constant, a, GradientMode::finite_diff(1e-5)).norm() < 1e-9);
}

TEST_CASE("VQLS with A = identity reaches a reachable target", "[variational][vqls][solve]") {
    for (int n = 1; n <= 3; ++n) {
        const LCUDecomposition I{n, {{PauliString(std::string(static_cast<std::size_t>(n), 'I')), 1.0}}};
        const Vector b = apply_ansatz(Ansatz::random(n, 0, 50 + n)).amplitudes().real();
        OptimizerConfig opt;
        opt.eta = 0.5;
        opt.max_steps = 200;
        const VqlsResult r = vqls_solve(I, b, Ansatz::random(n, 0, 60 + n), opt);
        INFO("n = " << n);
        CHECK(r.descent.final_loss < 1e-6);
        CHECK(r.descent.steps <= 200);
        CHECK(r.descent.loss_curve.back() <= r.descent.loss_curve.front());
        CHECK(oracle::fidelity(r.x_state, CVector(b.cast<Complex>())) > 1 - 1e-5);
    }
}

TEST_CASE("VQLS descent does not end above its start", "[variational][vqls][solve]") {
    std::mt19937_64 rng(36);
    const LCUDecomposition A = random_lcu(3, 4, rng);
    const Vector b = random_real(8, rng);
    OptimizerConfig opt;
    opt.eta = 0.05;
    opt.max_steps = 100;
    const VqlsResult r = vqls_solve(A, b, Ansatz::random(3, 2, 7), opt);
    CHECK(r.descent.final_loss <= r.descent.loss_curve.front());
    CHECK(r.descent.loss_curve.size() == static_cast<std::size_t>(r.descent.steps) + 1);
}

TEST_CASE("QPF-VQLS on case3 tracks classical Newton", "[variational][qpf]") {
    const PowerFlowProblem p = build_quadratic_forms(load_fixture("case3").grid);
    const auto [uc, tc] = newton_raphson(p);
    const auto [u, trace] = qpf_vqls(p, NewtonConfig{}, VqlsSettings{});
    CHECK((u - uc).cwiseAbs().maxCoeff() < 1e-2);
    CHECK(trace.inner_loss_curves.size() == static_cast<std::size_t>(trace.iterations));
    for (std::size_t k = 0; k + 1 < trace.records.size(); ++k) {
        REQUIRE(trace.records[k].inner_iterations);
        CHECK(trace.inner_loss_curves[k].size() == static_cast<std::size_t>(*trace.records[k].inner_iterations) + 1);
    }
}

TEST_CASE("warm start needs fewer inner iterations than cold start", "[variational][qpf]") {
    // The default tolerance sits below the ansatz's loss floor, so raw step
    // counts saturate at max_steps. Compare steps to reach loss 1e-3 instead.
    const PowerFlowProblem p = build_quadratic_forms(load_fixture("case3").grid);
    NewtonConfig nc;
    nc.k_max = 3;
    VqlsSettings warm, cold;
    cold.warm_start = false;
    const auto [uw, tw] = qpf_vqls(p, nc, warm);
    const auto [uo, to] = qpf_vqls(p, nc, cold);
    auto steps_to = [](const std::vector<double>& curve, double level) {
        for (std::size_t i = 0; i < curve.size(); ++i)
            if (curve[i] < level) return static_cast<int>(i);
        return std::numeric_limits<int>::max();
    };
    REQUIRE(tw.inner_loss_curves.size() >= 3);
    REQUIRE(to.inner_loss_curves.size() >= 3);
    for (std::size_t k = 1; k < 3; ++k) {
        const int w = steps_to(tw.inner_loss_curves[k], 1e-3), c = steps_to(to.inner_loss_curves[k], 1e-3);
        INFO("outer iteration " << k << ": warm " << w << " cold " << c);
        CHECK(w < c);
    }
}

TEST_CASE("VQPF one-qubit toy loss matches the hand formula", "[variational][vqpf]") {
    VQPFProblem p;
    p.n = 1;
    p.observables = {Matrix(oracle::pauli_matrix("Z").real()), Matrix(oracle::pauli_matrix("X").real())};
    p.rhs = Vector(2);
    p.rhs << 1.0, 2.0;
    for (double theta : {0.2, 0.7, 1.1, -0.4}) {
        Ansatz a = Ansatz::zeros(1, 0);
        a.theta[0] = theta;
        const double expect = 0.5 * std::pow(std::tan(theta) - 2.0, 2);
        CHECK(vqpf_loss(p, a) == Approx(expect).epsilon(1e-12));
        VQPFProblem scaled = p;
        scaled.rhs *= 3.7;
        CHECK(vqpf_loss(scaled, a) == Approx(vqpf_loss(p, a)).epsilon(1e-14));
    }
}

TEST_CASE("VQPF loss vanishes at the embedded true solution", "[variational][vqpf]") {
    for (const auto& src : {std::string(kTwoBus), std::string()}) {
        const GridCase gc = src.empty() ? load_fixture("case3").grid : parse_case(src);
        const PowerFlowProblem p = build_quadratic_forms(gc);
        const auto [u, trace] = newton_raphson(p);
        const VQPFProblem v = VQPFProblem::from_power_flow(p);
        Vector psi = Vector::Zero(Eigen::Index{1} << v.n);
        psi.head(p.dim()) = u;
        const StateVector s = StateVector::from_real(psi);
        CHECK(vqpf_objective(v).combine(vqpf_expectations(v, s)) < 1e-10);
        const VqpfResult rec = vqpf_recover(v, s);
        CHECK((rec.u - u).cwiseAbs().maxCoeff() < 1e-8);
    }
}

TEST_CASE("VQPF solves the 2-bus toy against Newton", "[variational][vqpf]") {
    const PowerFlowProblem p = build_quadratic_forms(parse_case(kTwoBus));
    const auto [uc, tc] = newton_raphson(p);
    const VQPFProblem v = VQPFProblem::from_power_flow(p);
    OptimizerConfig opt{0.005, 3000, 1e-10, {}, 0};
    const VqpfResult r = vqpf_solve_restarts(v, 2, opt, 8);
    CHECK(r.descent.converged);
    CHECK((r.u - uc).cwiseAbs().maxCoeff() < 1e-3);

    // Least-squares optimality of the recovered scale.
    const Vector e = vqpf_expectations(v, apply_ansatz(r.descent.ansatz));
    CHECK(std::abs(r.fit_residual.dot(e)) < 1e-10 * e.norm() * v.rhs.norm());
    CHECK(r.fit_residual.cwiseAbs().maxCoeff() < 1e-4);

    // Restarting at the solution needs no steps.
    OptimizerConfig loose = opt;
    loose.tol = std::max(1e-12, 2 * r.descent.final_loss);
    const VqpfResult again = vqpf_solve(v, r.descent.ansatz, loose);
    CHECK(again.descent.steps == 0);
}

TEST_CASE("VQPF problem validation", "[variational][vqpf]") {
    VQPFProblem p;
    CHECK_THROWS_AS(p.validate(), InvalidArgument);
    p.observables = {Matrix::Identity(2, 2)};
    p.rhs = Vector::Zero(1);
    CHECK_THROWS_AS(p.validate(), InvalidArgument);
    CHECK_THROWS_AS(vqpf_solve_restarts(VQPFProblem::from_power_flow(build_quadratic_forms(parse_case(kTwoBus))), 1,
                                        OptimizerConfig{}, 0),
                    InvalidArgument);
}
