#pragma once

#include "qpf/classical/newton.hpp"
#include "qpf/core.hpp"
#include "qpf/grid/power_flow.hpp"
#include "qpf/hhl/hhl.hpp"
#include "qpf/lcu/lcu.hpp"
#include "qpf/variational/ansatz.hpp"

#include <cmath>
#include <optional>
#include <random>
#include <string>
#include <utility>
#include <vector>

namespace qpf {

// Binary-tree amplitude preparation B with B|0> = |b>: for qubit q from the
// top down, an RY rotation on q uniformly controlled by the higher qubits
// splits each block's weight, then a diagonal D restores the phases of b.
// A product |b> gives a product B, so the local loss stays local.
class StatePrep {
public:
    explicit StatePrep(const CVector& b) {
        const double nrm = b.norm();
        if (!(nrm > 0)) throw InvalidArgument("right-hand side must be nonzero");
        b_ = b / nrm;
        n_ = log2_exact(static_cast<std::size_t>(b_.size()));
        phase_.resize(b_.size());
        for (Eigen::Index x = 0; x < b_.size(); ++x)
            phase_[x] = std::abs(b_[x]) > 0 ? b_[x] / std::abs(b_[x]) : Complex(1.0);
        // weight[x >> q] accumulates |b_x|^2 over the low q bits.
        std::vector<double> weight(static_cast<std::size_t>(b_.size()));
        for (Eigen::Index x = 0; x < b_.size(); ++x) weight[static_cast<std::size_t>(x)] = std::norm(b_[x]);
        angles_.assign(static_cast<std::size_t>(n_), {});
        for (int q = 0; q < n_; ++q) {
            const std::size_t blocks = std::size_t{1} << (n_ - q - 1);
            auto& a = angles_[static_cast<std::size_t>(q)];
            a.resize(blocks);
            std::vector<double> up(blocks);
            for (std::size_t h = 0; h < blocks; ++h) {
                const double w0 = weight[2 * h], w1 = weight[2 * h + 1];
                a[h] = 2 * std::atan2(std::sqrt(w1), std::sqrt(w0));
                up[h] = w0 + w1;
            }
            weight = std::move(up);
        }
    }
    explicit StatePrep(const Vector& b) : StatePrep(CVector(b.cast<Complex>())) {}

    const CVector& b() const { return b_; }
    int n_qubits() const { return n_; }
    // Angle of the RY on qubit q when the higher qubits read h.
    double angle(int q, std::uint64_t h) const { return angles_[static_cast<std::size_t>(q)][h]; }

    CVector apply(const CVector& v) const {
        CVector out = v;
        for (int q = n_ - 1; q >= 0; --q) rotate(out, q, 1.0);
        return phase_.cwiseProduct(out);
    }
    CVector apply_adjoint(const CVector& v) const {
        CVector out = phase_.conjugate().cwiseProduct(v);
        for (int q = 0; q < n_; ++q) rotate(out, q, -1.0);
        return out;
    }

private:
    void rotate(CVector& v, int q, double sign) const {
        const std::uint64_t bit = std::uint64_t{1} << q;
        const auto& a = angles_[static_cast<std::size_t>(q)];
        for (std::uint64_t x = 0; x < static_cast<std::uint64_t>(v.size()); ++x) {
            if (x & bit) continue;
            const double t = 0.5 * sign * a[x >> (q + 1)];
            const double c = std::cos(t), s = std::sin(t);
            const Complex lo = v[static_cast<Eigen::Index>(x)], hi = v[static_cast<Eigen::Index>(x | bit)];
            v[static_cast<Eigen::Index>(x)] = c * lo - s * hi;
            v[static_cast<Eigen::Index>(x | bit)] = s * lo + c * hi;
        }
    }

    CVector b_, phase_;
    int n_ = 0;
    std::vector<std::vector<double>> angles_;
};

namespace detail {

inline CVector apply_system(const LCUDecomposition& A, const StateVector& x) {
    const CVector y = apply_lcu(A, x.amplitudes());
    if (!(y.norm() > 1e-12)) throw NumericalError("A annihilates the ansatz state");
    return y;
}

// <phi| P |phi> with P = 1/2 + (1/2n) sum_j Z_j, i.e. sum_x |phi_x|^2 (1 - w(x)/n).
inline double local_projector_expectation(const CVector& phi, int n) {
    double s = 0.0;
    for (Eigen::Index x = 0; x < phi.size(); ++x)
        s += std::norm(phi[x]) * (1.0 - static_cast<double>(popcount(static_cast<std::uint64_t>(x))) / n);
    return s;
}

}  // namespace detail

enum class LossKind { Global, Local };

// E = (|<b|A x>|^2, <A x|A x>), loss 1 - E0/E1.
inline ExpectationLoss vqls_global_objective(const LCUDecomposition& A, const CVector& b) {
    const CVector bu = b.normalized();
    ExpectationLoss L;
    L.expectations = [A, bu](const StateVector& x) {
        const CVector y = detail::apply_system(A, x);
        Vector e(2);
        e << std::norm(bu.dot(y)), y.squaredNorm();
        return e;
    };
    L.combine = [](const Vector& e) { return 1.0 - e[0] / e[1]; };
    L.combine_gradient = [](const Vector& e) {
        Vector g(2);
        g << -1.0 / e[1], e[0] / (e[1] * e[1]);
        return g;
    };
    return L;
}

// E = (<A x| B P B^+ |A x>, <A x|A x>), loss 1 - E0/E1.
inline ExpectationLoss vqls_local_objective(const LCUDecomposition& A, const StatePrep& prep) {
    ExpectationLoss L;
    const int n = A.n;
    L.expectations = [A, prep, n](const StateVector& x) {
        const CVector y = detail::apply_system(A, x);
        Vector e(2);
        e << detail::local_projector_expectation(prep.apply_adjoint(y), n), y.squaredNorm();
        return e;
    };
    L.combine = [](const Vector& e) { return 1.0 - e[0] / e[1]; };
    L.combine_gradient = [](const Vector& e) {
        Vector g(2);
        g << -1.0 / e[1], e[0] / (e[1] * e[1]);
        return g;
    };
    return L;
}

inline double vqls_loss_global(const Ansatz& a, const LCUDecomposition& A, const StateVector& b_state) {
    if (b_state.n_qubits() != A.n || a.n != A.n) throw InvalidArgument("VQLS dimensions differ");
    return vqls_global_objective(A, b_state.amplitudes())(a);
}

inline double vqls_loss_local(const Ansatz& a, const LCUDecomposition& A, const StatePrep& prep) {
    if (prep.n_qubits() != A.n || a.n != A.n) throw InvalidArgument("VQLS dimensions differ");
    return vqls_local_objective(A, prep)(a);
}

// Shot-sampled local loss: measures B^+ A x / |A x| in the computational basis.
inline double vqls_loss_local_sampled(const Ansatz& a, const LCUDecomposition& A, const StatePrep& prep,
                                      std::size_t shots, std::uint64_t seed) {
    if (shots < 1) throw InvalidArgument("shots must be positive");
    const CVector y = detail::apply_system(A, apply_ansatz(a));
    const StateVector phi = StateVector::from_amplitudes(prep.apply_adjoint(y));
    std::mt19937_64 rng(seed);
    const auto outcomes = phi.sample(shots, rng);
    double s = 0.0;
    for (auto x : outcomes) s += 1.0 - static_cast<double>(popcount(x)) / A.n;
    return 1.0 - s / static_cast<double>(shots);
}

struct VqlsResult {
    DescentResult descent;
    CVector x_state;
    double scale = 0.0;
};

inline VqlsResult vqls_solve(const LCUDecomposition& A, const CVector& b, const Ansatz& a0, const OptimizerConfig& opt,
                             LossKind kind = LossKind::Local) {
    if (b.size() != (Eigen::Index{1} << A.n) || a0.n != A.n) throw InvalidArgument("VQLS dimensions differ");
    const ExpectationLoss loss = kind == LossKind::Local ? vqls_local_objective(A, StatePrep(b))
                                                         : vqls_global_objective(A, b);
    VqlsResult r;
    r.descent = gradient_descent(loss, a0, opt);
    r.x_state = apply_ansatz(r.descent.ansatz).amplitudes();
    r.scale = std::real(recover_normalization(r.x_state, reconstruct(A), b));
    return r;
}

inline VqlsResult vqls_solve(const LCUDecomposition& A, const Vector& b, const Ansatz& a0, const OptimizerConfig& opt,
                             LossKind kind = LossKind::Local) {
    return vqls_solve(A, CVector(b.cast<Complex>()), a0, opt, kind);
}

struct VqlsSettings {
    int layers = 4;
    OptimizerConfig opt{0.2, 3000, 1e-9, {}, 0};
    bool warm_start = true;
    bool equilibrate = true;
    std::optional<int> truncate_terms;
};

inline std::pair<Vector, SolveTrace> qpf_vqls(const PowerFlowProblem& p, const NewtonConfig& cfg_newton,
                                              const VqlsSettings& vs, const DownloadConfig& dl = {}) {
    std::optional<Ansatz> previous;
    std::vector<std::vector<double>> curves;
    auto [u, trace] = newton_loop(p, cfg_newton, [&](const SparseMatrix& J, const Vector& F, IterationRecord& rec) {
        const EmbeddedStep e = embed_newton_system(J, F, vs.equilibrate);
        LCUDecomposition A = pauli_decompose(e.dilation.matrix);
        if (vs.truncate_terms) A = truncate(A, *vs.truncate_terms);
        const std::uint64_t k = static_cast<std::uint64_t>(rec.iter);
        const Ansatz a0 = (vs.warm_start && previous) ? *previous
                                                      : Ansatz::random(A.n, vs.layers, derive_seed(vs.opt.seed, k));
        const VqlsResult r = vqls_solve(A, e.dilation.rhs, a0, vs.opt);
        previous = r.descent.ansatz;
        curves.push_back(r.descent.loss_curve);
        const Vector x = download_real_state(r.x_state, dl, k);
        const Vector du = recover_step(e, x);
        rec.direction_cosine = direction_cosine(du, lu_solve(J, -F));
        rec.inner_iterations = r.descent.steps;
        return du;
    });
    trace.inner_loss_curves = std::move(curves);
    return {u, trace};
}

}  // namespace qpf
