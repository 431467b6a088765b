#pragma once

#include "qpf/classical/newton.hpp"
#include "qpf/core.hpp"
#include "qpf/grid/power_flow.hpp"
#include "qpf/lcu/lcu.hpp"
#include "qpf/qsim/depth.hpp"
#include "qpf/qsim/phase_estimation.hpp"
#include "qpf/qsim/state_vector.hpp"
#include "qpf/shadows/shadows.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <optional>
#include <random>
#include <utility>
#include <vector>

namespace qpf {

enum class CPolicy { Auto, Fixed };

// Phase window: QPE runs on H + shift*I with base time t0.
struct ClockWindow {
    double shift = 0.0;
    double t0 = 1.0;
};

struct HHLConfig {
    int clock_bits = 8;
    int trotter_m = 10;
    CPolicy c_policy = CPolicy::Auto;
    double c_fixed = 0.0;
    double eps_inverse = 1e-2;
    int max_postselect_retries = 1000;
    Evolution evolution = Evolution::Exact;
    std::optional<ClockWindow> window;  // automatic when empty
    bool sampled_postselection = false;
    std::uint64_t seed = 0;
    bool compute_fidelity = true;

    void validate() const {
        if (clock_bits < 1) throw InvalidArgument("clock_bits must be at least 1");
        if (trotter_m < 1) throw InvalidArgument("trotter_m must be at least 1");
        if (!(eps_inverse > 0)) throw InvalidArgument("eps_inverse must be positive");
        if (c_policy == CPolicy::Fixed && !(c_fixed > 0)) throw InvalidArgument("fixed C must be positive");
        if (max_postselect_retries < 1) throw InvalidArgument("max_postselect_retries must be at least 1");
    }
};

struct HHLResult {
    CVector x_state;
    double success_prob = 0.0;
    double scale = 0.0;
    DepthReport depth;
    std::optional<double> fidelity_vs_exact;
    double c_const = 0.0;
    ClockWindow window;
    int postselect_attempts = 1;

    nlohmann::json to_json() const {
        nlohmann::json x = nlohmann::json::array();
        for (Eigen::Index i = 0; i < x_state.size(); ++i) x.push_back(x_state[i].real());
        nlohmann::json j{{"x", x},
                         {"scale", scale},
                         {"success_prob", success_prob},
                         {"depth", depth.to_json()},
                         {"c_const", c_const},
                         {"shift", window.shift},
                         {"t0", window.t0}};
        if (fidelity_vs_exact) j["fidelity"] = *fidelity_vs_exact;
        return j;
    }
};

// Gershgorin enclosure [lo, hi] of the spectrum of a Hermitian matrix.
inline std::pair<double, double> gershgorin_interval(const CMatrix& A) {
    double lo = 0.0, hi = 0.0;
    for (Eigen::Index i = 0; i < A.rows(); ++i) {
        const double r = A.row(i).cwiseAbs().sum() - std::abs(A(i, i));
        const double c = A(i, i).real();
        lo = i == 0 ? c - r : std::min(lo, c - r);
        hi = i == 0 ? c + r : std::max(hi, c + r);
    }
    return {lo, hi};
}

// Symmetric window around zero bounded by the Gershgorin radius L. Clock values
// 1 .. 2^c - 1 carry lambda = (k - k_mid) * d with k_mid = 2^(c-1) - 1/2, so
// eigenvalue 0 falls between two bins and clock value 0 stays unused; d is
// chosen so lambda(1) <= -L and lambda(2^c - 1) >= L.
inline ClockWindow auto_window(const CMatrix& A, int clock_bits) {
    const auto [lo, hi] = gershgorin_interval(A);
    const double L = std::max(std::abs(lo), std::abs(hi));
    if (!(L > 0)) throw SingularMatrixError("matrix is zero; nothing to invert");
    double d, k_mid;
    if (clock_bits == 1) {
        d = 2 * L;
        k_mid = 0.5;
    } else {
        const double half = std::ldexp(1.0, clock_bits - 1);
        d = L / (half - 1.5);
        k_mid = half - 0.5;
    }
    return ClockWindow{k_mid * d, 2 * std::numbers::pi / (std::ldexp(1.0, clock_bits) * d)};
}

template <class Vec, class Mat>
typename Vec::Scalar recover_normalization(const Vec& x_unit, const Mat& A, const Vec& b) {
    if (A.rows() != b.size() || A.cols() != x_unit.size()) throw InvalidArgument("recover_normalization dimension mismatch");
    if (std::abs(x_unit.norm() - 1.0) > 1e-6) throw InvalidArgument("recover_normalization needs a unit vector");
    const Vec Ax = A * x_unit;
    std::vector<Eigen::Index> idx(static_cast<std::size_t>(b.size()));
    std::iota(idx.begin(), idx.end(), Eigen::Index{0});
    std::stable_sort(idx.begin(), idx.end(), [&](Eigen::Index a, Eigen::Index c) { return std::abs(b[a]) > std::abs(b[c]); });
    for (auto j : idx)
        if (std::abs(Ax[j]) > 1e-12) return b[j] / Ax[j];
    throw NumericalError("recover_normalization: every denominator is below 1e-12");
}

inline HHLResult hhl_solve(const CMatrix& A, const CVector& b, const HHLConfig& cfg) {
    cfg.validate();
    if (A.rows() != A.cols() || A.rows() != b.size()) throw InvalidArgument("hhl_solve dimension mismatch");
    const int n = log2_exact(static_cast<std::size_t>(A.rows()));
    check_hermitian(A);
    const double bnorm = b.norm();
    if (!(bnorm > 0)) throw InvalidArgument("hhl_solve needs a nonzero right-hand side");
    const int c = cfg.clock_bits;
    if (n + c + 1 > 26) throw InvalidArgument("register too large for desk-scale simulation");

    HHLResult res;
    res.window = cfg.window ? *cfg.window : auto_window(A, c);
    LCUDecomposition ham = pauli_decompose(A, 0.0);
    // Shift enters as an identity term so the Trotter circuit sees it too.
    const PauliString id(n);
    auto it = std::find_if(ham.terms.begin(), ham.terms.end(), [&](const LCUTerm& t) { return t.pauli == id; });
    if (it != ham.terms.end()) it->coeff += res.window.shift;
    else if (res.window.shift != 0.0) ham.terms.push_back({id, res.window.shift});
    ham.terms.erase(std::remove_if(ham.terms.begin(), ham.terms.end(), [](const LCUTerm& t) { return t.coeff == 0.0; }),
                    ham.terms.end());

    const PhaseEstimator pe(QpeSpec{ham, res.window.t0, c, cfg.evolution, cfg.trotter_m});
    const Register sys{0, n}, clock{n, c};
    const int anc = n + c;
    CVector amps = CVector::Zero(Eigen::Index{1} << (n + c + 1));
    amps.head(b.size()) = b / bnorm;
    StateVector s = StateVector::from_amplitudes(amps, false);
    DepthCounter dc;
    pe.forward(s, sys, clock, &dc);

    const ClockMap map{c, res.window.t0, res.window.shift};
    if (cfg.c_policy == CPolicy::Fixed) {
        res.c_const = cfg.c_fixed;
    } else {
        const auto marginal = clock_marginal(s, clock);
        double lmin = std::numeric_limits<double>::infinity();
        for (std::uint64_t k = 1; k < marginal.size(); ++k) {
            const double l = std::abs(map.lambda(k));
            if (marginal[k] > kRepresentedProbability && l > 1e-12 * map.bin_width()) lmin = std::min(lmin, l);
        }
        if (!std::isfinite(lmin)) throw QuantumError("no represented nonzero clock value");
        res.c_const = 0.9 * lmin;
    }
    eigenvalue_inversion(s, clock, anc, map, res.c_const, &dc);
    pe.inverse(s, sys, clock, &dc);

    auto [post, prob] = measure_ancilla_postselect(s, anc, 1);
    res.success_prob = prob;
    if (cfg.sampled_postselection) {
        std::mt19937_64 rng(cfg.seed);
        int attempts = 1;
        while (static_cast<double>(rng() >> 11) * 0x1.0p-53 >= prob) {
            if (++attempts > cfg.max_postselect_retries) throw QuantumError("postselection failed within the retry budget");
        }
        res.postselect_attempts = attempts;
    }
    // System amplitudes with the clock back at |0> and the ancilla at |1>.
    const std::uint64_t anc_bit = std::uint64_t{1} << anc;
    CVector x(b.size());
    for (Eigen::Index i = 0; i < b.size(); ++i) x[i] = post[static_cast<std::size_t>(i) | anc_bit];
    const double xn = x.norm();
    if (!(xn * xn > 1e-14)) throw QuantumError("solution register is empty after postselection");
    res.x_state = x / xn;
    res.depth = dc.report();
    res.scale = std::real(recover_normalization(res.x_state, A, b));
    if (cfg.compute_fidelity) {
        const CVector exact = A.fullPivLu().solve(b);
        res.fidelity_vs_exact = std::norm(exact.normalized().dot(res.x_state));
    }
    return res;
}

inline HHLResult hhl_solve(const Matrix& A, const Vector& b, const HHLConfig& cfg) {
    return hhl_solve(CMatrix(A.cast<Complex>()), CVector(b.cast<Complex>()), cfg);
}

inline HHLResult hhl_solve(const LCUDecomposition& A, const CVector& b, const HHLConfig& cfg) {
    return hhl_solve(reconstruct(A), b, cfg);
}

// Newton systems J dU = -F embedded for a Hermitian solver: optional row
// equilibration D = diag(1 / row abs sum), then the padded dilation.
struct EmbeddedStep {
    Matrix A;  // equilibrated J
    Vector b;  // equilibrated -F
    Dilation dilation;
};

inline EmbeddedStep embed_newton_system(const SparseMatrix& J, const Vector& F, bool equilibrate) {
    EmbeddedStep e;
    e.A = Matrix(J);
    e.b = -F;
    if (equilibrate) {
        for (Eigen::Index i = 0; i < e.A.rows(); ++i) {
            const double s = e.A.row(i).cwiseAbs().sum();
            if (s > 0) {
                e.A.row(i) /= s;
                e.b[i] /= s;
            }
        }
    }
    e.dilation = hermitian_dilation(e.A, e.b);
    return e;
}

// Turns a downloaded unit solution of the dilated system into the Newton step.
inline Vector recover_step(const EmbeddedStep& e, const Vector& x_dilated) {
    Vector live = e.dilation.live_block(x_dilated);
    const double nrm = live.norm();
    if (!(nrm > 0)) throw NumericalError("downloaded solution has an empty live block");
    live /= nrm;
    return recover_normalization(live, e.A, e.b) * live;
}

inline double direction_cosine(const Vector& a, const Vector& b) {
    const double d = a.norm() * b.norm();
    return d > 0 ? a.dot(b) / d : 0.0;
}

enum class Downloader { ExactRead, Shadows };

struct DownloadConfig {
    Downloader kind = Downloader::ExactRead;
    std::size_t shots = 100000;
    std::uint64_t seed = 0;
    ShadowConfig shadows;
};

// Reads a real solution state either exactly or through classical shadows.
inline Vector download_real_state(const CVector& state, const DownloadConfig& dl, std::uint64_t stream) {
    if (dl.kind == Downloader::ExactRead) {
        // Gauge: rotate the global phase so the largest entry is real.
        Eigen::Index imax = 0;
        state.cwiseAbs().maxCoeff(&imax);
        const Complex ph = std::abs(state[imax]) > 0 ? state[imax] / std::abs(state[imax]) : Complex(1.0);
        const Vector out = (state / ph).real();
        // Keep the sign convention of a real input untouched.
        return (state.imag().norm() <= 1e-12 * state.norm()) ? Vector(state.real()) : out;
    }
    const StateVector sv = StateVector::from_amplitudes(state);
    const auto snaps = collect_shadows(sv, dl.shots, derive_seed(dl.seed, stream), dl.shadows);
    return reconstruct_real_state(snaps, std::nullopt, sv.n_qubits());
}

struct QpfHhlOptions {
    bool equilibrate = true;
};

inline std::pair<Vector, SolveTrace> qpf_hhl(const PowerFlowProblem& p, const NewtonConfig& cfg_newton,
                                             const HHLConfig& cfg_hhl, const DownloadConfig& dl = {},
                                             const QpfHhlOptions& opt = {}) {
    HHLConfig hc = cfg_hhl;
    hc.compute_fidelity = false;
    return newton_loop(p, cfg_newton, [&](const SparseMatrix& J, const Vector& F, IterationRecord& rec) {
        const EmbeddedStep e = embed_newton_system(J, F, opt.equilibrate);
        const HHLResult r = hhl_solve(e.dilation.matrix, e.dilation.rhs, hc);
        Vector x = download_real_state(r.x_state, dl, static_cast<std::uint64_t>(rec.iter));
        Vector du = recover_step(e, x);
        rec.direction_cosine = direction_cosine(du, lu_solve(J, -F));
        rec.success_prob = r.success_prob;
        return du;
    });
}

// Cost estimate K * log2(N_bus) * s^2 kappa^2 / eps^2 from measured s and kappa.
inline double hhl_cost_estimate(int k_iter, int n_bus, int s, double kappa, double eps_inverse) {
    return static_cast<double>(std::max(k_iter, 1)) * std::log2(std::max(n_bus, 2)) * s * s * kappa * kappa /
           (eps_inverse * eps_inverse);
}

}  // namespace qpf
