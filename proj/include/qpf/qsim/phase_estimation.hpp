#pragma once

#include "qpf/core.hpp"
#include "qpf/lcu/lcu.hpp"
#include "qpf/qsim/circuits.hpp"
#include "qpf/qsim/depth.hpp"
#include "qpf/qsim/evolution.hpp"
#include "qpf/qsim/state_vector.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <vector>

namespace qpf {

struct QpeSpec {
    LCUDecomposition hamiltonian;
    double t0 = 1.0;
    int clock_bits = 1;
    Evolution evolution = Evolution::Exact;
    int trotter_m = 10;
};

// Controlled powers U^(2^j), U = exp(i t0 H), precomputed once so forward and
// inverse passes share them. Clock qubit j controls U^(2^j); after the inverse
// QFT the clock holds k = phase * 2^c with phase = lambda t0 / (2 pi).
class PhaseEstimator {
public:
    explicit PhaseEstimator(QpeSpec spec) : spec_(std::move(spec)) {
        if (spec_.clock_bits < 1) throw InvalidArgument("clock_bits must be at least 1");
        if (spec_.clock_bits > 16) throw InvalidArgument("clock_bits above 16 is beyond desk scale");
        if (spec_.trotter_m < 1) throw InvalidArgument("trotter_m must be at least 1");
        ordered_ = sorted_terms(spec_.hamiltonian);
        const CMatrix H = reconstruct(spec_.hamiltonian);
        // Eigenvectors whose phase leaves [0, 1) are kept so forward() can
        // reject states that actually occupy them.
        Eigen::SelfAdjointEigenSolver<CMatrix> es(H);
        for (Eigen::Index i = 0; i < es.eigenvalues().size(); ++i) {
            const double phase = es.eigenvalues()[i] * spec_.t0 / (2 * std::numbers::pi);
            if (phase < -1e-9 || phase >= 1.0) {
                outside_.push_back(es.eigenvectors().col(i));
                outside_phase_.push_back(phase);
            }
        }
        for (int j = 0; j < spec_.clock_bits; ++j) {
            const double t = std::ldexp(spec_.t0, j);
            if (spec_.evolution == Evolution::Exact) {
                powers_.push_back(exact_unitary(H, t));
            } else {
                if (spec_.hamiltonian.terms.empty()) {
                    powers_.push_back(CMatrix::Identity(H.rows(), H.cols()));
                } else {
                    powers_.push_back(trotter_unitary(TrotterPlan{spec_.hamiltonian, t, spec_.trotter_m}));
                }
            }
        }
    }

    const QpeSpec& spec() const { return spec_; }
    int n_system() const { return spec_.hamiltonian.n; }

    void forward(StateVector& s, const Register& system, const Register& clock, DepthCounter* dc) const {
        check(system, clock);
        check_window(s, system);
        for (int j = 0; j < clock.size; ++j) s.h(clock.offset + j);
        for (int j = 0; j < clock.size; ++j)
            s.apply_register(system, powers_[j], std::uint64_t{1} << (clock.offset + j));
        s.apply_register(clock, dft(clock.size, true));
        if (dc) record_qpe(*dc, ordered_, spec_.trotter_m, system, clock);
    }

    void inverse(StateVector& s, const Register& system, const Register& clock, DepthCounter* dc) const {
        check(system, clock);
        s.apply_register(clock, dft(clock.size, false));
        for (int j = clock.size - 1; j >= 0; --j)
            s.apply_register(system, powers_[j].adjoint(), std::uint64_t{1} << (clock.offset + j));
        for (int j = clock.size - 1; j >= 0; --j) s.h(clock.offset + j);
        if (dc) record_inverse_qpe(*dc, ordered_, spec_.trotter_m, system, clock);
    }

    // Unitary DFT on 2^c points; inverse uses exp(-2 pi i k m / N).
    static CMatrix dft(int bits, bool inverse) {
        const Eigen::Index N = Eigen::Index{1} << bits;
        const double sign = inverse ? -1.0 : 1.0;
        CMatrix F(N, N);
        for (Eigen::Index a = 0; a < N; ++a)
            for (Eigen::Index b = 0; b < N; ++b)
                F(a, b) = std::polar(1.0 / std::sqrt(static_cast<double>(N)),
                                     sign * 2 * std::numbers::pi * static_cast<double>((a * b) % N) / N);
        return F;
    }

private:
    void check(const Register& system, const Register& clock) const {
        if (system.size != spec_.hamiltonian.n) throw InvalidArgument("system register does not match the Hamiltonian");
        if (clock.size != spec_.clock_bits) throw InvalidArgument("clock register does not match clock_bits");
    }

    void check_window(const StateVector& s, const Register& system) const {
        if (outside_.empty()) return;
        const std::uint64_t smask = system.mask();
        const std::size_t sdim = std::size_t{1} << system.size;
        CVector block(static_cast<Eigen::Index>(sdim));
        for (std::size_t i = 0; i < outside_.size(); ++i) {
            double weight = 0.0;
            for (std::uint64_t base = 0; base < s.dim(); ++base) {
                if (base & smask) continue;
                for (std::uint64_t v = 0; v < sdim; ++v) block[static_cast<Eigen::Index>(v)] = s.amplitudes()[base | (v << system.offset)];
                weight += std::norm(outside_[i].dot(block));
            }
            if (weight > kWindowWeight)
                throw QuantumError("eigenphase " + std::to_string(outside_phase_[i]) +
                                   " leaves the principal window [0, 1)");
        }
    }

    static constexpr double kWindowWeight = 1e-12;

    QpeSpec spec_;
    std::vector<LCUTerm> ordered_;
    std::vector<CMatrix> powers_;
    std::vector<CVector> outside_;
    std::vector<double> outside_phase_;
};

// Appends a clock register above the system qubits and runs phase estimation.
inline StateVector qpe(const StateVector& system_state, const LCUDecomposition& ham, int clock_bits, double t0,
                       DepthCounter* counter = nullptr, Evolution evolution = Evolution::Exact, int trotter_m = 10) {
    if (system_state.n_qubits() != ham.n) throw InvalidArgument("state and Hamiltonian dimensions differ");
    PhaseEstimator pe(QpeSpec{ham, t0, clock_bits, evolution, trotter_m});
    const int n = ham.n;
    CVector amps = CVector::Zero(Eigen::Index{1} << (n + clock_bits));
    amps.head(system_state.amplitudes().size()) = system_state.amplitudes();
    StateVector s = StateVector::from_amplitudes(amps, false);
    pe.forward(s, Register{0, n}, Register{n, clock_bits}, counter);
    return s;
}

inline StateVector inverse_qpe(StateVector state, const LCUDecomposition& ham, int clock_bits, double t0,
                               DepthCounter* counter = nullptr, Evolution evolution = Evolution::Exact,
                               int trotter_m = 10) {
    if (state.n_qubits() != ham.n + clock_bits) throw InvalidArgument("state does not hold system plus clock");
    PhaseEstimator pe(QpeSpec{ham, t0, clock_bits, evolution, trotter_m});
    pe.inverse(state, Register{0, ham.n}, Register{ham.n, clock_bits}, counter);
    return state;
}

// Maps a clock value k to the eigenvalue estimate 2 pi k / (2^c t0) - shift.
struct ClockMap {
    int clock_bits = 1;
    double t0 = 1.0;
    double shift = 0.0;

    double bin_width() const { return 2 * std::numbers::pi / (std::ldexp(1.0, clock_bits) * t0); }
    double lambda(std::uint64_t k) const { return static_cast<double>(k) * bin_width() - shift; }
};

inline constexpr double kRepresentedProbability = 1e-12;
inline constexpr double kZeroAmplitudeProbability = 1e-20;

inline std::vector<double> clock_marginal(const StateVector& s, const Register& clock) {
    std::vector<double> p(std::size_t{1} << clock.size, 0.0);
    for (std::uint64_t i = 0; i < s.dim(); ++i) p[clock.value(i)] += std::norm(s.amplitudes()[i]);
    return p;
}

// Rotates the ancilla to sqrt(1 - (C/l)^2)|0> + (C/l)|1> for every nonzero clock
// value k, l = map.lambda(k). Clock value 0 is never rotated.
inline void eigenvalue_inversion(StateVector& s, const Register& clock, int ancilla, const ClockMap& map,
                                 double c_const, DepthCounter* dc = nullptr) {
    if (!(c_const > 0)) throw InvalidArgument("eigenvalue inversion needs C > 0");
    if (map.clock_bits != clock.size) throw InvalidArgument("clock map does not match the clock register");
    const auto marginal = clock_marginal(s, clock);
    const double zero_tol = 1e-12 * map.bin_width();
    for (std::uint64_t k = 0; k < marginal.size(); ++k) {
        const double l = map.lambda(k);
        if (std::abs(l) <= zero_tol && marginal[k] > kZeroAmplitudeProbability)
            throw QuantumError("clock value for eigenvalue 0 carries amplitude");
        if (k == 0 || std::abs(l) <= zero_tol) continue;
        const double ratio = c_const / l;
        if (std::abs(ratio) > 1.0 + 1e-12) {
            if (marginal[k] > kRepresentedProbability) throw QuantumError("C exceeds a represented |lambda|");
            continue;
        }
        const double theta = 2 * std::asin(std::clamp(ratio, -1.0, 1.0));
        const double c = std::cos(theta / 2), sn = std::sin(theta / 2);
        const std::uint64_t bit = std::uint64_t{1} << ancilla;
        auto& a = s.amplitudes();
        for (std::uint64_t i = 0; i < s.dim(); ++i) {
            if ((i & bit) || clock.value(i) != k) continue;
            const Complex a0 = a[i], a1 = a[i | bit];
            a[i] = c * a0 - sn * a1;
            a[i | bit] = sn * a0 + c * a1;
        }
    }
    if (dc) record_eigenvalue_inversion(*dc, clock, ancilla);
}

}  // namespace qpf
