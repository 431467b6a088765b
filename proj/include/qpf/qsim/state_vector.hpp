#pragma once

#include "qpf/core.hpp"
#include "qpf/qsim/pauli.hpp"

#include <cmath>
#include <cstdint>
#include <random>
#include <utility>
#include <vector>

namespace qpf {

// Contiguous block of qubits inside a larger register.
struct Register {
    int offset = 0;
    int size = 0;
    std::uint64_t mask() const { return ((std::uint64_t{1} << size) - 1) << offset; }
    std::uint64_t value(std::uint64_t index) const { return (index >> offset) & ((std::uint64_t{1} << size) - 1); }
};

class StateVector {
public:
    StateVector() = default;
    explicit StateVector(int n_qubits) : n_(n_qubits) {
        if (n_qubits < 0 || n_qubits > 30) throw InvalidArgument("qubit count out of range");
        amps_ = CVector::Zero(Eigen::Index{1} << n_qubits);
        amps_[0] = 1.0;
    }

    // Wraps amplitudes; the vector length must be a power of two and its norm nonzero.
    static StateVector from_amplitudes(const CVector& amps, bool normalize = true) {
        StateVector s;
        s.n_ = log2_exact(static_cast<std::size_t>(amps.size()));
        s.amps_ = amps;
        if (normalize) {
            const double nrm = amps.norm();
            if (!(nrm > 0)) throw InvalidArgument("cannot normalize a zero vector");
            s.amps_ /= nrm;
        }
        return s;
    }
    static StateVector from_real(const Vector& v) { return from_amplitudes(v.cast<Complex>()); }

    int n_qubits() const { return n_; }
    std::size_t dim() const { return static_cast<std::size_t>(amps_.size()); }
    const CVector& amplitudes() const { return amps_; }
    CVector& amplitudes() { return amps_; }
    Complex operator[](std::size_t i) const { return amps_[static_cast<Eigen::Index>(i)]; }
    double norm() const { return amps_.norm(); }
    void normalize() { amps_ /= amps_.norm(); }

    // Applies a 2x2 matrix on qubit q, on the subspace where all ctrl bits are 1.
    void apply_1q(int q, const Eigen::Matrix2cd& U, std::uint64_t ctrl = 0) {
        check_qubit(q);
        const std::uint64_t bit = std::uint64_t{1} << q;
        for (std::uint64_t i = 0; i < dim(); ++i) {
            if ((i & bit) || (i & ctrl) != ctrl) continue;
            const Complex a0 = amps_[i], a1 = amps_[i | bit];
            amps_[i] = U(0, 0) * a0 + U(0, 1) * a1;
            amps_[i | bit] = U(1, 0) * a0 + U(1, 1) * a1;
        }
    }

    void h(int q) {
        const double s = 1.0 / std::sqrt(2.0);
        Eigen::Matrix2cd U;
        U << s, s, s, -s;
        apply_1q(q, U);
    }
    void x(int q, std::uint64_t ctrl = 0) {
        Eigen::Matrix2cd U;
        U << 0, 1, 1, 0;
        apply_1q(q, U, ctrl);
    }
    // RY(theta) = exp(-i theta Y / 2).
    void ry(int q, double theta, std::uint64_t ctrl = 0) {
        const double c = std::cos(theta / 2), s = std::sin(theta / 2);
        Eigen::Matrix2cd U;
        U << c, -s, s, c;
        apply_1q(q, U, ctrl);
    }
    void rz(int q, double theta, std::uint64_t ctrl = 0) {
        Eigen::Matrix2cd U;
        U << std::polar(1.0, -theta / 2), 0, 0, std::polar(1.0, theta / 2);
        apply_1q(q, U, ctrl);
    }
    void cnot(int c, int t) { x(t, std::uint64_t{1} << c); }
    void cz(int a, int b) {
        check_qubit(a);
        check_qubit(b);
        const std::uint64_t m = (std::uint64_t{1} << a) | (std::uint64_t{1} << b);
        for (std::uint64_t i = 0; i < dim(); ++i)
            if ((i & m) == m) amps_[i] = -amps_[i];
    }
    // Multiplies by `phase` every amplitude whose index has all bits of mask set.
    void phase_on(std::uint64_t mask, Complex phase) {
        for (std::uint64_t i = 0; i < dim(); ++i)
            if ((i & mask) == mask) amps_[i] *= phase;
    }

    // Applies a dense unitary on the register `reg`, controlled on ctrl bits.
    void apply_register(const Register& reg, const CMatrix& U, std::uint64_t ctrl = 0) {
        const std::size_t rdim = std::size_t{1} << reg.size;
        if (static_cast<std::size_t>(U.rows()) != rdim || U.cols() != U.rows())
            throw InvalidArgument("register unitary has the wrong dimension");
        const std::uint64_t rmask = reg.mask();
        CVector in(static_cast<Eigen::Index>(rdim)), out;
        for (std::uint64_t base = 0; base < dim(); ++base) {
            if ((base & rmask) || (base & ctrl) != ctrl) continue;
            for (std::uint64_t v = 0; v < rdim; ++v) in[v] = amps_[base | (v << reg.offset)];
            out.noalias() = U * in;
            for (std::uint64_t v = 0; v < rdim; ++v) amps_[base | (v << reg.offset)] = out[v];
        }
    }

    // exp(i angle P) with P acting on qubits offset..offset+n-1, controlled on ctrl bits.
    void apply_pauli_exponential(const PauliString& p, double angle, int offset = 0, std::uint64_t ctrl = 0) {
        if (offset < 0 || offset + p.n() > n_) throw InvalidArgument("Pauli string does not fit the register");
        const std::uint64_t f = p.flip_mask() << offset;
        const std::uint64_t z = p.phase_mask() << offset;
        const int ny = p.y_count();
        const double c = std::cos(angle), s = std::sin(angle);
        const Complex is(0.0, s);
        if (f == 0) {
            for (std::uint64_t i = 0; i < dim(); ++i) {
                if ((i & ctrl) != ctrl) continue;
                amps_[i] *= Complex(c, 0) + is * PauliString::element(i, z, ny);
            }
            return;
        }
        const std::uint64_t top = std::uint64_t{1} << (63 - __builtin_clzll(f));
        for (std::uint64_t i = 0; i < dim(); ++i) {
            if ((i & top) || (i & ctrl) != ctrl) continue;
            const std::uint64_t j = i ^ f;
            const Complex ai = amps_[i], aj = amps_[j];
            // (P a)[i] = <i|P|j> a_j with <i|P|j> = element(j).
            amps_[i] = c * ai + is * PauliString::element(j, z, ny) * aj;
            amps_[j] = c * aj + is * PauliString::element(i, z, ny) * ai;
        }
    }

    // P|psi> without exponentiation.
    CVector apply_pauli(const PauliString& p, int offset = 0) const {
        const std::uint64_t f = p.flip_mask() << offset;
        const std::uint64_t z = p.phase_mask() << offset;
        const int ny = p.y_count();
        CVector out(amps_.size());
        for (std::uint64_t x = 0; x < dim(); ++x) out[x ^ f] = PauliString::element(x, z, ny) * amps_[x];
        return out;
    }

    double expectation(const PauliString& p) const { return amps_.dot(apply_pauli(p)).real(); }

    // Born probability that qubit q reads 1.
    double probability_one(int q) const {
        check_qubit(q);
        double s = 0.0;
        const std::uint64_t bit = std::uint64_t{1} << q;
        for (std::uint64_t i = 0; i < dim(); ++i)
            if (i & bit) s += std::norm(amps_[i]);
        return s;
    }

    std::vector<double> probabilities() const {
        std::vector<double> p(dim());
        for (std::size_t i = 0; i < dim(); ++i) p[i] = std::norm(amps_[static_cast<Eigen::Index>(i)]);
        return p;
    }

    // Draws computational-basis outcomes; deterministic for a given generator state.
    template <class Rng>
    std::vector<std::uint64_t> sample(std::size_t shots, Rng& rng) const {
        const auto p = probabilities();
        std::discrete_distribution<std::uint64_t> dist(p.begin(), p.end());
        std::vector<std::uint64_t> out(shots);
        for (auto& o : out) o = dist(rng);
        return out;
    }

private:
    void check_qubit(int q) const {
        if (q < 0 || q >= n_) throw InvalidArgument("qubit index out of range");
    }

    int n_ = 0;
    CVector amps_;
};

inline StateVector apply_pauli_exponential(StateVector state, const PauliString& p, double angle) {
    if (p.n() != state.n_qubits()) throw InvalidArgument("Pauli string and state dimensions differ");
    state.apply_pauli_exponential(p, angle);
    return state;
}

// Projects qubit `ancilla` onto |want> and renormalizes.
inline std::pair<StateVector, double> measure_ancilla_postselect(const StateVector& state, int ancilla, int want) {
    if (ancilla < 0 || ancilla >= state.n_qubits()) throw InvalidArgument("ancilla index out of range");
    if (want != 0 && want != 1) throw InvalidArgument("postselection outcome must be 0 or 1");
    const double p1 = state.probability_one(ancilla);
    const double prob = want == 1 ? p1 : 1.0 - p1;
    if (prob < 1e-14) throw QuantumError("postselection probability below 1e-14");
    StateVector out = state;
    const std::uint64_t bit = std::uint64_t{1} << ancilla;
    auto& a = out.amplitudes();
    for (std::uint64_t i = 0; i < out.dim(); ++i) {
        const bool one = (i & bit) != 0;
        if (one != (want == 1)) a[i] = 0.0;
    }
    a /= std::sqrt(prob);
    return {out, prob};
}

}  // namespace qpf
