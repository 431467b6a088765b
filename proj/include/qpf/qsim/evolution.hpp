#pragma once

#include "qpf/core.hpp"
#include "qpf/lcu/lcu.hpp"
#include "qpf/qsim/state_vector.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>

namespace qpf {

// How controlled powers exp(i t H) are realised in simulation.
enum class Evolution { Exact, Trotter };

struct TrotterPlan {
    LCUDecomposition terms;
    double t = 0.0;
    int m = 10;
};

// (prod_i exp(i t/M a_i P_i))^M with terms in descending |a_i|, ties lexicographic.
inline StateVector trotter_evolve(StateVector state, const TrotterPlan& plan, int offset = 0, std::uint64_t ctrl = 0) {
    if (plan.terms.terms.empty()) throw InvalidArgument("Trotter plan has no terms");
    if (plan.m < 1) throw InvalidArgument("Trotter plan needs m >= 1");
    const auto ordered = sorted_terms(plan.terms);
    const double dt = plan.t / plan.m;
    for (int s = 0; s < plan.m; ++s)
        for (const auto& term : ordered) state.apply_pauli_exponential(term.pauli, dt * term.coeff, offset, ctrl);
    return state;
}

// Dense matrix of the Trotter product, built column by column.
inline CMatrix trotter_unitary(const TrotterPlan& plan) {
    const Eigen::Index dim = Eigen::Index{1} << plan.terms.n;
    CMatrix U(dim, dim);
    for (Eigen::Index c = 0; c < dim; ++c) {
        CVector e = CVector::Zero(dim);
        e[c] = 1.0;
        U.col(c) = trotter_evolve(StateVector::from_amplitudes(e, false), plan).amplitudes();
    }
    return U;
}

// exp(i t H) for Hermitian H by eigendecomposition.
inline CMatrix exact_unitary(const CMatrix& H, double t) {
    Eigen::SelfAdjointEigenSolver<CMatrix> es(H);
    if (es.info() != Eigen::Success) throw NumericalError("eigendecomposition failed");
    const CVector phases = (Complex(0.0, t) * es.eigenvalues().cast<Complex>()).array().exp();
    return es.eigenvectors() * phases.asDiagonal() * es.eigenvectors().adjoint();
}

inline CMatrix exact_unitary(const LCUDecomposition& H, double t) { return exact_unitary(reconstruct(H), t); }

}  // namespace qpf
