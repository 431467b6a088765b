#pragma once

#include "qpf/core.hpp"
#include "qpf/grid/power_flow.hpp"

#include <Eigen/SparseLU>

#include <cmath>
#include <cstdio>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace qpf {

struct NewtonConfig {
    std::optional<Vector> u0;  // flat start when empty
    int k_max = 20;
    double eps0 = 1e-8;
    bool record_kappa = true;

    void validate() const {
        if (k_max < 1) throw InvalidArgument("k_max must be at least 1");
        if (!(eps0 > 0)) throw InvalidArgument("eps0 must be positive");
    }
};

struct IterationRecord {
    int iter = 0;
    double residual = 0.0;  // infinity norm of F at this iterate
    double kappa = 0.0;
    int sparsity = 0;  // structural count of the Jacobian pattern
    double step_norm = 0.0;  // Euclidean norm of the step taken from this iterate
    // Filled by the quantum drivers: cosine between their step and the LU step.
    std::optional<double> direction_cosine;
    std::optional<double> success_prob;
    std::optional<int> inner_iterations;
};

struct SolveTrace {
    std::vector<IterationRecord> records;
    bool converged = false;
    int iterations = 0;
    // One loss curve per outer iteration for the variational driver.
    std::vector<std::vector<double>> inner_loss_curves;
};

// Sparse LU with one round of iterative refinement.
inline Vector lu_solve(const SparseMatrix& A, const Vector& b) {
    if (A.rows() != A.cols()) throw InvalidArgument("lu_solve needs a square matrix");
    if (A.rows() != b.size()) throw InvalidArgument("lu_solve dimension mismatch");
    if (A.rows() == 0) return Vector(0);
    Eigen::SparseMatrix<double, Eigen::ColMajor> Ac(A);
    Ac.makeCompressed();
    Eigen::SparseLU<Eigen::SparseMatrix<double, Eigen::ColMajor>, Eigen::COLAMDOrdering<int>> lu;
    lu.analyzePattern(Ac);
    lu.factorize(Ac);
    if (lu.info() != Eigen::Success) throw SingularMatrixError("sparse LU failed: matrix is singular to working precision");
    Vector x = lu.solve(b);
    if (lu.info() != Eigen::Success || !x.allFinite())
        throw SingularMatrixError("sparse LU solve produced non-finite values");
    const Vector r = b - A * x;
    if (inf_norm(r) > 1e-12 * inf_norm(b)) x += lu.solve(r);
    if (!x.allFinite()) throw SingularMatrixError("sparse LU refinement produced non-finite values");
    return x;
}

// Outer Newton loop shared by every inner solver. `step(J, F, record)` returns
// dU solving J dU = -F and may annotate the record.
template <class StepFn>
std::pair<Vector, SolveTrace> newton_loop(const PowerFlowProblem& p, const NewtonConfig& cfg, StepFn&& step) {
    cfg.validate();
    Vector u = cfg.u0 ? *cfg.u0 : flat_start(p.n_bus);
    check_dim(p, u);
    SolveTrace trace;
    int k = 0;
    Vector F = residual(p, u);
    while (true) {
        IterationRecord rec;
        rec.iter = k;
        rec.residual = inf_norm(F);
        if (!std::isfinite(rec.residual)) throw NumericalError("non-finite residual at iteration " + std::to_string(k));
        const SparseMatrix J = jacobian(p, u);
        rec.sparsity = structural_sparsity(J);
        rec.kappa = cfg.record_kappa ? condition_number(J) : std::nan("");
        if (!(k < cfg.k_max && rec.residual >= cfg.eps0)) {
            trace.records.push_back(rec);
            break;
        }
        const Vector du = step(J, F, rec);
        if (!du.allFinite()) throw NumericalError("non-finite Newton step at iteration " + std::to_string(k));
        rec.step_norm = du.norm();
        trace.records.push_back(rec);
        u += du;
        if (!u.allFinite()) throw NumericalError("non-finite iterate at iteration " + std::to_string(k + 1));
        F = residual(p, u);
        ++k;
    }
    trace.iterations = k;
    trace.converged = trace.records.back().residual < cfg.eps0;
    return {u, trace};
}

template <class LinearSolver>
std::pair<Vector, SolveTrace> newton_raphson(const PowerFlowProblem& p, const NewtonConfig& cfg,
                                             LinearSolver&& solve) {
    return newton_loop(p, cfg, [&](const SparseMatrix& J, const Vector& F, IterationRecord&) {
        return Vector(solve(J, Vector(-F)));
    });
}

inline std::pair<Vector, SolveTrace> newton_raphson(const PowerFlowProblem& p, const NewtonConfig& cfg = {}) {
    return newton_raphson(p, cfg, [](const SparseMatrix& J, const Vector& b) { return lu_solve(J, b); });
}

inline std::string format_double(double v) {
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    if (std::isnan(v)) return "nan";
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

inline std::string diagnostics_csv(const SolveTrace& trace) {
    if (trace.records.empty()) throw InvalidArgument("diagnostics_csv needs a nonempty trace");
    std::string out = "iter,residual,kappa,sparsity,step_norm\n";
    for (const auto& r : trace.records) {
        out += std::to_string(r.iter) + "," + format_double(r.residual) + "," + format_double(r.kappa) + "," +
               std::to_string(r.sparsity) + "," + format_double(r.step_norm) + "\n";
    }
    return out;
}

}  // namespace qpf
