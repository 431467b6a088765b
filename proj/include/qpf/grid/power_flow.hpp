#pragma once

#include "qpf/core.hpp"
#include "qpf/grid/case.hpp"

#include <Eigen/SVD>

#include <cmath>
#include <limits>
#include <vector>

namespace qpf {

enum class RowKind { VmagSlack, ThetaSlack, Pinj, Vmag, Qinj };

inline const char* to_string(RowKind k) {
    switch (k) {
        case RowKind::VmagSlack: return "vmag_slack";
        case RowKind::ThetaSlack: return "theta_slack";
        case RowKind::Pinj: return "p_inj";
        case RowKind::Vmag: return "vmag";
        case RowKind::Qinj: return "q_inj";
    }
    return "?";
}

// Cartesian power-flow system: row a reads u^T forms[a] u - rhs[a] = 0, except
// the ThetaSlack row which is the linear constraint u[1] = 0.
// Bus k (0-based) owns coordinates 2k (real part) and 2k+1 (imaginary part).
struct PowerFlowProblem {
    int n_bus = 0;
    std::vector<SparseMatrix> forms;
    Vector rhs;
    std::vector<RowKind> row_kind;
    std::vector<int> row_bus;
    std::vector<std::vector<int>> neighbors;

    int dim() const { return 2 * n_bus; }
    bool is_linear_row(int a) const { return row_kind[a] == RowKind::ThetaSlack; }
};

inline constexpr double kStructuralZero = 1e-14;
inline constexpr int kDenseSvdLimit = 2048;

inline CSparseMatrix build_admittance(const GridCase& gc) {
    const int n = gc.n_bus();
    std::vector<Eigen::Triplet<Complex>> trips;
    for (const auto& br : gc.branches) {
        if (br.r == 0.0 && br.x == 0.0) throw InvalidArgument("branch with r = x = 0");
        const Complex y = 1.0 / Complex(br.r, br.x);
        const Complex half_shunt(0.0, br.b_sh / 2.0);
        const int k = br.from - 1, l = br.to - 1;
        trips.emplace_back(k, k, y + half_shunt);
        trips.emplace_back(l, l, y + half_shunt);
        trips.emplace_back(k, l, -y);
        trips.emplace_back(l, k, -y);
    }
    CSparseMatrix Y(n, n);
    Y.setFromTriplets(trips.begin(), trips.end());
    return Y;
}

namespace detail {

inline SparseMatrix symmetrized(int dim, const std::vector<Eigen::Triplet<double>>& trips) {
    SparseMatrix T(dim, dim);
    T.setFromTriplets(trips.begin(), trips.end());
    SparseMatrix Tt = SparseMatrix(T.transpose());
    SparseMatrix M = 0.5 * (T + Tt);
    M.prune([](Eigen::Index, Eigen::Index, double v) { return std::abs(v) >= kStructuralZero; });
    M.makeCompressed();
    return M;
}

}  // namespace detail

inline PowerFlowProblem build_quadratic_forms(const GridCase& gc) {
    const int n = gc.n_bus();
    const int dim = 2 * n;
    PowerFlowProblem p;
    p.n_bus = n;
    p.neighbors = gc.adjacency();
    p.rhs = Vector::Zero(dim);
    p.forms.resize(dim, SparseMatrix(dim, dim));
    p.row_kind.resize(dim);
    p.row_bus.resize(dim);

    const CSparseMatrix Y = build_admittance(gc);
    const Matrix G = Matrix(CMatrix(Y).real());
    const Matrix B = Matrix(CMatrix(Y).imag());

    for (int k = 0; k < n; ++k) {
        const Bus& bus = gc.buses[k];
        const int ek = 2 * k, fk = 2 * k + 1;
        std::vector<Eigen::Triplet<double>> pt, qt, vt;
        vt.emplace_back(ek, ek, 1.0);
        vt.emplace_back(fk, fk, 1.0);
        std::vector<int> cols = p.neighbors[k];
        cols.push_back(k);
        for (int l : cols) {
            const double g = G(k, l), b = B(k, l);
            const int el = 2 * l, fl = 2 * l + 1;
            // Re(V_k conj(Y_kl V_l)) and Im(...) expanded in (e, f).
            pt.emplace_back(ek, el, g);
            pt.emplace_back(fk, fl, g);
            pt.emplace_back(fk, el, b);
            pt.emplace_back(ek, fl, -b);
            qt.emplace_back(fk, el, g);
            qt.emplace_back(ek, fl, -g);
            qt.emplace_back(ek, el, -b);
            qt.emplace_back(fk, fl, -b);
        }
        const int r0 = 2 * k, r1 = 2 * k + 1;
        p.row_bus[r0] = p.row_bus[r1] = k;
        switch (bus.kind) {
            case BusKind::Slack:
                p.row_kind[r0] = RowKind::VmagSlack;
                p.forms[r0] = detail::symmetrized(dim, vt);
                p.rhs[r0] = bus.v_set * bus.v_set;
                p.row_kind[r1] = RowKind::ThetaSlack;
                p.rhs[r1] = 0.0;
                break;
            case BusKind::PV:
                p.row_kind[r0] = RowKind::Pinj;
                p.forms[r0] = detail::symmetrized(dim, pt);
                p.rhs[r0] = bus.p_gen;
                p.row_kind[r1] = RowKind::Vmag;
                p.forms[r1] = detail::symmetrized(dim, vt);
                p.rhs[r1] = bus.v_set * bus.v_set;
                break;
            case BusKind::PQ:
                p.row_kind[r0] = RowKind::Pinj;
                p.forms[r0] = detail::symmetrized(dim, pt);
                p.rhs[r0] = -bus.p_load;
                p.row_kind[r1] = RowKind::Qinj;
                p.forms[r1] = detail::symmetrized(dim, qt);
                p.rhs[r1] = -bus.q_load;
                break;
        }
    }
    return p;
}

// Flat start: every bus at 1 + 0j.
inline Vector flat_start(int n_bus) {
    Vector u = Vector::Zero(2 * n_bus);
    for (int k = 0; k < n_bus; ++k) u[2 * k] = 1.0;
    return u;
}

inline void check_dim(const PowerFlowProblem& p, const Vector& u) {
    if (u.size() != p.dim())
        throw InvalidArgument("voltage vector has length " + std::to_string(u.size()) + ", expected " +
                              std::to_string(p.dim()));
}

inline double quadratic_value(const SparseMatrix& M, const Vector& u) { return u.dot(M * u); }

inline Vector residual(const PowerFlowProblem& p, const Vector& u) {
    check_dim(p, u);
    Vector F(p.dim());
    for (int a = 0; a < p.dim(); ++a)
        F[a] = p.is_linear_row(a) ? u[1] - p.rhs[a] : quadratic_value(p.forms[a], u) - p.rhs[a];
    return F;
}

// Row a is 2 (O_a u)^T; the pattern is the structural row support of O_a,
// so stored entries can be numerically zero (e.g. imaginary parts at flat start).
inline SparseMatrix jacobian(const PowerFlowProblem& p, const Vector& u) {
    check_dim(p, u);
    const int dim = p.dim();
    std::vector<Eigen::Triplet<double>> trips;
    for (int a = 0; a < dim; ++a) {
        if (p.is_linear_row(a)) {
            trips.emplace_back(a, 1, 1.0);
            continue;
        }
        const SparseMatrix& M = p.forms[a];
        for (int i = 0; i < M.outerSize(); ++i) {
            double acc = 0.0;
            bool any = false;
            for (SparseMatrix::InnerIterator it(M, i); it; ++it) {
                acc += it.value() * u[it.col()];
                any = true;
            }
            if (any) trips.emplace_back(a, i, 2.0 * acc);
        }
    }
    SparseMatrix J(dim, dim);
    J.setFromTriplets(trips.begin(), trips.end());
    J.makeCompressed();
    return J;
}

// Maximum nonzero count over rows and columns, counting entries with |v| > 0.
inline int sparsity(const SparseMatrix& J) {
    std::vector<int> row(J.rows(), 0), col(J.cols(), 0);
    for (int i = 0; i < J.outerSize(); ++i)
        for (SparseMatrix::InnerIterator it(J, i); it; ++it)
            if (std::abs(it.value()) > 0.0) {
                ++row[it.row()];
                ++col[it.col()];
            }
    int s = 0;
    for (int v : row) s = std::max(s, v);
    for (int v : col) s = std::max(s, v);
    return s;
}

// Maximum stored-entry count over rows and columns. The Jacobian stores its
// topological pattern, so this count does not depend on the iterate.
inline int structural_sparsity(const SparseMatrix& J) {
    std::vector<int> row(J.rows(), 0), col(J.cols(), 0);
    for (int i = 0; i < J.outerSize(); ++i)
        for (SparseMatrix::InnerIterator it(J, i); it; ++it) {
            ++row[it.row()];
            ++col[it.col()];
        }
    int s = 0;
    for (int v : row) s = std::max(s, v);
    for (int v : col) s = std::max(s, v);
    return s;
}

inline double condition_number(const Matrix& A) {
    if (A.rows() != A.cols()) throw InvalidArgument("condition number needs a square matrix");
    if (A.rows() > kDenseSvdLimit) throw InvalidArgument("matrix exceeds the dense SVD size limit of 2048");
    if (A.rows() == 0) return 1.0;
    Eigen::JacobiSVD<Matrix> svd(A);
    const auto& s = svd.singularValues();
    const double smin = s[s.size() - 1];
    if (smin < 1e-300) return std::numeric_limits<double>::infinity();
    return s[0] / smin;
}

inline double condition_number(const SparseMatrix& J) { return condition_number(Matrix(J)); }

}  // namespace qpf
