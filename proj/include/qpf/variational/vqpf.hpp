#pragma once

#include "qpf/core.hpp"
#include "qpf/grid/power_flow.hpp"
#include "qpf/variational/ansatz.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <vector>

namespace qpf {

// Quadratic-form system <psi|O_a|psi> = f_a / c on 2^n amplitudes. Rows past
// the physical ones pin pad coordinates to zero.
struct VQPFProblem {
    int n = 1;
    std::vector<Matrix> observables;
    Vector rhs;
    int reference_row = 0;
    int live_dim = 0;
    // When set, the recovered complex voltages are rotated so bus 0 (the slack)
    // is real and positive. Otherwise only the global sign is fixed.
    bool fix_slack_phase = false;

    void validate() const {
        if (observables.empty() || static_cast<Eigen::Index>(observables.size()) != rhs.size())
            throw InvalidArgument("VQPF observables and rhs differ in length");
        if (reference_row < 0 || reference_row >= rhs.size()) throw InvalidArgument("reference row out of range");
        if (rhs[reference_row] == 0.0) throw InvalidArgument("reference row needs a nonzero rhs");
        const Eigen::Index dim = Eigen::Index{1} << n;
        for (const auto& O : observables)
            if (O.rows() != dim || O.cols() != dim) throw InvalidArgument("observable has the wrong dimension");
    }

    static VQPFProblem from_power_flow(const PowerFlowProblem& p) {
        VQPFProblem v;
        v.live_dim = p.dim();
        v.fix_slack_phase = true;
        v.n = std::max(1, ceil_log2(static_cast<std::size_t>(p.dim())));
        const Eigen::Index dim = Eigen::Index{1} << v.n;
        std::vector<double> f;
        for (int a = 0; a < p.dim(); ++a) {
            // The slack angle only fixes the global phase, which recovery handles.
            if (p.is_linear_row(a)) continue;
            Matrix O = Matrix::Zero(dim, dim);
            O.topLeftCorner(p.dim(), p.dim()) = Matrix(p.forms[a]);
            v.observables.push_back(O);
            f.push_back(p.rhs[a]);
            if (p.row_kind[a] == RowKind::VmagSlack) v.reference_row = static_cast<int>(v.observables.size()) - 1;
        }
        if (dim > p.dim()) {
            Matrix pad = Matrix::Zero(dim, dim);
            for (Eigen::Index i = p.dim(); i < dim; ++i) pad(i, i) = 1.0;
            v.observables.push_back(pad);
            f.push_back(0.0);
        }
        v.rhs = Eigen::Map<Vector>(f.data(), static_cast<Eigen::Index>(f.size()));
        v.validate();
        return v;
    }
};

inline Vector vqpf_expectations(const VQPFProblem& p, const StateVector& s) {
    const Vector psi = s.amplitudes().real();
    Vector e(static_cast<Eigen::Index>(p.observables.size()));
    for (std::size_t a = 0; a < p.observables.size(); ++a) {
        // Observables are real symmetric, so the imaginary part contributes separately.
        const Vector im = s.amplitudes().imag();
        e[static_cast<Eigen::Index>(a)] = psi.dot(p.observables[a] * psi) + im.dot(p.observables[a] * im);
    }
    return e;
}

// 1/2 sum_{a != ref} (E_a / E_ref - f_a / f_ref)^2.
inline ExpectationLoss vqpf_objective(const VQPFProblem& p) {
    p.validate();
    ExpectationLoss L;
    L.expectations = [p](const StateVector& s) { return vqpf_expectations(p, s); };
    const int ref = p.reference_row;
    const Vector target = p.rhs / p.rhs[ref];
    L.combine = [ref, target](const Vector& e) {
        if (std::abs(e[ref]) <= 1e-10) throw NumericalError("reference expectation is near zero");
        double s = 0.0;
        for (Eigen::Index a = 0; a < e.size(); ++a)
            if (a != ref) s += std::pow(e[a] / e[ref] - target[a], 2);
        return 0.5 * s;
    };
    L.combine_gradient = [ref, target](const Vector& e) {
        if (std::abs(e[ref]) <= 1e-10) throw NumericalError("reference expectation is near zero");
        Vector g = Vector::Zero(e.size());
        for (Eigen::Index a = 0; a < e.size(); ++a) {
            if (a == ref) continue;
            const double r = e[a] / e[ref] - target[a];
            g[a] += r / e[ref];
            g[ref] -= r * e[a] / (e[ref] * e[ref]);
        }
        return g;
    };
    return L;
}

inline double vqpf_loss(const VQPFProblem& p, const Ansatz& a) {
    if (a.n != p.n) throw InvalidArgument("ansatz and problem sizes differ");
    return vqpf_objective(p)(a);
}

struct VqpfResult {
    DescentResult descent;
    Vector u;  // physical voltages, length live_dim
    double c = 0.0;
    Vector fit_residual;  // c <O_a> - f_a over all rows
};

// Least-squares scale c with c <psi|O_a|psi> ~ f_a, then U = sqrt(c) psi with
// the gauge fixed as described on VQPFProblem.
inline VqpfResult vqpf_recover(const VQPFProblem& p, const StateVector& s) {
    const Vector e = vqpf_expectations(p, s);
    const double den = e.squaredNorm();
    if (!(den > 0)) throw NumericalError("all expectations vanish");
    VqpfResult r;
    r.c = e.dot(p.rhs) / den;
    if (!(r.c > 0)) throw NumericalError("recovered normalization is not positive");
    Vector psi = s.amplitudes().real();
    if (p.fix_slack_phase) {
        const Complex v0(psi[0], psi[1]);
        if (!(std::abs(v0) > 1e-12)) throw NumericalError("slack voltage vanishes in the recovered state");
        const Complex rot = std::conj(v0) / std::abs(v0);
        for (int k = 0; 2 * k + 1 < p.live_dim; ++k) {
            const Complex v = rot * Complex(psi[2 * k], psi[2 * k + 1]);
            psi[2 * k] = v.real();
            psi[2 * k + 1] = v.imag();
        }
    } else if (psi[0] < 0) {
        psi = -psi;
    }
    r.u = std::sqrt(r.c) * psi.head(p.live_dim);
    r.fit_residual = r.c * e - p.rhs;
    return r;
}

inline VqpfResult vqpf_solve(const VQPFProblem& p, const Ansatz& a0, const OptimizerConfig& opt) {
    if (a0.n != p.n) throw InvalidArgument("ansatz and problem sizes differ");
    const ExpectationLoss loss = vqpf_objective(p);
    DescentResult d = gradient_descent(loss, a0, opt);
    VqpfResult r = vqpf_recover(p, apply_ansatz(d.ansatz));
    r.descent = std::move(d);
    return r;
}

// Smallest bus voltage magnitude of a recovered power-flow vector.
inline double min_voltage_magnitude(const Vector& u) {
    double m = std::numeric_limits<double>::infinity();
    for (Eigen::Index k = 0; 2 * k + 1 < u.size(); ++k) m = std::min(m, std::hypot(u[2 * k], u[2 * k + 1]));
    return m;
}

// Ansatz fitted to the normalized flat start (every bus at 1 + 0j), the
// same initial point Newton uses. It seeds the first restart so the descent
// begins in the high-voltage basin.
inline Ansatz flat_start_ansatz(const VQPFProblem& p, const Ansatz& a0) {
    CVector t = CVector::Zero(Eigen::Index{1} << p.n);
    for (int k = 0; 2 * k < p.live_dim; ++k) t[2 * k] = 1.0;
    return fit_ansatz_to_state(t, a0, OptimizerConfig{0.5, 500, 1e-8, {}, 0}).ansatz;
}

// Restart r draws angles with derive_seed(seed, r); restart 0 is then fitted
// to the flat start. Converged runs beat unconverged ones. Among converged
// power-flow runs the high-voltage branch wins (largest minimum |V|),
// otherwise the lowest loss wins.
inline VqpfResult vqpf_solve_restarts(const VQPFProblem& p, int layers, const OptimizerConfig& opt, int restarts) {
    if (restarts < 1) throw InvalidArgument("restarts must be at least 1");
    std::optional<VqpfResult> best;
    auto better = [&](const VqpfResult& a, const VqpfResult& b) {
        if (a.descent.converged != b.descent.converged) return a.descent.converged;
        if (a.descent.converged && p.fix_slack_phase) {
            const double ma = min_voltage_magnitude(a.u), mb = min_voltage_magnitude(b.u);
            if (std::abs(ma - mb) > 1e-6) return ma > mb;
        }
        return a.descent.final_loss < b.descent.final_loss;
    };
    std::string last_error;
    for (int r = 0; r < restarts; ++r) {
        try {
            const Ansatz a0 = Ansatz::random(p.n, layers, derive_seed(opt.seed, static_cast<std::uint64_t>(r)));
            VqpfResult cur = vqpf_solve(p, r == 0 ? flat_start_ansatz(p, a0) : a0, opt);
            if (!best || better(cur, *best)) best = std::move(cur);
        } catch (const NumericalError& e) {
            last_error = e.what();
        }
    }
    if (!best) throw NumericalError("every VQPF restart failed: " + last_error);
    return *best;
}

}  // namespace qpf
