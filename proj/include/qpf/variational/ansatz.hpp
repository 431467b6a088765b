#pragma once

#include "qpf/core.hpp"
#include "qpf/qsim/state_vector.hpp"

#include <cmath>
#include <cstdint>
#include <functional>
#include <numbers>
#include <random>

namespace qpf {

// Hardware-efficient real ansatz: an RY layer, then `layers` blocks of
// [ring of CZ, RY layer]. theta[l*n + q] drives qubit q in rotation layer l.
struct Ansatz {
    int n = 1;
    int layers = 0;
    Vector theta;

    int parameter_count() const { return n * (layers + 1); }

    static Ansatz zeros(int n, int layers) {
        if (n < 1 || layers < 0) throw InvalidArgument("ansatz needs n >= 1 and layers >= 0");
        return Ansatz{n, layers, Vector::Zero(n * (layers + 1))};
    }
    // Angles uniform in [0, 2 pi).
    static Ansatz random(int n, int layers, std::uint64_t seed) {
        Ansatz a = zeros(n, layers);
        std::mt19937_64 rng(seed);
        for (Eigen::Index i = 0; i < a.theta.size(); ++i)
            a.theta[i] = 2 * std::numbers::pi * static_cast<double>(rng() >> 11) * 0x1.0p-53;
        return a;
    }
};

inline void apply_entangler(StateVector& s) {
    const int n = s.n_qubits();
    if (n == 2) {
        s.cz(0, 1);
    } else if (n > 2) {
        for (int q = 0; q < n; ++q) s.cz(q, (q + 1) % n);
    }
}

inline StateVector apply_ansatz(const Ansatz& a) {
    if (a.theta.size() != a.parameter_count()) throw InvalidArgument("ansatz parameter count mismatch");
    StateVector s(a.n);
    for (int q = 0; q < a.n; ++q) s.ry(q, a.theta[q]);
    for (int l = 1; l <= a.layers; ++l) {
        apply_entangler(s);
        for (int q = 0; q < a.n; ++q) s.ry(q, a.theta[l * a.n + q]);
    }
    return s;
}

// Loss written as g(E(theta)) where each E_m is an expectation value of a
// fixed Hermitian observable in the ansatz state; this is what makes the
// parameter-shift rule applicable through the chain rule.
struct ExpectationLoss {
    std::function<Vector(const StateVector&)> expectations;
    std::function<double(const Vector&)> combine;
    std::function<Vector(const Vector&)> combine_gradient;

    double operator()(const Ansatz& a) const { return combine(expectations(apply_ansatz(a))); }
};

struct GradientMode {
    enum class Kind { ParameterShift, FiniteDiff };
    Kind kind = Kind::ParameterShift;
    double h = 1e-5;

    static GradientMode parameter_shift() { return {}; }
    static GradientMode finite_diff(double h) { return {Kind::FiniteDiff, h}; }
};

inline Vector gradient(const ExpectationLoss& loss, const Ansatz& a, const GradientMode& mode) {
    const int P = a.parameter_count();
    Vector g(P);
    if (mode.kind == GradientMode::Kind::FiniteDiff) {
        if (!(mode.h > 0)) throw InvalidArgument("finite-difference step must be positive");
        for (int i = 0; i < P; ++i) {
            Ansatz up = a, dn = a;
            up.theta[i] += mode.h;
            dn.theta[i] -= mode.h;
            g[i] = (loss(up) - loss(dn)) / (2 * mode.h);
        }
        return g;
    }
    const Vector e0 = loss.expectations(apply_ansatz(a));
    const Vector dg = loss.combine_gradient(e0);
    const double shift = std::numbers::pi / 2;
    for (int i = 0; i < P; ++i) {
        Ansatz up = a, dn = a;
        up.theta[i] += shift;
        dn.theta[i] -= shift;
        const Vector de = 0.5 * (loss.expectations(apply_ansatz(up)) - loss.expectations(apply_ansatz(dn)));
        g[i] = dg.dot(de);
    }
    return g;
}

struct OptimizerConfig {
    double eta = 0.1;
    int max_steps = 500;
    double tol = 1e-6;
    GradientMode gradient;
    std::uint64_t seed = 0;

    void validate() const {
        if (!(eta > 0)) throw InvalidArgument("eta must be positive");
        if (!(tol > 0)) throw InvalidArgument("tol must be positive");
        if (max_steps < 0) throw InvalidArgument("max_steps must be non-negative");
    }
};

struct DescentResult {
    Ansatz ansatz;
    std::vector<double> loss_curve;  // loss before each step, plus the final loss
    std::vector<double> grad_norms;
    int steps = 0;
    bool converged = false;
    double final_loss = 0.0;
};

// Plain gradient descent theta <- theta - eta * grad, stopping once loss < tol.
inline DescentResult gradient_descent(const ExpectationLoss& loss, const Ansatz& a0, const OptimizerConfig& opt) {
    opt.validate();
    DescentResult r;
    r.ansatz = a0;
    for (int k = 0;; ++k) {
        const double L = loss(r.ansatz);
        if (!std::isfinite(L)) throw NumericalError("non-finite loss during optimization");
        r.loss_curve.push_back(L);
        r.final_loss = L;
        if (L < opt.tol) {
            r.converged = true;
            break;
        }
        if (k >= opt.max_steps) break;
        const Vector g = gradient(loss, r.ansatz, opt.gradient);
        r.grad_norms.push_back(g.norm());
        r.ansatz.theta -= opt.eta * g;
        r.steps = k + 1;
    }
    return r;
}

// Descends 1 - |<target|U(theta)|0>|^2 from a0, a projector expectation.
inline DescentResult fit_ansatz_to_state(const CVector& target, const Ansatz& a0, const OptimizerConfig& opt) {
    if (target.size() != (Eigen::Index{1} << a0.n)) throw InvalidArgument("target and ansatz sizes differ");
    const double nrm = target.norm();
    if (!(nrm > 0)) throw InvalidArgument("target state must be nonzero");
    const CVector t = target / nrm;
    ExpectationLoss L;
    L.expectations = [t](const StateVector& s) {
        Vector e(1);
        e << std::norm(t.dot(s.amplitudes()));
        return e;
    };
    L.combine = [](const Vector& e) { return 1.0 - e[0]; };
    L.combine_gradient = [](const Vector&) { return Vector::Constant(1, -1.0); };
    return gradient_descent(L, a0, opt);
}

}  // namespace qpf
