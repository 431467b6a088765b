#pragma once

#include "qpf/core.hpp"
#include "qpf/lcu/lcu.hpp"
#include "qpf/qsim/circuits.hpp"
#include "qpf/qsim/depth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <string>
#include <vector>

namespace qpf {

struct DepthQuery {
    int n = 1;
    std::int64_t l = 1;
    int trotter_m = 10;
    int clock_bits = 0;  // 0 selects the default clock_bits = n

    int clock() const { return clock_bits > 0 ? clock_bits : n; }
    void validate() const {
        if (n < 1 || n > 8) throw InvalidArgument("n must lie in 1..8");
        if (trotter_m < 1) throw InvalidArgument("trotter_m must be at least 1");
        if (clock() < 1 || clock() > 20) throw InvalidArgument("clock_bits must lie in 1..20");
        if (l < 1) throw InvalidArgument("L must be at least 1");
        if (l > (std::int64_t{1} << (2 * n))) throw InvalidArgument("L exceeds 4^n");
    }
};

// The first L Pauli words on n qubits in descending weight, then lexicographic.
// Heavier words cost more, so this is the most expensive L-term Hamiltonian.
inline std::vector<LCUTerm> canonical_terms(int n, std::int64_t l) {
    const std::uint64_t total = std::uint64_t{1} << (2 * n);
    std::vector<PauliString> words;
    words.reserve(total);
    for (std::uint64_t f = 0; f < (std::uint64_t{1} << n); ++f)
        for (std::uint64_t z = 0; z < (std::uint64_t{1} << n); ++z) words.push_back(PauliString::from_masks(n, f, z));
    std::sort(words.begin(), words.end(), [](const PauliString& a, const PauliString& b) {
        if (a.weight() != b.weight()) return a.weight() > b.weight();
        return a < b;
    });
    std::vector<LCUTerm> out;
    for (std::int64_t i = 0; i < l; ++i) out.push_back({words[static_cast<std::size_t>(i)], 1.0});
    return out;
}

struct HhlDepthBreakdown {
    DepthReport qpe;
    DepthReport total;
};

// Symbolic QPE + eigenvalue inversion + inverse QPE on registers
// system [0, n), clock [n, n + c), ancilla n + c.
inline HhlDepthBreakdown hhl_depth_breakdown(const DepthQuery& q) {
    q.validate();
    const auto terms = canonical_terms(q.n, q.l);
    const Register sys{0, q.n}, clock{q.n, q.clock()};
    DepthCounter qpe_only;
    record_qpe(qpe_only, terms, q.trotter_m, sys, clock);
    DepthCounter full;
    record_qpe(full, terms, q.trotter_m, sys, clock);
    record_eigenvalue_inversion(full, clock, q.n + q.clock());
    record_inverse_qpe(full, terms, q.trotter_m, sys, clock);
    return {qpe_only.report(), full.report()};
}

inline DepthReport hhl_depth(const DepthQuery& q) { return hhl_depth_breakdown(q).total; }
inline DepthReport qpe_depth(const DepthQuery& q) { return hhl_depth_breakdown(q).qpe; }

inline std::int64_t eigeninversion_gate_count(int clock_bits) {
    if (clock_bits < 1 || clock_bits > 62) throw InvalidArgument("clock_bits must lie in 1..62");
    return eigeninversion_rotation_count(clock_bits);
}

// QRAM model: 1 - F = eps * T * log2(N) / 4 with query time T = log2(N).
inline double qram_infidelity(double epsilon, double n_data) {
    if (epsilon < 0) throw InvalidArgument("epsilon must be non-negative");
    if (n_data < 2) throw InvalidArgument("QRAM needs N >= 2");
    const double lg = std::log2(n_data);
    return 0.25 * epsilon * lg * lg;
}

inline double qram_epsilon_for(double infidelity, double n_data) {
    if (infidelity < 0) throw InvalidArgument("target infidelity must be non-negative");
    if (n_data < 2) throw InvalidArgument("QRAM needs N >= 2");
    const double lg = std::log2(n_data);
    return 4.0 * infidelity / (lg * lg);
}

struct QramBudget {
    double data_size = 1e5;
    double target_infidelity = 1e-4;
    double epsilon = 0.0;
    double query_time = 0.0;
    double kappa_gamma = 0.0;                    // (kappa + gamma), rad/s
    double g_d = 2 * std::numbers::pi * 1e3;     // direct coupling, rad/s
    double nu = 2 * std::numbers::pi * 1e7;      // free spectral range, rad/s
    double c_d = 4.5;
};

// eps = (kappa + gamma) c_d pi / (2 g_d) + (g_d / nu)^2.
inline double qram_epsilon_hardware(const QramBudget& b) {
    if (!(b.g_d > 0) || !(b.nu > 0)) throw InvalidArgument("g_d and nu must be positive");
    if (b.kappa_gamma < 0) throw InvalidArgument("kappa + gamma must be non-negative");
    return b.kappa_gamma * b.c_d * std::numbers::pi / (2 * b.g_d) + (b.g_d / b.nu) * (b.g_d / b.nu);
}

// Largest kappa + gamma that keeps the hardware epsilon at or below `epsilon`.
inline double qram_max_decoherence(double epsilon, const QramBudget& b) {
    const double floor = (b.g_d / b.nu) * (b.g_d / b.nu);
    if (epsilon < floor) return 0.0;
    return (epsilon - floor) * 2 * b.g_d / (b.c_d * std::numbers::pi);
}

struct SweepRanges {
    std::vector<int> n;
    std::vector<std::int64_t> l;
    std::vector<int> trotter_m{10};
    std::vector<int> clock_bits{0};
};

inline const char* kSweepHeader = "n,L,M,clock_bits,depth,single_qubit,two_qubit,ctrl_rotation,flag";

// Cells with L > 4^n are evaluated at L = 4^n and flagged, mirroring the table
// convention of capping at 4^n.
inline std::string sweep(const SweepRanges& r) {
    if (r.n.empty() || r.l.empty() || r.trotter_m.empty() || r.clock_bits.empty())
        throw InvalidArgument("sweep ranges must be nonempty");
    std::string out = std::string(kSweepHeader) + "\n";
    for (int n : r.n)
        for (std::int64_t l : r.l)
            for (int m : r.trotter_m)
                for (int c : r.clock_bits) {
                    const std::int64_t cap = std::int64_t{1} << (2 * n);
                    const bool flag = l > cap;
                    DepthQuery q{n, flag ? cap : l, m, c};
                    const DepthReport d = hhl_depth(q);
                    out += std::to_string(n) + "," + std::to_string(l) + "," + std::to_string(m) + "," +
                           std::to_string(q.clock()) + "," + std::to_string(d.depth) + "," +
                           std::to_string(d.single_qubit) + "," + std::to_string(d.two_qubit) + "," +
                           std::to_string(d.ctrl_rotation) + "," + (flag ? "1" : "0") + "\n";
                }
    return out;
}

}  // namespace qpf
