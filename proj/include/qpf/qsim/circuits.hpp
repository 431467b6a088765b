#pragma once

// Gate-level layouts of the HHL building blocks. These functions only feed a
// DepthCounter; the simulator and the resource calculators both call them so
// the counting convention lives in one place.

#include "qpf/core.hpp"
#include "qpf/lcu/lcu.hpp"
#include "qpf/qsim/depth.hpp"
#include "qpf/qsim/state_vector.hpp"

#include <algorithm>
#include <cstdint>
#include <vector>

namespace qpf {

// exp(i a P) on wires offset+q, optionally controlled by `controls`:
// basis change, CNOT ladder, rotation, ladder undo, basis undo.
inline void record_pauli_exponential(DepthCounter& dc, const PauliString& p, int offset,
                                     const std::vector<int>& controls) {
    std::vector<int> support;
    for (int q = 0; q < p.n(); ++q)
        if (p.at(q) != 'I') support.push_back(offset + q);
    if (support.empty()) {
        // Identity term: a phase, visible only when controlled.
        if (controls.size() == 1) dc.add(GateClass::SingleQubit, {controls[0]});
        else if (controls.size() > 1) dc.add(GateClass::CtrlRotation, controls);
        return;
    }
    auto basis = [&] {
        for (int q = 0; q < p.n(); ++q)
            if (p.at(q) == 'X' || p.at(q) == 'Y') dc.add(GateClass::SingleQubit, {offset + q});
    };
    basis();
    for (std::size_t i = 0; i + 1 < support.size(); ++i) dc.add(GateClass::TwoQubit, {support[i], support[i + 1]});
    if (controls.empty()) {
        dc.add(GateClass::SingleQubit, {support.back()});
    } else {
        std::vector<int> wires = controls;
        wires.push_back(support.back());
        dc.add(GateClass::CtrlRotation, wires);
    }
    for (std::size_t i = support.size() - 1; i > 0; --i) dc.add(GateClass::TwoQubit, {support[i - 1], support[i]});
    basis();
}

// M Trotter steps of the ordered term list, all controlled by `control`.
inline void record_controlled_evolution(DepthCounter& dc, const std::vector<LCUTerm>& ordered, int m,
                                        const Register& system, int control, bool reversed = false) {
    const std::vector<int> ctrl{control};
    for (int s = 0; s < m; ++s) {
        if (!reversed) {
            for (const auto& t : ordered) record_pauli_exponential(dc, t.pauli, system.offset, ctrl);
        } else {
            for (auto it = ordered.rbegin(); it != ordered.rend(); ++it)
                record_pauli_exponential(dc, it->pauli, system.offset, ctrl);
        }
    }
}

// QFT without the final swaps: c Hadamards and c(c-1)/2 controlled phases.
inline void record_qft(DepthCounter& dc, const Register& clock, bool inverse) {
    const int c = clock.size;
    std::vector<std::vector<int>> gates;
    for (int j = c - 1; j >= 0; --j) {
        gates.push_back({clock.offset + j});
        for (int k = j - 1; k >= 0; --k) gates.push_back({clock.offset + k, clock.offset + j});
    }
    if (inverse) std::reverse(gates.begin(), gates.end());
    for (const auto& g : gates) dc.add(g.size() == 1 ? GateClass::SingleQubit : GateClass::TwoQubit, g);
}

// Hadamards on the clock, controlled powers U^(2^j) as M Trotter steps each, inverse QFT.
inline void record_qpe(DepthCounter& dc, const std::vector<LCUTerm>& ordered, int m, const Register& system,
                       const Register& clock) {
    for (int j = 0; j < clock.size; ++j) dc.add(GateClass::SingleQubit, {clock.offset + j});
    for (int j = 0; j < clock.size; ++j) record_controlled_evolution(dc, ordered, m, system, clock.offset + j);
    record_qft(dc, clock, true);
}

// Mirror image of record_qpe.
inline void record_inverse_qpe(DepthCounter& dc, const std::vector<LCUTerm>& ordered, int m, const Register& system,
                               const Register& clock) {
    record_qft(dc, clock, false);
    for (int j = clock.size - 1; j >= 0; --j)
        record_controlled_evolution(dc, ordered, m, system, clock.offset + j, true);
    for (int j = clock.size - 1; j >= 0; --j) dc.add(GateClass::SingleQubit, {clock.offset + j});
}

inline std::int64_t eigeninversion_rotation_count(int clock_bits) { return (std::int64_t{1} << clock_bits) - 1; }

// One multi-controlled rotation per nonzero clock value, each touching the
// whole clock register and the ancilla.
inline void record_eigenvalue_inversion(DepthCounter& dc, const Register& clock, int ancilla) {
    std::vector<int> wires;
    for (int j = 0; j < clock.size; ++j) wires.push_back(clock.offset + j);
    wires.push_back(ancilla);
    const std::int64_t count = eigeninversion_rotation_count(clock.size);
    for (std::int64_t k = 0; k < count; ++k) dc.add(GateClass::CtrlRotation, wires);
}

}  // namespace qpf
