#pragma once

#include "qpf/core.hpp"

#include <json.hpp>

#include <algorithm>
#include <cstdint>
#include <initializer_list>
#include <vector>

namespace qpf {

enum class GateClass { SingleQubit, TwoQubit, CtrlRotation };

struct DepthReport {
    std::int64_t single_qubit = 0;
    std::int64_t two_qubit = 0;
    std::int64_t ctrl_rotation = 0;
    std::int64_t depth = 0;

    nlohmann::json to_json() const {
        return {{"single_qubit", single_qubit}, {"two_qubit", two_qubit}, {"ctrl_rotation", ctrl_rotation}, {"depth", depth}};
    }
    friend bool operator==(const DepthReport&, const DepthReport&) = default;
};

// As-soon-as-possible layering over qubit wires. A gate occupies one layer on
// every qubit it touches, except that a single-qubit gate directly following
// another single-qubit gate on the same wire is fused into that layer.
class DepthCounter {
public:
    void add(GateClass cls, const std::vector<int>& qubits) {
        if (qubits.empty()) throw InvalidArgument("gate without qubits");
        int top = 0;
        for (int q : qubits) {
            if (q < 0) throw InvalidArgument("negative qubit index");
            grow(q);
            top = std::max(top, level_[q]);
        }
        switch (cls) {
            case GateClass::SingleQubit: ++report_.single_qubit; break;
            case GateClass::TwoQubit: ++report_.two_qubit; break;
            case GateClass::CtrlRotation: ++report_.ctrl_rotation; break;
        }
        if (cls == GateClass::SingleQubit && qubits.size() == 1 && single_run_[qubits[0]]) return;
        const int next = top + 1;
        for (int q : qubits) {
            level_[q] = next;
            single_run_[q] = cls == GateClass::SingleQubit && qubits.size() == 1;
        }
        report_.depth = std::max<std::int64_t>(report_.depth, next);
    }
    void add(GateClass cls, std::initializer_list<int> qubits) { add(cls, std::vector<int>(qubits)); }

    const DepthReport& report() const { return report_; }
    std::int64_t depth() const { return report_.depth; }

private:
    void grow(int q) {
        if (static_cast<std::size_t>(q) >= level_.size()) {
            level_.resize(q + 1, 0);
            single_run_.resize(q + 1, 0);
        }
    }

    std::vector<int> level_;
    std::vector<char> single_run_;
    DepthReport report_;
};

inline DepthReport depth_report(const DepthCounter& c) { return c.report(); }

}  // namespace qpf
