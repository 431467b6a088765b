#pragma once

#include "qpf/core.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <queue>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace qpf {

enum class BusKind { Slack, PV, PQ };

inline const char* to_string(BusKind k) {
    switch (k) {
        case BusKind::Slack: return "slack";
        case BusKind::PV: return "pv";
        case BusKind::PQ: return "pq";
    }
    return "?";
}

struct Bus {
    int id = 0;  // 1-based, contiguous after parsing
    BusKind kind = BusKind::PQ;
    double v_set = 1.0;
    double theta_set = 0.0;
    double p_gen = 0.0;
    double p_load = 0.0;
    double q_load = 0.0;
};

struct Branch {
    int from = 0;
    int to = 0;
    double r = 0.0;
    double x = 0.0;
    double b_sh = 0.0;
};

// Buses are stored slack first, then PV, then PQ; ids are 1..N in that order.
struct GridCase {
    double base_mva = 100.0;
    std::vector<Bus> buses;
    std::vector<Branch> branches;
    // original_ids[k] is the id bus k+1 carried in the source file.
    std::vector<int> original_ids;

    int n_bus() const { return static_cast<int>(buses.size()); }
    int n_gen() const {
        return static_cast<int>(std::count_if(buses.begin(), buses.end(),
                                              [](const Bus& b) { return b.kind != BusKind::PQ; }));
    }
    // Distinct neighbours of every bus (0-based indices).
    std::vector<std::vector<int>> adjacency() const {
        std::vector<std::set<int>> s(buses.size());
        for (const auto& br : branches) {
            s[br.from - 1].insert(br.to - 1);
            s[br.to - 1].insert(br.from - 1);
        }
        std::vector<std::vector<int>> out;
        out.reserve(s.size());
        for (auto& e : s) out.emplace_back(e.begin(), e.end());
        return out;
    }
};

namespace detail {

inline double require_number(const nlohmann::json& obj, const char* key, const std::string& where) {
    auto it = obj.find(key);
    if (it == obj.end()) throw ParseError(where + ": missing \"" + key + "\"");
    if (!it->is_number()) throw ParseError(where + ": \"" + key + "\" must be a number");
    double v = it->get<double>();
    if (!std::isfinite(v)) throw ParseError(where + ": \"" + key + "\" must be finite");
    return v;
}

inline double optional_number(const nlohmann::json& obj, const char* key, double fallback,
                              const std::string& where) {
    if (!obj.contains(key)) return fallback;
    return require_number(obj, key, where);
}

inline int require_int(const nlohmann::json& obj, const char* key, const std::string& where) {
    auto it = obj.find(key);
    if (it == obj.end()) throw ParseError(where + ": missing \"" + key + "\"");
    if (!it->is_number_integer()) throw ParseError(where + ": \"" + key + "\" must be an integer");
    return it->get<int>();
}

}  // namespace detail

inline GridCase parse_case(std::string_view text) {
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(text.begin(), text.end());
    } catch (const nlohmann::json::parse_error& e) {
        throw ParseError(std::string("malformed JSON: ") + e.what());
    }
    if (!doc.is_object()) throw ParseError("case document must be a JSON object");
    if (!doc.contains("buses") || !doc["buses"].is_array()) throw ParseError("case is missing the \"buses\" array");
    if (!doc.contains("branches") || !doc["branches"].is_array())
        throw ParseError("case is missing the \"branches\" array");

    GridCase gc;
    gc.base_mva = detail::optional_number(doc, "base_mva", 100.0, "case");

    std::vector<Bus> raw;
    std::set<int> seen;
    for (std::size_t i = 0; i < doc["buses"].size(); ++i) {
        const auto& jb = doc["buses"][i];
        const std::string where = "bus #" + std::to_string(i);
        if (!jb.is_object()) throw ParseError(where + ": must be an object");
        Bus b;
        b.id = detail::require_int(jb, "id", where);
        if (!seen.insert(b.id).second) throw ParseError(where + ": duplicate bus id " + std::to_string(b.id));
        if (!jb.contains("kind") || !jb["kind"].is_string()) throw ParseError(where + ": missing \"kind\"");
        const std::string kind = jb["kind"].get<std::string>();
        if (kind == "slack") {
            b.kind = BusKind::Slack;
            b.v_set = detail::optional_number(jb, "v_set", 1.0, where);
            b.theta_set = detail::optional_number(jb, "theta_set", 0.0, where);
            if (b.theta_set != 0.0) throw ParseError(where + ": only theta_set = 0 is supported for the slack bus");
            if (!(b.v_set > 0)) throw ParseError(where + ": slack v_set must be positive");
        } else if (kind == "pv") {
            b.kind = BusKind::PV;
            b.v_set = detail::require_number(jb, "v_set", where);
            b.p_gen = detail::require_number(jb, "p_gen", where);
            if (!(b.v_set > 0)) throw ParseError(where + ": PV v_set must be positive");
        } else if (kind == "pq") {
            b.kind = BusKind::PQ;
            b.p_load = detail::optional_number(jb, "p_load", 0.0, where);
            b.q_load = detail::optional_number(jb, "q_load", 0.0, where);
        } else {
            throw ParseError(where + ": unknown kind \"" + kind + "\"");
        }
        raw.push_back(b);
    }

    const auto n_slack = std::count_if(raw.begin(), raw.end(), [](const Bus& b) { return b.kind == BusKind::Slack; });
    if (n_slack == 0) throw ParseError("case has no slack bus");
    if (n_slack > 1) throw ParseError("case has more than one slack bus");

    // Stable reorder: slack, PV, PQ, keeping file order within a class.
    std::vector<std::size_t> order(raw.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return static_cast<int>(raw[a].kind) < static_cast<int>(raw[b].kind);
    });
    std::map<int, int> to_internal;
    for (std::size_t k = 0; k < order.size(); ++k) {
        Bus b = raw[order[k]];
        gc.original_ids.push_back(b.id);
        to_internal[b.id] = static_cast<int>(k) + 1;
        b.id = static_cast<int>(k) + 1;
        gc.buses.push_back(b);
    }

    // Parallel branches merge by adding series admittances and shunts.
    std::map<std::pair<int, int>, std::pair<Complex, double>> merged;
    std::vector<std::pair<int, int>> merge_order;
    for (std::size_t i = 0; i < doc["branches"].size(); ++i) {
        const auto& jr = doc["branches"][i];
        const std::string where = "branch #" + std::to_string(i);
        if (!jr.is_object()) throw ParseError(where + ": must be an object");
        const int from = detail::require_int(jr, "from", where);
        const int to = detail::require_int(jr, "to", where);
        const double r = detail::require_number(jr, "r", where);
        const double x = detail::require_number(jr, "x", where);
        const double b_sh = detail::optional_number(jr, "b_sh", 0.0, where);
        if (from == to) throw ParseError(where + ": from == to");
        if (r == 0.0 && x == 0.0) throw ParseError(where + ": zero impedance (r = x = 0)");
        if (!to_internal.count(from) || !to_internal.count(to)) throw ParseError(where + ": unknown bus id");
        int a = to_internal[from], c = to_internal[to];
        if (a > c) std::swap(a, c);
        const Complex y = 1.0 / Complex(r, x);
        auto key = std::make_pair(a, c);
        auto it = merged.find(key);
        if (it == merged.end()) {
            merged.emplace(key, std::make_pair(y, b_sh));
            merge_order.push_back(key);
        } else {
            it->second.first += y;
            it->second.second += b_sh;
        }
    }
    for (const auto& key : merge_order) {
        const auto& [y, b_sh] = merged.at(key);
        const Complex z = 1.0 / y;
        gc.branches.push_back(Branch{key.first, key.second, z.real(), z.imag(), b_sh});
    }

    // Connectivity by breadth-first search from the slack bus.
    const auto adj = gc.adjacency();
    std::vector<char> reached(gc.buses.size(), 0);
    std::queue<int> frontier;
    frontier.push(0);
    reached[0] = 1;
    while (!frontier.empty()) {
        int v = frontier.front();
        frontier.pop();
        for (int w : adj[v])
            if (!reached[w]) {
                reached[w] = 1;
                frontier.push(w);
            }
    }
    if (std::find(reached.begin(), reached.end(), 0) != reached.end()) throw ParseError("case graph is disconnected");
    return gc;
}

inline GridCase load_case(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ParseError("cannot open case file " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_case(ss.str());
}

inline nlohmann::json case_to_json(const GridCase& gc) {
    nlohmann::json doc;
    doc["base_mva"] = gc.base_mva;
    doc["buses"] = nlohmann::json::array();
    for (const auto& b : gc.buses) {
        nlohmann::json jb{{"id", b.id}, {"kind", to_string(b.kind)}};
        switch (b.kind) {
            case BusKind::Slack: jb["v_set"] = b.v_set; jb["theta_set"] = b.theta_set; break;
            case BusKind::PV: jb["v_set"] = b.v_set; jb["p_gen"] = b.p_gen; break;
            case BusKind::PQ: jb["p_load"] = b.p_load; jb["q_load"] = b.q_load; break;
        }
        doc["buses"].push_back(jb);
    }
    doc["branches"] = nlohmann::json::array();
    for (const auto& br : gc.branches)
        doc["branches"].push_back({{"from", br.from}, {"to", br.to}, {"r", br.r}, {"x", br.x}, {"b_sh", br.b_sh}});
    return doc;
}

}  // namespace qpf
