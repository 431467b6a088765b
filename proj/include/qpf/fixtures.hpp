#pragma once

#include "qpf/classical/newton.hpp"
#include "qpf/core.hpp"
#include "qpf/grid/case.hpp"
#include "qpf/grid/power_flow.hpp"

#include <json.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#ifndef QPF_ASSETS_DIR
#define QPF_ASSETS_DIR "assets"
#endif

namespace qpf {

// QPF_ASSETS overrides the directory baked in at build time.
inline std::filesystem::path assets_dir() {
    if (const char* env = std::getenv("QPF_ASSETS"); env && *env) return env;
    return QPF_ASSETS_DIR;
}

struct Golden {
    Vector solution;
    std::vector<double> residual_trace;
    int iterations = 0;
    std::string provenance;
};

struct Fixture {
    std::string name;
    GridCase grid;
    Golden golden;
    std::filesystem::path case_path;
};

inline const std::vector<std::string>& fixture_names() {
    static const std::vector<std::string> names{"case3", "case5", "case14"};
    return names;
}

inline Fixture load_fixture(std::string_view name) {
    bool known = false;
    for (const auto& n : fixture_names()) known = known || n == name;
    if (!known) throw InvalidArgument("unknown fixture \"" + std::string(name) + "\"");
    Fixture f;
    f.name = std::string(name);
    f.case_path = assets_dir() / "cases" / (f.name + ".json");
    f.grid = load_case(f.case_path);
    const auto golden_path = assets_dir() / "goldens" / (f.name + ".json");
    std::ifstream in(golden_path, std::ios::binary);
    if (!in) throw ParseError("cannot open golden file " + golden_path.string());
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("malformed golden file: ") + e.what());
    }
    const auto sol = j.at("solution").get<std::vector<double>>();
    f.golden.solution = Eigen::Map<const Vector>(sol.data(), static_cast<Eigen::Index>(sol.size()));
    f.golden.residual_trace = j.at("residual_trace").get<std::vector<double>>();
    f.golden.iterations = j.at("iterations").get<int>();
    f.golden.provenance = j.at("provenance").get<std::string>();
    return f;
}

// Loading scenarios: every PQ load scaled by its own factor drawn uniformly
// from [lo, hi], one substream per scenario.
inline std::vector<GridCase> loading_scenarios(const GridCase& base, int count, std::uint64_t seed, double lo = 0.8,
                                               double hi = 1.2) {
    if (count < 0) throw InvalidArgument("scenario count must be non-negative");
    std::vector<GridCase> out;
    for (int s = 0; s < count; ++s) {
        std::mt19937_64 rng(derive_seed(seed, static_cast<std::uint64_t>(s)));
        GridCase g = base;
        for (auto& b : g.buses) {
            if (b.kind != BusKind::PQ) continue;
            const double u = static_cast<double>(rng() >> 11) * 0x1.0p-53;
            const double f = lo + (hi - lo) * u;
            b.p_load *= f;
            b.q_load *= f;
        }
        out.push_back(std::move(g));
    }
    return out;
}

// Jacobians met along Newton runs over loading scenarios, until `count` are collected.
inline std::vector<SparseMatrix> harvest_jacobians(const GridCase& base, std::size_t count, std::uint64_t seed) {
    std::vector<SparseMatrix> out;
    for (int batch = 0; out.size() < count; ++batch) {
        if (batch > 10000) throw NumericalError("scenario harvesting did not collect enough Jacobians");
        const auto sc = loading_scenarios(base, 1, derive_seed(seed, static_cast<std::uint64_t>(batch)));
        const PowerFlowProblem p = build_quadratic_forms(sc.front());
        NewtonConfig cfg;
        cfg.record_kappa = false;
        std::vector<SparseMatrix> local;
        newton_raphson(p, cfg, [&](const SparseMatrix& J, const Vector& b) {
            local.push_back(J);
            return lu_solve(J, b);
        });
        for (auto& J : local) {
            if (out.size() == count) break;
            out.push_back(std::move(J));
        }
    }
    return out;
}

}  // namespace qpf
