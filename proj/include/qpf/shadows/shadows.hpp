#pragma once

#include "qpf/core.hpp"
#include "qpf/qsim/pauli.hpp"
#include "qpf/qsim/state_vector.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <random>
#include <string>
#include <thread>
#include <vector>

namespace qpf {

// One randomized Pauli measurement: basis[q] in {X, Y, Z} and outcome bit q.
struct ShadowSnapshot {
    std::string basis;
    std::uint64_t outcome = 0;

    int n() const { return static_cast<int>(basis.size()); }
    int bit(int q) const { return static_cast<int>((outcome >> q) & 1U); }

    nlohmann::json to_json() const {
        std::string bits(basis.size(), '0');
        for (int q = 0; q < n(); ++q) bits[q] = bit(q) ? '1' : '0';
        return {{"basis", basis}, {"outcome", bits}};
    }
    static ShadowSnapshot from_json(const nlohmann::json& j) {
        ShadowSnapshot s;
        s.basis = j.at("basis").get<std::string>();
        const std::string bits = j.at("outcome").get<std::string>();
        if (bits.size() != s.basis.size()) throw ParseError("snapshot basis and outcome lengths differ");
        for (std::size_t q = 0; q < bits.size(); ++q) {
            if (bits[q] != '0' && bits[q] != '1') throw ParseError("snapshot outcome must be a bitstring");
            if (bits[q] == '1') s.outcome |= std::uint64_t{1} << q;
        }
        for (char c : s.basis)
            if (c != 'X' && c != 'Y' && c != 'Z') throw ParseError("snapshot basis must use X, Y, Z");
        return s;
    }
    friend bool operator==(const ShadowSnapshot&, const ShadowSnapshot&) = default;
};

struct ShadowConfig {
    std::size_t block_size = 4096;  // snapshots per seed substream
    unsigned workers = 1;
};

namespace detail {

inline double uniform01(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

// Cumulative Born distribution after rotating every qubit into its basis.
inline std::vector<double> basis_cdf(const StateVector& state, const std::string& basis) {
    StateVector s = state;
    const double r = 1.0 / std::sqrt(2.0);
    Eigen::Matrix2cd hy;  // H S^dagger maps the Y eigenbasis onto Z
    hy << r, Complex(0, -r), r, Complex(0, r);
    for (int q = 0; q < s.n_qubits(); ++q) {
        if (basis[q] == 'X') s.h(q);
        else if (basis[q] == 'Y') s.apply_1q(q, hy);
    }
    std::vector<double> cdf(s.dim());
    double acc = 0.0;
    for (std::size_t i = 0; i < s.dim(); ++i) {
        acc += std::norm(s[i]);
        cdf[i] = acc;
    }
    for (auto& v : cdf) v /= acc;
    return cdf;
}

inline void collect_block(const StateVector& state, std::uint64_t seed, std::size_t count, ShadowSnapshot* out) {
    std::mt19937_64 rng(seed);
    std::map<std::string, std::vector<double>> cache;
    static const char letters[3] = {'X', 'Y', 'Z'};
    const int n = state.n_qubits();
    for (std::size_t i = 0; i < count; ++i) {
        std::string basis(static_cast<std::size_t>(n), 'Z');
        for (int q = 0; q < n; ++q) basis[q] = letters[rng() % 3];
        auto it = cache.find(basis);
        if (it == cache.end()) it = cache.emplace(basis, basis_cdf(state, basis)).first;
        const double u = uniform01(rng);
        const auto& cdf = it->second;
        auto pos = std::upper_bound(cdf.begin(), cdf.end(), u);
        if (pos == cdf.end()) --pos;
        out[i] = ShadowSnapshot{basis, static_cast<std::uint64_t>(pos - cdf.begin())};
    }
}

}  // namespace detail

// Block b of the output is drawn from substream derive_seed(seed, b), so the
// result does not depend on the worker count.
inline std::vector<ShadowSnapshot> collect_shadows(const StateVector& state, std::size_t count, std::uint64_t seed,
                                                   const ShadowConfig& cfg = {}) {
    if (count < 1) throw InvalidArgument("collect_shadows needs count >= 1");
    if (cfg.block_size < 1) throw InvalidArgument("block_size must be positive");
    std::vector<ShadowSnapshot> out(count);
    const std::size_t blocks = (count + cfg.block_size - 1) / cfg.block_size;
    auto run = [&](std::size_t b) {
        const std::size_t start = b * cfg.block_size;
        detail::collect_block(state, derive_seed(seed, b), std::min(cfg.block_size, count - start), out.data() + start);
    };
    const unsigned workers = std::max(1U, std::min<unsigned>(cfg.workers, static_cast<unsigned>(blocks)));
    if (workers == 1) {
        for (std::size_t b = 0; b < blocks; ++b) run(b);
    } else {
        std::vector<std::thread> pool;
        for (unsigned w = 0; w < workers; ++w)
            pool.emplace_back([&, w] {
                for (std::size_t b = w; b < blocks; b += workers) run(b);
            });
        for (auto& t : pool) t.join();
    }
    return out;
}

// Inverted-channel estimate of <P> from one snapshot.
inline double single_snapshot_estimate(const ShadowSnapshot& s, const PauliString& p) {
    if (p.n() != s.n()) throw InvalidArgument("observable and snapshot sizes differ");
    double v = 1.0;
    for (int q = 0; q < p.n(); ++q) {
        const char o = p.at(q);
        if (o == 'I') continue;
        if (s.basis[q] != o) return 0.0;
        v *= s.bit(q) ? -3.0 : 3.0;
    }
    return v;
}

struct ShadowEstimate {
    double value = 0.0;
    PauliString observable;
    std::size_t samples_used = 0;
    int batches = 0;
};

// Median-of-means accumulator. Snapshot i (global order) lands in batch i mod K,
// and merge() rotates the right operand's batches, so merging two disjoint runs
// reproduces the accumulator of their concatenation exactly.
class ShadowAccumulator {
public:
    ShadowAccumulator(PauliString o, int batches) : o_(std::move(o)), sums_(batches, 0.0), counts_(batches, 0) {
        if (batches < 1) throw InvalidArgument("median of means needs at least one batch");
    }

    void add(const ShadowSnapshot& s) {
        const std::size_t b = total_ % sums_.size();
        sums_[b] += single_snapshot_estimate(s, o_);
        ++counts_[b];
        ++total_;
    }
    void add(const std::vector<ShadowSnapshot>& v) {
        for (const auto& s : v) add(s);
    }

    void merge(const ShadowAccumulator& other) {
        if (other.o_ != o_ || other.sums_.size() != sums_.size()) throw InvalidArgument("incompatible accumulators");
        const std::size_t K = sums_.size();
        const std::size_t rot = total_ % K;
        for (std::size_t j = 0; j < K; ++j) {
            sums_[(j + rot) % K] += other.sums_[j];
            counts_[(j + rot) % K] += other.counts_[j];
        }
        total_ += other.total_;
    }

    ShadowEstimate estimate() const {
        if (total_ == 0) throw InvalidArgument("no snapshots to estimate from");
        std::vector<double> means;
        for (std::size_t j = 0; j < sums_.size(); ++j)
            if (counts_[j] > 0) means.push_back(sums_[j] / static_cast<double>(counts_[j]));
        std::sort(means.begin(), means.end());
        const std::size_t m = means.size();
        const double med = (m % 2 == 1) ? means[m / 2] : 0.5 * (means[m / 2 - 1] + means[m / 2]);
        return ShadowEstimate{med, o_, total_, static_cast<int>(m)};
    }

private:
    PauliString o_;
    std::vector<double> sums_;
    std::vector<std::size_t> counts_;
    std::size_t total_ = 0;
};

inline constexpr int kDefaultShadowBatches = 10;

inline ShadowEstimate estimate_pauli(const std::vector<ShadowSnapshot>& snaps, const PauliString& o,
                                     int batches = kDefaultShadowBatches) {
    if (snaps.empty()) throw InvalidArgument("estimate_pauli needs snapshots");
    ShadowAccumulator acc(o, batches);
    acc.add(snaps);
    return acc.estimate();
}

namespace detail {

// Single-snapshot estimate of Re <i| rho |j> from the product of per-qubit
// factors 3 <i_q|phi><phi|j_q> - delta(i_q, j_q), phi the measured eigenstate.
inline double matrix_element_estimate(const ShadowSnapshot& s, std::uint64_t i, std::uint64_t j) {
    Complex v = 1.0;
    const double r = 0.5;
    for (int q = 0; q < s.n(); ++q) {
        const int iq = static_cast<int>((i >> q) & 1U), jq = static_cast<int>((j >> q) & 1U);
        const int b = s.bit(q);
        const char basis = s.basis[q];
        Complex f;
        if (iq == jq) {
            f = basis == 'Z' ? (b == iq ? 2.0 : -1.0) : 0.5;
        } else if (basis == 'Z') {
            return 0.0;
        } else if (basis == 'X') {
            f = 3.0 * (b ? -r : r);
        } else {
            // phi = (|0> + i s |1>)/sqrt2 with s = +1 for outcome 0.
            const double sg = b ? -1.0 : 1.0;
            f = 3.0 * (iq == 0 ? Complex(0, -sg * r) : Complex(0, sg * r));
        }
        v *= f;
    }
    return v.real();
}

struct MeanStd {
    double mean = 0.0;
    double sem = 0.0;  // standard error of the mean
};

template <class F>
MeanStd sample_stats(const std::vector<ShadowSnapshot>& snaps, F&& f) {
    double s = 0.0, s2 = 0.0;
    for (const auto& sn : snaps) {
        const double v = f(sn);
        s += v;
        s2 += v * v;
    }
    const double n = static_cast<double>(snaps.size());
    const double mean = s / n;
    const double var = n > 1 ? std::max(0.0, (s2 - n * mean * mean) / (n - 1)) : 0.0;
    return {mean, std::sqrt(var / n)};
}

}  // namespace detail

// Real-amplitude state estimate: magnitudes from diagonal estimates above a 3
// sigma floor, signs propagated along a maximum-significance spanning tree
// rooted at the largest magnitude.
inline Vector reconstruct_real_state(const std::vector<ShadowSnapshot>& snaps,
                                     const std::optional<std::vector<std::uint64_t>>& support_hint, int n) {
    if (snaps.empty()) throw InvalidArgument("reconstruction needs snapshots");
    if (snaps.front().n() != n) throw InvalidArgument("snapshot size does not match n");
    const std::uint64_t dim = std::uint64_t{1} << n;
    std::vector<std::uint64_t> candidates;
    if (support_hint) {
        candidates = *support_hint;
        for (auto i : candidates)
            if (i >= dim) throw InvalidArgument("support hint index out of range");
    } else {
        for (std::uint64_t i = 0; i < dim; ++i) candidates.push_back(i);
    }
    std::vector<std::uint64_t> support;
    std::vector<double> prob;
    for (auto i : candidates) {
        const auto st = detail::sample_stats(snaps, [&](const ShadowSnapshot& s) { return detail::matrix_element_estimate(s, i, i); });
        if (support_hint ? st.mean > 0.0 : st.mean > 3.0 * st.sem && st.mean > 0.0) {
            support.push_back(i);
            prob.push_back(st.mean);
        }
    }
    if (support.empty()) throw QuantumError("shadow reconstruction found an empty support");

    const std::size_t m = support.size();
    const std::size_t root = static_cast<std::size_t>(std::max_element(prob.begin(), prob.end()) - prob.begin());
    // Off-diagonal estimates are needed only for pairs considered by Prim's scan.
    std::vector<std::vector<double>> val(m, std::vector<double>(m, 0.0)), score(m, std::vector<double>(m, -1.0));
    for (std::size_t a = 0; a < m; ++a)
        for (std::size_t b = a + 1; b < m; ++b) {
            const auto st = detail::sample_stats(snaps, [&](const ShadowSnapshot& s) {
                return detail::matrix_element_estimate(s, support[a], support[b]);
            });
            val[a][b] = val[b][a] = st.mean;
            const double sig = st.sem > 0 ? std::abs(st.mean) / st.sem : (st.mean != 0.0 ? 1e300 : 0.0);
            score[a][b] = score[b][a] = sig > 3.0 ? sig : -1.0;
        }
    std::vector<double> sign(m, 0.0);
    sign[root] = 1.0;
    for (std::size_t added = 1; added < m; ++added) {
        double best = -1.0;
        std::size_t from = m, to = m;
        for (std::size_t a = 0; a < m; ++a) {
            if (sign[a] == 0.0) continue;
            for (std::size_t b = 0; b < m; ++b)
                if (sign[b] == 0.0 && score[a][b] > best) {
                    best = score[a][b];
                    from = a;
                    to = b;
                }
        }
        if (to == m) throw QuantumError("shadow sign graph is disconnected; collect more samples");
        sign[to] = sign[from] * (val[from][to] >= 0 ? 1.0 : -1.0);
    }
    Vector x = Vector::Zero(static_cast<Eigen::Index>(dim));
    for (std::size_t a = 0; a < m; ++a) x[static_cast<Eigen::Index>(support[a])] = sign[a] * std::sqrt(prob[a]);
    return x / x.norm();
}

}  // namespace qpf
