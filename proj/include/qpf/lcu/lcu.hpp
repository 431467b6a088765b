#pragma once

#include "qpf/core.hpp"
#include "qpf/qsim/pauli.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

namespace qpf {

struct LCUTerm {
    PauliString pauli;
    double coeff = 0.0;
};

struct LCUDecomposition {
    int n = 0;
    std::vector<LCUTerm> terms;

    std::size_t size() const { return terms.size(); }
    double one_norm() const {
        double s = 0.0;
        for (const auto& t : terms) s += std::abs(t.coeff);
        return s;
    }
};

inline constexpr double kDefaultDropTol = 1e-12;

// Descending |a|, ties by lexicographic Pauli word.
inline bool term_precedes(const LCUTerm& a, const LCUTerm& b) {
    const double x = std::abs(a.coeff), y = std::abs(b.coeff);
    if (x != y) return x > y;
    return a.pauli < b.pauli;
}

inline std::vector<LCUTerm> sorted_terms(const LCUDecomposition& d) {
    std::vector<LCUTerm> t = d.terms;
    std::stable_sort(t.begin(), t.end(), term_precedes);
    return t;
}

inline void check_hermitian(const CMatrix& A, double tol = 1e-10) {
    if (A.rows() != A.cols()) throw InvalidArgument("matrix is not square");
    const double scale = std::max(1.0, A.cwiseAbs().maxCoeff());
    if ((A - A.adjoint()).cwiseAbs().maxCoeff() > tol * scale) throw InvalidArgument("matrix is not Hermitian");
}

// a_P = Tr(P A) / 2^n, evaluated one flip mask at a time:
// Tr(P A) = sum_x <x|P|x^f> A(x^f, x) with <x|P|x^f> = element(x^f).
inline LCUDecomposition pauli_decompose(const CMatrix& A, double drop_tol = kDefaultDropTol) {
    if (drop_tol < 0) throw InvalidArgument("drop_tol must be non-negative");
    const int n = log2_exact(static_cast<std::size_t>(A.rows()));
    check_hermitian(A);
    const std::uint64_t dim = std::uint64_t{1} << n;
    LCUDecomposition d;
    d.n = n;
    for (std::uint64_t f = 0; f < dim; ++f) {
        for (std::uint64_t z = 0; z < dim; ++z) {
            const int ny = popcount(f & z);
            Complex tr = 0.0;
            for (std::uint64_t x = 0; x < dim; ++x)
                tr += PauliString::element(x ^ f, z, ny) * A(static_cast<Eigen::Index>(x ^ f), static_cast<Eigen::Index>(x));
            const double a = tr.real() / static_cast<double>(dim);
            if (std::abs(a) > drop_tol || (drop_tol == 0.0 && a != 0.0))
                d.terms.push_back({PauliString::from_masks(n, f, z), a});
        }
    }
    std::sort(d.terms.begin(), d.terms.end(), [](const LCUTerm& a, const LCUTerm& b) { return a.pauli < b.pauli; });
    return d;
}

inline LCUDecomposition pauli_decompose(const Matrix& A, double drop_tol = kDefaultDropTol) {
    return pauli_decompose(CMatrix(A.cast<Complex>()), drop_tol);
}

inline CMatrix reconstruct(const LCUDecomposition& d) {
    const std::uint64_t dim = std::uint64_t{1} << d.n;
    CMatrix A = CMatrix::Zero(static_cast<Eigen::Index>(dim), static_cast<Eigen::Index>(dim));
    for (const auto& t : d.terms) {
        const std::uint64_t f = t.pauli.flip_mask(), z = t.pauli.phase_mask();
        const int ny = t.pauli.y_count();
        for (std::uint64_t x = 0; x < dim; ++x)
            A(static_cast<Eigen::Index>(x ^ f), static_cast<Eigen::Index>(x)) += t.coeff * PauliString::element(x, z, ny);
    }
    return A;
}

// Sum_i a_i P_i |v>, without forming the matrix.
inline CVector apply_lcu(const LCUDecomposition& d, const CVector& v) {
    const std::uint64_t dim = std::uint64_t{1} << d.n;
    if (static_cast<std::uint64_t>(v.size()) != dim) throw InvalidArgument("LCU and vector dimensions differ");
    CVector out = CVector::Zero(v.size());
    for (const auto& t : d.terms) {
        const std::uint64_t f = t.pauli.flip_mask(), z = t.pauli.phase_mask();
        const int ny = t.pauli.y_count();
        for (std::uint64_t x = 0; x < dim; ++x) out[x ^ f] += t.coeff * PauliString::element(x, z, ny) * v[x];
    }
    return out;
}

inline LCUDecomposition truncate(const LCUDecomposition& d, int k) {
    if (k <= 0) throw InvalidArgument("truncate needs k >= 1");
    LCUDecomposition out;
    out.n = d.n;
    out.terms = sorted_terms(d);
    if (static_cast<std::size_t>(k) < out.terms.size()) out.terms.resize(static_cast<std::size_t>(k));
    return out;
}

// Embeds A (m x m) into a Hermitian system on 2^n coordinates. A is first padded
// to M = next power of two with an identity block (rhs 0 there), then dilated to
// [[0, A'], [A'^T, 0]] with rhs (b'; 0). The solution is (0; A^{-1} b; 0), so the
// live block starts at coordinate M.
struct Dilation {
    Matrix matrix;
    Vector rhs;
    int live_offset = 0;
    int live_size = 0;
    int padded_size = 0;

    Vector live_block(const Vector& x) const { return x.segment(live_offset, live_size); }
};

inline Dilation hermitian_dilation(const Matrix& A, const Vector& b) {
    if (A.rows() != A.cols()) throw InvalidArgument("dilation needs a square matrix");
    if (A.rows() != b.size()) throw InvalidArgument("dilation dimension mismatch");
    const int m = static_cast<int>(A.rows());
    const int M = m == 0 ? 1 : 1 << ceil_log2(static_cast<std::size_t>(m));
    Matrix Ap = Matrix::Identity(M, M);
    Ap.topLeftCorner(m, m) = A;
    Vector bp = Vector::Zero(M);
    bp.head(m) = b;
    Dilation d;
    d.matrix = Matrix::Zero(2 * M, 2 * M);
    d.matrix.topRightCorner(M, M) = Ap;
    d.matrix.bottomLeftCorner(M, M) = Ap.transpose();
    d.rhs = Vector::Zero(2 * M);
    d.rhs.head(M) = bp;
    d.live_offset = M;
    d.live_size = m;
    d.padded_size = M;
    return d;
}

struct LCUStatistics {
    std::vector<int> counts;
    double mean = 0.0;
    double std = 0.0;
    std::vector<double> edges;
    std::vector<double> density;

    nlohmann::json to_json() const {
        return {{"counts", counts}, {"mean", mean}, {"std", std}, {"hist", {{"edges", edges}, {"density", density}}}};
    }
};

inline LCUStatistics lcu_statistics(const std::vector<CMatrix>& mats, double drop_tol = kDefaultDropTol, int bins = 30) {
    if (mats.empty()) throw InvalidArgument("lcu_statistics needs at least one matrix");
    if (bins < 1) throw InvalidArgument("histogram needs at least one bin");
    LCUStatistics s;
    std::vector<double> mags;
    for (const auto& A : mats) {
        if (A.rows() != mats.front().rows()) throw InvalidArgument("matrices must share one dimension");
        const auto d = pauli_decompose(A, drop_tol);
        s.counts.push_back(static_cast<int>(d.size()));
        for (const auto& t : d.terms) mags.push_back(std::abs(t.coeff));
    }
    const double n = static_cast<double>(s.counts.size());
    for (int c : s.counts) s.mean += c / n;
    if (s.counts.size() > 1) {
        double ss = 0.0;
        for (int c : s.counts) ss += (c - s.mean) * (c - s.mean);
        s.std = std::sqrt(ss / (n - 1));
    }
    if (mags.empty()) return s;
    double lo = *std::min_element(mags.begin(), mags.end());
    double hi = *std::max_element(mags.begin(), mags.end());
    if (hi <= lo) {
        lo -= 0.5;
        hi += 0.5;
    }
    const double width = (hi - lo) / bins;
    s.edges.resize(bins + 1);
    for (int i = 0; i <= bins; ++i) s.edges[i] = lo + i * width;
    std::vector<double> counts(bins, 0.0);
    for (double v : mags) {
        int i = static_cast<int>((v - lo) / width);
        counts[std::clamp(i, 0, bins - 1)] += 1.0;
    }
    s.density.resize(bins);
    for (int i = 0; i < bins; ++i) s.density[i] = counts[i] / (static_cast<double>(mags.size()) * width);
    return s;
}

inline nlohmann::json lcu_to_json(const LCUDecomposition& d) {
    nlohmann::json terms = nlohmann::json::array();
    for (const auto& t : d.terms) terms.push_back({{"pauli", t.pauli.str()}, {"coeff", t.coeff}});
    return {{"n", d.n}, {"count", d.size()}, {"terms", terms}};
}

}  // namespace qpf
