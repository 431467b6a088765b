#pragma once

#include "qpf/core.hpp"

#include <compare>
#include <cstdint>
#include <string>
#include <string_view>

namespace qpf {

// Word over {I, X, Y, Z}; character q acts on qubit q (bit q of a basis index).
class PauliString {
public:
    PauliString() = default;
    explicit PauliString(int n) : word_(static_cast<std::size_t>(n), 'I') {
        if (n < 0 || n > 62) throw InvalidArgument("Pauli string length out of range");
    }
    explicit PauliString(std::string_view word) : word_(word) {
        if (word_.size() > 62) throw InvalidArgument("Pauli string too long");
        for (char c : word_)
            if (c != 'I' && c != 'X' && c != 'Y' && c != 'Z')
                throw InvalidArgument(std::string("invalid Pauli letter '") + c + "'");
    }

    // Builds the word with flip mask (X or Y positions) and phase mask (Z or Y positions).
    static PauliString from_masks(int n, std::uint64_t flip, std::uint64_t phase) {
        PauliString p(n);
        for (int q = 0; q < n; ++q) {
            const bool f = (flip >> q) & 1U, z = (phase >> q) & 1U;
            p.word_[q] = f ? (z ? 'Y' : 'X') : (z ? 'Z' : 'I');
        }
        return p;
    }

    int n() const { return static_cast<int>(word_.size()); }
    char at(int q) const { return word_.at(static_cast<std::size_t>(q)); }
    void set(int q, char c) {
        if (c != 'I' && c != 'X' && c != 'Y' && c != 'Z') throw InvalidArgument("invalid Pauli letter");
        word_.at(static_cast<std::size_t>(q)) = c;
    }
    const std::string& str() const { return word_; }

    std::uint64_t flip_mask() const {
        std::uint64_t m = 0;
        for (int q = 0; q < n(); ++q)
            if (word_[q] == 'X' || word_[q] == 'Y') m |= std::uint64_t{1} << q;
        return m;
    }
    std::uint64_t phase_mask() const {
        std::uint64_t m = 0;
        for (int q = 0; q < n(); ++q)
            if (word_[q] == 'Z' || word_[q] == 'Y') m |= std::uint64_t{1} << q;
        return m;
    }
    int y_count() const {
        int c = 0;
        for (char ch : word_) c += ch == 'Y';
        return c;
    }
    int weight() const {
        int c = 0;
        for (char ch : word_) c += ch != 'I';
        return c;
    }
    bool is_identity() const { return weight() == 0; }

    // <x ^ flip | P | x> for basis index x.
    Complex element(std::uint64_t x) const { return element(x, phase_mask(), y_count()); }

    static Complex element(std::uint64_t x, std::uint64_t phase, int ny) {
        static const Complex ipow[4] = {{1, 0}, {0, 1}, {-1, 0}, {0, -1}};
        const Complex base = ipow[ny & 3];
        return (popcount(x & phase) & 1) ? -base : base;
    }

    // Dense 2^n x 2^n matrix, used by tests and small oracles.
    CMatrix matrix() const {
        const std::size_t dim = std::size_t{1} << n();
        const std::uint64_t f = flip_mask(), z = phase_mask();
        const int ny = y_count();
        CMatrix M = CMatrix::Zero(static_cast<Eigen::Index>(dim), static_cast<Eigen::Index>(dim));
        for (std::uint64_t x = 0; x < dim; ++x) M(static_cast<Eigen::Index>(x ^ f), static_cast<Eigen::Index>(x)) = element(x, z, ny);
        return M;
    }

    friend bool operator==(const PauliString&, const PauliString&) = default;
    friend std::strong_ordering operator<=>(const PauliString& a, const PauliString& b) { return a.word_ <=> b.word_; }

private:
    std::string word_;
};

}  // namespace qpf
