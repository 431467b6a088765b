#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include <complex>
#include <cstdint>
#include <stdexcept>
#include <string>

namespace qpf {

using Complex = std::complex<double>;
using Vector = Eigen::VectorXd;
using CVector = Eigen::VectorXcd;
using Matrix = Eigen::MatrixXd;
using CMatrix = Eigen::MatrixXcd;
// Row-compressed real sparse storage for forms and Jacobians.
using SparseMatrix = Eigen::SparseMatrix<double, Eigen::RowMajor>;
using CSparseMatrix = Eigen::SparseMatrix<Complex, Eigen::RowMajor>;

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Malformed or schema-violating input data.
class ParseError : public Error {
public:
    using Error::Error;
};

// Shape or precondition violations on numeric arguments.
class InvalidArgument : public Error {
public:
    using Error::Error;
};

class SingularMatrixError : public Error {
public:
    using Error::Error;
};

class NumericalError : public Error {
public:
    using Error::Error;
};

// Raised when a quantum routine cannot proceed (postselection, clock window).
class QuantumError : public Error {
public:
    using Error::Error;
};

inline bool is_power_of_two(std::size_t v) { return v != 0 && (v & (v - 1)) == 0; }

inline int log2_exact(std::size_t v) {
    if (!is_power_of_two(v)) throw InvalidArgument("dimension " + std::to_string(v) + " is not a power of two");
    int n = 0;
    while ((std::size_t{1} << n) < v) ++n;
    return n;
}

inline int ceil_log2(std::size_t v) {
    int n = 0;
    while ((std::size_t{1} << n) < v) ++n;
    return n;
}

inline int popcount(std::uint64_t x) { return __builtin_popcountll(x); }

inline double inf_norm(const Vector& v) { return v.size() == 0 ? 0.0 : v.cwiseAbs().maxCoeff(); }

// Deterministic 64-bit mixer used to derive independent seed substreams.
inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
    return splitmix64(seed ^ splitmix64(stream + 0x51ed270b27a4d3c1ULL));
}

}  // namespace qpf
