#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace surveyrank {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

// Base of every library exception.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Malformed input files, schema violations, empty datasets.
class DataError : public Error {
public:
    using Error::Error;
};

// Caller broke a documented precondition.
class PreconditionError : public Error {
public:
    using Error::Error;
};

// Singular matrices, non-convergence, degenerate fits.
class NumericalError : public Error {
public:
    using Error::Error;
};

using Warnings = std::vector<std::string>;

// 64-bit FNV-1a; stable across platforms, used for config and report hashes.
inline std::uint64_t fnv1a(std::string_view bytes, std::uint64_t h = 1469598103934665603ULL) {
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    return h;
}

inline std::string hex64(std::uint64_t v) {
    static constexpr char digits[] = "0123456789abcdef";
    std::string out(16, '0');
    for (int i = 15; i >= 0; --i) {
        out[static_cast<std::size_t>(i)] = digits[v & 0xF];
        v >>= 4;
    }
    return out;
}

}  // namespace surveyrank
