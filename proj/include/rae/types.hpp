#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <stdexcept>
#include <string>

namespace rae {

// Training and inference arithmetic is 64-bit throughout; stored code
// vectors and raw samples are 32-bit (see codec.hpp).
using Scalar = double;

using Vec = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
using Mat = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
using Index = Eigen::Index;

/// Thrown by the binary readers/writers when a buffer does not conform
/// to the model or stream format. `what()` carries the offending location.
class FormatError : public std::runtime_error {
public:
    explicit FormatError(const std::string& msg) : std::runtime_error(msg) {}
};

/// Thrown when a computation produces non-finite values (e.g. diverged
/// training). The CLI maps this to its numeric-failure exit code.
class NumericError : public std::runtime_error {
public:
    explicit NumericError(const std::string& msg) : std::runtime_error(msg) {}
};

inline void require(bool cond, const std::string& msg) {
    if (!cond) throw std::invalid_argument(msg);
}

} // namespace rae
