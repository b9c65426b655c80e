#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Core>

namespace metacast {

using Vec3 = Eigen::Vector3d;
using Dims3 = std::array<int, 3>;

// Sorted, duplicate-free particle indices.
using IndexSet = std::vector<std::uint32_t>;

// Raised when caller-supplied data violates an operation's precondition.
class InvalidInput : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

// Raised when a position lies outside the density box.
class OutOfDomain : public std::out_of_range {
public:
    using std::out_of_range::out_of_range;
};

// Raised on malformed files. `where` is a line number (text) or byte offset (binary).
class ParseError : public std::runtime_error {
public:
    ParseError(const std::string& what, std::size_t where)
        : std::runtime_error(what + " (at " + std::to_string(where) + ")"), where_(where) {}
    std::size_t where() const noexcept { return where_; }

private:
    std::size_t where_;
};

}  // namespace metacast
