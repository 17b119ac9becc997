#ifndef SSGN_ERROR_HPP
#define SSGN_ERROR_HPP

#include <stdexcept>
#include <string>

namespace ssgn {

// Malformed or inconsistent input: bad files, degenerate geometry,
// shape mismatches, violated preconditions. CLI exit code 2.
struct DataError : std::runtime_error {
  explicit DataError(const std::string& msg) : std::runtime_error(msg) {}
};

// Non-finite values where the math requires finite ones. CLI exit code 3.
struct NumericError : std::runtime_error {
  explicit NumericError(const std::string& msg) : std::runtime_error(msg) {}
};

// Mismatched tensor shapes; a caller bug rather than bad input.
struct ShapeError : std::logic_error {
  explicit ShapeError(const std::string& msg) : std::logic_error(msg) {}
};

}  // namespace ssgn

#endif  // SSGN_ERROR_HPP
