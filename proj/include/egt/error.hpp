#pragma once

#include <stdexcept>
#include <string>

namespace egt {

// Every failure surfaced by the library is an egt::Error.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A NaN or infinity reached a checked value.
class NumericError : public Error {
 public:
  using Error::Error;
};

[[noreturn]] inline void fail(const std::string& message) { throw Error(message); }

inline void require(bool condition, const std::string& message) {
  if (!condition) {
    throw Error(message);
  }
}

}  // namespace egt
