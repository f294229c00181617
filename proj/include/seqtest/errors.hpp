#ifndef SEQTEST_ERRORS_HPP
#define SEQTEST_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace seqtest {

/// Base of every exception thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Mismatched vector lengths (alphabet sizes, vertex counts).
class DimensionError : public Error {
 public:
  using Error::Error;
};

/// Invalid user-supplied parameters: bad pmfs, out-of-range epsilon, unknown
/// config keys, incompatible class/null pairings.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// An observation outside the domain of the configured test function.
class DomainError : public Error {
 public:
  using Error::Error;
};

}  // namespace seqtest

#endif  // SEQTEST_ERRORS_HPP
