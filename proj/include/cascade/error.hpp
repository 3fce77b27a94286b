#pragma once

#include <stdexcept>
#include <string>

namespace cascade {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// An argument lies outside the domain of the operation (bad physics
/// parameter, malformed quantum numbers, invalid configuration).
class DomainError : public Error {
public:
  using Error::Error;
};

/// Integration or estimation produced a non-finite or undefined result.
class NumericalError : public Error {
public:
  using Error::Error;
};

/// A requested run exceeds the desk-scale caps (attempt counts, loop guards).
class ResourceError : public Error {
public:
  using Error::Error;
};

/// Nonlinear fit failed to converge or the parameters are not identifiable.
class FitError : public NumericalError {
public:
  using NumericalError::NumericalError;
};

inline void require(bool condition, const std::string& message) {
  if (!condition) throw DomainError(message);
}

}  // namespace cascade
