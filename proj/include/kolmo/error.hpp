/**
 * @file error.hpp
 * @brief Exception hierarchy shared by all kolmo modules.
 */
#pragma once

#include <stdexcept>
#include <string>

namespace kolmo {

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed input: shapes, ranges, non-integer exponents and similar.
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

/// The Kalman rank condition fails for the given (Q, A).
class NotHypoelliptic : public Error {
 public:
  using Error::Error;
};

/// The (rescaled) Gramian is numerically singular.
class SingularGramian : public Error {
 public:
  using Error::Error;
};

/// A field was evaluated outside of its domain box.
class OutOfDomain : public Error {
 public:
  using Error::Error;
};

/// The domain box cannot hold a third difference at the minimum scale.
class DegenerateBox : public Error {
 public:
  using Error::Error;
};

/// A log-log fit was handed a non-positive value or degenerate abscissae.
class NonPositiveValue : public Error {
 public:
  using Error::Error;
};

/// Run configuration failed schema validation.
class ConfigError : public Error {
 public:
  using Error::Error;
};

}  // namespace kolmo
