#pragma once

#include <stdexcept>
#include <string>

namespace snml {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A parameter lies outside its domain (or a precondition on a count fails).
class DomainError : public Error {
 public:
  using Error::Error;
};

/// An observation lies outside the closure of the convex core.
class UnsupportedPoint : public Error {
 public:
  using Error::Error;
};

class EmptyWindow : public Error {
 public:
  using Error::Error;
};

/// A Shtarkov integral (or sum) is infinite. The message names the tail.
class DivergentNormalizer : public Error {
 public:
  using Error::Error;
};

class ImproperPosterior : public Error {
 public:
  using Error::Error;
};

class HorizonTooLarge : public Error {
 public:
  using Error::Error;
};

class NonConvergence : public Error {
 public:
  using Error::Error;
};

/// The integrand produced a NaN.
class NaNEncountered : public Error {
 public:
  using Error::Error;
};

class DivergentIntegral : public Error {
 public:
  using Error::Error;
};

class DifferentiationError : public Error {
 public:
  using Error::Error;
};

class NonMonotone : public Error {
 public:
  using Error::Error;
};

/// Malformed JSON/CSV/CLI configuration.
class ConfigError : public Error {
 public:
  using Error::Error;
};

}  // namespace snml
