#pragma once

#include <functional>
#include <iostream>
#include <stdexcept>
#include <string>
#include <utility>

namespace sbim {

/// Base class of every exception thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Bad shape, out-of-domain value or non-finite input.
class DomainError : public Error {
 public:
  using Error::Error;
};

/// The weighted design matrix does not have full column rank.
class RankDeficientError : public Error {
 public:
  using Error::Error;
};

/// A fitted curvature matrix that must be negative definite is not.
class NotNegativeDefiniteError : public Error {
 public:
  using Error::Error;
};

/// A matrix needed by a test statistic is singular at the requested point.
class DegenerateDesignError : public Error {
 public:
  using Error::Error;
};

// Warning sink. Library code never writes to stderr directly; callers may
// install their own handler (the CLI collects warnings into its report).
using WarningHandler = std::function<void(const std::string&)>;

inline WarningHandler& warning_handler() {
  static WarningHandler handler = [](const std::string& msg) {
    std::cerr << "WARN: " << msg << '\n';
  };
  return handler;
}

inline void set_warning_handler(WarningHandler handler) {
  warning_handler() = std::move(handler);
}

inline void warn(const std::string& msg) {
  if (warning_handler()) warning_handler()(msg);
}

}  // namespace sbim
