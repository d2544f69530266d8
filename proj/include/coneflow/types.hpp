#pragma once

#include <Eigen/Dense>

#include <complex>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace coneflow {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;
using CVec = Eigen::VectorXcd;

/// Base for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DimensionError : public Error {
 public:
  using Error::Error;
};

/// Violated precondition (unordered pair, degenerate cone, bad option value).
class PreconditionError : public Error {
 public:
  using Error::Error;
};

/// Domain failure while evaluating an expression (division by zero, ...).
class EvalError : public Error {
 public:
  using Error::Error;
};

/// Parse failure. Line and column are 1-based; 0 means unknown.
class ParseError : public Error {
 public:
  ParseError(const std::string& msg, int line, int column)
      : Error(format(msg, line, column)), line_(line), column_(column) {}

  int line() const { return line_; }
  int column() const { return column_; }

 private:
  static std::string format(const std::string& msg, int line, int column) {
    if (line <= 0) return msg;
    return "line " + std::to_string(line) + ", column " + std::to_string(column) + ": " + msg;
  }
  int line_;
  int column_;
};

class IntegrationError : public Error {
 public:
  using Error::Error;
};

/// Iterative solver (Newton, return-map refinement) failed to converge.
class ConvergenceError : public Error {
 public:
  using Error::Error;
};

/// Axis-aligned box lo <= x <= hi.
struct Box {
  Vec lo;
  Vec hi;

  std::size_t dim() const { return static_cast<std::size_t>(lo.size()); }

  bool contains(const Vec& x, double slack = 0.0) const {
    for (Eigen::Index i = 0; i < lo.size(); ++i) {
      if (x[i] < lo[i] - slack || x[i] > hi[i] + slack) return false;
    }
    return true;
  }

  /// Symmetric box |x_i| <= half_widths_i.
  static Box symmetric(const Vec& half_widths) { return Box{-half_widths, half_widths}; }
};

inline void require_dim(const Vec& v, Eigen::Index n, const char* what) {
  if (v.size() != n) {
    throw DimensionError(std::string(what) + ": expected dimension " + std::to_string(n) +
                         ", got " + std::to_string(v.size()));
  }
}

inline bool all_finite(const Vec& v) { return v.allFinite(); }

}  // namespace coneflow
