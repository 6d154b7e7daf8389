#pragma once

#include <Eigen/Dense>

#include <stdexcept>
#include <string>

namespace persaddle {

template <class Scalar>
using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
template <class Scalar>
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

using Mat = Matrix<double>;
using Vec = Vector<double>;
using Index = Eigen::Index;

/// A factorization, solve, quadrature or root search failed beyond recovery.
class numerical_error : public std::runtime_error {
 public:
  explicit numerical_error(const std::string& what) : std::runtime_error(what) {}
};

/// A model fit collapsed (perfect interpolation, zero residual denominator).
class degenerate_fit_error : public numerical_error {
 public:
  explicit degenerate_fit_error(const std::string& what) : numerical_error(what) {}
};

/// Malformed input text; carries the 1-based line number.
class parse_error : public std::runtime_error {
 public:
  parse_error(const std::string& what, long line)
      : std::runtime_error(what + " (line " + std::to_string(line) + ")"), line_(line) {}
  long line() const noexcept { return line_; }

 private:
  long line_;
};

}  // namespace persaddle
