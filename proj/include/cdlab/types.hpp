#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <stdexcept>
#include <string>

namespace cdlab {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;
using Index = Eigen::Index;

/// Base of every error thrown by the library.
class Error : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

/// Vector or matrix shapes that do not agree, or an index out of range.
class DimensionError : public Error {
  public:
    using Error::Error;
};

/// A parameter outside its admissible range (negative lambda, tau <= 0, ...).
class DomainError : public Error {
  public:
    using Error::Error;
};

/// The hypothesis of an operation does not hold for its inputs.
class PreconditionError : public Error {
  public:
    using Error::Error;
};

/// A 1-D section of f is not strictly convex (zero diagonal Hessian entry).
class StrictConvexityError : public PreconditionError {
  public:
    using PreconditionError::PreconditionError;
};

/// An iterative routine ran out of budget. Carries the best value reached.
class ConvergenceError : public Error {
  public:
    ConvergenceError(const std::string& what, double best_estimate)
        : Error(what), best_estimate_(best_estimate) {}
    double best_estimate() const noexcept { return best_estimate_; }

  private:
    double best_estimate_;
};

/// NaN or Inf appeared inside an iteration.
class NumericError : public Error {
  public:
    NumericError(const std::string& what, long iteration)
        : Error(what), iteration_(iteration) {}
    long iteration() const noexcept { return iteration_; }

  private:
    long iteration_;
};

namespace detail {

inline void require_dim(const Vec& x, Index d, const char* what)
{
    if (x.size() != d) {
        throw DimensionError(std::string(what) + ": expected dimension " + std::to_string(d) +
                             ", got " + std::to_string(x.size()));
    }
}

inline void require_finite(const Vec& x, const char* what)
{
    if (!x.allFinite()) {
        throw DomainError(std::string(what) + ": vector has non-finite entries");
    }
}

inline void require_index(Index j, Index d, const char* what)
{
    if (j < 0 || j >= d) {
        throw DimensionError(std::string(what) + ": coordinate " + std::to_string(j) +
                             " out of range [0, " + std::to_string(d) + ")");
    }
}

} // namespace detail
} // namespace cdlab
