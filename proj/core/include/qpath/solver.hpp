#pragma once

#include <cstddef>
#include <optional>
#include <span>

#include "qpath/error.hpp"
#include "qpath/qoperator.hpp"

namespace qpath {

struct BoxQPResult {
  Vector alpha;          // inside [0, upper] exactly
  double objective = 0;  // D(alpha)
  double grad_residual = 0;
  std::size_t iterations = 0;
};

class BoxQPError : public Error {
 public:
  BoxQPError(const std::string& what, BoxQPResult best)
      : Error(what), best_(std::move(best)) {}
  const BoxQPResult& best() const noexcept { return best_; }

 private:
  BoxQPResult best_;
};

/// Projected-gradient optimality measure for the box [0, upper]:
/// |g_i| for interior coordinates, the infeasible part of g_i at an active
/// bound, and 0 for coordinates whose box is the single point {0}.
double projected_gradient_residual(std::span<const double> alpha,
                                   std::span<const double> grad,
                                   std::span<const double> upper);

/// Default stopping tolerance 1e-8 * n * max(c+, c-).
double default_box_qp_tol(std::size_t n, double c_plus, double c_minus);

/// Minimizes D(a) = a'Qa / (2 lambda) - sum(a) subject to 0 <= a <= upper.
///
/// Gradient projection with a Barzilai-Borwein step and exact line search
/// along the projected direction, alternating with truncated CG on the face
/// of free variables (Moré-Toraldo). Every step is an exact minimization of
/// the quadratic along a feasible direction, so D never increases.
///
/// Throws BoxQPError (carrying the best iterate) when max_iter is reached
/// before the projected-gradient residual drops to tol.
BoxQPResult solve_box_qp(const QOperator& q, double lambda,
                         std::span<const double> upper, double tol,
                         std::size_t max_iter = 10000,
                         std::optional<std::span<const double>> warm_start = {});

struct BoundedQPResult {
  Vector x;
  Vector grad;  // scale * Q_SS x + linear
  double residual = 0;
  std::size_t iterations = 0;
  bool converged = false;
};

/// Minimizes 0.5 * scale * x'Q_SS x + linear'x subject to lo <= x <= hi over
/// the instances in `set`. Bounds may be infinite. Does not throw on
/// non-convergence; inspect `converged` and `residual`.
BoundedQPResult solve_bounded_qp(const QOperator& q, const IndexList& set,
                                 double scale, std::span<const double> linear,
                                 std::span<const double> lo,
                                 std::span<const double> hi, double tol,
                                 std::size_t max_iter = 10000);

struct LinSolveResult {
  Vector x;
  double relative_residual = 0;  // ||Q_MM x - b|| / max(||b||, eps)
  bool converged = false;
  bool regularized = false;
  std::size_t iterations = 0;
};

class LinSolveError : public Error {
 public:
  LinSolveError(const std::string& what, LinSolveResult best)
      : Error(what), best_(std::move(best)) {}
  const LinSolveResult& best() const noexcept { return best_; }

 private:
  LinSolveResult best_;
};

/// Conjugate gradient on Q_MM x = rhs. When plain CG stalls it retries on
/// Q_MM + delta I with delta = 1e-12 * mean(Q_ii) * max(1, |M|).
/// max_iter = 0 selects 10 * |M|. Throws LinSolveError if the ridge retry
/// fails too.
LinSolveResult cg_solve(const QOperator& q, std::span<const std::size_t> set,
                        std::span<const double> rhs, double tol = 1e-10,
                        std::size_t max_iter = 0);

}  // namespace qpath
