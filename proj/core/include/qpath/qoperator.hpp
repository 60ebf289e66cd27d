#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "qpath/dataset.hpp"

namespace qpath {

using Vector = std::vector<double>;
using IndexList = std::vector<std::size_t>;

/// Implicit Q with Q_ij = y_i y_j <x_i, x_j>.
///
/// Products are formed as Q v = (Y X)((Y X)^T v): one sparse pass to build
/// the d-vector u = sum_j v_j y_j x_j, one pass to take y_i <x_i, u>. Q itself
/// is never stored. The dataset must outlive the operator.
class QOperator {
 public:
  explicit QOperator(const Dataset& ds);

  std::size_t size() const noexcept { return ds_->n(); }
  const Dataset& dataset() const noexcept { return *ds_; }

  /// Q v for |v| = n.
  Vector apply(std::span<const double> v) const;

  /// Q_IJ v for |v| = |J|. Only the rows in I and J are scanned.
  Vector sub_apply(std::span<const std::size_t> rows,
                   std::span<const std::size_t> cols,
                   std::span<const double> v) const;

  /// sum_{j in S} Q_ij.
  double block_ones_sum(std::size_t i, std::span<const std::size_t> set) const;

  /// Q_ii = <x_i, x_i>.
  double diag(std::size_t i) const { return diag_[i]; }

  /// u = sum_{j in cols} v_j y_j x_j as a dense d-vector.
  Vector signed_combination(std::span<const std::size_t> cols,
                            std::span<const double> v) const;
  /// Same over all instances, |v| = n.
  Vector signed_combination(std::span<const double> v) const;

  /// y_i <x_i, u>.
  double signed_dot(std::size_t i, std::span<const double> u) const;

 private:
  const Dataset* ds_;
  Vector diag_;
};

}  // namespace qpath
