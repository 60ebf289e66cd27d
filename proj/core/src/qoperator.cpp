#include "qpath/qoperator.hpp"

#include <string>

#include "qpath/error.hpp"

namespace qpath {

namespace {

void check_index(std::size_t i, std::size_t n) {
  if (i >= n)
    throw Error("instance index " + std::to_string(i) + " out of range [0, " +
                std::to_string(n) + ")");
}

}  // namespace

QOperator::QOperator(const Dataset& ds) : ds_(&ds), diag_(ds.n()) {
  for (std::size_t i = 0; i < ds.n(); ++i) {
    double s = 0.0;
    for (const Feature& f : ds.row(i)) s += f.value * f.value;
    diag_[i] = s;
  }
}

Vector QOperator::signed_combination(std::span<const double> v) const {
  if (v.size() != size())
    throw Error("Q product: vector length " + std::to_string(v.size()) +
                " does not match n = " + std::to_string(size()));
  Vector u(ds_->d(), 0.0);
  for (std::size_t j = 0; j < v.size(); ++j) {
    const double coef = v[j] * ds_->label(j);
    if (coef == 0.0) continue;
    for (const Feature& f : ds_->row(j)) u[f.index] += coef * f.value;
  }
  return u;
}

Vector QOperator::signed_combination(std::span<const std::size_t> cols,
                                     std::span<const double> v) const {
  if (v.size() != cols.size())
    throw Error("Q product: vector length " + std::to_string(v.size()) +
                " does not match column set size " +
                std::to_string(cols.size()));
  Vector u(ds_->d(), 0.0);
  for (std::size_t k = 0; k < cols.size(); ++k) {
    check_index(cols[k], size());
    const double coef = v[k] * ds_->label(cols[k]);
    if (coef == 0.0) continue;
    for (const Feature& f : ds_->row(cols[k])) u[f.index] += coef * f.value;
  }
  return u;
}

double QOperator::signed_dot(std::size_t i, std::span<const double> u) const {
  return ds_->label(i) * dot(ds_->row(i), u);
}

Vector QOperator::apply(std::span<const double> v) const {
  const Vector u = signed_combination(v);
  Vector out(size());
  for (std::size_t i = 0; i < size(); ++i) out[i] = signed_dot(i, u);
  return out;
}

Vector QOperator::sub_apply(std::span<const std::size_t> rows,
                            std::span<const std::size_t> cols,
                            std::span<const double> v) const {
  Vector out(rows.size(), 0.0);
  const Vector u = signed_combination(cols, v);
  if (cols.empty()) return out;
  for (std::size_t k = 0; k < rows.size(); ++k) {
    check_index(rows[k], size());
    out[k] = signed_dot(rows[k], u);
  }
  return out;
}

double QOperator::block_ones_sum(std::size_t i,
                                 std::span<const std::size_t> set) const {
  check_index(i, size());
  if (set.empty()) return 0.0;
  const Vector ones(set.size(), 1.0);
  const Vector u = signed_combination(set, ones);
  return signed_dot(i, u);
}

}  // namespace qpath
