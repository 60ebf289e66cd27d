#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "qpath/dataset.hpp"
#include "qpath/path.hpp"

namespace qpath {

struct PrimalModel {
  Vector w;  // bias in the last coordinate when the data was augmented
  double tau = 0;
  double lambda = 0;
};

/// w = (1/lambda) sum_i alpha_i y_i x_i.
Vector primal_weights(const Dataset& ds, std::span<const double> alpha,
                      double lambda);

/// Random access into a traced path.
///
/// Membership snapshots are kept every ceil(sqrt(K)) kinks, so a query
/// replays at most that many set deltas before filling alpha in O(n).
class PathRecovery {
 public:
  /// Throws Error for an incomplete path.
  explicit PathRecovery(const KinkPath& path);

  const KinkPath& path() const noexcept { return *path_; }

  /// Index k of the segment [tau_k, tau_{k+1}) containing tau; the last
  /// segment is closed at 1.
  std::size_t segment_of(double tau) const;

  /// Membership on the outgoing segment of kink k.
  std::vector<Membership> membership_at_kink(std::size_t k) const;

  Vector alpha_at(double tau) const;

  /// Evaluates the linear piece of segment k at tau, which may lie outside
  /// that segment (e.g. tau_{k+1} for a left limit). Values are clipped to
  /// the box at tau.
  Vector alpha_on_segment(std::size_t k, double tau) const;

  PrimalModel primal_at(const Dataset& ds, double tau) const;

 private:
  const KinkPath* path_;
  std::vector<double> taus_;
  std::size_t stride_;
  std::vector<std::vector<Membership>> snapshots_;  // after kink j * stride_
};

Vector alpha_at(const KinkPath& path, double tau);
PrimalModel primal_at(const KinkPath& path, const Dataset& ds, double tau);

/// +1 when w'x >= 0, else -1.
int predict(const PrimalModel& model, const SparseRow& x);

}  // namespace qpath
