#include "qpath/recover.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace qpath {

Vector primal_weights(const Dataset& ds, std::span<const double> alpha,
                      double lambda) {
  if (alpha.size() != ds.n()) throw Error("primal_weights: alpha has wrong length");
  Vector w(ds.d(), 0.0);
  for (std::size_t i = 0; i < ds.n(); ++i) {
    if (alpha[i] == 0.0) continue;
    const double coef = alpha[i] * ds.label(i) / lambda;
    for (const Feature& f : ds.row(i)) w[f.index] += coef * f.value;
  }
  return w;
}

PathRecovery::PathRecovery(const KinkPath& path) : path_(&path) {
  if (!path.complete || path.kinks.empty())
    throw Error("path is incomplete; recovery needs a path that reaches tau = 1");
  if (path.labels.size() != path.n) throw Error("path labels do not match n");
  taus_.reserve(path.kinks.size());
  for (const Kink& k : path.kinks) taus_.push_back(k.tau);

  const std::size_t count = path.kinks.size();
  stride_ = static_cast<std::size_t>(std::ceil(std::sqrt(static_cast<double>(count))));
  stride_ = std::max<std::size_t>(stride_, 1);
  std::vector<Membership> member = initial_membership(path);
  for (std::size_t k = 0; k < count; ++k) {
    apply_moves(member, path.kinks[k].moves);
    if (k % stride_ == 0) snapshots_.push_back(member);
  }
}

std::size_t PathRecovery::segment_of(double tau) const {
  if (!(tau >= 0.0 && tau <= 1.0))
    throw Error("tau = " + std::to_string(tau) + " outside [0, 1]");
  const auto it = std::upper_bound(taus_.begin(), taus_.end(), tau);
  return it == taus_.begin() ? 0 : static_cast<std::size_t>(it - taus_.begin()) - 1;
}

std::vector<Membership> PathRecovery::membership_at_kink(std::size_t k) const {
  const std::size_t snap = k / stride_;
  std::vector<Membership> member = snapshots_[snap];
  for (std::size_t j = snap * stride_ + 1; j <= k; ++j)
    apply_moves(member, path_->kinks[j].moves);
  return member;
}

Vector PathRecovery::alpha_at(double tau) const {
  return alpha_on_segment(segment_of(tau), tau);
}

Vector PathRecovery::alpha_on_segment(std::size_t k, double tau) const {
  if (k >= path_->kinks.size()) throw Error("segment index out of range");
  const Kink& kink = path_->kinks[k];
  const std::vector<Membership> member = membership_at_kink(k);
  const CostSchedule sched(path_->n, path_->lambda);
  const Costs c = sched.at(tau);
  const double dc = sched.delta(tau - kink.tau);

  Vector alpha(path_->n, 0.0);
  std::size_t m = 0;
  for (std::size_t i = 0; i < path_->n; ++i) {
    switch (member[i]) {
      case Membership::L: alpha[i] = c.for_label(path_->labels[i]); break;
      case Membership::R: break;
      case Membership::M:
        if (m >= kink.alpha_M.size()) throw Error("kink margin values do not match its index sets");
        alpha[i] = std::clamp(kink.alpha_M[m] + dc * kink.slope_M[m], 0.0,
                              c.for_label(path_->labels[i]));
        ++m;
        break;
    }
  }
  if (m != kink.alpha_M.size()) throw Error("kink margin values do not match its index sets");
  return alpha;
}

PrimalModel PathRecovery::primal_at(const Dataset& ds, double tau) const {
  if (ds.n() != path_->n) throw Error("dataset size does not match the path");
  return {primal_weights(ds, alpha_at(tau), path_->lambda), tau, path_->lambda};
}

Vector alpha_at(const KinkPath& path, double tau) {
  return PathRecovery(path).alpha_at(tau);
}

PrimalModel primal_at(const KinkPath& path, const Dataset& ds, double tau) {
  return PathRecovery(path).primal_at(ds, tau);
}

int predict(const PrimalModel& model, const SparseRow& x) {
  double s = 0.0;
  for (const Feature& f : x) {
    if (f.index >= model.w.size()) throw Error("feature index outside the model dimension");
    s += f.value * model.w[f.index];
  }
  return s >= 0.0 ? 1 : -1;
}

}  // namespace qpath
