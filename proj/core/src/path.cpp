#include "qpath/path.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "qpath/solver.hpp"

namespace qpath {

CostSchedule::CostSchedule(std::size_t n, double lambda)
    : n_(n), lambda_(lambda) {
  if (n == 0) throw Error("cost schedule needs n >= 1");
  if (!(lambda > 0.0)) throw Error("lambda must be positive");
}

Costs CostSchedule::at(double tau) const {
  if (!(tau >= 0.0 && tau <= 1.0))
    throw Error("tau = " + std::to_string(tau) + " outside [0, 1]");
  const double nn = static_cast<double>(n_);
  return {2.0 * (1.0 - tau) / nn, 2.0 * tau / nn};
}

double CostSchedule::delta(double eps) const {
  return 2.0 * eps / static_cast<double>(n_);
}

Vector CostSchedule::upper_bounds(std::span<const int> labels, double tau) const {
  const Costs c = at(tau);
  Vector upper(labels.size());
  for (std::size_t i = 0; i < labels.size(); ++i) upper[i] = c.for_label(labels[i]);
  return upper;
}

Costs costs_at(const CostSchedule& sched, double tau) { return sched.at(tau); }

double delta_cost(const CostSchedule& sched, double eps) {
  if (!(eps >= 0.0)) throw Error("delta_cost: eps must be non-negative");
  return sched.delta(eps);
}

Vector gradient(const QOperator& q, double lambda, std::span<const double> alpha) {
  Vector g = q.apply(alpha);
  for (double& v : g) v = v / lambda - 1.0;
  return g;
}

char to_char(Membership m) {
  switch (m) {
    case Membership::L: return 'L';
    case Membership::M: return 'M';
    case Membership::R: return 'R';
  }
  return '?';
}

Membership membership_from_char(char c) {
  switch (c) {
    case 'L': return Membership::L;
    case 'M': return Membership::M;
    case 'R': return Membership::R;
    default: throw Error(std::string("unknown index set '") + c + "'");
  }
}

double active_tolerance(std::span<const double> grad) {
  double inf_norm = 0.0;
  for (double g : grad) inf_norm = std::max(inf_norm, std::abs(g));
  return 1e-9 * (1.0 + inf_norm);
}

Partition classify_indices(std::span<const double> grad,
                           std::span<const int> labels, double tol_active) {
  Partition p;
  for (std::size_t i = 0; i < grad.size(); ++i) {
    if (std::abs(grad[i]) <= tol_active)
      p.M.push_back(i);
    else if (grad[i] < 0.0)
      (labels[i] > 0 ? p.L_plus : p.L_minus).push_back(i);
    else
      p.R.push_back(i);
  }
  return p;
}

Vector segment_slope(const QOperator& q, std::span<const std::size_t> margin,
                     std::span<const std::size_t> l_plus,
                     std::span<const std::size_t> l_minus, double cg_tol) {
  if (margin.empty()) return {};
  IndexList l_all(l_plus.begin(), l_plus.end());
  l_all.insert(l_all.end(), l_minus.begin(), l_minus.end());
  if (l_all.empty()) return Vector(margin.size(), 0.0);
  Vector signs(l_plus.size(), 1.0);
  signs.resize(l_all.size(), -1.0);
  const Vector rhs = q.sub_apply(margin, l_all, signs);
  return cg_solve(q, margin, rhs, cg_tol).x;
}

IndexList DualState::members(Membership m) const {
  IndexList out;
  for (std::size_t i = 0; i < member.size(); ++i)
    if (member[i] == m) out.push_back(i);
  return out;
}

IndexList DualState::l_members(int label) const {
  IndexList out;
  for (std::size_t i = 0; i < member.size(); ++i)
    if (member[i] == Membership::L && labels[i] == label) out.push_back(i);
  return out;
}

Vector DualState::margin_alpha() const {
  Vector out(margin.size());
  for (std::size_t k = 0; k < margin.size(); ++k) out[k] = alpha[margin[k]];
  return out;
}

DualState make_state(const QOperator& q, const CostSchedule& sched,
                     std::span<const int> labels, double tau,
                     std::span<const double> alpha) {
  const std::size_t n = q.size();
  if (alpha.size() != n || labels.size() != n)
    throw Error("make_state: vector length does not match n");
  DualState st;
  st.sched = sched;
  st.labels.assign(labels.begin(), labels.end());
  st.tau = tau;
  st.alpha.assign(alpha.begin(), alpha.end());

  const Vector g0 = gradient(q, sched.lambda(), st.alpha);
  st.tol_active = active_tolerance(g0);
  const Partition p = classify_indices(g0, labels, st.tol_active);

  const Costs c = sched.at(tau);
  st.member.assign(n, Membership::R);
  for (std::size_t i : p.L_plus) st.member[i] = Membership::L;
  for (std::size_t i : p.L_minus) st.member[i] = Membership::L;
  for (std::size_t i : p.M) st.member[i] = Membership::M;
  for (std::size_t i = 0; i < n; ++i) {
    const double ci = c.for_label(labels[i]);
    switch (st.member[i]) {
      case Membership::L: st.alpha[i] = ci; break;
      case Membership::R: st.alpha[i] = 0.0; break;
      case Membership::M: st.alpha[i] = std::clamp(st.alpha[i], 0.0, ci); break;
    }
  }
  st.margin = p.M;
  st.grad = gradient(q, sched.lambda(), st.alpha);
  for (std::size_t i : st.margin) st.grad[i] = 0.0;
  st.grad_slope.assign(n, 0.0);
  return st;
}

namespace {

// grad_slope = Q dir / lambda for dir = -y on L, slope on M, 0 on R.
void refresh_grad_slope(DualState& st, const QOperator& q) {
  Vector dir(st.n(), 0.0);
  for (std::size_t i = 0; i < st.n(); ++i)
    if (st.member[i] == Membership::L) dir[i] = -st.labels[i];
  for (std::size_t k = 0; k < st.margin.size(); ++k) dir[st.margin[k]] = st.slope[k];
  st.grad_slope = q.apply(dir);
  const double lambda = st.sched.lambda();
  for (double& v : st.grad_slope) v /= lambda;
  for (std::size_t i : st.margin) st.grad_slope[i] = 0.0;

  double max_diag = 0.0, max_dir = 1.0;
  for (std::size_t i = 0; i < st.n(); ++i) {
    max_diag = std::max(max_diag, q.diag(i));
    max_dir = std::max(max_dir, std::abs(dir[i]));
  }
  st.rate_floor = kRateNoise * max_diag / lambda * max_dir;
}

}  // namespace

void update_slope(DualState& st, const QOperator& q, double cg_tol) {
  const IndexList l_plus = st.l_members(1);
  const IndexList l_minus = st.l_members(-1);
  st.slope = segment_slope(q, st.margin, l_plus, l_minus, cg_tol);
  refresh_grad_slope(st, q);
}

std::vector<SetMove> resolve_degenerate(DualState& st, const QOperator& q) {
  const std::size_t n = st.n();
  const double lambda = st.sched.lambda();
  const Costs c = st.sched.at(st.tau);
  constexpr double kInf = std::numeric_limits<double>::infinity();

  // Instances whose direction is undetermined by the current sets: all of M
  // plus L/R instances at (or already past) a zero gradient. A bound on the direction
  // applies where alpha sits at 0 (dir >= 0) or at c (dir <= dc/dDelta = -y).
  IndexList open;
  Vector lo, hi;
  IndexList fixed_l;
  Vector fixed_dir;
  for (std::size_t i = 0; i < n; ++i) {
    const double g = st.grad[i];
    const bool weak = st.member[i] == Membership::R ? g <= st.tol_active
                                                    : g >= -st.tol_active;
    if (st.member[i] != Membership::M && !weak) {
      if (st.member[i] == Membership::L) {
        fixed_l.push_back(i);
        fixed_dir.push_back(-st.labels[i]);
      }
      continue;
    }
    const double ci = c.for_label(st.labels[i]);
    const double cdot = -st.labels[i];
    const bool at_zero = st.alpha[i] <= kBoundTol;
    const bool at_cap = std::abs(st.alpha[i] - ci) <= kBoundTol;
    double l = at_zero ? 0.0 : -kInf;
    double h = at_cap ? cdot : kInf;
    if (st.member[i] == Membership::R) l = 0.0;
    if (st.member[i] == Membership::L) h = cdot;
    if (h < l) h = l;
    open.push_back(i);
    lo.push_back(l);
    hi.push_back(h);
  }
  if (open.empty()) {
    st.slope.clear();
    refresh_grad_slope(st, q);
    return {};
  }

  Vector linear = q.sub_apply(open, fixed_l, fixed_dir);
  double scale = 0.0;
  for (double& v : linear) {
    v /= lambda;
    scale = std::max(scale, std::abs(v));
  }
  for (std::size_t i : open) scale = std::max(scale, q.diag(i) / lambda);
  const double tol = 1e-14 * (1.0 + scale);
  const BoundedQPResult dirqp =
      solve_bounded_qp(q, open, 1.0 / lambda, linear, lo, hi, tol, 50 * open.size() + 1000);
  if (!dirqp.converged && dirqp.residual > 1e-10 * (1.0 + scale))
    throw Error("degenerate kink at tau = " + std::to_string(st.tau) +
                ": direction problem did not converge (residual " +
                std::to_string(dirqp.residual) + ")");

  // Interior directions stay on the margin; a direction pinned at a bound
  // follows that bound.
  const double ztol = 1e-9;
  std::vector<SetMove> moves;
  for (std::size_t k = 0; k < open.size(); ++k) {
    const std::size_t i = open[k];
    const double z = dirqp.x[k];
    Membership to = Membership::M;
    if (std::isfinite(lo[k]) && z <= lo[k] + ztol)
      to = Membership::R;
    else if (std::isfinite(hi[k]) && z >= hi[k] - ztol)
      to = Membership::L;
    if (to != st.member[i]) {
      moves.push_back({i, st.member[i], to});
      st.member[i] = to;
    }
  }
  st.margin.clear();
  st.slope.clear();
  for (std::size_t k = 0; k < open.size(); ++k) {
    const std::size_t i = open[k];
    const double ci = c.for_label(st.labels[i]);
    switch (st.member[i]) {
      case Membership::L: st.alpha[i] = ci; break;
      case Membership::R: st.alpha[i] = 0.0; break;
      case Membership::M:
        st.margin.push_back(i);
        st.slope.push_back(dirqp.x[k]);
        st.grad[i] = 0.0;
        break;
    }
  }
  refresh_grad_slope(st, q);
  return moves;
}

std::string_view to_string(EventKind kind) {
  switch (kind) {
    case EventKind::Start: return "start";
    case EventKind::ToMargin: return "to_M";
    case EventKind::ToError: return "to_L";
    case EventKind::ToRest: return "to_R";
    case EventKind::Resync: return "resync";
  }
  return "?";
}

EventKind event_kind_from_string(std::string_view s) {
  for (EventKind k : {EventKind::Start, EventKind::ToMargin, EventKind::ToError,
                      EventKind::ToRest, EventKind::Resync})
    if (to_string(k) == s) return k;
  throw Error("unknown event kind '" + std::string(s) + "'");
}

EventCandidate eps_to_M(const DualState& st) {
  EventCandidate best;
  const double half_n = 0.5 * static_cast<double>(st.n());
  for (std::size_t i = 0; i < st.n(); ++i) {
    if (st.member[i] == Membership::M) continue;
    const double rate = st.grad_slope[i];
    // Only a gradient heading towards zero from its own side can fire.
    const bool approaching = st.member[i] == Membership::R ? rate < -st.rate_floor
                                                           : rate > st.rate_floor;
    if (!approaching) continue;
    const double eps = std::max(0.0, half_n * (-st.grad[i]) / rate);
    if (eps < best.eps) best = {eps, i};
  }
  return best;
}

EventCandidate eps_to_L(const DualState& st) {
  EventCandidate best;
  const double half_n = 0.5 * static_cast<double>(st.n());
  const Costs c = st.sched.at(st.tau);
  for (std::size_t k = 0; k < st.margin.size(); ++k) {
    const std::size_t i = st.margin[k];
    const double y = st.labels[i];
    const double ci = c.for_label(st.labels[i]);
    const double a = st.alpha[i];
    const double da = st.slope[k];
    double eps = best.eps;
    if (std::abs(a - ci) <= kBoundTol) {
      if (da > -y) eps = 0.0;
    } else if (da + y != 0.0) {
      const double e = half_n * (ci - a) / (da + y);
      if (e >= 0.0) eps = e;
    }
    if (eps < best.eps) best = {eps, i};
  }
  return best;
}

EventCandidate eps_to_R(const DualState& st) {
  EventCandidate best;
  const double half_n = 0.5 * static_cast<double>(st.n());
  for (std::size_t k = 0; k < st.margin.size(); ++k) {
    const std::size_t i = st.margin[k];
    const double a = st.alpha[i];
    const double da = st.slope[k];
    double eps = best.eps;
    if (std::abs(a) <= kBoundTol) {
      if (da < 0.0) eps = 0.0;
    } else if (da != 0.0) {
      const double e = half_n * (-a) / da;
      if (e >= 0.0) eps = e;
    }
    if (eps < best.eps) best = {eps, i};
  }
  return best;
}

std::optional<SetMove> advance(DualState& st, double eps,
                               std::optional<Event> event) {
  const double remaining = 1.0 - st.tau;
  if (!(eps >= 0.0 && eps <= remaining))
    throw Error("advance: step " + std::to_string(eps) + " outside [0, 1 - tau]");
  const double next_tau = eps == remaining ? 1.0 : std::min(1.0, st.tau + eps);
  const double dc = st.sched.delta(eps);
  const Costs c = st.sched.at(next_tau);

  if (eps > 0.0) {
    std::size_t k = 0;
    for (std::size_t i = 0; i < st.n(); ++i) {
      const double ci = c.for_label(st.labels[i]);
      switch (st.member[i]) {
        case Membership::L:
          st.alpha[i] = ci;
          st.grad[i] += dc * st.grad_slope[i];
          break;
        case Membership::R:
          st.alpha[i] = 0.0;
          st.grad[i] += dc * st.grad_slope[i];
          break;
        case Membership::M:
          // margin is ascending, so margin[k] == i here
          st.alpha[i] = std::clamp(st.alpha[i] + dc * st.slope[k], 0.0, ci);
          ++k;
          break;
      }
    }
  }
  st.tau = next_tau;
  if (!event) return std::nullopt;

  const std::size_t i = event->index;
  if (i >= st.n()) throw Error("advance: event index out of range");
  const Membership from = st.member[i];
  Membership to = Membership::M;
  switch (event->kind) {
    case EventKind::ToMargin: {
      if (from == Membership::M) throw Error("advance: index already in M");
      to = Membership::M;
      const auto pos = std::lower_bound(st.margin.begin(), st.margin.end(), i);
      const auto k = static_cast<std::size_t>(pos - st.margin.begin());
      st.margin.insert(pos, i);
      st.slope.insert(st.slope.begin() + static_cast<std::ptrdiff_t>(k), 0.0);
      break;
    }
    case EventKind::ToError:
    case EventKind::ToRest: {
      if (from != Membership::M) throw Error("advance: index not in M");
      to = event->kind == EventKind::ToError ? Membership::L : Membership::R;
      st.alpha[i] = to == Membership::L ? c.for_label(st.labels[i]) : 0.0;
      const auto pos = std::lower_bound(st.margin.begin(), st.margin.end(), i);
      st.slope.erase(st.slope.begin() + (pos - st.margin.begin()));
      st.margin.erase(pos);
      break;
    }
    default:
      throw Error("advance: event kind cannot be applied");
  }
  st.member[i] = to;
  st.grad[i] = 0.0;
  st.grad_slope[i] = 0.0;
  return SetMove{i, from, to};
}

std::vector<Membership> initial_membership(const KinkPath& path) {
  std::vector<Membership> member(path.n, Membership::R);
  for (std::size_t i : path.initial_L) member.at(i) = Membership::L;
  for (std::size_t i : path.initial_M) member.at(i) = Membership::M;
  return member;
}

void apply_moves(std::vector<Membership>& member, std::span<const SetMove> moves) {
  for (const SetMove& mv : moves) {
    if (mv.index >= member.size()) throw Error("set move index out of range");
    if (member[mv.index] != mv.from)
      throw Error("set move " + std::to_string(mv.index) + ":" + to_char(mv.from) +
                  to_char(mv.to) + " does not match current membership");
    member[mv.index] = mv.to;
  }
}

std::size_t event_budget(std::size_t n) {
  const double nn = static_cast<double>(n);
  return static_cast<std::size_t>(20.0 * nn * std::max(std::log(nn), 1.0)) + 100;
}

namespace {

Vector solve_at(const QOperator& q, const CostSchedule& sched,
                std::span<const int> labels, double tau, const TraceOptions& opt,
                std::optional<std::span<const double>> warm) {
  const Costs c = sched.at(tau);
  const double loose = opt.qp_tol.value_or(default_box_qp_tol(sched.n(), c.plus, c.minus));
  // Classification needs residuals well below tol_active (>= 1e-9).
  const double tight = std::min(loose, 1e-11);
  const Vector upper = sched.upper_bounds(labels, tau);
  try {
    return solve_box_qp(q, sched.lambda(), upper, tight, opt.qp_max_iter, warm).alpha;
  } catch (const BoxQPError& e) {
    if (e.best().grad_residual <= loose) return e.best().alpha;
    throw;
  }
}

constexpr std::size_t kMaxResolvesPerKink = 3;

Kink kink_from(const DualState& st, EventKind kind, std::vector<SetMove> moves) {
  return Kink{st.tau, kind, std::move(moves), st.margin_alpha(), st.slope};
}

// Periodic consistency check. Returns the membership changes caused by a
// corrective re-solve (empty when none was needed). After a re-solve the
// slope is already set.
std::vector<SetMove> control_drift(DualState& st, const QOperator& q,
                                   const TraceOptions& opt, bool& resynced) {
  resynced = false;
  const Vector fresh = gradient(q, st.sched.lambda(), st.alpha);
  double drift = 0.0, violation = 0.0;
  for (std::size_t i = 0; i < st.n(); ++i) {
    drift = std::max(drift, std::abs(fresh[i] - st.grad[i]));
    switch (st.member[i]) {
      case Membership::L: violation = std::max(violation, fresh[i]); break;
      case Membership::R: violation = std::max(violation, -fresh[i]); break;
      case Membership::M: violation = std::max(violation, std::abs(fresh[i])); break;
    }
  }
  if (violation > opt.pattern_tol) {
    const Vector alpha = solve_at(q, st.sched, st.labels, st.tau, opt, st.alpha);
    DualState next = make_state(q, st.sched, st.labels, st.tau, alpha);
    resolve_degenerate(next, q);
    std::vector<SetMove> moves;
    for (std::size_t i = 0; i < st.n(); ++i)
      if (next.member[i] != st.member[i]) moves.push_back({i, st.member[i], next.member[i]});
    st = std::move(next);
    resynced = true;
    return moves;
  }
  if (drift > opt.grad_drift_tol) {
    st.grad = fresh;
    for (std::size_t i : st.margin) st.grad[i] = 0.0;
  }
  return {};
}

}  // namespace

KinkPath trace_path(const Dataset& ds, double lambda, const TraceOptions& opt) {
  const QOperator q(ds);
  const CostSchedule sched(ds.n(), lambda);
  const std::size_t n = ds.n();

  KinkPath path;
  path.lambda = lambda;
  path.n = n;
  path.d = ds.d();
  path.bias = ds.bias_augmented();
  path.fingerprint = fingerprint(ds);
  path.labels = ds.labels();

  const Vector alpha0 = solve_at(q, sched, ds.labels(), 0.0, opt, std::nullopt);
  DualState st = make_state(q, sched, ds.labels(), 0.0, alpha0);
  // Zero-cost instances make tau = 0 degenerate whenever any exist.
  resolve_degenerate(st, q);
  path.initial_L = st.members(Membership::L);
  path.initial_M = st.margin;
  path.initial_alpha_M = st.margin_alpha();
  path.kinks.push_back(kink_from(st, EventKind::Start, {}));
  path.terminal_tau = 0.0;

  const std::size_t budget = opt.max_events.value_or(event_budget(n));
  std::size_t zero_run = 0;
  std::vector<bool> moved_here(n, false);  // moved since the last positive step
  std::size_t resolved_here = 1;  // direction solves since the last positive step
  try {
    while (st.tau < 1.0) {
      if (path.events >= budget)
        throw PathError("path budget exhausted after " + std::to_string(path.events) +
                            " events at tau = " + std::to_string(st.tau),
                        path);

      // Priority on ties: to_M, then to_L, then to_R.
      const EventCandidate to_m = eps_to_M(st);
      const EventCandidate to_l = eps_to_L(st);
      const EventCandidate to_r = eps_to_R(st);
      EventCandidate best = to_m;
      EventKind kind = EventKind::ToMargin;
      if (to_l.eps < best.eps) {
        best = to_l;
        kind = EventKind::ToError;
      }
      if (to_r.eps < best.eps) {
        best = to_r;
        kind = EventKind::ToRest;
      }

      const double remaining = 1.0 - st.tau;
      if (!best.index || best.eps >= remaining) {
        advance(st, remaining, std::nullopt);
        break;
      }

      const double tau_before = st.tau;
      std::vector<SetMove> moves;
      bool slope_ready = false;
      if (best.eps == 0.0 && moved_here[*best.index] &&
          resolved_here < kMaxResolvesPerKink) {
        // An index about to undo its own move at this tau: the single-event
        // slope is ambiguous here, so settle all sets at once.
        moves = resolve_degenerate(st, q);
        kind = EventKind::Resync;
        ++resolved_here;
        slope_ready = true;
      } else {
        moves.push_back(*advance(st, best.eps, Event{kind, *best.index}));
        if (st.tau != tau_before) {
          std::fill(moved_here.begin(), moved_here.end(), false);
          resolved_here = 0;
        }
      }
      for (const SetMove& mv : moves) moved_here[mv.index] = true;
      ++path.events;

      if (opt.drift_interval > 0 && path.events % opt.drift_interval == 0) {
        bool resynced = false;
        auto extra = control_drift(st, q, opt, resynced);
        if (resynced) {
          kind = EventKind::Resync;
          slope_ready = true;
        }
        moves.insert(moves.end(), extra.begin(), extra.end());
      }
      if (!slope_ready) update_slope(st, q, opt.cg_tol);
      if (st.tau == tau_before) {
        Kink& last = path.kinks.back();
        last.event = kind;
        last.moves.insert(last.moves.end(), moves.begin(), moves.end());
        last.alpha_M = st.margin_alpha();
        last.slope_M = st.slope;
        if (++zero_run > n)
          throw PathError("degenerate cycling: more than " + std::to_string(n) +
                              " consecutive zero-length steps at tau = " +
                              std::to_string(st.tau),
                          path);
      } else {
        path.kinks.push_back(kink_from(st, kind, std::move(moves)));
        zero_run = 0;
      }
      path.terminal_tau = st.tau;
    }
  } catch (const PathError&) {
    throw;
  } catch (const Error& e) {
    throw PathError(std::string("path tracing failed: ") + e.what(), path);
  }

  path.terminal_tau = 1.0;
  path.complete = true;
  return path;
}

}  // namespace qpath
