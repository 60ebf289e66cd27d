#pragma once

#include <cstddef>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "qpath/dataset.hpp"
#include "qpath/error.hpp"
#include "qpath/qoperator.hpp"

namespace qpath {

/// Per-class box bounds for a given tau.
struct Costs {
  double plus = 0;
  double minus = 0;

  double for_label(int y) const noexcept { return y > 0 ? plus : minus; }
};

/// c+(tau) = 2(1 - tau)/n and c-(tau) = 2 tau/n; their sum is 2/n for
/// every tau.
class CostSchedule {
 public:
  CostSchedule(std::size_t n, double lambda);

  std::size_t n() const noexcept { return n_; }
  double lambda() const noexcept { return lambda_; }

  /// Throws Error for tau outside [0, 1].
  Costs at(double tau) const;
  /// Change 2 eps / n of the bounds for a tau step eps.
  double delta(double eps) const;
  Vector upper_bounds(std::span<const int> labels, double tau) const;

 private:
  std::size_t n_;
  double lambda_;
};

Costs costs_at(const CostSchedule& sched, double tau);
double delta_cost(const CostSchedule& sched, double eps);

/// (1/lambda) Q alpha - 1.
Vector gradient(const QOperator& q, double lambda, std::span<const double> alpha);

/// Membership of an instance: margin error (L), on the margin (M), or
/// well classified (R).
enum class Membership : std::uint8_t { L, M, R };

char to_char(Membership m);
Membership membership_from_char(char c);

struct Partition {
  IndexList L_plus;
  IndexList L_minus;
  IndexList M;
  IndexList R;
};

/// Partition by gradient sign: |g_i| <= tol -> M, g_i < -tol -> L,
/// g_i > tol -> R. Instances whose class bound is 0 (tau = 0 or 1) land in
/// L with alpha_i = 0 = c when their gradient is negative.
Partition classify_indices(std::span<const double> grad,
                           std::span<const int> labels, double tol_active);

/// tol_active = 1e-9 (1 + ||grad||_inf).
double active_tolerance(std::span<const double> grad);

/// Delta alpha_M solving Q_MM x = Q_{M,L+} 1 - Q_{M,L-} 1. Propagates
/// LinSolveError.
Vector segment_slope(const QOperator& q, std::span<const std::size_t> margin,
                     std::span<const std::size_t> l_plus,
                     std::span<const std::size_t> l_minus, double cg_tol = 1e-10);

/// Tracked solution at a single tau together with the quantities that are
/// linear along the current segment.
struct DualState {
  CostSchedule sched{1, 1.0};
  std::vector<int> labels;
  double tau = 0;
  Vector alpha;
  Vector grad;
  std::vector<Membership> member;
  IndexList margin;   // M, ascending
  Vector slope;       // Delta alpha over margin, aligned with it
  Vector grad_slope;  // d grad / d(Delta c); zero on M
  double tol_active = 0;
  double rate_floor = 0;  // |grad_slope| below this is noise

  std::size_t n() const noexcept { return alpha.size(); }
  IndexList members(Membership m) const;
  IndexList l_members(int label) const;
  Vector margin_alpha() const;
};

/// Builds a state from a (near-)optimal alpha at tau: classifies, snaps
/// alpha to the exact bound pattern, recomputes the gradient and zeroes it
/// on M. The slope is left empty; call update_slope.
DualState make_state(const QOperator& q, const CostSchedule& sched,
                     std::span<const int> labels, double tau,
                     std::span<const double> alpha);

/// Recomputes slope (Delta alpha_M) and grad_slope for the current sets.
void update_slope(DualState& st, const QOperator& q, double cg_tol = 1e-10);

enum class EventKind : std::uint8_t { Start, ToMargin, ToError, ToRest, Resync };

std::string_view to_string(EventKind kind);
EventKind event_kind_from_string(std::string_view s);

struct EventCandidate {
  double eps = std::numeric_limits<double>::infinity();
  std::optional<std::size_t> index;
};

/// Smallest step at which an instance outside M reaches a zero gradient.
/// Only gradients moving towards zero faster than rate_floor count; one
/// already past zero yields a zero step. Uses the cached grad_slope.
EventCandidate eps_to_M(const DualState& st);
/// Smallest non-negative step at which a margin instance hits its upper
/// bound c(tau).
EventCandidate eps_to_L(const DualState& st);
/// Smallest non-negative step at which a margin instance hits 0.
EventCandidate eps_to_R(const DualState& st);

/// Gradient rates below kRateNoise * max(Q_ii) / lambda * max(1, |dir|_inf)
/// are rounding noise and treated as zero.
inline constexpr double kRateNoise = 1e-12;

/// Bound-equality tolerance used by eps_to_L / eps_to_R.
inline constexpr double kBoundTol = 1e-10;

struct Event {
  EventKind kind;
  std::size_t index;
};

struct SetMove {
  std::size_t index;
  Membership from;
  Membership to;

  friend bool operator==(const SetMove&, const SetMove&) = default;
};

/// Settles membership and slope at a kink where the linear system leaves
/// the direction ambiguous (rank-deficient Q_MM with margin instances at a
/// bound, or instances outside M at a zero gradient). Solves the bounded
/// direction problem over M and the zero-gradient instances:
/// minimize dir'Q dir / (2 lambda) with dir = -y on the rest of L, 0 on the
/// rest of R, dir >= 0 where alpha = 0 and dir <= -y where alpha = c.
/// Instances whose direction ends at a bound move to R or L, the others form
/// M with the solution as slope. Returns the membership changes.
std::vector<SetMove> resolve_degenerate(DualState& st, const QOperator& q);

/// Moves the state by eps along the current segment and applies the event's
/// single membership change. With no event only tau, alpha and grad move.
/// The slope is stale afterwards; call update_slope.
std::optional<SetMove> advance(DualState& st, double eps,
                               std::optional<Event> event);

struct Kink {
  double tau = 0;
  EventKind event = EventKind::Start;
  std::vector<SetMove> moves;  // relative to the previous kink
  Vector alpha_M;              // over ascending M of the outgoing segment
  Vector slope_M;

  friend bool operator==(const Kink&, const Kink&) = default;
};

struct KinkPath {
  double lambda = 0;
  std::size_t n = 0;
  std::size_t d = 0;
  bool bias = false;
  std::string fingerprint;
  std::vector<int> labels;
  IndexList initial_L;
  IndexList initial_M;
  Vector initial_alpha_M;
  std::vector<Kink> kinks;
  double terminal_tau = 0;
  bool complete = false;
  std::size_t events = 0;

  friend bool operator==(const KinkPath&, const KinkPath&) = default;
};

/// Membership at tau = 0 before any kink moves are applied.
std::vector<Membership> initial_membership(const KinkPath& path);
void apply_moves(std::vector<Membership>& member,
                 std::span<const SetMove> moves);

struct TraceOptions {
  std::optional<double> qp_tol;  // default: 1e-8 n max(c+, c-)
  std::size_t qp_max_iter = 20000;
  double cg_tol = 1e-10;
  std::size_t drift_interval = 50;
  double grad_drift_tol = 1e-7;
  double pattern_tol = 1e-8;
  std::optional<std::size_t> max_events;  // default: event_budget(n)
};

/// 20 n max(ln n, 1) + 100.
std::size_t event_budget(std::size_t n);

/// Raised when tracing stops early; carries the path traced so far.
class PathError : public Error {
 public:
  PathError(const std::string& what, KinkPath partial)
      : Error(what), partial_(std::move(partial)) {}
  const KinkPath& partial() const noexcept { return partial_; }

 private:
  KinkPath partial_;
};

/// Traces the dual solution path over tau in [0, 1]: box-QP warm start at
/// tau = 0, then kink-to-kink advance until tau = 1.
KinkPath trace_path(const Dataset& ds, double lambda,
                    const TraceOptions& options = {});

}  // namespace qpath
