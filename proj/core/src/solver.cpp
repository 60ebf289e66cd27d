#include "qpath/solver.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <optional>
#include <string>

namespace qpath {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double dot(std::span<const double> a, std::span<const double> b) {
  return std::inner_product(a.begin(), a.end(), b.begin(), 0.0);
}

double norm(std::span<const double> a) { return std::sqrt(dot(a, a)); }

// Quadratic 0.5 * scale * x'Q_SS x + linear'x over an index subset S of the
// instances (all of them when `set` is null), with bounds lo <= x <= hi.
// Bounds may be infinite.
struct Problem {
  const QOperator& q;
  const IndexList* set;
  double scale;
  std::span<const double> linear;
  std::span<const double> lo;
  std::span<const double> hi;

  std::size_t size() const { return set ? set->size() : q.size(); }
  std::size_t global(std::size_t k) const { return set ? (*set)[k] : k; }

  Vector mult(std::span<const double> v) const {
    Vector out = set ? q.sub_apply(*set, *set, v) : q.apply(v);
    for (double& x : out) x *= scale;
    return out;
  }

  // Q_FF v for positions F within S.
  Vector face_mult(const IndexList& face, std::span<const double> v) const {
    IndexList rows(face.size());
    for (std::size_t k = 0; k < face.size(); ++k) rows[k] = global(face[k]);
    Vector out = q.sub_apply(rows, rows, v);
    for (double& x : out) x *= scale;
    return out;
  }
};

double residual(std::span<const double> x, std::span<const double> g,
                std::span<const double> lo, std::span<const double> hi) {
  double worst = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    double r = 0.0;
    if (lo[i] >= hi[i])
      r = 0.0;
    else if (x[i] <= lo[i])
      r = std::max(-g[i], 0.0);
    else if (x[i] >= hi[i])
      r = std::max(g[i], 0.0);
    else
      r = std::abs(g[i]);
    worst = std::max(worst, r);
  }
  return worst;
}

struct Iterate {
  const Problem& p;
  Vector x;
  Vector qx;  // scale * Q_SS x

  double grad(std::size_t i) const { return qx[i] + p.linear[i]; }

  Vector gradient() const {
    Vector g(x.size());
    for (std::size_t i = 0; i < g.size(); ++i) g[i] = grad(i);
    return g;
  }

  double objective() const {
    double v = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) v += x[i] * (0.5 * qx[i] + p.linear[i]);
    return v;
  }

  void refresh() { qx = p.mult(x); }

  void clip() {
    for (std::size_t i = 0; i < x.size(); ++i) x[i] = std::clamp(x[i], p.lo[i], p.hi[i]);
  }
};

// Truncated CG for Q_FF x = b. Stops on convergence, on a direction of
// (numerically) zero curvature, or at the iteration cap. The returned x is a
// descent direction for the face quadratic whenever b != 0.
Vector face_cg(const Problem& prob, const IndexList& free, const Vector& b) {
  const std::size_t m = free.size();
  Vector x(m, 0.0), r = b, p = b;
  double rr = dot(r, r);
  const double stop = 1e-24 * rr;
  const std::size_t cap = std::min<std::size_t>(2 * m + 5, 500);
  double scale = 0.0;
  for (std::size_t k : free) scale = std::max(scale, prob.q.diag(prob.global(k)) * prob.scale);
  for (std::size_t k = 0; k < cap && rr > stop; ++k) {
    const Vector ap = prob.face_mult(free, p);
    const double pap = dot(p, ap);
    if (pap <= 1e-14 * scale * dot(p, p)) {
      // Flat direction: the face quadratic is linear along p.
      if (k == 0) return p;
      break;
    }
    const double a = rr / pap;
    for (std::size_t i = 0; i < m; ++i) {
      x[i] += a * p[i];
      r[i] -= a * ap[i];
    }
    const double rr_next = dot(r, r);
    const double beta = rr_next / rr;
    rr = rr_next;
    for (std::size_t i = 0; i < m; ++i) p[i] = r[i] + beta * p[i];
  }
  return x;
}

struct EngineResult {
  Vector x;
  Vector grad;
  double objective = 0;
  double residual = 0;
  std::size_t iterations = 0;
  bool converged = false;
};

// Gradient projection with a Barzilai-Borwein step and exact search along
// the projected direction, alternating with truncated CG on the face of
// free variables (More-Toraldo). Each step exactly minimizes the quadratic
// along a feasible direction, so the objective never increases.
EngineResult minimize(const Problem& p, double tol, std::size_t max_iter,
                      std::optional<std::span<const double>> warm) {
  const std::size_t n = p.size();
  Iterate st{p, Vector(n, 0.0), Vector(n, 0.0)};
  if (warm) std::copy(warm->begin(), warm->end(), st.x.begin());
  st.clip();
  st.refresh();

  double max_diag = 0.0;
  for (std::size_t k = 0; k < n; ++k)
    max_diag = std::max(max_diag, p.q.diag(p.global(k)) * p.scale);
  double step = max_diag > 0.0 ? 1.0 / max_diag : 1.0;

  const auto finish = [&](std::size_t it) {
    st.refresh();
    Vector g = st.gradient();
    const double r = residual(st.x, g, p.lo, p.hi);
    return EngineResult{st.x, std::move(g), st.objective(), r, it, r <= tol};
  };

  Vector d(n), g(n);
  for (std::size_t it = 0; it < max_iter; ++it) {
    if (it % 50 == 49) st.refresh();
    g = st.gradient();
    if (residual(st.x, g, p.lo, p.hi) <= tol) {
      EngineResult res = finish(it);
      if (res.converged) return res;
      g = res.grad;
    }

    // Gradient projection with exact search on the projected segment.
    double dd = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      d[i] = std::clamp(st.x[i] - step * g[i], p.lo[i], p.hi[i]) - st.x[i];
      dd += d[i] * d[i];
    }
    if (dd > 0.0) {
      const Vector qd = p.mult(d);
      const double slope = dot(g, d);
      const double curv = dot(d, qd);
      if (slope < 0.0 && std::isfinite(dd)) {
        const double s = curv > 0.0 ? std::min(1.0, -slope / curv) : 1.0;
        for (std::size_t i = 0; i < n; ++i) {
          st.x[i] += s * d[i];
          st.qx[i] += s * qd[i];
        }
        st.clip();
      }
      // Barzilai-Borwein: |s|^2 / <s, y> with s = d, y = Q d.
      step = curv > 0.0 ? std::clamp(dd / curv, 1e-12, 1e12) : 1e12;
    } else {
      step = std::min(step * 10.0, 1e12);
    }

    // Newton-like step on the face of free variables.
    IndexList free;
    for (std::size_t i = 0; i < n; ++i)
      if (st.x[i] > p.lo[i] && st.x[i] < p.hi[i]) free.push_back(i);
    if (free.empty()) continue;
    Vector b(free.size());
    for (std::size_t k = 0; k < free.size(); ++k) b[k] = -st.grad(free[k]);
    if (norm(b) == 0.0) continue;
    const Vector x = face_cg(p, free, b);
    const double slope = -dot(b, x);
    if (!(slope < 0.0)) continue;

    double s_max = kInf;
    std::size_t blocking = free.size();
    for (std::size_t k = 0; k < free.size(); ++k) {
      const std::size_t i = free[k];
      double room = kInf;
      if (x[k] > 0.0)
        room = (p.hi[i] - st.x[i]) / x[k];
      else if (x[k] < 0.0)
        room = (p.lo[i] - st.x[i]) / x[k];
      if (room < s_max) {
        s_max = room;
        blocking = k;
      }
    }
    Vector full(n, 0.0);
    for (std::size_t k = 0; k < free.size(); ++k) full[free[k]] = x[k];
    const Vector qx = p.mult(full);
    const double curv = dot(full, qx);
    const double s_star = curv > 0.0 ? -slope / curv : kInf;
    const double s = std::min(s_star, s_max);
    if (!std::isfinite(s)) continue;
    for (std::size_t i = 0; i < n; ++i) {
      st.x[i] += s * full[i];
      st.qx[i] += s * qx[i];
    }
    if (s == s_max && blocking < free.size()) {
      const std::size_t i = free[blocking];
      st.x[i] = x[blocking] > 0.0 ? p.hi[i] : p.lo[i];
    }
    st.clip();
  }
  return finish(max_iter);
}

}  // namespace

double projected_gradient_residual(std::span<const double> alpha,
                                   std::span<const double> grad,
                                   std::span<const double> upper) {
  const Vector lo(alpha.size(), 0.0);
  return residual(alpha, grad, lo, upper);
}

double default_box_qp_tol(std::size_t n, double c_plus, double c_minus) {
  return 1e-8 * static_cast<double>(n) * std::max(c_plus, c_minus);
}

BoxQPResult solve_box_qp(const QOperator& q, double lambda,
                         std::span<const double> upper, double tol,
                         std::size_t max_iter,
                         std::optional<std::span<const double>> warm_start) {
  const std::size_t n = q.size();
  if (upper.size() != n) throw Error("box QP: bound vector has wrong length");
  if (!(lambda > 0.0)) throw Error("box QP: lambda must be positive");
  if (!(tol > 0.0)) throw Error("box QP: tolerance must be positive");
  for (double u : upper)
    if (!(u >= 0.0)) throw Error("box QP: upper bounds must be non-negative");
  if (warm_start && warm_start->size() != n)
    throw Error("box QP: warm start has wrong length");

  const Vector linear(n, -1.0), lo(n, 0.0);
  const Problem p{q, nullptr, 1.0 / lambda, linear, lo, upper};
  EngineResult r = minimize(p, tol, max_iter, warm_start);
  BoxQPResult out{std::move(r.x), r.objective, r.residual, r.iterations};
  if (r.converged) return out;
  throw BoxQPError("box QP: no convergence after " + std::to_string(max_iter) +
                       " iterations (projected-gradient residual " +
                       std::to_string(out.grad_residual) + ")",
                   std::move(out));
}

BoundedQPResult solve_bounded_qp(const QOperator& q, const IndexList& set,
                                 double scale, std::span<const double> linear,
                                 std::span<const double> lo,
                                 std::span<const double> hi, double tol,
                                 std::size_t max_iter) {
  const std::size_t m = set.size();
  if (linear.size() != m || lo.size() != m || hi.size() != m)
    throw Error("bounded QP: vector lengths do not match the index set");
  for (std::size_t k = 0; k < m; ++k) {
    if (set[k] >= q.size()) throw Error("bounded QP: index out of range");
    if (!(lo[k] <= hi[k])) throw Error("bounded QP: empty bound interval");
  }
  if (m == 0) return {};
  // Start from the point of the box closest to the origin.
  Vector start(m);
  for (std::size_t k = 0; k < m; ++k) start[k] = std::clamp(0.0, lo[k], hi[k]);
  const Problem p{q, &set, scale, linear, lo, hi};
  EngineResult r = minimize(p, tol, max_iter, std::span<const double>(start));
  return {std::move(r.x), std::move(r.grad), r.residual, r.iterations, r.converged};
}

namespace {

struct CgRun {
  Vector x;
  bool converged = false;
  std::size_t iterations = 0;
};

CgRun run_cg(const QOperator& q, std::span<const std::size_t> set,
             std::span<const double> rhs, double shift, double tol,
             std::size_t max_iter) {
  const std::size_t m = set.size();
  CgRun run{Vector(m, 0.0)};
  Vector r(rhs.begin(), rhs.end()), p = r;
  double rr = dot(r, r);
  const double target = tol * std::max(norm(rhs), std::numeric_limits<double>::epsilon());
  for (std::size_t k = 0; k < max_iter; ++k) {
    if (std::sqrt(rr) <= target) {
      run.converged = true;
      return run;
    }
    Vector ap = q.sub_apply(set, set, p);
    for (std::size_t i = 0; i < m; ++i) ap[i] += shift * p[i];
    const double pap = dot(p, ap);
    if (!(pap > 0.0)) return run;  // stalled
    const double a = rr / pap;
    for (std::size_t i = 0; i < m; ++i) {
      run.x[i] += a * p[i];
      r[i] -= a * ap[i];
    }
    const double rr_next = dot(r, r);
    const double beta = rr_next / rr;
    rr = rr_next;
    for (std::size_t i = 0; i < m; ++i) p[i] = r[i] + beta * p[i];
    run.iterations = k + 1;
  }
  run.converged = std::sqrt(rr) <= target;
  return run;
}

double true_relative_residual(const QOperator& q,
                              std::span<const std::size_t> set,
                              std::span<const double> rhs, const Vector& x) {
  const Vector ax = q.sub_apply(set, set, x);
  double rr = 0.0;
  for (std::size_t i = 0; i < ax.size(); ++i)
    rr += (ax[i] - rhs[i]) * (ax[i] - rhs[i]);
  return std::sqrt(rr) /
         std::max(norm(rhs), std::numeric_limits<double>::epsilon());
}

}  // namespace

LinSolveResult cg_solve(const QOperator& q, std::span<const std::size_t> set,
                        std::span<const double> rhs, double tol,
                        std::size_t max_iter) {
  if (rhs.size() != set.size())
    throw Error("cg_solve: rhs length " + std::to_string(rhs.size()) +
                " does not match |M| = " + std::to_string(set.size()));
  const std::size_t m = set.size();
  if (m == 0) return {Vector{}, 0.0, true, false, 0};
  if (max_iter == 0) max_iter = 10 * m;

  CgRun plain = run_cg(q, set, rhs, 0.0, tol, max_iter);
  LinSolveResult res{plain.x, true_relative_residual(q, set, rhs, plain.x),
                     false, false, plain.iterations};
  if (plain.converged && res.relative_residual <= tol) {
    res.converged = true;
    return res;
  }

  double trace = 0.0;
  for (std::size_t i : set) trace += q.diag(i);
  const double delta = 1e-12 * (trace / static_cast<double>(m)) *
                       std::max<double>(1.0, static_cast<double>(m));
  CgRun ridge = run_cg(q, set, rhs, delta, tol, max_iter);
  LinSolveResult reg{ridge.x, true_relative_residual(q, set, rhs, ridge.x),
                     ridge.converged, true, plain.iterations + ridge.iterations};
  if (reg.converged) return reg;
  LinSolveResult& best =
      reg.relative_residual < res.relative_residual ? reg : res;
  throw LinSolveError("cg_solve: no convergence on |M| = " + std::to_string(m) +
                          " (relative residual " +
                          std::to_string(best.relative_residual) + ")",
                      best);
}

}  // namespace qpath
