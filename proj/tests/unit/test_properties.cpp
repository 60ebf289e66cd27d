#include <doctest.h>

#include <cmath>
#include <random>

#include "qpath/evaluate.hpp"
#include "qpath/path.hpp"
#include "qpath/recover.hpp"
#include "qpath/solver.hpp"
#include "support/dense_oracle.hpp"
#include "support/random_data.hpp"

using namespace qpath;

namespace {

struct Config {
  std::size_t n;
  std::size_t d;
  double lambda;
  bool bias;
  testing::RandomDataOptions data;
};

std::vector<std::pair<Config, std::uint64_t>> configs() {
  std::vector<std::pair<Config, std::uint64_t>> out;
  std::mt19937_64 rng(99);
  const double lambdas[] = {1.0, 1e-1, 1e-2, 1e-3, 1e-4};
  for (std::uint64_t seed = 0; seed < 30; ++seed) {
    Config c;
    c.n = std::uniform_int_distribution<std::size_t>(8, 45)(rng);
    c.d = std::uniform_int_distribution<std::size_t>(1, 6)(rng);
    c.lambda = lambdas[seed % 5];
    c.bias = seed % 3 != 0;
    c.data.density = seed % 4 == 1 ? 0.5 : 1.0;
    c.data.integer_values = seed % 5 == 2;
    c.data.duplicate_half = seed % 7 == 3;
    out.emplace_back(c, 500 + seed);
  }
  return out;
}

Dataset make(const Config& c, std::uint64_t seed) {
  Dataset raw = testing::random_dataset(c.n, c.d, seed, c.data);
  return c.bias ? augment_bias(raw) : raw;
}

}  // namespace

TEST_SUITE("properties") {
  TEST_CASE("path agrees with the dense oracle on mixed configurations") {
    for (const auto& [c, seed] : configs()) {
      CAPTURE(seed);
      const Dataset ds = make(c, seed);
      const KinkPath path = trace_path(ds, c.lambda);
      REQUIRE(path.complete);
      const PathRecovery rec(path);
      const testing::DenseBoxQP oracle(ds, c.lambda);
      Eigen::VectorXd warm;
      for (int k = 0; k <= 50; ++k) {
        const double tau = k / 50.0;
        const testing::OracleSolution o = oracle.solve(tau, warm.size() ? &warm : nullptr);
        warm = o.alpha;
        REQUIRE(o.converged);
        const Vector a = rec.alpha_at(tau);
        const double d = oracle.objective(Eigen::Map<const Eigen::VectorXd>(a.data(), static_cast<Eigen::Index>(a.size())));
        CHECK(std::abs(d - o.objective) <= 1e-7 * std::abs(o.objective));
        const Vector w = rec.primal_at(ds, tau).w;
        const Eigen::VectorXd e = testing::dense_primal(ds, o.alpha, c.lambda);
        for (std::size_t j = 0; j < ds.d(); ++j) CHECK(std::abs(w[j] - e(static_cast<Eigen::Index>(j))) <= 1e-5);
      }
    }
  }

  TEST_CASE("KKT at kinks, feasibility and continuity") {
    for (const auto& [c, seed] : configs()) {
      CAPTURE(seed);
      const Dataset ds = make(c, seed);
      const KinkPath path = trace_path(ds, c.lambda);
      const PathRecovery rec(path);
      const QOperator q(ds);
      const CostSchedule sched(ds.n(), c.lambda);
      for (std::size_t k = 0; k < path.kinks.size(); ++k) {
        const double t = path.kinks[k].tau;
        CHECK(kkt_check(q, sched, t, rec.alpha_at(t), 1e-6).passed);
        if (k > 0) {
          const Vector left = rec.alpha_on_segment(k - 1, t);
          const Vector right = rec.alpha_on_segment(k, t);
          for (std::size_t i = 0; i < ds.n(); ++i) CHECK(std::abs(left[i] - right[i]) <= 1e-9);
        }
      }
      std::mt19937_64 rng(seed);
      std::uniform_real_distribution<double> unit(0.0, 1.0);
      for (int r = 0; r < 200; ++r) {
        const double tau = unit(rng);
        const Vector a = rec.alpha_at(tau);
        const Vector upper = sched.upper_bounds(ds.labels(), tau);
        for (std::size_t i = 0; i < ds.n(); ++i) {
          CHECK(a[i] >= 0.0);
          CHECK(a[i] <= upper[i] + 1e-10);
        }
      }
    }
  }

  TEST_CASE("random feasible perturbations do not lower the dual objective") {
    for (const auto& [c, seed] : configs()) {
      CAPTURE(seed);
      const Dataset ds = make(c, seed);
      const KinkPath path = trace_path(ds, c.lambda);
      const PathRecovery rec(path);
      const QOperator q(ds);
      const CostSchedule sched(ds.n(), c.lambda);
      std::mt19937_64 rng(seed + 1);
      std::uniform_real_distribution<double> unit(-1.0, 1.0);
      for (double tau : tau_grid(11)) {
        const Vector a = rec.alpha_at(tau);
        const Vector upper = sched.upper_bounds(ds.labels(), tau);
        const double base = dual_objective(q, c.lambda, a);
        for (int trial = 0; trial < 10; ++trial) {
          Vector b = a;
          for (std::size_t i = 0; i < ds.n(); ++i)
            b[i] = std::clamp(a[i] + 0.05 * upper[i] * unit(rng), 0.0, upper[i]);
          CHECK(dual_objective(q, c.lambda, b) >= base - 1e-12 * (1.0 + std::abs(base)));
        }
      }
    }
  }

  TEST_CASE("box QP objective never increases with more iterations") {
    const Dataset ds = augment_bias(testing::random_dataset(40, 4, 8));
    const QOperator q(ds);
    const CostSchedule sched(ds.n(), 1e-3);
    const Vector upper = sched.upper_bounds(ds.labels(), 0.3);
    double last = 0.0;
    for (std::size_t iters = 1; iters <= 40; ++iters) {
      double obj;
      try {
        obj = solve_box_qp(q, 1e-3, upper, 1e-14, iters).objective;
      } catch (const BoxQPError& e) {
        obj = e.best().objective;
      }
      CHECK(obj <= last + 1e-15);
      last = obj;
    }
  }

  TEST_CASE("kink count stays below the event budget") {
    for (std::size_t n : {50u, 100u, 200u}) {
      const Dataset ds = augment_bias(testing::random_dataset(n, 4, n));
      const KinkPath path = trace_path(ds, 1e-2);
      CHECK(path.kinks.size() <= event_budget(n));
      CHECK(path.events <= event_budget(n));
    }
  }

  TEST_CASE("conditional-risk minimizer is sign(eta - tau) away from ties") {
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    for (int trial = 0; trial < 500; ++trial) {
      const double eta = unit(rng);
      const double tau = unit(rng);
      if (std::abs(eta - tau) < 0.05) continue;
      double best = 1e300, arg = 0.0;
      for (int k = -400; k <= 400; ++k) {
        const double f = k / 200.0;
        const double r = conditional_risk(eta, tau, f);
        if (r < best) {
          best = r;
          arg = f;
        }
      }
      CHECK(arg == (eta > tau ? 1.0 : -1.0));
    }
  }
}
