#include <doctest.h>

#include <cmath>

#include "qpath/evaluate.hpp"
#include "qpath/path.hpp"
#include "qpath/recover.hpp"
#include "support/dense_oracle.hpp"
#include "support/random_data.hpp"

using namespace qpath;

namespace {

Dataset one_point() { return Dataset(std::vector<SparseRow>{{{0, 1.0}}}, {1}, 1); }

}  // namespace

TEST_SUITE("recover") {
  TEST_CASE("one-point path values") {
    const KinkPath path = trace_path(one_point(), 1.0);
    CHECK(alpha_at(path, 0.25)[0] == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(alpha_at(path, 0.75)[0] == doctest::Approx(0.5).epsilon(1e-15));
    const PrimalModel m = primal_at(path, one_point(), 0.25);
    CHECK(m.w.size() == 1);
    CHECK(m.w[0] == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(m.tau == 0.25);
    CHECK(m.lambda == 1.0);
  }

  TEST_CASE("querying a kink returns its stored values") {
    const Dataset ds = augment_bias(testing::random_dataset(30, 3, 5));
    const KinkPath path = trace_path(ds, 0.01);
    const PathRecovery rec(path);
    for (std::size_t k = 0; k < path.kinks.size(); ++k) {
      const Kink& kink = path.kinks[k];
      CHECK(rec.segment_of(kink.tau) == k);
      const Vector a = rec.alpha_at(kink.tau);
      const std::vector<Membership> member = rec.membership_at_kink(k);
      std::size_t m = 0;
      for (std::size_t i = 0; i < ds.n(); ++i)
        if (member[i] == Membership::M) CHECK(a[i] == kink.alpha_M[m++]);
    }
  }

  TEST_CASE("zero alpha gives zero weights") {
    const Dataset ds = testing::random_dataset(6, 3, 1);
    const Vector w = primal_weights(ds, Vector(6, 0.0), 0.5);
    for (double v : w) CHECK(v == 0.0);
  }

  TEST_CASE("primal weights match the dense formula") {
    const Dataset ds = testing::random_dataset(12, 4, 2, {.density = 0.5});
    Vector a(12);
    for (std::size_t i = 0; i < 12; ++i) a[i] = 0.01 * static_cast<double>(i * i);
    const Vector w = primal_weights(ds, a, 0.2);
    const Eigen::VectorXd e =
        testing::dense_primal(ds, Eigen::Map<Eigen::VectorXd>(a.data(), 12), 0.2);
    for (std::size_t j = 0; j < ds.d(); ++j)
      CHECK(w[j] == doctest::Approx(e(static_cast<Eigen::Index>(j))).epsilon(1e-12));
  }

  TEST_CASE("recovered weights match the dense oracle") {
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
      const Dataset ds = augment_bias(testing::random_dataset(20, 3, 70 + seed));
      const KinkPath path = trace_path(ds, 0.01);
      const PathRecovery rec(path);
      const testing::DenseBoxQP oracle(ds, 0.01);
      for (int k = 0; k <= 20; ++k) {
        const double tau = k / 20.0;
        const testing::OracleSolution o = oracle.solve(tau);
        REQUIRE(o.converged);
        const Vector w = rec.primal_at(ds, tau).w;
        const Eigen::VectorXd e = testing::dense_primal(ds, o.alpha, 0.01);
        for (std::size_t j = 0; j < ds.d(); ++j)
          CHECK(std::abs(w[j] - e(static_cast<Eigen::Index>(j))) <= 1e-5);
      }
    }
  }

  TEST_CASE("errors") {
    const KinkPath path = trace_path(one_point(), 1.0);
    CHECK_THROWS_AS(alpha_at(path, 1.5), Error);
    CHECK_THROWS_AS(alpha_at(path, -0.1), Error);
    KinkPath partial = path;
    partial.complete = false;
    CHECK_THROWS_AS(PathRecovery{partial}, Error);
    const Dataset other = testing::random_dataset(3, 1, 0);
    CHECK_THROWS_AS(primal_at(path, other, 0.5), Error);
    CHECK_THROWS_AS(PathRecovery(path).alpha_on_segment(7, 0.5), Error);
  }

  TEST_CASE("segment lookup is closed at 1") {
    const KinkPath path = trace_path(one_point(), 1.0);
    const PathRecovery rec(path);
    CHECK(rec.segment_of(0.0) == 0);
    CHECK(rec.segment_of(0.4999) == 0);
    CHECK(rec.segment_of(0.5) == 1);
    CHECK(rec.segment_of(1.0) == 1);
  }

  TEST_CASE("predict with ties going to +1") {
    const PrimalModel m{Vector{1.0}, 0.5, 1.0};
    CHECK(predict(m, SparseRow{{0, 2.0}}) == 1);
    CHECK(predict(m, SparseRow{{0, -2.0}}) == -1);
    CHECK(predict(m, SparseRow{{0, 0.0}}) == 1);
    CHECK(predict(m, SparseRow{}) == 1);
    CHECK_THROWS_AS(predict(m, SparseRow{{3, 1.0}}), Error);
  }

  TEST_CASE("recovered alpha is feasible and continuous") {
    const Dataset ds = augment_bias(testing::random_dataset(40, 4, 12));
    const KinkPath path = trace_path(ds, 1e-3);
    const PathRecovery rec(path);
    const CostSchedule sched(ds.n(), 1e-3);
    for (int k = 0; k <= 1000; ++k) {
      const double tau = k / 1000.0;
      const Vector a = rec.alpha_at(tau);
      const Vector upper = sched.upper_bounds(ds.labels(), tau);
      for (std::size_t i = 0; i < ds.n(); ++i) {
        CHECK(a[i] >= 0.0);
        CHECK(a[i] <= upper[i] + 1e-10);
      }
    }
    for (std::size_t k = 1; k < path.kinks.size(); ++k) {
      const double t = path.kinks[k].tau;
      const Vector left = rec.alpha_at(std::max(0.0, t - 1e-12));
      const Vector right = rec.alpha_at(std::min(1.0, t + 1e-12));
      for (std::size_t i = 0; i < ds.n(); ++i) CHECK(std::abs(left[i] - right[i]) <= 1e-9);
    }
  }
}
