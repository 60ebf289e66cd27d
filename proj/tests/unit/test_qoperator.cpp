#include <doctest.h>

#include <random>

#include "qpath/error.hpp"
#include "qpath/qoperator.hpp"
#include "support/dense_oracle.hpp"
#include "support/random_data.hpp"

using namespace qpath;

namespace {

Vector random_vector(std::size_t n, std::mt19937_64& rng) {
  std::normal_distribution<double> g;
  Vector v(n);
  for (double& x : v) x = g(rng);
  return v;
}

Eigen::VectorXd as_eigen(const Vector& v) {
  return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

}  // namespace

TEST_SUITE("qoperator") {
  TEST_CASE("one instance") {
    const Dataset ds(std::vector<SparseRow>{{{0, 1.0}}}, {1}, 2);
    const QOperator q(ds);
    CHECK(q.apply(Vector{3.0}) == Vector{3.0});
    CHECK(q.sub_apply(IndexList{0}, IndexList{0}, Vector{2.0}) == Vector{2.0});
    CHECK(q.diag(0) == 1.0);
  }

  TEST_CASE("two opposite labels on the same point") {
    const Dataset ds(std::vector<SparseRow>{{{0, 1.0}}, {{0, 1.0}}}, {1, -1}, 1);
    const QOperator q(ds);
    CHECK(q.apply(Vector{1.0, 1.0}) == Vector{0.0, 0.0});
    CHECK(q.block_ones_sum(0, IndexList{1}) == -1.0);
    CHECK(q.block_ones_sum(0, IndexList{}) == 0.0);
  }

  TEST_CASE("empty index sets") {
    const Dataset ds = testing::random_dataset(5, 2, 1);
    const QOperator q(ds);
    CHECK(q.sub_apply(IndexList{}, IndexList{0, 1}, Vector{1.0, 2.0}).empty());
    CHECK(q.sub_apply(IndexList{0, 3}, IndexList{}, Vector{}) == Vector{0.0, 0.0});
  }

  TEST_CASE("length and index errors") {
    const Dataset ds = testing::random_dataset(4, 2, 1);
    const QOperator q(ds);
    CHECK_THROWS_AS(q.apply(Vector{1.0}), Error);
    CHECK_THROWS_AS(q.sub_apply(IndexList{0}, IndexList{1, 2}, Vector{1.0}), Error);
    CHECK_THROWS_AS(q.block_ones_sum(4, IndexList{0}), Error);
    CHECK_THROWS_AS(q.block_ones_sum(0, IndexList{9}), Error);
  }

  TEST_CASE("products match the dense matrix") {
    std::mt19937_64 rng(11);
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
      const Dataset ds = testing::random_dataset(6 + seed, 3, seed, {.density = 0.6});
      const QOperator q(ds);
      const Eigen::MatrixXd dense = testing::dense_q(ds);
      const Vector v = random_vector(ds.n(), rng);
      const Eigen::VectorXd expect = dense * as_eigen(v);
      const Vector got = q.apply(v);
      for (std::size_t i = 0; i < ds.n(); ++i) {
        CHECK(got[i] == doctest::Approx(expect(static_cast<Eigen::Index>(i))).epsilon(1e-12));
        CHECK(q.diag(i) == doctest::Approx(dense(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(i))));
      }

      const IndexList rows{0, 2, 3};
      const IndexList cols{1, 2, 5};
      const Vector vc{0.5, -1.0, 2.0};
      const Vector sub = q.sub_apply(rows, cols, vc);
      for (std::size_t r = 0; r < rows.size(); ++r) {
        double e = 0.0;
        for (std::size_t c = 0; c < cols.size(); ++c)
          e += dense(static_cast<Eigen::Index>(rows[r]), static_cast<Eigen::Index>(cols[c])) * vc[c];
        CHECK(sub[r] == doctest::Approx(e).epsilon(1e-12));
        double s = 0.0;
        for (std::size_t c : cols) s += dense(static_cast<Eigen::Index>(rows[r]), static_cast<Eigen::Index>(c));
        CHECK(q.block_ones_sum(rows[r], cols) == doctest::Approx(s).epsilon(1e-12));
      }
    }
  }

  TEST_CASE("symmetry, positive semidefiniteness and restriction") {
    std::mt19937_64 rng(5);
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
      const Dataset ds = testing::random_dataset(12, 4, seed, {.density = 0.7});
      const QOperator q(ds);
      const Vector u = random_vector(ds.n(), rng);
      const Vector v = random_vector(ds.n(), rng);
      const Vector qu = q.apply(u);
      const Vector qv = q.apply(v);
      double uqv = 0.0, vqu = 0.0, vqv = 0.0, vv = 0.0;
      for (std::size_t i = 0; i < ds.n(); ++i) {
        uqv += u[i] * qv[i];
        vqu += v[i] * qu[i];
        vqv += v[i] * qv[i];
        vv += v[i] * v[i];
      }
      CHECK(std::abs(uqv - vqu) <= 1e-10 * std::max(1.0, std::abs(uqv)));
      CHECK(vqv >= -1e-12 * vv);

      IndexList all(ds.n());
      for (std::size_t i = 0; i < ds.n(); ++i) all[i] = i;
      const IndexList rows{1, 4, 7};
      const Vector sub = q.sub_apply(rows, all, v);
      for (std::size_t r = 0; r < rows.size(); ++r)
        CHECK(sub[r] == doctest::Approx(qv[rows[r]]).epsilon(1e-12));
    }
  }

  TEST_CASE("signed combination and dot") {
    const Dataset ds = testing::random_dataset(7, 3, 4);
    const QOperator q(ds);
    const Vector v{1, 2, 3, 4, 5, 6, 7};
    const Vector u = q.signed_combination(v);
    const Vector qv = q.apply(v);
    for (std::size_t i = 0; i < ds.n(); ++i)
      CHECK(q.signed_dot(i, u) == doctest::Approx(qv[i]).epsilon(1e-12));
  }
}
