#include <doctest.h>

#include <sstream>

#include "qpath/dataset.hpp"
#include "qpath/error.hpp"
#include "support/random_data.hpp"

using namespace qpath;

TEST_SUITE("dataset") {
  TEST_CASE("parse two rows with 1-based indices") {
    const Dataset ds = parse_libsvm("+1 1:0.5 3:-2.0\n-1 2:1.0");
    CHECK(ds.n() == 2);
    CHECK(ds.d() == 3);
    CHECK(ds.row(0) == SparseRow{{0, 0.5}, {2, -2.0}});
    CHECK(ds.row(1) == SparseRow{{1, 1.0}});
    CHECK(ds.labels() == std::vector<int>{1, -1});
    CHECK_FALSE(ds.bias_augmented());
  }

  TEST_CASE("empty input is rejected") {
    CHECK_THROWS_AS(parse_libsvm(""), ParseError);
    CHECK_THROWS_AS(parse_libsvm("# only a comment\n\n"), ParseError);
  }

  TEST_CASE("non-ascending indices report the line") {
    try {
      parse_libsvm("+1 3:1 1:1");
      FAIL("expected ParseError");
    } catch (const ParseError& e) {
      CHECK(e.line() == 1);
    }
    try {
      parse_libsvm("+1 1:1\n-1 2:1 2:3\n");
      FAIL("expected ParseError");
    } catch (const ParseError& e) {
      CHECK(e.line() == 2);
    }
  }

  TEST_CASE("malformed tokens") {
    CHECK_THROWS_AS(parse_libsvm("1:0.5\n"), ParseError);
    CHECK_THROWS_AS(parse_libsvm("abc 1:0.5\n"), ParseError);
    CHECK_THROWS_AS(parse_libsvm("+1 1:x\n"), ParseError);
    CHECK_THROWS_AS(parse_libsvm("+1 0:1\n"), ParseError);
    CHECK_THROWS_AS(parse_libsvm("+1 1-1\n"), ParseError);
  }

  TEST_CASE("label normalization, comments and CRLF") {
    const Dataset ds = parse_libsvm("1 1:1 # trailing\r\n0 1:2\r\n\r\n-1 2:3\n2.5 1:4\n");
    CHECK(ds.labels() == std::vector<int>{1, -1, -1, 1});
    CHECK(ds.d() == 2);
  }

  TEST_CASE("instance with no features") {
    const Dataset ds = parse_libsvm("+1\n-1 2:1\n");
    CHECK(ds.row(0).empty());
    CHECK(ds.d() == 2);
  }

  TEST_CASE("constructor enforces invariants") {
    CHECK_THROWS_AS(Dataset({}, {}, 1), Error);
    CHECK_THROWS_AS(Dataset({{{0, 1.0}}}, {0}, 1), Error);
    CHECK_THROWS_AS(Dataset({{{1, 1.0}}}, {1}, 1), Error);
    CHECK_THROWS_AS(Dataset({{{0, 1.0}, {0, 2.0}}}, {1}, 2), Error);
    CHECK_THROWS_AS(Dataset({{{0, 1.0}}}, {1}, 2, true), Error);
  }

  TEST_CASE("augment_bias appends a constant column") {
    const Dataset ds(std::vector<SparseRow>{{{0, 0.5}}}, {1}, 1);
    const Dataset aug = augment_bias(ds);
    CHECK(aug.d() == 2);
    CHECK(aug.bias_augmented());
    CHECK(aug.row(0) == SparseRow{{0, 0.5}, {1, 1.0}});
  }

  TEST_CASE("augment_bias on an empty row") {
    const Dataset ds(std::vector<SparseRow>{{}}, {-1}, 2);
    const Dataset aug = augment_bias(ds);
    CHECK(aug.d() == 3);
    CHECK(aug.row(0) == SparseRow{{2, 1.0}});
  }

  TEST_CASE("augmenting twice is an error") {
    const Dataset aug = augment_bias(parse_libsvm("+1 1:1\n"));
    CHECK_THROWS_AS(augment_bias(aug), Error);
  }

  TEST_CASE("augment_bias preserves n and existing coordinates") {
    const Dataset ds = testing::random_dataset(25, 4, 3, {.density = 0.6});
    const Dataset aug = augment_bias(ds);
    REQUIRE(aug.n() == ds.n());
    for (std::size_t i = 0; i < ds.n(); ++i) {
      SparseRow head(aug.row(i).begin(), aug.row(i).end() - 1);
      CHECK(head == ds.row(i));
      CHECK(aug.row(i).back() == Feature{4, 1.0});
      CHECK(aug.label(i) == ds.label(i));
    }
  }

  TEST_CASE("parse, write, parse round-trips") {
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
      const Dataset ds = testing::random_dataset(30, 6, seed, {.density = 0.5});
      const Dataset back = parse_libsvm(to_libsvm(ds));
      // The file format cannot carry trailing all-zero columns.
      CHECK(back.n() == ds.n());
      CHECK(back.rows() == ds.rows());
      CHECK(back.labels() == ds.labels());
      CHECK(back.d() <= ds.d());
      CHECK(to_libsvm(back) == to_libsvm(ds));
    }
  }

  TEST_CASE("widen keeps the rows and grows d") {
    const Dataset ds = parse_libsvm("+1 1:1\n");
    const Dataset wide = widen(ds, 4);
    CHECK(wide.d() == 4);
    CHECK(wide.rows() == ds.rows());
    CHECK_THROWS_AS(widen(ds, 0), Error);
    CHECK_THROWS_AS(widen(augment_bias(ds), 5), Error);
  }

  TEST_CASE("fingerprint ignores formatting but not content") {
    const Dataset a = parse_libsvm("+1 1:0.5 3:2\n-1 2:1\n");
    const Dataset b = parse_libsvm("1   1:5e-1  3:2.000\r\n\n# c\n-3 2:1.0\n");
    const Dataset c = parse_libsvm("+1 1:0.5 3:2\n+1 2:1\n");
    CHECK(fingerprint(a) == fingerprint(b));
    CHECK(fingerprint(a) != fingerprint(c));
    CHECK(fingerprint(a).size() == 64);
    CHECK(fingerprint(a) != fingerprint(augment_bias(a)));
  }

  TEST_CASE("dot against a dense vector") {
    const SparseRow row{{0, 2.0}, {2, -1.0}};
    const std::vector<double> w{1.0, 5.0, 3.0};
    CHECK(dot(row, w) == doctest::Approx(-1.0));
  }

  TEST_CASE("class counts") {
    const Dataset ds = parse_libsvm("+1 1:1\n-1 1:1\n+1 1:2\n");
    CHECK(ds.positives() == 2);
    CHECK(ds.negatives() == 1);
  }
}
