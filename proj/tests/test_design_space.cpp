#include <doctest.h>

#include <algorithm>
#include <map>
#include <set>

#include "mixedgp/design_space.hpp"
#include "mixedgp/pls.hpp"

using namespace mixedgp;

namespace {

DesignSpace unit_interval_space() {
  return DesignSpace({VariableSpec{"x", ContinuousVar{0.0, 1.0}}});
}

DesignSpace cosine_space() {
  std::vector<std::string> levels;
  for (int i = 1; i <= 13; ++i) levels.push_back(std::to_string(i));
  return DesignSpace({VariableSpec{"x", ContinuousVar{0.0, 1.0}},
                      VariableSpec{"c", CategoricalVar{levels}}});
}

// Pair-list based encoder used as an order-independent oracle: 1 wherever
// the pair contains the level.
std::vector<int> encode_with_pairs(const std::vector<std::pair<int, int>>& pairs, int level) {
  std::vector<int> out(pairs.size(), 0);
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    if (pairs[i].first == level || pairs[i].second == level) out[i] = 1;
  }
  return out;
}

}  // namespace

TEST_CASE("design space invariants") {
  CHECK_THROWS_AS(DesignSpace({}), std::invalid_argument);
  CHECK_THROWS_AS(DesignSpace({VariableSpec{"x", ContinuousVar{1.0, 0.0}}}),
                  std::invalid_argument);
  CHECK_THROWS_AS(DesignSpace({VariableSpec{"c", CategoricalVar{{"only"}}}}),
                  std::invalid_argument);
  CHECK_THROWS_AS(DesignSpace({VariableSpec{"c", CategoricalVar{{"a", "a"}}}}),
                  std::invalid_argument);
  CHECK_THROWS_AS(DesignSpace({VariableSpec{"x", ContinuousVar{0, 1}},
                               VariableSpec{"x", ContinuousVar{0, 1}}}),
                  std::invalid_argument);

  const DesignSpace space = cosine_space();
  CHECK(space.num_continuous() == 1);
  CHECK(space.num_categorical() == 1);
  CHECK(space.level_count(0) == 13);
  CHECK(space.relaxed_dimension() == 14);  // 1 continuous + 13 one-hot
  CHECK(space.find_variable("c") == 1);
  CHECK(space.find_variable("nope") == -1);
}

TEST_CASE("validate_point accepts interior points and rejects violations") {
  const DesignSpace space = unit_interval_space();
  CHECK_NOTHROW(validate_point(space, MixedPoint{{0.5}, {}, {}}));
  CHECK_THROWS_AS(validate_point(space, MixedPoint{{1.5}, {}, {}}), std::invalid_argument);

  const DesignSpace cspace = cosine_space();
  CHECK_THROWS_AS(validate_point(cspace, MixedPoint{{0.5}, {}, {14}}), std::invalid_argument);
  CHECK_THROWS_AS(validate_point(cspace, MixedPoint{{0.5}, {}, {0}}), std::invalid_argument);
  CHECK_THROWS_AS(validate_point(cspace, MixedPoint{{0.5}, {}, {}}), std::invalid_argument);
}

TEST_CASE("lhs_sample stratifies each continuous axis") {
  const DesignSpace space = unit_interval_space();
  const Doe doe = lhs_sample(space, 5, 42);
  REQUIRE(doe.size() == 5);
  std::vector<double> xs;
  for (const auto& w : doe.points) xs.push_back(w.x[0]);
  std::sort(xs.begin(), xs.end());
  for (int j = 0; j < 5; ++j) {
    CHECK(xs[j] >= j / 5.0);
    CHECK(xs[j] < (j + 1) / 5.0);
  }
}

TEST_CASE("lhs_sample is deterministic and valid on the cosine space") {
  const DesignSpace space = cosine_space();
  const Doe a = lhs_sample(space, 98, 7);
  const Doe b = lhs_sample(space, 98, 7);
  REQUIRE(a.size() == 98);
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK_NOTHROW(validate_point(space, a.points[i]));
    CHECK(a.points[i].x == b.points[i].x);
    CHECK(a.points[i].c == b.points[i].c);
  }
  const Doe c = lhs_sample(space, 98, 8);
  bool any_diff = false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a.points[i].x != c.points[i].x) any_diff = true;
  }
  CHECK(any_diff);
}

TEST_CASE("lhs_sample bins integer and categorical axes uniformly") {
  std::vector<std::string> levels;
  for (int i = 1; i <= 13; ++i) levels.push_back(std::to_string(i));
  const DesignSpace space({VariableSpec{"c", CategoricalVar{levels}},
                           VariableSpec{"z", IntegerVar{-2, 2}}});
  // n_t a multiple of the level counts makes the stratified binning exact.
  const Doe doe = lhs_sample(space, 65, 3);
  std::map<int, int> level_counts;
  std::map<std::int64_t, int> int_counts;
  for (const auto& w : doe.points) {
    level_counts[w.c[0]]++;
    int_counts[w.z[0]]++;
  }
  for (int l = 1; l <= 13; ++l) CHECK(level_counts[l] == 5);
  for (std::int64_t z = -2; z <= 2; ++z) CHECK(int_counts[z] == 13);
}

TEST_CASE("one_hot_relax lays out x, z and level basis vectors") {
  {
    const DesignSpace space({VariableSpec{"x", ContinuousVar{0, 1}},
                             VariableSpec{"c", CategoricalVar{{"a", "b", "c"}}}});
    CHECK(one_hot_relax(space, MixedPoint{{0.3}, {}, {2}}) ==
          std::vector<double>{0.3, 0, 1, 0});
  }
  {
    const DesignSpace space({VariableSpec{"c", CategoricalVar{{"a", "b"}}}});
    CHECK(one_hot_relax(space, MixedPoint{{}, {}, {1}}) == std::vector<double>{1, 0});
  }
  {
    const DesignSpace space({VariableSpec{"x", ContinuousVar{0, 1}},
                             VariableSpec{"z", IntegerVar{0, 10}},
                             VariableSpec{"c", CategoricalVar{{"a", "b", "c"}}}});
    CHECK(one_hot_relax(space, MixedPoint{{0.0}, {4}, {3}}) ==
          std::vector<double>{0, 4, 0, 0, 1});
    CHECK_THROWS_AS(one_hot_relax(space, MixedPoint{{2.0}, {4}, {3}}), std::invalid_argument);
  }
}

TEST_CASE("one_hot_relax categorical blocks sum to one") {
  const DesignSpace space({VariableSpec{"x", ContinuousVar{0, 1}},
                           VariableSpec{"c1", CategoricalVar{{"a", "b", "c", "d"}}},
                           VariableSpec{"c2", CategoricalVar{{"p", "q", "r"}}}});
  for (int l1 = 1; l1 <= 4; ++l1) {
    for (int l2 = 1; l2 <= 3; ++l2) {
      const auto relaxed = one_hot_relax(space, MixedPoint{{0.5}, {}, {l1, l2}});
      double block1 = 0, block2 = 0;
      for (int j = 1; j <= 4; ++j) block1 += relaxed[j];
      for (int j = 5; j <= 7; ++j) block2 += relaxed[j];
      CHECK(block1 == 1.0);
      CHECK(block2 == 1.0);
    }
  }
}

TEST_CASE("zeta_encode marks the pairs containing the level") {
  // Canonical lexicographic order, L=4, level 3: pairs (1,2)(1,3)(1,4)(2,3)(2,4)(3,4).
  CHECK(zeta_encode(4, 3) == std::vector<int>{0, 1, 0, 1, 0, 1});
  CHECK(zeta_encode(2, 1) == std::vector<int>{1});
  CHECK_THROWS_AS(zeta_encode(4, 5), std::invalid_argument);
  CHECK_THROWS_AS(zeta_encode(4, 0), std::invalid_argument);

  for (int L = 2; L <= 13; ++L) {
    for (int level = 1; level <= L; ++level) {
      const auto enc = zeta_encode(L, level);
      CHECK(static_cast<int>(enc.size()) == L * (L - 1) / 2);
      int ones = 0;
      for (int v : enc) ones += v;
      CHECK(ones == L - 1);
    }
  }
}

TEST_CASE("any fixed pair ordering yields the same membership structure") {
  // Levels (green, red, blue, yellow) = (1, 2, 3, 4) and the pair order
  // blue-red, blue-green, blue-yellow, red-green, red-yellow, green-yellow.
  const std::vector<std::pair<int, int>> pairs = {{3, 2}, {3, 1}, {3, 4}, {2, 1}, {2, 4}, {1, 4}};
  const auto blue = encode_with_pairs(pairs, 3);
  const auto red = encode_with_pairs(pairs, 2);
  CHECK(blue == std::vector<int>{1, 1, 1, 0, 0, 0});
  CHECK(red == std::vector<int>{1, 0, 0, 1, 1, 0});
  CHECK(zeta_hadamard(blue, red) == std::vector<int>{1, 0, 0, 0, 0, 0});
}

TEST_CASE("zeta_hadamard is one-hot at the shared pair for distinct levels") {
  {
    const auto a = zeta_encode(3, 1);
    const auto b = zeta_encode(3, 2);
    std::vector<int> expected(3, 0);
    expected[psi_index(1, 2, 3) - 1] = 1;
    CHECK(zeta_hadamard(a, b) == expected);
  }
  CHECK(zeta_hadamard(zeta_encode(5, 4), zeta_encode(5, 4)) == zeta_encode(5, 4));
  CHECK_THROWS_AS(zeta_hadamard(zeta_encode(3, 1), zeta_encode(4, 1)), std::invalid_argument);

  for (int L = 2; L <= 13; ++L) {
    for (int a = 1; a <= L; ++a) {
      for (int b = a + 1; b <= L; ++b) {
        const auto prod = zeta_hadamard(zeta_encode(L, a), zeta_encode(L, b));
        int ones = 0;
        for (int v : prod) ones += v;
        CHECK(ones == 1);
        CHECK(prod[psi_index(a, b, L) - 1] == 1);
      }
    }
  }
}

TEST_CASE("validation_grid sizes for the benchmark spaces") {
  const DesignSpace cosine = cosine_space();
  CHECK(validation_grid(cosine, 1000).size() == 13000);

  std::vector<std::string> sections;
  for (int i = 1; i <= 12; ++i) sections.push_back(std::to_string(i));
  const DesignSpace beam({VariableSpec{"section", CategoricalVar{sections}},
                          VariableSpec{"L", ContinuousVar{10, 20}},
                          VariableSpec{"S", ContinuousVar{1, 2}}});
  CHECK(validation_grid(beam, 30).size() == 10800);

  const Doe endpoints = validation_grid(unit_interval_space(), 2);
  REQUIRE(endpoints.size() == 2);
  CHECK(endpoints.points[0].x[0] == 0.0);
  CHECK(endpoints.points[1].x[0] == 1.0);

  CHECK_THROWS_AS(validation_grid(cosine, 1000, 5000), std::invalid_argument);
  CHECK_THROWS_AS(validation_grid(cosine, 1), std::invalid_argument);
}
