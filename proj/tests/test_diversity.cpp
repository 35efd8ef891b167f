#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>

#include "oracles.hpp"
#include "vqsel/diversity.hpp"
#include "vqsel/rng.hpp"

using namespace vqsel;

namespace {

FeatureMatrix mat(std::vector<std::vector<float>> rows) {
  FeatureMatrix m(rows.size(), rows[0].size());
  for (std::size_t r = 0; r < rows.size(); ++r) {
    for (std::size_t c = 0; c < rows[r].size(); ++c) m.at(r, c) = rows[r][c];
  }
  return m;
}

FeatureMatrix random_mat(Prng& rng, std::size_t t, std::size_t d) {
  FeatureMatrix m(t, d);
  for (auto& v : m.data()) v = float(rng.uniform(-3, 3));
  return m;
}

}  // namespace

TEST_CASE("chamfer: identical sets give zero") {
  Prng rng(4);
  for (int i = 0; i < 10; ++i) {
    FeatureMatrix m = random_mat(rng, 1 + rng.uniform_index(8), 1 + rng.uniform_index(5));
    CHECK(chamfer_distance(m, m) == 0.0);
  }
}

TEST_CASE("chamfer: hand-evaluated single and two point cases") {
  // single points (0,0) and (3,4): squared distance 25, both directions -> 50
  CHECK(chamfer_distance(mat({{0, 0}}), mat({{3, 4}})) == doctest::Approx(50.0).epsilon(1e-12));

  // {(0,0), (1,0)} vs {(0,0)}: forward (0 + 1)/2, backward 0
  CHECK(chamfer_distance(mat({{0, 0}, {1, 0}}), mat({{0, 0}})) ==
        doctest::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("chamfer: symmetry, non-negativity, and the naive double-loop oracle") {
  Prng rng(8);
  for (int trial = 0; trial < 100; ++trial) {
    std::size_t d = 1 + rng.uniform_index(16);
    FeatureMatrix a = random_mat(rng, 1 + rng.uniform_index(12), d);
    FeatureMatrix b = random_mat(rng, 1 + rng.uniform_index(12), d);
    double ab = chamfer_distance(a, b);
    double ba = chamfer_distance(b, a);
    CHECK(ab >= 0.0);
    CHECK(std::abs(ab - ba) < 1e-9);
    double ref = oracles::naive_chamfer(a, b);
    CHECK(std::abs(ab - ref) <= 1e-9 * std::max(1.0, std::abs(ref)));
  }
}

TEST_CASE("chamfer: dimension mismatch and empty inputs are errors") {
  CHECK_THROWS_AS(chamfer_distance(mat({{1, 2}}), mat({{1, 2, 3}})), Error);
  FeatureMatrix empty;
  CHECK_THROWS_AS(chamfer_distance(empty, mat({{1.0f}})), Error);
}

TEST_CASE("l2_normalized_rows: unit rows, zero rows intact") {
  FeatureMatrix m = mat({{3, 4}, {0, 0}});
  FeatureMatrix n = l2_normalized_rows(m);
  CHECK(n.at(0, 0) == doctest::Approx(0.6f));
  CHECK(n.at(0, 1) == doctest::Approx(0.8f));
  CHECK(n.at(1, 0) == 0.0f);
  CHECK(n.at(1, 1) == 0.0f);
}

namespace {

FeatureStore three_single_frame_videos() {
  // 1-D videos at 0, 1, 3
  FeatureStore store(1);
  store.add(VideoRecord{"p0", mat({{0}}), std::nullopt, std::nullopt});
  store.add(VideoRecord{"p1", mat({{1}}), std::nullopt, std::nullopt});
  store.add(VideoRecord{"p3", mat({{3}}), std::nullopt, std::nullopt});
  return store;
}

}  // namespace

TEST_CASE("set_diversity: hand case 28/3 and permutation invariance") {
  FeatureStore store = three_single_frame_videos();
  // single-point Chamfer is 2 * squared distance: pairs give 2, 18, 8
  double expected = (2.0 + 18.0 + 8.0) / 3.0;
  CHECK(set_diversity({"p0", "p1", "p3"}, store) == doctest::Approx(expected).epsilon(1e-12));
  CHECK(set_diversity({"p3", "p0", "p1"}, store) == doctest::Approx(expected).epsilon(1e-12));
  CHECK(expected == doctest::Approx(28.0 / 3.0).epsilon(1e-12));
}

TEST_CASE("set_diversity: identical videos give zero; small sets are errors") {
  FeatureStore store(1);
  store.add(VideoRecord{"a", mat({{2}, {5}}), std::nullopt, std::nullopt});
  store.add(VideoRecord{"b", mat({{2}, {5}}), std::nullopt, std::nullopt});
  CHECK(set_diversity({"a", "b"}, store) == 0.0);

  CHECK_THROWS_AS(set_diversity({"a"}, store), Error);
  CHECK_THROWS_AS(set_diversity({"a", "a"}, store), Error);
}

TEST_CASE("cache transparency: identical results with and without the cache") {
  Prng rng(15);
  FeatureStore store = oracles::random_store(rng, 8, 3, 4);
  std::vector<std::string> ids;
  for (const auto& rec : store) ids.push_back(rec.id);

  DistanceCache cache;
  double with_cache_1 = set_diversity(ids, store, &cache);
  double with_cache_2 = set_diversity(ids, store, &cache);  // fully cached now
  double without = set_diversity(ids, store, nullptr);
  CHECK(with_cache_1 == without);
  CHECK(with_cache_2 == without);
  CHECK(cache.size() == 8 * 7 / 2);
}

TEST_CASE("cache: symmetric keys and zero self distance") {
  DistanceCache cache;
  int calls = 0;
  auto compute = [&] {
    ++calls;
    return 7.5;
  };
  CHECK(cache.get_or_compute("a", "b", compute) == 7.5);
  CHECK(cache.get_or_compute("b", "a", compute) == 7.5);
  CHECK(calls == 1);
  CHECK(cache.get_or_compute("a", "a", compute) == 0.0);
  CHECK(calls == 1);
}
