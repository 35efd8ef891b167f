#pragma once
// Chamfer-distance content diversity over frame-level feature sets, with an
// optional in-memory pairwise cache.

#include <string>
#include <vector>

#include "vqsel/types.hpp"

namespace vqsel {

// Symmetric sum of mean nearest-neighbor squared Euclidean distances between
// the two frame sets. Exact double-loop semantics; not a metric and not
// normalized.
double chamfer_distance(const FeatureMatrix& fx, const FeatureMatrix& fy);

// Row-wise L2 normalization; all-zero rows are left as-is.
FeatureMatrix l2_normalized_rows(const FeatureMatrix& m);

// Lazily populated symmetric map (id, id) -> distance. Single-writer.
class DistanceCache {
 public:
  template <class Fn>
  double get_or_compute(const std::string& a, const std::string& b, Fn&& compute) {
    if (a == b) return 0.0;
    auto key = a < b ? std::make_pair(a, b) : std::make_pair(b, a);
    auto it = cache_.find(key);
    if (it != cache_.end()) return it->second;
    double v = compute();
    cache_.emplace(std::move(key), v);
    return v;
  }

  std::size_t size() const { return cache_.size(); }

 private:
  std::map<std::pair<std::string, std::string>, double> cache_;
};

// Mean pairwise Chamfer distance over all C(|S|, 2) unordered pairs.
// Requires |S| >= 2 and unique ids present in the store.
double set_diversity(const std::vector<std::string>& ids, const FeatureStore& store,
                     DistanceCache* cache = nullptr);

}  // namespace vqsel
