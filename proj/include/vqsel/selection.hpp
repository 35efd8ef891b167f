#pragma once
// Budgeted subset optimizer: set difficulty, the combined objective, the
// greedy rule, a brute-force oracle for small instances, and pair-label
// export for scale-free relabeling.

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "vqsel/diversity.hpp"
#include "vqsel/types.hpp"

namespace vqsel {

struct Budget {
  enum class Kind { kFraction, kCount };
  Kind kind = Kind::kFraction;
  double fraction = 0.05;    // in (0, 1]
  std::size_t count = 0;

  static Budget of_fraction(double f) { return Budget{Kind::kFraction, f, 0}; }
  static Budget of_count(std::size_t c) { return Budget{Kind::kCount, 0.0, c}; }

  bool is_zero() const { return kind == Kind::kCount && count == 0; }

  // Fraction resolves to max(1, floor(fraction * pool)); counts must satisfy
  // 1 <= k <= pool.
  std::size_t resolve(std::size_t pool_size) const;
};

struct SelectionConfig {
  double lambda = 0.25;
  Budget budget;
  bool normalize_terms = false;       // per-iteration min-max of both terms
  bool l2_normalize_features = false; // L2-normalize frames before Chamfer
};

struct IterationLog {
  std::string id;
  double difficulty = 0.0;  // term as used in the argmax
  double diversity = 0.0;   // mean distance to the selected set, lambda excluded
  double objective = 0.0;   // difficulty + lambda * diversity
};

struct SelectionResult {
  std::vector<std::string> selected;     // selection order
  std::vector<IterationLog> iterations;
  SelectionConfig config;
};

// Arithmetic mean of g over the set; empty set or missing score is an error.
double set_difficulty(const std::vector<std::string>& ids, const ScoreMap& scores);

// Diff(S) + lambda * Div(S); requires |S| >= 2.
double subset_objective(const std::vector<std::string>& ids, const ScoreMap& scores,
                        const FeatureStore& store, double lambda, DistanceCache* cache = nullptr);

// Greedy maximization: the first pick is pure difficulty (empty-set diversity
// term defined as 0); afterwards each step adds the candidate maximizing
// g(x) + (lambda / |S|) * sum of Chamfer distances to the selected set. Ties
// break toward the lexicographically smallest id.
SelectionResult greedy_select(const FeatureStore& store, const ScoreMap& scores,
                              const SelectionConfig& config);

// Exact optimum over all size-k subsets; requires C(n, k) <= 1e6. Returns
// sorted ids; ties break toward the lexicographically smallest sorted-id
// vector.
std::vector<std::string> exhaustive_select(const FeatureStore& store, const ScoreMap& scores,
                                           double lambda, std::size_t k);

struct PairPreference {
  std::string better_id;  // strictly higher MOS
  std::string worse_id;
};

// One record per unordered pair of selected ids with distinct MOS, oriented
// better-first; equal-MOS pairs are omitted. Missing MOS is an error.
std::vector<PairPreference> export_pair_labels(const std::vector<std::string>& selected,
                                               const FeatureStore& store);

void save_pair_preferences(const std::vector<PairPreference>& pairs,
                           const std::filesystem::path& path);

// Selection report JSON: {"config": {...}, "selected": [...], "iterations":
// [{"id", "difficulty", "diversity", "objective"}...]}.
void save_selection_report(const SelectionResult& result, std::uint64_t seed,
                           const std::filesystem::path& path);
std::vector<std::string> load_selected_ids(const std::filesystem::path& report_path);

}  // namespace vqsel
