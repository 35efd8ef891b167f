#include "vqsel/selection.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>

#include "json.hpp"

namespace vqsel {

namespace {

using nlohmann::json;

// C(n, k) with a cap; returns cap + 1 once the count exceeds it.
std::size_t binomial_capped(std::size_t n, std::size_t k, std::size_t cap) {
  if (k > n) return 0;
  k = std::min(k, n - k);
  double acc = 1.0;
  for (std::size_t i = 1; i <= k; ++i) {
    acc = acc * static_cast<double>(n - k + i) / static_cast<double>(i);
    if (acc > static_cast<double>(cap)) return cap + 1;
  }
  return static_cast<std::size_t>(acc + 0.5);
}

json budget_to_json(const Budget& b) {
  json j;
  if (b.kind == Budget::Kind::kFraction) {
    j["kind"] = "fraction";
    j["value"] = b.fraction;
  } else {
    j["kind"] = "count";
    j["value"] = b.count;
  }
  return j;
}

json config_to_json(const SelectionConfig& c, std::uint64_t seed) {
  json j;
  j["lambda"] = c.lambda;
  j["budget"] = budget_to_json(c.budget);
  j["normalize_terms"] = c.normalize_terms;
  j["l2_normalize_features"] = c.l2_normalize_features;
  j["seed"] = seed;
  return j;
}

}  // namespace

std::size_t Budget::resolve(std::size_t pool_size) const {
  if (pool_size == 0) throw Error("budget: empty pool");
  std::size_t k;
  if (kind == Kind::kFraction) {
    if (!(fraction > 0.0 && fraction <= 1.0)) {
      throw Error("budget: fraction must lie in (0, 1]");
    }
    k = static_cast<std::size_t>(std::floor(fraction * static_cast<double>(pool_size)));
    k = std::max<std::size_t>(k, 1);
  } else {
    k = count;
  }
  if (k < 1 || k > pool_size) {
    throw Error("budget: resolved size " + std::to_string(k) + " outside [1, " +
                std::to_string(pool_size) + "]");
  }
  return k;
}

double set_difficulty(const std::vector<std::string>& ids, const ScoreMap& scores) {
  if (ids.empty()) throw Error("set difficulty: empty set");
  double sum = 0.0;
  for (const std::string& id : ids) {
    auto it = scores.find(id);
    if (it == scores.end()) throw Error("set difficulty: no score for id '" + id + "'");
    sum += it->second;
  }
  return sum / static_cast<double>(ids.size());
}

double subset_objective(const std::vector<std::string>& ids, const ScoreMap& scores,
                        const FeatureStore& store, double lambda, DistanceCache* cache) {
  if (ids.size() < 2) throw Error("subset objective: need at least 2 ids");
  return set_difficulty(ids, scores) + lambda * set_diversity(ids, store, cache);
}

SelectionResult greedy_select(const FeatureStore& store, const ScoreMap& scores,
                              const SelectionConfig& config) {
  const std::size_t n = store.size();
  const std::size_t k = config.budget.resolve(n);

  // Candidate indices in ascending id order; with a strict ">" comparison the
  // scan then breaks ties toward the smallest id.
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return store[a].id < store[b].id; });

  std::vector<double> g(n);
  for (std::size_t i = 0; i < n; ++i) {
    auto it = scores.find(store[i].id);
    if (it == scores.end()) throw Error("greedy: no score for id '" + store[i].id + "'");
    g[i] = it->second;
  }

  // Optional frame normalization applies to the diversity term only.
  std::vector<FeatureMatrix> normalized;
  if (config.l2_normalize_features) {
    normalized.reserve(n);
    for (std::size_t i = 0; i < n; ++i) normalized.push_back(l2_normalized_rows(store[i].features));
  }
  auto frames_of = [&](std::size_t i) -> const FeatureMatrix& {
    return config.l2_normalize_features ? normalized[i] : store[i].features;
  };

  std::vector<bool> taken(n, false);
  std::vector<double> sum_dist(n, 0.0);  // per candidate, to the selected set
  SelectionResult result;
  result.config = config;

  std::vector<double> diff_term(n), div_term(n);
  for (std::size_t step = 0; step < k; ++step) {
    const double inv_sel = step == 0 ? 0.0 : 1.0 / static_cast<double>(step);
    for (std::size_t idx : order) {
      if (taken[idx]) continue;
      diff_term[idx] = g[idx];
      div_term[idx] = step == 0 ? 0.0 : sum_dist[idx] * inv_sel;
    }

    if (config.normalize_terms) {
      double dmin = std::numeric_limits<double>::infinity(), dmax = -dmin;
      double vmin = dmin, vmax = -dmin;
      for (std::size_t idx : order) {
        if (taken[idx]) continue;
        dmin = std::min(dmin, diff_term[idx]);
        dmax = std::max(dmax, diff_term[idx]);
        vmin = std::min(vmin, div_term[idx]);
        vmax = std::max(vmax, div_term[idx]);
      }
      for (std::size_t idx : order) {
        if (taken[idx]) continue;
        diff_term[idx] = dmax > dmin ? (diff_term[idx] - dmin) / (dmax - dmin) : 0.0;
        div_term[idx] = vmax > vmin ? (div_term[idx] - vmin) / (vmax - vmin) : 0.0;
      }
    }

    std::size_t best = n;
    double best_val = -std::numeric_limits<double>::infinity();
    for (std::size_t idx : order) {
      if (taken[idx]) continue;
      double val = diff_term[idx] + config.lambda * div_term[idx];
      if (val > best_val) {
        best_val = val;
        best = idx;
      }
    }

    taken[best] = true;
    result.selected.push_back(store[best].id);
    result.iterations.push_back(IterationLog{store[best].id, diff_term[best], div_term[best],
                                             diff_term[best] + config.lambda * div_term[best]});

    if (step + 1 < k) {
      for (std::size_t idx : order) {
        if (taken[idx]) continue;
        sum_dist[idx] += chamfer_distance(frames_of(idx), frames_of(best));
      }
    }
  }
  return result;
}

std::vector<std::string> exhaustive_select(const FeatureStore& store, const ScoreMap& scores,
                                           double lambda, std::size_t k) {
  const std::size_t n = store.size();
  if (k < 1 || k > n) throw Error("exhaustive: k outside [1, pool size]");
  constexpr std::size_t kMaxSubsets = 1000000;
  if (binomial_capped(n, k, kMaxSubsets) > kMaxSubsets) {
    throw Error("exhaustive: C(n, k) exceeds 1e6, instance too large");
  }

  std::vector<std::string> ids;
  ids.reserve(n);
  for (const VideoRecord& rec : store) ids.push_back(rec.id);
  std::sort(ids.begin(), ids.end());

  DistanceCache cache;
  std::vector<std::size_t> comb(k);
  for (std::size_t i = 0; i < k; ++i) comb[i] = i;

  std::vector<std::string> best;
  double best_val = -std::numeric_limits<double>::infinity();
  std::vector<std::string> subset(k);
  while (true) {
    for (std::size_t i = 0; i < k; ++i) subset[i] = ids[comb[i]];
    double val = k == 1 ? set_difficulty(subset, scores)
                        : subset_objective(subset, scores, store, lambda, &cache);
    // Strict ">" keeps the lexicographically first combination on ties.
    if (val > best_val) {
      best_val = val;
      best = subset;
    }

    // Next combination in lexicographic order.
    std::size_t i = k;
    while (i > 0 && comb[i - 1] == n - k + i - 1) --i;
    if (i == 0) break;
    ++comb[i - 1];
    for (std::size_t j = i; j < k; ++j) comb[j] = comb[j - 1] + 1;
  }
  return best;
}

std::vector<PairPreference> export_pair_labels(const std::vector<std::string>& selected,
                                               const FeatureStore& store) {
  std::vector<PairPreference> out;
  for (std::size_t i = 0; i < selected.size(); ++i) {
    const VideoRecord& a = store.at(selected[i]);
    if (!a.mos) throw Error("pair export: record '" + a.id + "' has no mos");
    for (std::size_t j = i + 1; j < selected.size(); ++j) {
      const VideoRecord& b = store.at(selected[j]);
      if (!b.mos) throw Error("pair export: record '" + b.id + "' has no mos");
      if (*a.mos == *b.mos) continue;
      if (*a.mos > *b.mos) out.push_back(PairPreference{a.id, b.id});
      else out.push_back(PairPreference{b.id, a.id});
    }
  }
  return out;
}

void save_pair_preferences(const std::vector<PairPreference>& pairs,
                           const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error("pair export: cannot write " + path.string());
  out << "better_id,worse_id\n";
  for (const PairPreference& p : pairs) out << p.better_id << ',' << p.worse_id << '\n';
}

void save_selection_report(const SelectionResult& result, std::uint64_t seed,
                           const std::filesystem::path& path) {
  json j;
  j["config"] = config_to_json(result.config, seed);
  j["selected"] = result.selected;
  json iters = json::array();
  for (const IterationLog& it : result.iterations) {
    json e;
    e["id"] = it.id;
    e["difficulty"] = it.difficulty;
    e["diversity"] = it.diversity;
    e["objective"] = it.objective;
    iters.push_back(std::move(e));
  }
  j["iterations"] = std::move(iters);
  std::ofstream out(path);
  if (!out) throw Error("selection report: cannot write " + path.string());
  out << j.dump(2) << "\n";
}

std::vector<std::string> load_selected_ids(const std::filesystem::path& report_path) {
  std::ifstream in(report_path);
  if (!in) throw Error("selection report: cannot open " + report_path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    throw Error("selection report: parse error in " + report_path.string() + ": " + e.what());
  }
  if (!j.contains("selected") || !j.at("selected").is_array()) {
    throw Error("selection report: missing \"selected\" array in " + report_path.string());
  }
  return j.at("selected").get<std::vector<std::string>>();
}

}  // namespace vqsel
