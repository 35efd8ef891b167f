#pragma once
// Test-only oracles, written independently of the library implementations
// they check.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <string>
#include <vector>

#include "vqsel/rng.hpp"
#include "vqsel/types.hpp"

namespace oracles {

// Gaussian CDF via composite Simpson integration of the density from 0 to z,
// plus the 0.5 symmetry offset. Error is far below 1e-9 at this step count.
inline double phi_by_quadrature(double z) {
  const double a = 0.0;
  const double b = std::abs(z);
  const int n = 2000;  // even
  const double h = (b - a) / n;
  auto density = [](double t) { return std::exp(-0.5 * t * t) / std::sqrt(2.0 * 3.14159265358979323846); };
  double sum = density(a) + density(b);
  for (int i = 1; i < n; ++i) sum += density(a + h * i) * (i % 2 == 1 ? 4.0 : 2.0);
  double integral = sum * h / 3.0;
  return z >= 0.0 ? 0.5 + integral : 0.5 - integral;
}

// Chamfer distance as a literal transcription of the two directed terms.
inline double naive_chamfer(const vqsel::FeatureMatrix& fx, const vqsel::FeatureMatrix& fy) {
  auto directed = [](const vqsel::FeatureMatrix& from, const vqsel::FeatureMatrix& to) {
    double total = 0.0;
    for (std::size_t i = 0; i < from.rows(); ++i) {
      double nearest = std::numeric_limits<double>::infinity();
      for (std::size_t j = 0; j < to.rows(); ++j) {
        double dist = 0.0;
        for (std::size_t k = 0; k < from.cols(); ++k) {
          double diff = double(from.at(i, k)) - double(to.at(j, k));
          dist += diff * diff;
        }
        nearest = std::min(nearest, dist);
      }
      total += nearest;
    }
    return total / double(from.rows());
  };
  return directed(fx, fy) + directed(fy, fx);
}

// Step-by-step greedy reference: recomputes every candidate's value from
// scratch each iteration, summing distances in selection order.
inline std::vector<std::string> reference_greedy(const vqsel::FeatureStore& store,
                                                 const std::map<std::string, double>& scores,
                                                 double lambda, std::size_t k) {
  std::vector<std::string> ids;
  for (const auto& rec : store) ids.push_back(rec.id);
  std::sort(ids.begin(), ids.end());

  std::vector<std::string> chosen;
  while (chosen.size() < k) {
    std::string best_id;
    double best_val = -std::numeric_limits<double>::infinity();
    for (const std::string& id : ids) {
      if (std::find(chosen.begin(), chosen.end(), id) != chosen.end()) continue;
      double val = scores.at(id);
      if (!chosen.empty()) {
        double sum = 0.0;
        for (const std::string& sel : chosen) {
          sum += naive_chamfer(store.at(id).features, store.at(sel).features);
        }
        val += lambda * (sum / double(chosen.size()));
      }
      if (val > best_val) {
        best_val = val;
        best_id = id;
      }
    }
    chosen.push_back(best_id);
  }
  return chosen;
}

// Exhaustive best-subset search by recursive enumeration; objective recomputed
// with the naive Chamfer.
inline double reference_subset_objective(const std::vector<std::string>& subset,
                                         const vqsel::FeatureStore& store,
                                         const std::map<std::string, double>& scores,
                                         double lambda) {
  double diff = 0.0;
  for (const auto& id : subset) diff += scores.at(id);
  diff /= double(subset.size());
  if (subset.size() < 2) return diff;
  double div = 0.0;
  std::size_t pairs = 0;
  for (std::size_t i = 0; i < subset.size(); ++i) {
    for (std::size_t j = i + 1; j < subset.size(); ++j) {
      div += naive_chamfer(store.at(subset[i]).features, store.at(subset[j]).features);
      ++pairs;
    }
  }
  return diff + lambda * div / double(pairs);
}

inline void enumerate_subsets(const std::vector<std::string>& ids, std::size_t k, std::size_t from,
                              std::vector<std::string>& cur, const vqsel::FeatureStore& store,
                              const std::map<std::string, double>& scores, double lambda,
                              double& best_val, std::vector<std::string>& best) {
  if (cur.size() == k) {
    double val = reference_subset_objective(cur, store, scores, lambda);
    if (val > best_val) {
      best_val = val;
      best = cur;
    }
    return;
  }
  for (std::size_t i = from; i < ids.size(); ++i) {
    cur.push_back(ids[i]);
    enumerate_subsets(ids, k, i + 1, cur, store, scores, lambda, best_val, best);
    cur.pop_back();
  }
}

inline std::vector<std::string> reference_exhaustive(const vqsel::FeatureStore& store,
                                                     const std::map<std::string, double>& scores,
                                                     double lambda, std::size_t k) {
  std::vector<std::string> ids;
  for (const auto& rec : store) ids.push_back(rec.id);
  std::sort(ids.begin(), ids.end());
  std::vector<std::string> cur, best;
  double best_val = -std::numeric_limits<double>::infinity();
  enumerate_subsets(ids, k, 0, cur, store, scores, lambda, best_val, best);
  return best;
}

// Random single-frame store; features and scores drawn from the given stream.
inline vqsel::FeatureStore random_store(vqsel::Prng& rng, std::size_t n, std::size_t d,
                                        std::size_t max_frames = 1) {
  vqsel::FeatureStore store(d);
  for (std::size_t i = 0; i < n; ++i) {
    std::size_t frames = 1 + rng.uniform_index(max_frames);
    vqsel::FeatureMatrix m(frames, d);
    for (auto& v : m.data()) v = float(rng.uniform(-2.0, 2.0));
    char buf[16];
    std::snprintf(buf, sizeof(buf), "r%04zu", i);
    store.add(vqsel::VideoRecord{buf, std::move(m), std::nullopt, std::nullopt});
  }
  return store;
}

inline std::map<std::string, double> random_scores(vqsel::Prng& rng,
                                                   const vqsel::FeatureStore& store, double lo,
                                                   double hi) {
  std::map<std::string, double> scores;
  for (const auto& rec : store) scores[rec.id] = rng.uniform(lo, hi);
  return scores;
}

}  // namespace oracles
