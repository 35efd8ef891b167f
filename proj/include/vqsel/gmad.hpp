#pragma once
// gMAD worst-case comparison: per-level maximally-differentiating pair search
// between a defender and an attacker, plus the round-robin tournament.

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "vqsel/types.hpp"

namespace vqsel {

struct GmadConfig {
  std::size_t num_levels = 5;
  double level_tolerance = 0.05;   // in normalized defender-score units
  std::size_t pairs_per_level = 1;

  void validate() const;
};

struct GmadPair {
  std::string id_a;  // id_a < id_b lexicographically
  std::string id_b;
  double defender_gap = 0.0;  // |normalized defender difference|
  double attacker_gap = 0.0;  // |attacker difference|, maximal among admissible
};

struct GmadLevel {
  std::size_t level = 0;
  double center = 0.0;  // in [0, 1] after defender normalization
  std::vector<GmadPair> pairs;  // empty when < 2 admissible ids
};

// Min-max normalizes defender scores, spaces num_levels centers evenly over
// [0, 1], and at each level returns the pairs_per_level admissible pairs with
// the largest attacker gap. Constant defender scores or mismatched id sets
// are errors. Deterministic tie-break by (gap desc, id_a, id_b).
std::vector<GmadLevel> gmad_pairs(const ScoreMap& defender, const ScoreMap& attacker,
                                  const GmadConfig& config);

struct GmadDuel {
  std::string defender;
  std::string attacker;
  std::vector<GmadLevel> levels;
};

struct GmadStanding {
  double wins = 0.0;
  std::size_t rank = 0;  // 1 = best; ties share the better rank
};

struct GmadReport {
  std::vector<GmadDuel> duels;
  std::map<std::string, GmadStanding> tournament;
};

// Round-robin over all ordered model pairs. For each surfaced pair the model
// whose predicted quality gap is closer to the MOS gap takes the win; exact
// ties split 0.5/0.5.
GmadReport gmad_tournament(const std::map<std::string, ScoreMap>& models, const ScoreMap& mos,
                           const GmadConfig& config);

void save_gmad_report(const GmadReport& report, const GmadConfig& config, std::uint64_t seed,
                      const std::filesystem::path& path);

// Model prediction CSV: header "id,score".
ScoreMap load_score_csv(const std::filesystem::path& path);
void save_score_csv(const ScoreMap& scores, const std::filesystem::path& path);

}  // namespace vqsel
