#include "vqsel/gmad.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <string_view>

#include "json.hpp"

namespace vqsel {

namespace {

using nlohmann::json;

void check_same_ids(const ScoreMap& a, const ScoreMap& b) {
  if (a.size() != b.size()) throw Error("gmad: score maps cover different id sets");
  auto ita = a.begin();
  auto itb = b.begin();
  for (; ita != a.end(); ++ita, ++itb) {
    if (ita->first != itb->first) {
      throw Error("gmad: score maps cover different id sets (first mismatch: '" + ita->first +
                  "' vs '" + itb->first + "')");
    }
  }
}

}  // namespace

void GmadConfig::validate() const {
  if (num_levels < 1) throw Error("gmad config: num_levels must be >= 1");
  if (!(level_tolerance >= 0.0) || !std::isfinite(level_tolerance)) {
    throw Error("gmad config: level_tolerance must be non-negative");
  }
  if (pairs_per_level < 1) throw Error("gmad config: pairs_per_level must be >= 1");
}

std::vector<GmadLevel> gmad_pairs(const ScoreMap& defender, const ScoreMap& attacker,
                                  const GmadConfig& config) {
  config.validate();
  if (defender.size() < 2) throw Error("gmad: need at least 2 scored ids");
  check_same_ids(defender, attacker);

  double lo = defender.begin()->second;
  double hi = lo;
  for (const auto& [id, s] : defender) {
    if (!std::isfinite(s)) throw Error("gmad: non-finite defender score for id '" + id + "'");
    lo = std::min(lo, s);
    hi = std::max(hi, s);
  }
  if (hi == lo) throw Error("gmad: defender scores are constant, levels undefined");

  // ScoreMap iteration is id-ascending, so admissible lists inherit that
  // order and pair enumeration is deterministic.
  std::vector<std::pair<std::string, double>> norm;  // (id, normalized defender)
  norm.reserve(defender.size());
  for (const auto& [id, s] : defender) norm.emplace_back(id, (s - lo) / (hi - lo));

  std::vector<GmadLevel> out;
  for (std::size_t level = 0; level < config.num_levels; ++level) {
    double center = config.num_levels == 1
                        ? 0.5
                        : static_cast<double>(level) / static_cast<double>(config.num_levels - 1);
    GmadLevel result;
    result.level = level;
    result.center = center;

    std::vector<std::size_t> admissible;
    for (std::size_t i = 0; i < norm.size(); ++i) {
      if (std::abs(norm[i].second - center) <= config.level_tolerance) admissible.push_back(i);
    }
    if (admissible.size() >= 2) {
      std::vector<GmadPair> pairs;
      for (std::size_t ii = 0; ii < admissible.size(); ++ii) {
        for (std::size_t jj = ii + 1; jj < admissible.size(); ++jj) {
          const auto& [ida, norm_a] = norm[admissible[ii]];
          const auto& [idb, norm_b] = norm[admissible[jj]];
          GmadPair pr;
          pr.id_a = ida;  // ida < idb by construction
          pr.id_b = idb;
          pr.defender_gap = std::abs(norm_a - norm_b);
          pr.attacker_gap = std::abs(attacker.at(ida) - attacker.at(idb));
          pairs.push_back(std::move(pr));
        }
      }
      std::stable_sort(pairs.begin(), pairs.end(), [](const GmadPair& a, const GmadPair& b) {
        if (a.attacker_gap != b.attacker_gap) return a.attacker_gap > b.attacker_gap;
        if (a.id_a != b.id_a) return a.id_a < b.id_a;
        return a.id_b < b.id_b;
      });
      if (pairs.size() > config.pairs_per_level) pairs.resize(config.pairs_per_level);
      result.pairs = std::move(pairs);
    }
    out.push_back(std::move(result));
  }
  return out;
}

GmadReport gmad_tournament(const std::map<std::string, ScoreMap>& models, const ScoreMap& mos,
                           const GmadConfig& config) {
  config.validate();
  if (models.size() < 2) throw Error("gmad tournament: need at least 2 models");

  GmadReport report;
  for (const auto& [name, scores] : models) report.tournament[name] = GmadStanding{};

  for (const auto& [def_name, def_scores] : models) {
    for (const auto& [att_name, att_scores] : models) {
      if (def_name == att_name) continue;
      GmadDuel duel;
      duel.defender = def_name;
      duel.attacker = att_name;
      duel.levels = gmad_pairs(def_scores, att_scores, config);

      for (const GmadLevel& level : duel.levels) {
        for (const GmadPair& pr : level.pairs) {
          auto mos_a = mos.find(pr.id_a);
          auto mos_b = mos.find(pr.id_b);
          if (mos_a == mos.end()) throw Error("gmad tournament: no mos for id '" + pr.id_a + "'");
          if (mos_b == mos.end()) throw Error("gmad tournament: no mos for id '" + pr.id_b + "'");
          double mos_gap = mos_a->second - mos_b->second;
          double def_gap = def_scores.at(pr.id_a) - def_scores.at(pr.id_b);
          double att_gap = att_scores.at(pr.id_a) - att_scores.at(pr.id_b);
          double def_miss = std::abs(def_gap - mos_gap);
          double att_miss = std::abs(att_gap - mos_gap);
          if (def_miss < att_miss) {
            report.tournament[def_name].wins += 1.0;
          } else if (att_miss < def_miss) {
            report.tournament[att_name].wins += 1.0;
          } else {
            report.tournament[def_name].wins += 0.5;
            report.tournament[att_name].wins += 0.5;
          }
        }
      }
      report.duels.push_back(std::move(duel));
    }
  }

  // Competition ranking: 1 + number of models with strictly more wins.
  for (auto& [name, standing] : report.tournament) {
    std::size_t better = 0;
    for (const auto& [other, other_standing] : report.tournament) {
      if (other_standing.wins > standing.wins) ++better;
    }
    standing.rank = better + 1;
  }
  return report;
}

void save_gmad_report(const GmadReport& report, const GmadConfig& config, std::uint64_t seed,
                      const std::filesystem::path& path) {
  json j;
  j["config"]["num_levels"] = config.num_levels;
  j["config"]["level_tolerance"] = config.level_tolerance;
  j["config"]["pairs_per_level"] = config.pairs_per_level;
  j["config"]["seed"] = seed;

  json duels = json::array();
  for (const GmadDuel& duel : report.duels) {
    json dj;
    dj["defender"] = duel.defender;
    dj["attacker"] = duel.attacker;
    json levels = json::array();
    for (const GmadLevel& level : duel.levels) {
      json lj;
      lj["level"] = level.level;
      lj["center"] = level.center;
      json pairs = json::array();
      for (const GmadPair& pr : level.pairs) {
        json pj;
        pj["id_a"] = pr.id_a;
        pj["id_b"] = pr.id_b;
        pj["defender_gap"] = pr.defender_gap;
        pj["attacker_gap"] = pr.attacker_gap;
        pairs.push_back(std::move(pj));
      }
      lj["pairs"] = std::move(pairs);
      levels.push_back(std::move(lj));
    }
    dj["levels"] = std::move(levels);
    duels.push_back(std::move(dj));
  }
  j["duels"] = std::move(duels);

  json tournament;
  for (const auto& [name, standing] : report.tournament) {
    tournament[name]["wins"] = standing.wins;
    tournament[name]["rank"] = standing.rank;
  }
  j["tournament"] = std::move(tournament);

  std::ofstream out(path);
  if (!out) throw Error("gmad report: cannot write " + path.string());
  out << j.dump(2) << "\n";
}

ScoreMap load_score_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("score csv: cannot open " + path.string());
  std::string line;
  if (!std::getline(in, line)) throw Error("score csv: empty file " + path.string());
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != "id,score") throw Error("score csv: expected header 'id,score', got '" + line + "'");
  ScoreMap scores;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::size_t c = line.find(',');
    if (c == std::string::npos || c == 0) {
      throw Error("score csv: malformed line " + std::to_string(line_no) + " in " + path.string());
    }
    std::string id = line.substr(0, c);
    std::string num = line.substr(c + 1);
    double v = 0.0;
    auto res = std::from_chars(num.data(), num.data() + num.size(), v);
    if (res.ec != std::errc() || res.ptr != num.data() + num.size() || !std::isfinite(v)) {
      throw Error("score csv: malformed score on line " + std::to_string(line_no) + " in " +
                  path.string());
    }
    if (!scores.emplace(std::move(id), v).second) {
      throw Error("score csv: duplicate id on line " + std::to_string(line_no));
    }
  }
  return scores;
}

void save_score_csv(const ScoreMap& scores, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error("score csv: cannot write " + path.string());
  out << "id,score\n";
  char buf[32];
  for (const auto& [id, v] : scores) {
    auto res = std::to_chars(buf, buf + sizeof(buf), v);
    out << id << ',' << std::string_view(buf, static_cast<std::size_t>(res.ptr - buf)) << '\n';
  }
}

}  // namespace vqsel
