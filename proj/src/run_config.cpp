#include "vqsel/run_config.hpp"

#include <charconv>
#include <fstream>
#include <set>

#include "json.hpp"

namespace vqsel {

namespace {

using nlohmann::json;

void reject_unknown(const json& obj, const std::set<std::string>& allowed,
                    const std::string& where) {
  for (const auto& [key, value] : obj.items()) {
    if (!allowed.count(key)) {
      throw Error("config: unknown key '" + key + "' in " + where);
    }
  }
}

Budget budget_from_json(const json& v) {
  if (v.is_number_integer() || v.is_number_unsigned()) {
    std::int64_t c = v.get<std::int64_t>();
    if (c < 1) throw Error("config: budget count must be >= 1");
    return Budget::of_count(static_cast<std::size_t>(c));
  }
  if (v.is_number_float()) {
    double f = v.get<double>();
    if (!(f > 0.0 && f <= 1.0)) throw Error("config: budget fraction must lie in (0, 1]");
    return Budget::of_fraction(f);
  }
  throw Error("config: budget must be a number");
}

}  // namespace

Budget parse_budget(const std::string& text) {
  bool fractional = text.find_first_of(".eE") != std::string::npos;
  if (fractional) {
    double f = 0.0;
    auto res = std::from_chars(text.data(), text.data() + text.size(), f);
    if (res.ec != std::errc() || res.ptr != text.data() + text.size()) {
      throw Error("budget: malformed value '" + text + "'");
    }
    if (!(f > 0.0 && f <= 1.0)) throw Error("budget: fraction must lie in (0, 1]");
    return Budget::of_fraction(f);
  }
  std::uint64_t c = 0;
  auto res = std::from_chars(text.data(), text.data() + text.size(), c);
  if (res.ec != std::errc() || res.ptr != text.data() + text.size()) {
    throw Error("budget: malformed value '" + text + "'");
  }
  if (c < 1) throw Error("budget: count must be >= 1");
  return Budget::of_count(static_cast<std::size_t>(c));
}

RunConfig load_run_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("config: cannot open " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    throw Error("config: parse error in " + path.string() + ": " + e.what());
  }
  if (!j.is_object()) throw Error("config: top level must be an object");

  RunConfig cfg;
  reject_unknown(j, {"seed", "train", "selection", "gmad", "synth", "bench"}, "top level");

  if (j.contains("seed")) cfg.seed = j.at("seed").get<std::uint64_t>();

  if (j.contains("train")) {
    const json& t = j.at("train");
    reject_unknown(t, {"hidden_size", "learning_rate", "epochs", "batch_pairs", "prob_clamp",
                       "loss", "pooling"},
                   "train");
    if (t.contains("hidden_size")) cfg.train.hidden_size = t.at("hidden_size").get<std::size_t>();
    if (t.contains("learning_rate")) cfg.train.learning_rate = t.at("learning_rate").get<double>();
    if (t.contains("epochs")) cfg.train.epochs = t.at("epochs").get<std::size_t>();
    if (t.contains("batch_pairs")) cfg.train.batch_pairs = t.at("batch_pairs").get<std::size_t>();
    if (t.contains("prob_clamp")) cfg.train.prob_clamp = t.at("prob_clamp").get<double>();
    if (t.contains("loss")) cfg.train.loss_kind = parse_loss_kind(t.at("loss").get<std::string>());
    if (t.contains("pooling")) cfg.pooling = parse_pooling(t.at("pooling").get<std::string>());
    cfg.train.validate();
  }

  if (j.contains("selection")) {
    const json& s = j.at("selection");
    reject_unknown(s, {"lambda", "budget", "normalize_terms", "l2_normalize"}, "selection");
    if (s.contains("lambda")) {
      cfg.selection.lambda = s.at("lambda").get<double>();
      if (cfg.selection.lambda < 0.0) throw Error("config: lambda must be >= 0");
    }
    if (s.contains("budget")) cfg.selection.budget = budget_from_json(s.at("budget"));
    if (s.contains("normalize_terms")) {
      cfg.selection.normalize_terms = s.at("normalize_terms").get<bool>();
    }
    if (s.contains("l2_normalize")) {
      cfg.selection.l2_normalize_features = s.at("l2_normalize").get<bool>();
    }
  }

  if (j.contains("gmad")) {
    const json& g = j.at("gmad");
    reject_unknown(g, {"num_levels", "level_tolerance", "pairs_per_level"}, "gmad");
    if (g.contains("num_levels")) cfg.gmad.num_levels = g.at("num_levels").get<std::size_t>();
    if (g.contains("level_tolerance")) {
      cfg.gmad.level_tolerance = g.at("level_tolerance").get<double>();
    }
    if (g.contains("pairs_per_level")) {
      cfg.gmad.pairs_per_level = g.at("pairs_per_level").get<std::size_t>();
    }
    cfg.gmad.validate();
  }

  if (j.contains("synth")) {
    const json& s = j.at("synth");
    reject_unknown(s,
                   {"n_source", "n_target", "dim", "frames", "n_clusters", "cluster_spread",
                    "quality_scale", "nonlinearity", "hard_region_fraction", "noise_sigma",
                    "hard_quality_offset", "hard_feature_shift"},
                   "synth");
    if (s.contains("n_source")) cfg.synth.n_source = s.at("n_source").get<std::size_t>();
    if (s.contains("n_target")) cfg.synth.n_target = s.at("n_target").get<std::size_t>();
    if (s.contains("dim")) cfg.synth.dim = s.at("dim").get<std::size_t>();
    if (s.contains("frames")) cfg.synth.frames = s.at("frames").get<std::size_t>();
    if (s.contains("n_clusters")) cfg.synth.n_clusters = s.at("n_clusters").get<std::size_t>();
    if (s.contains("cluster_spread")) cfg.synth.cluster_spread = s.at("cluster_spread").get<double>();
    if (s.contains("quality_scale")) cfg.synth.quality_scale = s.at("quality_scale").get<double>();
    if (s.contains("nonlinearity")) cfg.synth.nonlinearity = s.at("nonlinearity").get<double>();
    if (s.contains("hard_region_fraction")) {
      cfg.synth.hard_region_fraction = s.at("hard_region_fraction").get<double>();
    }
    if (s.contains("noise_sigma")) cfg.synth.noise_sigma = s.at("noise_sigma").get<double>();
    if (s.contains("hard_quality_offset")) {
      cfg.synth.hard_quality_offset = s.at("hard_quality_offset").get<double>();
    }
    if (s.contains("hard_feature_shift")) {
      cfg.synth.hard_feature_shift = s.at("hard_feature_shift").get<double>();
    }
    cfg.synth.validate();
  }

  if (j.contains("bench")) {
    const json& b = j.at("bench");
    reject_unknown(b, {"num_seeds", "ridge_reg"}, "bench");
    if (b.contains("num_seeds")) cfg.bench_num_seeds = b.at("num_seeds").get<std::size_t>();
    if (b.contains("ridge_reg")) cfg.bench_ridge_reg = b.at("ridge_reg").get<double>();
  }

  return cfg;
}

}  // namespace vqsel
