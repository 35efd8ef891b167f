#include "vqsel/bench.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "json.hpp"
#include "vqsel/metrics.hpp"
#include "vqsel/rng.hpp"

namespace vqsel {

namespace {

using nlohmann::json;

// Cluster centers sit at per-dimension scale kCenterScale / sqrt(d), which
// keeps inter-cluster Chamfer distances O(kCenterScale^2) regardless of d.
constexpr double kCenterScale = 1.3;
constexpr std::size_t kEasyClusterWeight = 3;   // hard clusters are rarer per item
constexpr std::size_t kMegaClusterWeight = 5;   // the hardest cluster is common content
constexpr double kMegaOffsetRatio = 0.9;        // dominant offset, inside the sloped map region
constexpr double kNicheOffsetRatio = 0.42;      // niche offsets: clearly below the mega
constexpr double kMegaSpreadBoost = 3.0;        // the mega cluster spans a wide quality range
constexpr double kFrameJitterRatio = 0.5;   // frame spread relative to cluster spread
constexpr double kMosSlope = 0.35;          // inside the bounded tanh quality map
constexpr double kNonlinFrequency = 1.7;
constexpr double kWildRatingFraction = 0.04;  // garbage ratings; suppressed when noise is off
constexpr double kHardNoiseBoost = 7.0;       // ratings on niche hard content disagree more

std::string padded_id(const char* prefix, std::size_t i) {
  char buf[24];
  std::snprintf(buf, sizeof(buf), "%s%06zu", prefix, i);
  return std::string(buf);
}

std::vector<double> random_unit_vector(Prng& rng, std::size_t d) {
  std::vector<double> v(d);
  double norm_sq = 0.0;
  for (double& x : v) {
    x = rng.normal();
    norm_sq += x * x;
  }
  double inv = 1.0 / std::sqrt(norm_sq);
  for (double& x : v) x *= inv;
  return v;
}

double dot(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

// Solves A w = b for symmetric positive-definite A (row-major d x d),
// in-place Cholesky. Returns false when a pivot degenerates.
bool cholesky_solve(std::vector<double> a, std::vector<double> b, std::size_t d,
                    std::vector<double>& out) {
  double max_diag = 0.0;
  for (std::size_t i = 0; i < d; ++i) max_diag = std::max(max_diag, std::abs(a[i * d + i]));
  double tiny = std::max(max_diag, 1.0) * 1e-13;

  for (std::size_t i = 0; i < d; ++i) {
    for (std::size_t j = i; j < d; ++j) {
      double sum = a[i * d + j];
      for (std::size_t k = 0; k < i; ++k) sum -= a[i * d + k] * a[j * d + k];
      if (i == j) {
        if (sum <= tiny) return false;
        a[i * d + i] = std::sqrt(sum);
      } else {
        a[j * d + i] = sum / a[i * d + i];
      }
    }
  }
  // forward then backward substitution
  for (std::size_t i = 0; i < d; ++i) {
    double sum = b[i];
    for (std::size_t k = 0; k < i; ++k) sum -= a[i * d + k] * b[k];
    b[i] = sum / a[i * d + i];
  }
  out.assign(d, 0.0);
  for (std::size_t ii = d; ii > 0; --ii) {
    std::size_t i = ii - 1;
    double sum = b[i];
    for (std::size_t k = i + 1; k < d; ++k) sum -= a[k * d + i] * out[k];
    out[i] = sum / a[i * d + i];
  }
  return true;
}

struct QualityModel {
  std::vector<double> linear_dir;   // unit
  std::vector<double> nonlin_dir;   // unit
  double quality_scale = 0.0;
  double nonlinearity = 0.0;
  double proj_scale = 0.0;          // sqrt(d) / kCenterScale

  double latent(const std::vector<double>& pooled) const {
    double lin = quality_scale * dot(linear_dir, pooled) * proj_scale;
    double nl = nonlinearity * std::sin(kNonlinFrequency * dot(nonlin_dir, pooled) * proj_scale);
    return lin + nl;
  }
};

}  // namespace

void SynthConfig::validate() const {
  if (n_source < 1 || n_target < 1) throw Error("synth config: pool sizes must be >= 1");
  if (dim < 1) throw Error("synth config: dim must be >= 1");
  if (frames < 1) throw Error("synth config: frames must be >= 1");
  if (n_clusters < 1) throw Error("synth config: n_clusters must be >= 1");
  if (!(cluster_spread >= 0.0)) throw Error("synth config: cluster_spread must be >= 0");
  if (!(hard_region_fraction >= 0.0 && hard_region_fraction <= 1.0)) {
    throw Error("synth config: hard_region_fraction must lie in [0, 1]");
  }
  if (!(noise_sigma >= 0.0)) throw Error("synth config: noise_sigma must be >= 0");
}

std::pair<FeatureStore, FeatureStore> gen_synthetic(const SynthConfig& config) {
  config.validate();
  const std::size_t d = config.dim;
  const std::size_t m = config.n_clusters;

  Prng root(config.seed);

  // Hard clusters carry latent-quality offsets in both pools. With more
  // clusters than content dimensions the offsets are not linearly
  // representable, so a ridge base model keeps erring on them.
  Prng hard_rng = root.split("hard-clusters");
  std::vector<std::size_t> cluster_order(m);
  for (std::size_t i = 0; i < m; ++i) cluster_order[i] = i;
  hard_rng.shuffle(cluster_order);
  std::size_t n_hard =
      static_cast<std::size_t>(config.hard_region_fraction * static_cast<double>(m) + 0.5);
  n_hard = std::min(n_hard, m);

  // In the target pool every hard cluster additionally lights up one reserved
  // indicator dimension that is silent in the source pool. A refit that has
  // labels from that cluster can repair its error through that coordinate;
  // clusters without labels stay broken, so label coverage matters.
  const std::size_t reserved = std::min(n_hard, d >= 3 ? d - 2 : 0);
  const std::size_t content_dims = d - reserved;
  const double inv_sqrt_c = 1.0 / std::sqrt(static_cast<double>(content_dims));
  const double inv_sqrt_d = 1.0 / std::sqrt(static_cast<double>(d));

  Prng center_rng = root.split("centers");
  std::vector<std::vector<double>> centers(m, std::vector<double>(d, 0.0));
  for (auto& c : centers) {
    for (std::size_t j = 0; j < content_dims; ++j) c[j] = kCenterScale * inv_sqrt_c * center_rng.normal();
  }

  Prng q_rng = root.split("quality-dir");
  Prng nl_rng = root.split("nonlin-dir");
  QualityModel quality;
  quality.linear_dir = random_unit_vector(q_rng, content_dims);
  quality.nonlin_dir = random_unit_vector(nl_rng, content_dims);
  quality.quality_scale = config.quality_scale;
  quality.nonlinearity = config.nonlinearity;
  quality.proj_scale = std::sqrt(static_cast<double>(content_dims)) / kCenterScale;

  // Hard-offset pattern: one dominant (mega) offset inside the sloped region
  // of the quality map, alternating-sign niche offsets clearly below it. The
  // mega cluster's content center is then placed so the signed offsets sum to
  // zero against the centers: the pattern sits exactly in the null space of
  // any linear fit, so the base model cannot absorb it from features.
  std::vector<bool> hard(m, false);
  std::vector<double> hard_offset(m, 0.0);
  std::vector<std::size_t> hard_dim(m, 0);
  std::vector<std::size_t> hard_list;  // assignment order; index 0 is the mega cluster
  for (std::size_t i = 0; i < n_hard; ++i) {
    std::size_t c = cluster_order[i];
    hard[c] = true;
    hard_list.push_back(c);
    if (i == 0) {
      hard_offset[c] = kMegaOffsetRatio * config.hard_quality_offset;
    } else {
      double sign = i % 2 == 0 ? 1.0 : -1.0;
      hard_offset[c] =
          sign * kNicheOffsetRatio * (0.85 + 0.15 * hard_rng.next_double()) * config.hard_quality_offset;
    }
    if (reserved > 0) hard_dim[c] = content_dims + (i % reserved);
  }
  std::size_t mega = m;
  if (n_hard > 0) {
    mega = hard_list[0];
    if (n_hard > 1) {
      for (std::size_t j = 0; j < content_dims; ++j) {
        double acc = 0.0;
        for (std::size_t i = 1; i < n_hard; ++i) {
          acc += hard_offset[hard_list[i]] * centers[hard_list[i]][j];
        }
        centers[mega][j] = -acc / hard_offset[mega];
      }
    }
  }

  // Cluster sampling table. Easy clusters are common, niche hard clusters
  // rare, and the mega cluster holds roughly a budget's worth of items so a
  // difficulty-only selection can dwell inside it.
  std::vector<std::size_t> cluster_draws;
  for (std::size_t c = 0; c < m; ++c) {
    std::size_t weight = hard[c] ? (c == mega ? kMegaClusterWeight : 1) : kEasyClusterWeight;
    cluster_draws.insert(cluster_draws.end(), weight, c);
  }

  // Wild ratings only affect the source pool: its labels stand in for legacy
  // data, while the target subset is annotated under a controlled protocol.
  // Niche hard clusters draw noisier ratings than the common (mega) one.
  auto make_pool = [&](Prng rng, std::size_t n, const char* prefix, bool shifted,
                       bool wild_ratings) {
    FeatureStore store(d);
    const double spread = config.cluster_spread * inv_sqrt_d;
    const double jitter = kFrameJitterRatio * spread;
    std::vector<double> v(d);
    std::vector<double> content(content_dims);
    for (std::size_t i = 0; i < n; ++i) {
      std::size_t c = cluster_draws[rng.uniform_index(cluster_draws.size())];
      for (std::size_t j = 0; j < d; ++j) {
        double s = c == mega && j < content_dims ? kMegaSpreadBoost * spread : spread;
        v[j] = centers[c][j] + s * rng.normal();
      }
      if (shifted && hard[c] && reserved > 0) v[hard_dim[c]] += config.hard_feature_shift;

      FeatureMatrix frames(config.frames, d);
      for (std::size_t t = 0; t < config.frames; ++t) {
        for (std::size_t j = 0; j < d; ++j) {
          frames.at(t, j) = static_cast<float>(v[j] + jitter * rng.normal());
        }
      }
      VideoRecord rec;
      rec.id = padded_id(prefix, i);
      rec.features = std::move(frames);

      std::vector<double> pooled = pool_features(rec, Pooling::kMean);
      content.assign(pooled.begin(), pooled.begin() + content_dims);
      double latent = quality.latent(content) + (hard[c] ? hard_offset[c] : 0.0);
      double noise = config.noise_sigma * rng.normal();
      if (hard[c] && c != mega) noise *= kHardNoiseBoost;
      bool wild = wild_ratings && config.noise_sigma > 0.0 &&
                  rng.next_double() < kWildRatingFraction;
      // wild entries land far outside the nominal [1, 5] range, the way a
      // mis-scaled legacy rating would
      rec.mos = wild ? rng.uniform(-5.0, 11.0) : 3.0 + 2.0 * std::tanh(kMosSlope * latent) + noise;

      store.add(std::move(rec));
    }
    return store;
  };

  FeatureStore source = make_pool(root.split("source"), config.n_source, "src", false, true);
  FeatureStore target = make_pool(root.split("target"), config.n_target, "tgt", true, false);
  return {std::move(source), std::move(target)};
}

ToyBaseModel fit_toy_base(const FeatureStore& source, double reg) {
  if (source.size() < 2) throw Error("ridge: need at least 2 records");
  if (!(reg >= 0.0) || !std::isfinite(reg)) throw Error("ridge: regularization must be >= 0");
  const std::size_t d = source.dim();
  const std::size_t n = source.size();

  std::vector<std::vector<double>> x;
  std::vector<double> y;
  x.reserve(n);
  y.reserve(n);
  for (const VideoRecord& rec : source) {
    if (!rec.mos) throw Error("ridge: record '" + rec.id + "' has no mos");
    x.push_back(pool_features(rec, Pooling::kMean));
    y.push_back(*rec.mos);
  }

  std::vector<double> x_mean(d, 0.0);
  double y_mean = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < d; ++j) x_mean[j] += x[i][j];
    y_mean += y[i];
  }
  for (double& v : x_mean) v /= static_cast<double>(n);
  y_mean /= static_cast<double>(n);

  std::vector<double> a(d * d, 0.0);
  std::vector<double> rhs(d, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < d; ++j) {
      double xj = x[i][j] - x_mean[j];
      rhs[j] += xj * (y[i] - y_mean);
      for (std::size_t k = j; k < d; ++k) a[j * d + k] += xj * (x[i][k] - x_mean[k]);
    }
  }
  for (std::size_t j = 0; j < d; ++j) {
    for (std::size_t k = 0; k < j; ++k) a[j * d + k] = a[k * d + j];
  }
  double inv_n = 1.0 / static_cast<double>(n);
  for (double& v : a) v *= inv_n;
  for (double& v : rhs) v *= inv_n;
  for (std::size_t j = 0; j < d; ++j) a[j * d + j] += reg;

  ToyBaseModel model;
  model.regularization = reg;
  if (!cholesky_solve(std::move(a), std::move(rhs), d, model.weights)) {
    throw Error("ridge: singular system (rank-deficient features with reg = 0)");
  }
  model.intercept = y_mean - dot(model.weights, x_mean);
  return model;
}

ScoreMap predict_toy(const ToyBaseModel& model, const FeatureStore& store) {
  if (model.weights.size() != store.dim()) {
    throw Error("ridge: model dimension " + std::to_string(model.weights.size()) +
                " does not match store dimension " + std::to_string(store.dim()));
  }
  ScoreMap preds;
  for (const VideoRecord& rec : store) {
    preds[rec.id] = dot(model.weights, pool_features(rec, Pooling::kMean)) + model.intercept;
  }
  return preds;
}

std::pair<double, double> eval_failure_identification(const std::vector<std::string>& selected,
                                                      const ScoreMap& base_preds,
                                                      const ScoreMap& mos) {
  if (selected.size() < 2) throw Error("failure identification: need at least 2 selected ids");
  std::vector<double> p, m;
  p.reserve(selected.size());
  m.reserve(selected.size());
  for (const std::string& id : selected) {
    auto ip = base_preds.find(id);
    auto im = mos.find(id);
    if (ip == base_preds.end()) throw Error("failure identification: no base_pred for id '" + id + "'");
    if (im == mos.end()) throw Error("failure identification: no mos for id '" + id + "'");
    p.push_back(ip->second);
    m.push_back(im->second);
  }
  PairedSeries s(std::move(p), std::move(m));
  return {srcc(s), plcc(s)};
}

SelectionMethod parse_selection_method(const std::string& name) {
  if (name == "random") return SelectionMethod::kRandom;
  if (name == "topk_difficulty") return SelectionMethod::kTopkDifficulty;
  if (name == "mds") return SelectionMethod::kMds;
  if (name == "oracle_error") return SelectionMethod::kOracleError;
  throw Error("unknown selection method '" + name + "'");
}

const char* selection_method_name(SelectionMethod m) {
  switch (m) {
    case SelectionMethod::kRandom: return "random";
    case SelectionMethod::kTopkDifficulty: return "topk_difficulty";
    case SelectionMethod::kMds: return "mds";
    case SelectionMethod::kOracleError: return "oracle_error";
  }
  return "?";
}

SelectionResult baseline_select(SelectionMethod method, const FeatureStore& store,
                                const ScoreMap& scores, const Budget& budget, std::uint64_t seed) {
  if (method == SelectionMethod::kTopkDifficulty) {
    SelectionConfig cfg;
    cfg.lambda = 0.0;
    cfg.budget = budget;
    return greedy_select(store, scores, cfg);
  }
  if (method != SelectionMethod::kRandom) {
    throw Error("baseline select: only random and topk_difficulty are baselines");
  }

  const std::size_t k = budget.resolve(store.size());
  std::vector<std::string> ids;
  ids.reserve(store.size());
  for (const VideoRecord& rec : store) ids.push_back(rec.id);
  std::sort(ids.begin(), ids.end());

  Prng rng = Prng(seed).split("random-select");
  for (std::size_t i = 0; i < k; ++i) {
    std::size_t j = i + rng.uniform_index(ids.size() - i);
    std::swap(ids[i], ids[j]);
  }
  ids.resize(k);

  SelectionResult result;
  result.config = SelectionConfig{0.0, budget, false, false};
  for (const std::string& id : ids) {
    auto it = scores.find(id);
    double g = it == scores.end() ? 0.0 : it->second;
    result.selected.push_back(id);
    result.iterations.push_back(IterationLog{id, g, 0.0, g});
  }
  return result;
}

namespace {

// Refit on source + selected-labeled-target and score the remaining target.
struct RefitEval {
  std::optional<double> before;
  std::optional<double> after;
  ToyBaseModel refit;
};

std::optional<double> try_srcc(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() < 2) return std::nullopt;
  try {
    return srcc(a, b);
  } catch (const Error&) {
    return std::nullopt;
  }
}

RefitEval refit_and_eval(const FeatureStore& source, const FeatureStore& target,
                         const std::vector<std::string>& selected, const ScoreMap& base_preds,
                         double reg) {
  FeatureStore merged(source.dim());
  for (const VideoRecord& rec : source) merged.add(rec);
  for (const std::string& id : selected) merged.add(target.at(id));

  RefitEval out;
  out.refit = fit_toy_base(merged, reg);

  std::set<std::string> chosen(selected.begin(), selected.end());
  ScoreMap refit_preds = predict_toy(out.refit, target);
  std::vector<double> before_p, after_p, mos;
  for (const VideoRecord& rec : target) {
    if (chosen.count(rec.id)) continue;
    if (!rec.mos) throw Error("finetune: target record '" + rec.id + "' has no mos");
    before_p.push_back(base_preds.at(rec.id));
    after_p.push_back(refit_preds.at(rec.id));
    mos.push_back(*rec.mos);
  }
  out.before = try_srcc(before_p, mos);
  out.after = try_srcc(after_p, mos);
  return out;
}

ScoreMap oracle_error_scores(const FeatureStore& target, const ScoreMap& base_preds) {
  ScoreMap scores;
  for (const VideoRecord& rec : target) {
    if (!rec.mos) throw Error("oracle select: record '" + rec.id + "' has no mos");
    scores[rec.id] = std::abs(base_preds.at(rec.id) - *rec.mos);
  }
  return scores;
}

// Failure-predictor scores for the target pool: g trained on the source pool
// against the base model's own errors there.
ScoreMap failure_predictor_scores(const FeatureStore& source, const ScoreMap& source_preds,
                                  const FeatureStore& target, const TrainConfig& config,
                                  std::uint64_t seed) {
  FeatureStore scored = source;
  for (const VideoRecord& rec : source) scored.set_base_pred(rec.id, source_preds.at(rec.id));

  std::vector<PairLabel> pairs =
      make_pair_labels(scored, PairingStrategy{}, derive_seed(seed, "pairs"));
  TrainConfig cfg = config;
  cfg.seed = derive_seed(seed, "ranker");
  TrainResult trained = train_ranker(scored, pairs, cfg);
  return score_pool(trained.params, target, Pooling::kMean);
}

}  // namespace

FinetuneReport simulate_active_finetune(const FeatureStore& source, const FeatureStore& target,
                                        SelectionMethod method, const Budget& budget,
                                        const std::vector<std::uint64_t>& seeds,
                                        const FinetuneOptions& opts) {
  if (seeds.empty()) throw Error("finetune: no seeds");
  if (!budget.is_zero()) budget.resolve(target.size());  // validates the budget up front

  ToyBaseModel base = fit_toy_base(source, opts.ridge_reg);
  ScoreMap source_preds = predict_toy(base, source);
  ScoreMap target_preds = predict_toy(base, target);

  FinetuneReport report;
  for (std::uint64_t seed : seeds) {
    FinetuneSeedResult res;
    res.seed = seed;

    if (!budget.is_zero()) {
      switch (method) {
        case SelectionMethod::kRandom:
          res.selected = baseline_select(method, target, {}, budget, seed).selected;
          break;
        case SelectionMethod::kOracleError: {
          SelectionConfig cfg;
          cfg.lambda = 0.0;
          cfg.budget = budget;
          res.selected = greedy_select(target, oracle_error_scores(target, target_preds), cfg).selected;
          break;
        }
        case SelectionMethod::kTopkDifficulty:
        case SelectionMethod::kMds: {
          ScoreMap g = failure_predictor_scores(source, source_preds, target, opts.train, seed);
          SelectionConfig cfg;
          cfg.lambda = method == SelectionMethod::kMds ? opts.lambda : 0.0;
          cfg.budget = budget;
          cfg.normalize_terms = method == SelectionMethod::kMds && opts.normalize_terms;
          res.selected = greedy_select(target, g, cfg).selected;
          break;
        }
      }
    }

    RefitEval ev = refit_and_eval(source, target, res.selected, target_preds, opts.ridge_reg);
    res.srcc_before = ev.before;
    res.srcc_after = ev.after;
    res.refit = std::move(ev.refit);
    report.per_seed.push_back(std::move(res));
  }

  double sum_before = 0.0, sum_after = 0.0;
  std::size_t n_before = 0, n_after = 0;
  for (const FinetuneSeedResult& r : report.per_seed) {
    if (r.srcc_before) {
      sum_before += *r.srcc_before;
      ++n_before;
    }
    if (r.srcc_after) {
      sum_after += *r.srcc_after;
      ++n_after;
    }
  }
  report.mean_before = n_before ? sum_before / static_cast<double>(n_before) : 0.0;
  report.mean_after = n_after ? sum_after / static_cast<double>(n_after) : 0.0;
  return report;
}

namespace {

void accumulate_means(MethodSummary& s) {
  double fi_s = 0.0, fi_p = 0.0, fb = 0.0, fa = 0.0;
  for (const MethodSeedEval& e : s.per_seed) {
    fi_s += e.fi_srcc;
    fi_p += e.fi_plcc;
    fb += e.ft_before;
    fa += e.ft_after;
  }
  double n = static_cast<double>(s.per_seed.size());
  if (n > 0) {
    s.mean_fi_srcc = fi_s / n;
    s.mean_fi_plcc = fi_p / n;
    s.mean_ft_before = fb / n;
    s.mean_ft_after = fa / n;
  }
}

}  // namespace

BenchReport run_bench(const BenchConfig& config) {
  if (config.num_seeds < 1) throw Error("bench: num_seeds must be >= 1");

  BenchReport report;
  report.config = config;

  static const std::vector<std::pair<std::string, double>> kLambdaGrid = {
      {"0", 0.0}, {"0.125", 0.125}, {"0.25", 0.25}, {"0.5", 0.5}};
  static const std::vector<LossKind> kLossGrid = {LossKind::kFidelity, LossKind::kClassification,
                                                  LossKind::kRegression};

  for (std::size_t i = 0; i < config.num_seeds; ++i) {
    std::uint64_t run_seed = derive_seed(config.seed, i);
    report.run_seeds.push_back(run_seed);

    SynthConfig sc = config.synth;
    sc.seed = run_seed;
    auto [source, target] = gen_synthetic(sc);

    ToyBaseModel base = fit_toy_base(source, config.ridge_reg);
    ScoreMap source_preds = predict_toy(base, source);
    ScoreMap target_preds = predict_toy(base, target);
    ScoreMap target_mos;
    for (const VideoRecord& rec : target) target_mos[rec.id] = *rec.mos;

    ScoreMap g = failure_predictor_scores(source, source_preds, target, config.train, run_seed);

    auto eval_selection = [&](const std::vector<std::string>& selected) {
      MethodSeedEval e;
      e.seed = run_seed;
      auto [fi_s, fi_p] = eval_failure_identification(selected, target_preds, target_mos);
      e.fi_srcc = fi_s;
      e.fi_plcc = fi_p;
      RefitEval ev = refit_and_eval(source, target, selected, target_preds, config.ridge_reg);
      e.ft_before = ev.before.value_or(0.0);
      e.ft_after = ev.after.value_or(0.0);
      return e;
    };

    auto greedy_with = [&](const ScoreMap& scores, double lambda) {
      SelectionConfig cfg;
      cfg.lambda = lambda;
      cfg.budget = config.budget;
      cfg.normalize_terms = config.normalize_terms;
      return greedy_select(target, scores, cfg).selected;
    };

    report.methods["random"].per_seed.push_back(
        eval_selection(baseline_select(SelectionMethod::kRandom, target, {}, config.budget, run_seed)
                           .selected));
    report.methods["topk_difficulty"].per_seed.push_back(eval_selection(greedy_with(g, 0.0)));
    report.methods["mds"].per_seed.push_back(eval_selection(greedy_with(g, config.lambda)));
    report.methods["oracle_error"].per_seed.push_back(
        eval_selection(greedy_with(oracle_error_scores(target, target_preds), 0.0)));

    if (config.sweep_lambda) {
      for (const auto& [key, lambda] : kLambdaGrid) {
        report.lambda_sweep[key].per_seed.push_back(eval_selection(greedy_with(g, lambda)));
      }
    }

    if (config.ablate_loss) {
      for (LossKind kind : kLossGrid) {
        ScoreMap g_kind;
        if (kind == config.train.loss_kind) {
          g_kind = g;
        } else {
          TrainConfig tc = config.train;
          tc.loss_kind = kind;
          g_kind = failure_predictor_scores(source, source_preds, target, tc, run_seed);
        }
        report.loss_ablation[loss_kind_name(kind)].per_seed.push_back(
            eval_selection(greedy_with(g_kind, config.lambda)));
      }
    }
  }

  for (auto& [name, summary] : report.methods) accumulate_means(summary);
  for (auto& [name, summary] : report.lambda_sweep) accumulate_means(summary);
  for (auto& [name, summary] : report.loss_ablation) accumulate_means(summary);
  return report;
}

namespace {

json budget_json(const Budget& b) {
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

json summary_json(const MethodSummary& s) {
  json j;
  json rows = json::array();
  for (const MethodSeedEval& e : s.per_seed) {
    json r;
    r["seed"] = e.seed;
    r["fi_srcc"] = e.fi_srcc;
    r["fi_plcc"] = e.fi_plcc;
    r["ft_before"] = e.ft_before;
    r["ft_after"] = e.ft_after;
    rows.push_back(std::move(r));
  }
  j["per_seed"] = std::move(rows);
  j["mean_fi_srcc"] = s.mean_fi_srcc;
  j["mean_fi_plcc"] = s.mean_fi_plcc;
  j["mean_ft_before"] = s.mean_ft_before;
  j["mean_ft_after"] = s.mean_ft_after;
  return j;
}

void csv_section(std::ofstream& out, const std::string& section,
                 const std::map<std::string, MethodSummary>& table) {
  auto fmt = [](double v) {
    std::ostringstream ss;
    ss.precision(17);
    ss << v;
    return ss.str();
  };
  for (const auto& [key, summary] : table) {
    for (const MethodSeedEval& e : summary.per_seed) {
      out << section << ',' << key << ',' << e.seed << ',' << fmt(e.fi_srcc) << ','
          << fmt(e.fi_plcc) << ',' << fmt(e.ft_before) << ',' << fmt(e.ft_after) << '\n';
    }
    out << section << ',' << key << ",mean," << fmt(summary.mean_fi_srcc) << ','
        << fmt(summary.mean_fi_plcc) << ',' << fmt(summary.mean_ft_before) << ','
        << fmt(summary.mean_ft_after) << '\n';
  }
}

}  // namespace

void save_bench_report(const BenchReport& report, const std::filesystem::path& json_path,
                       const std::filesystem::path& csv_path) {
  const BenchConfig& c = report.config;
  json j;
  j["config"]["synth"] = {{"n_source", c.synth.n_source},
                          {"n_target", c.synth.n_target},
                          {"dim", c.synth.dim},
                          {"frames", c.synth.frames},
                          {"n_clusters", c.synth.n_clusters},
                          {"cluster_spread", c.synth.cluster_spread},
                          {"quality_scale", c.synth.quality_scale},
                          {"nonlinearity", c.synth.nonlinearity},
                          {"hard_region_fraction", c.synth.hard_region_fraction},
                          {"noise_sigma", c.synth.noise_sigma},
                          {"hard_quality_offset", c.synth.hard_quality_offset},
                          {"hard_feature_shift", c.synth.hard_feature_shift}};
  j["config"]["train"] = {{"hidden_size", c.train.hidden_size},
                          {"learning_rate", c.train.learning_rate},
                          {"epochs", c.train.epochs},
                          {"batch_pairs", c.train.batch_pairs},
                          {"prob_clamp", c.train.prob_clamp},
                          {"loss", loss_kind_name(c.train.loss_kind)}};
  j["config"]["lambda"] = c.lambda;
  j["config"]["budget"] = budget_json(c.budget);
  j["config"]["normalize_terms"] = c.normalize_terms;
  j["config"]["ridge_reg"] = c.ridge_reg;
  j["config"]["num_seeds"] = c.num_seeds;
  j["config"]["seed"] = c.seed;
  j["config"]["sweep_lambda"] = c.sweep_lambda;
  j["config"]["ablate_loss"] = c.ablate_loss;
  j["run_seeds"] = report.run_seeds;

  json methods;
  for (const auto& [name, summary] : report.methods) methods[name] = summary_json(summary);
  j["methods"] = std::move(methods);
  if (!report.lambda_sweep.empty()) {
    json sweep;
    for (const auto& [name, summary] : report.lambda_sweep) sweep[name] = summary_json(summary);
    j["lambda_sweep"] = std::move(sweep);
  }
  if (!report.loss_ablation.empty()) {
    json ablation;
    for (const auto& [name, summary] : report.loss_ablation) ablation[name] = summary_json(summary);
    j["loss_ablation"] = std::move(ablation);
  }

  std::ofstream out(json_path);
  if (!out) throw Error("bench report: cannot write " + json_path.string());
  out << j.dump(2) << "\n";

  std::ofstream csv(csv_path);
  if (!csv) throw Error("bench report: cannot write " + csv_path.string());
  csv << "section,key,seed,fi_srcc,fi_plcc,ft_before,ft_after\n";
  csv_section(csv, "methods", report.methods);
  csv_section(csv, "lambda_sweep", report.lambda_sweep);
  csv_section(csv, "loss_ablation", report.loss_ablation);
}

}  // namespace vqsel
