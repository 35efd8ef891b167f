#pragma once
// Desk-scale experimental harness: synthetic pools with a planted domain
// shift, baseline selectors, the failure-identification protocol, and the
// active-fine-tuning simulation around a closed-form ridge base model.

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "vqsel/ranker.hpp"
#include "vqsel/selection.hpp"
#include "vqsel/types.hpp"

namespace vqsel {

struct SynthConfig {
  std::size_t n_source = 1200;
  std::size_t n_target = 2000;
  std::size_t dim = 16;
  std::size_t frames = 4;          // T per video
  std::size_t n_clusters = 32;
  double cluster_spread = 0.5;     // within-cluster std, relative to the center scale
  double quality_scale = 1.5;      // linear quality weight magnitude
  double nonlinearity = 0.3;       // strength of the non-linear quality term
  double hard_region_fraction = 0.3;  // fraction of clusters with inflated base error
  double noise_sigma = 0.08;       // MOS observation noise
  double hard_quality_offset = 4.0;   // latent-quality offset magnitude in hard clusters
  double hard_feature_shift = 2.5;    // target-only indicator coordinate on hard clusters
  std::uint64_t seed = 1234;

  void validate() const;
};

// Clustered Gaussian frame features with MOS a bounded monotone function of a
// planted latent quality. Hard clusters carry latent offsets a linear model
// cannot absorb; in the target pool their means are additionally shifted.
// Fully deterministic given the seed.
std::pair<FeatureStore, FeatureStore> gen_synthetic(const SynthConfig& config);

// Closed-form ridge regression over pooled features.
struct ToyBaseModel {
  std::vector<double> weights;
  double intercept = 0.0;
  double regularization = 0.0;

  bool operator==(const ToyBaseModel& o) const = default;
};

// Centered ridge solve; reg = 0 on a rank-deficient system is an error.
ToyBaseModel fit_toy_base(const FeatureStore& source, double reg);

ScoreMap predict_toy(const ToyBaseModel& model, const FeatureStore& store);

// SRCC/PLCC between base predictions and MOS restricted to the selected
// subset. Lower = the subset exposes more failures.
std::pair<double, double> eval_failure_identification(const std::vector<std::string>& selected,
                                                      const ScoreMap& base_preds,
                                                      const ScoreMap& mos);

enum class SelectionMethod { kRandom, kTopkDifficulty, kMds, kOracleError };

SelectionMethod parse_selection_method(const std::string& name);
const char* selection_method_name(SelectionMethod m);

// random = seeded uniform sample without replacement; topk_difficulty =
// greedy_select with lambda = 0.
SelectionResult baseline_select(SelectionMethod method, const FeatureStore& store,
                                const ScoreMap& scores, const Budget& budget, std::uint64_t seed);

struct FinetuneOptions {
  double ridge_reg = 1e-2;
  TrainConfig train;      // failure-predictor training (mds method)
  double lambda = 0.25;
  bool normalize_terms = false;
};

struct FinetuneSeedResult {
  std::uint64_t seed = 0;
  std::vector<std::string> selected;
  std::optional<double> srcc_before;  // source model on held-out target
  std::optional<double> srcc_after;   // absent when the holdout is unusable
  ToyBaseModel refit;
};

struct FinetuneReport {
  std::vector<FinetuneSeedResult> per_seed;
  double mean_before = 0.0;
  double mean_after = 0.0;
};

// Fits the base model on source, selects from target under the budget, refits
// on source + selected-labeled-target, and evaluates on target minus the
// selection. A zero budget skips selection, so before == after exactly.
FinetuneReport simulate_active_finetune(const FeatureStore& source, const FeatureStore& target,
                                        SelectionMethod method, const Budget& budget,
                                        const std::vector<std::uint64_t>& seeds,
                                        const FinetuneOptions& opts);

struct BenchConfig {
  BenchConfig() { train.learning_rate = 0.05; }  // the bench's own training recipe

  SynthConfig synth;
  TrainConfig train;
  double lambda = 0.25;
  Budget budget;              // default: 5% fraction
  bool normalize_terms = false;
  double ridge_reg = 1e-2;
  std::size_t num_seeds = 10;
  std::uint64_t seed = 1234;  // master seed; per-run pools derive from it
  bool sweep_lambda = false;  // lambda in {0, 0.125, 0.25, 0.5}
  bool ablate_loss = false;   // loss in {fidelity, classification, regression}
};

struct MethodSeedEval {
  std::uint64_t seed = 0;
  double fi_srcc = 0.0;
  double fi_plcc = 0.0;
  double ft_before = 0.0;
  double ft_after = 0.0;
};

struct MethodSummary {
  std::vector<MethodSeedEval> per_seed;
  double mean_fi_srcc = 0.0;
  double mean_fi_plcc = 0.0;
  double mean_ft_before = 0.0;
  double mean_ft_after = 0.0;
};

struct BenchReport {
  BenchConfig config;
  std::vector<std::uint64_t> run_seeds;
  std::map<std::string, MethodSummary> methods;        // random/topk/mds/oracle
  std::map<std::string, MethodSummary> lambda_sweep;   // key: lambda value text
  std::map<std::string, MethodSummary> loss_ablation;  // key: loss name
};

// Full pipeline per derived seed: generate pools, fit the base model, train
// the failure predictor, select with every method, evaluate failure
// identification and the fine-tuning simulation.
BenchReport run_bench(const BenchConfig& config);

void save_bench_report(const BenchReport& report, const std::filesystem::path& json_path,
                       const std::filesystem::path& csv_path);

}  // namespace vqsel
