#pragma once
// Difficulty predictor g(.): pair labels from base-model errors, Thurstone
// pairwise probability, fidelity loss (plus the classification / regression
// ablations), analytic-gradient SGD training, and pool scoring.

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "vqsel/types.hpp"

namespace vqsel {

// One-hidden-layer tanh scorer mapping a pooled d-vector to a scalar.
struct RankerParams {
  std::size_t input_dim = 0;  // d
  std::size_t hidden = 0;     // h
  std::vector<double> w1;     // h x d, row-major
  std::vector<double> b1;     // h
  std::vector<double> w2;     // h
  double b2 = 0.0;

  static RankerParams zeros(std::size_t input_dim, std::size_t hidden);
  std::size_t parameter_count() const { return hidden * input_dim + 2 * hidden + 1; }

  bool operator==(const RankerParams& o) const = default;
};

// Ordered pair with binary supervision: p = 1 iff x's base-model error is
// >= y's.
struct PairLabel {
  std::string x_id;
  std::string y_id;
  int p = 0;  // {0, 1}
};

enum class LossKind { kFidelity, kClassification, kRegression };

LossKind parse_loss_kind(const std::string& name);
const char* loss_kind_name(LossKind k);

struct TrainConfig {
  std::size_t hidden_size = 16;
  double learning_rate = 1e-3;
  std::size_t epochs = 10;       // 0 = return the initialization untouched
  std::size_t batch_pairs = 8;
  std::uint64_t seed = 0;
  double prob_clamp = 1e-6;      // epsilon in (0, 0.5)
  LossKind loss_kind = LossKind::kFidelity;

  void validate() const;
};

struct PairingStrategy {
  enum class Kind {
    kAuto,      // all ordered pairs when n <= 512, else 20*n sampled
    kAllPairs,
    kSampled,
  };
  Kind kind = Kind::kAuto;
  std::size_t sample_count = 0;  // kSampled: 0 means 20*n

  static constexpr std::size_t kAllPairsMaxN = 512;
  static constexpr std::size_t kSampledPairsPerRecord = 20;
};

// Standard Gaussian CDF, strictly increasing, |error| well under 1e-7.
double std_normal_cdf(double z);

// Thurstone preference probability Phi((gx - gy) / sqrt(2)), clamped to
// [eps, 1 - eps].
double pairwise_probability(double gx, double gy, double eps = 1e-6);

// 1 - sqrt(p * p_hat) - sqrt((1 - p)(1 - p_hat)); p_hat already clamped.
double fidelity_loss(double p, double p_hat);

// Binary cross-entropy on a clamped p_hat.
double classification_loss(double p, double p_hat);

// Squared error against the base model's absolute error.
double regression_loss(double g_pred, double target_err);

// Every ordered pair gets p = 1 iff |f(x)-mos(x)| >= |f(y)-mos(y)|. Records
// missing mos or base_pred are an error naming the id.
std::vector<PairLabel> make_pair_labels(const FeatureStore& store, const PairingStrategy& strategy,
                                        std::uint64_t seed);

double ranker_forward(const RankerParams& params, const std::vector<double>& pooled);

// Pooled training pair; err_* only feed the regression ablation.
struct TrainPair {
  std::vector<double> x;
  std::vector<double> y;
  double p = 0.0;
  double err_x = 0.0;
  double err_y = 0.0;
};

// Loss of one pair under the chosen kind. Pairwise kinds go through the
// Thurstone probability; regression is the sum of the two per-sample losses.
double pair_loss(const RankerParams& params, const TrainPair& pair, LossKind kind, double eps);

// Adds the analytic gradient of pair_loss into grad (same shape as params).
// Returns the loss. Matches central finite differences; a clamped p_hat has
// zero gradient, mirroring the flat loss there.
double pair_loss_gradient(const RankerParams& params, const TrainPair& pair, LossKind kind,
                          double eps, RankerParams& grad);

struct TrainResult {
  RankerParams params;
  std::vector<double> epoch_mean_loss;  // per epoch, mean over pairs
};

// Plain SGD over shuffled mini-batches. Fully deterministic given
// config.seed: initialization, shuffling and batch order all derive from it.
TrainResult train_ranker(const FeatureStore& store, const std::vector<PairLabel>& pairs,
                         const TrainConfig& config, Pooling pooling = Pooling::kMean);

// Scores every record in the store; errors on dimension mismatch.
ScoreMap score_pool(const RankerParams& params, const FeatureStore& store, Pooling pooling);

// Checkpoint: 8-byte magic, u32 version, u32 d, u32 h, then w1, b1, w2, b2
// as little-endian binary64.
void save_ranker(const RankerParams& params, const std::filesystem::path& path);
RankerParams load_ranker(const std::filesystem::path& path);

// Pair-label CSV: header "x_id,y_id,p".
void save_pair_labels(const std::vector<PairLabel>& pairs, const std::filesystem::path& path);
std::vector<PairLabel> load_pair_labels(const std::filesystem::path& path);

}  // namespace vqsel
