#include "vqsel/ranker.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numeric>

#include "vqsel/rng.hpp"

namespace vqsel {

namespace {

constexpr double kSqrt2 = 1.4142135623730951;
constexpr double kInvSqrt2Pi = 0.3989422804014327;
constexpr char kCheckpointMagic[8] = {'V', 'Q', 'R', 'A', 'N', 'K', 'R', '1'};

double std_normal_pdf(double z) { return kInvSqrt2Pi * std::exp(-0.5 * z * z); }

void write_u32_le(std::ofstream& out, std::uint32_t v) {
  std::uint8_t b[4] = {static_cast<std::uint8_t>(v & 0xff), static_cast<std::uint8_t>((v >> 8) & 0xff),
                       static_cast<std::uint8_t>((v >> 16) & 0xff),
                       static_cast<std::uint8_t>((v >> 24) & 0xff)};
  out.write(reinterpret_cast<const char*>(b), 4);
}

std::uint32_t read_u32_le(std::ifstream& in) {
  std::uint8_t b[4];
  in.read(reinterpret_cast<char*>(b), 4);
  return static_cast<std::uint32_t>(b[0]) | static_cast<std::uint32_t>(b[1]) << 8 |
         static_cast<std::uint32_t>(b[2]) << 16 | static_cast<std::uint32_t>(b[3]) << 24;
}

void write_f64_le(std::ofstream& out, double v) {
  std::uint64_t u = std::bit_cast<std::uint64_t>(v);
  std::uint8_t b[8];
  for (int i = 0; i < 8; ++i) b[i] = static_cast<std::uint8_t>((u >> (8 * i)) & 0xff);
  out.write(reinterpret_cast<const char*>(b), 8);
}

double read_f64_le(std::ifstream& in) {
  std::uint8_t b[8];
  in.read(reinterpret_cast<char*>(b), 8);
  std::uint64_t u = 0;
  for (int i = 0; i < 8; ++i) u |= static_cast<std::uint64_t>(b[i]) << (8 * i);
  return std::bit_cast<double>(u);
}

// g(x) plus the tanh activations, kept for backprop.
double forward_with_hidden(const RankerParams& p, const std::vector<double>& v,
                           std::vector<double>& tanh_out) {
  tanh_out.resize(p.hidden);
  double g = p.b2;
  for (std::size_t j = 0; j < p.hidden; ++j) {
    double a = p.b1[j];
    const double* row = p.w1.data() + j * p.input_dim;
    for (std::size_t k = 0; k < p.input_dim; ++k) a += row[k] * v[k];
    tanh_out[j] = std::tanh(a);
    g += p.w2[j] * tanh_out[j];
  }
  return g;
}

// Adds upstream * dg/dtheta for one input vector.
void backprop_scalar(const RankerParams& p, const std::vector<double>& v,
                     const std::vector<double>& tanh_out, double upstream, RankerParams& grad) {
  grad.b2 += upstream;
  for (std::size_t j = 0; j < p.hidden; ++j) {
    double t = tanh_out[j];
    grad.w2[j] += upstream * t;
    double da = upstream * p.w2[j] * (1.0 - t * t);
    grad.b1[j] += da;
    double* grow = grad.w1.data() + j * p.input_dim;
    for (std::size_t k = 0; k < p.input_dim; ++k) grow[k] += da * v[k];
  }
}

void check_pooled_dim(const RankerParams& p, const std::vector<double>& v) {
  if (v.size() != p.input_dim) {
    throw Error("ranker: pooled vector has dimension " + std::to_string(v.size()) +
                ", params expect " + std::to_string(p.input_dim));
  }
}

double clamp_prob(double p, double eps) { return std::min(std::max(p, eps), 1.0 - eps); }

}  // namespace

RankerParams RankerParams::zeros(std::size_t input_dim, std::size_t hidden) {
  RankerParams p;
  p.input_dim = input_dim;
  p.hidden = hidden;
  p.w1.assign(hidden * input_dim, 0.0);
  p.b1.assign(hidden, 0.0);
  p.w2.assign(hidden, 0.0);
  p.b2 = 0.0;
  return p;
}

LossKind parse_loss_kind(const std::string& name) {
  if (name == "fidelity") return LossKind::kFidelity;
  if (name == "classification") return LossKind::kClassification;
  if (name == "regression") return LossKind::kRegression;
  throw Error("unknown loss '" + name + "' (expected fidelity, classification or regression)");
}

const char* loss_kind_name(LossKind k) {
  switch (k) {
    case LossKind::kFidelity: return "fidelity";
    case LossKind::kClassification: return "classification";
    case LossKind::kRegression: return "regression";
  }
  return "?";
}

void TrainConfig::validate() const {
  if (hidden_size < 1) throw Error("train config: hidden_size must be >= 1");
  if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) {
    throw Error("train config: learning_rate must be positive");
  }
  if (batch_pairs < 1) throw Error("train config: batch_pairs must be >= 1");
  if (!(prob_clamp > 0.0 && prob_clamp < 0.5)) {
    throw Error("train config: prob_clamp must lie in (0, 0.5)");
  }
}

double std_normal_cdf(double z) { return 0.5 * std::erfc(-z / kSqrt2); }

double pairwise_probability(double gx, double gy, double eps) {
  return clamp_prob(std_normal_cdf((gx - gy) / kSqrt2), eps);
}

double fidelity_loss(double p, double p_hat) {
  return 1.0 - std::sqrt(p * p_hat) - std::sqrt((1.0 - p) * (1.0 - p_hat));
}

double classification_loss(double p, double p_hat) {
  return -p * std::log(p_hat) - (1.0 - p) * std::log(1.0 - p_hat);
}

double regression_loss(double g_pred, double target_err) {
  double r = g_pred - target_err;
  return r * r;
}

std::vector<PairLabel> make_pair_labels(const FeatureStore& store, const PairingStrategy& strategy,
                                        std::uint64_t seed) {
  const std::size_t n = store.size();
  if (n < 2) throw Error("pair labels: need at least 2 records");

  std::vector<double> abs_err(n);
  for (std::size_t i = 0; i < n; ++i) {
    const VideoRecord& rec = store[i];
    if (!rec.mos) throw Error("pair labels: record '" + rec.id + "' has no mos");
    if (!rec.base_pred) throw Error("pair labels: record '" + rec.id + "' has no base_pred");
    abs_err[i] = std::abs(*rec.base_pred - *rec.mos);
  }

  auto label_of = [&](std::size_t x, std::size_t y) { return abs_err[x] >= abs_err[y] ? 1 : 0; };

  bool all_pairs = false;
  switch (strategy.kind) {
    case PairingStrategy::Kind::kAllPairs: all_pairs = true; break;
    case PairingStrategy::Kind::kSampled: all_pairs = false; break;
    case PairingStrategy::Kind::kAuto: all_pairs = n <= PairingStrategy::kAllPairsMaxN; break;
  }

  std::vector<PairLabel> out;
  if (all_pairs) {
    out.reserve(n * (n - 1));
    for (std::size_t x = 0; x < n; ++x) {
      for (std::size_t y = 0; y < n; ++y) {
        if (x == y) continue;
        out.push_back(PairLabel{store[x].id, store[y].id, label_of(x, y)});
      }
    }
  } else {
    std::size_t m = strategy.kind == PairingStrategy::Kind::kSampled && strategy.sample_count > 0
                        ? strategy.sample_count
                        : PairingStrategy::kSampledPairsPerRecord * n;
    Prng rng = Prng(seed).split("pair-sampling");
    out.reserve(m);
    for (std::size_t i = 0; i < m; ++i) {
      std::size_t x = rng.uniform_index(n);
      std::size_t y = rng.uniform_index(n);
      while (y == x) y = rng.uniform_index(n);
      out.push_back(PairLabel{store[x].id, store[y].id, label_of(x, y)});
    }
  }
  return out;
}

double ranker_forward(const RankerParams& params, const std::vector<double>& pooled) {
  check_pooled_dim(params, pooled);
  std::vector<double> scratch;
  return forward_with_hidden(params, pooled, scratch);
}

double pair_loss(const RankerParams& params, const TrainPair& pair, LossKind kind, double eps) {
  check_pooled_dim(params, pair.x);
  check_pooled_dim(params, pair.y);
  std::vector<double> scratch;
  double gx = forward_with_hidden(params, pair.x, scratch);
  double gy = forward_with_hidden(params, pair.y, scratch);
  switch (kind) {
    case LossKind::kFidelity:
      return fidelity_loss(pair.p, pairwise_probability(gx, gy, eps));
    case LossKind::kClassification:
      return classification_loss(pair.p, pairwise_probability(gx, gy, eps));
    case LossKind::kRegression:
      return regression_loss(gx, pair.err_x) + regression_loss(gy, pair.err_y);
  }
  return 0.0;
}

double pair_loss_gradient(const RankerParams& params, const TrainPair& pair, LossKind kind,
                          double eps, RankerParams& grad) {
  check_pooled_dim(params, pair.x);
  check_pooled_dim(params, pair.y);
  std::vector<double> tanh_x, tanh_y;
  double gx = forward_with_hidden(params, pair.x, tanh_x);
  double gy = forward_with_hidden(params, pair.y, tanh_y);

  if (kind == LossKind::kRegression) {
    backprop_scalar(params, pair.x, tanh_x, 2.0 * (gx - pair.err_x), grad);
    backprop_scalar(params, pair.y, tanh_y, 2.0 * (gy - pair.err_y), grad);
    return regression_loss(gx, pair.err_x) + regression_loss(gy, pair.err_y);
  }

  double z = (gx - gy) / kSqrt2;
  double p_raw = std_normal_cdf(z);
  double p_hat = clamp_prob(p_raw, eps);
  double loss, dl_dp;
  if (kind == LossKind::kFidelity) {
    loss = fidelity_loss(pair.p, p_hat);
    // sqrt(p / p_hat) keeps the 0 * inf case away for binary p
    dl_dp = -0.5 * std::sqrt(pair.p / p_hat) + 0.5 * std::sqrt((1.0 - pair.p) / (1.0 - p_hat));
  } else {
    loss = classification_loss(pair.p, p_hat);
    dl_dp = -pair.p / p_hat + (1.0 - pair.p) / (1.0 - p_hat);
  }
  // The clamp is flat: outside (eps, 1-eps) the loss does not respond to the
  // parameters, so neither does the gradient.
  if (p_raw <= eps || p_raw >= 1.0 - eps) return loss;

  double dl_dz = dl_dp * std_normal_pdf(z);
  double upstream = dl_dz / kSqrt2;
  backprop_scalar(params, pair.x, tanh_x, upstream, grad);
  backprop_scalar(params, pair.y, tanh_y, -upstream, grad);
  return loss;
}

TrainResult train_ranker(const FeatureStore& store, const std::vector<PairLabel>& pairs,
                         const TrainConfig& config, Pooling pooling) {
  config.validate();
  if (pairs.empty()) throw Error("train: no pairs");

  const std::size_t d = store.dim();
  const std::size_t h = config.hidden_size;

  // Pooled features and absolute errors per id, resolved once.
  std::map<std::string, std::size_t> id_to_slot;
  std::vector<std::vector<double>> pooled;
  std::vector<double> abs_err;
  auto slot_of = [&](const std::string& id) {
    auto it = id_to_slot.find(id);
    if (it != id_to_slot.end()) return it->second;
    const VideoRecord* rec = store.find(id);
    if (!rec) throw Error("train: pair references unknown id '" + id + "'");
    std::size_t s = pooled.size();
    pooled.push_back(pool_features(*rec, pooling));
    double err = 0.0;
    if (rec->mos && rec->base_pred) err = std::abs(*rec->base_pred - *rec->mos);
    abs_err.push_back(err);
    id_to_slot.emplace(id, s);
    return s;
  };

  struct ResolvedPair {
    std::size_t x, y;
    double p;
  };
  std::vector<ResolvedPair> resolved;
  resolved.reserve(pairs.size());
  for (const PairLabel& pl : pairs) {
    if (pl.x_id == pl.y_id) throw Error("train: degenerate pair (" + pl.x_id + ", " + pl.x_id + ")");
    resolved.push_back(ResolvedPair{slot_of(pl.x_id), slot_of(pl.y_id), static_cast<double>(pl.p)});
  }

  Prng rng = Prng(config.seed).split("ranker-train");

  RankerParams params = RankerParams::zeros(d, h);
  double bound1 = 1.0 / std::sqrt(static_cast<double>(d));
  for (double& w : params.w1) w = rng.uniform(-bound1, bound1);
  for (double& b : params.b1) b = rng.uniform(-bound1, bound1);
  double bound2 = 1.0 / std::sqrt(static_cast<double>(h));
  for (double& w : params.w2) w = rng.uniform(-bound2, bound2);
  params.b2 = rng.uniform(-bound2, bound2);

  TrainResult result;
  std::vector<std::size_t> order(resolved.size());
  std::iota(order.begin(), order.end(), std::size_t{0});

  RankerParams grad = RankerParams::zeros(d, h);
  TrainPair tp;
  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    rng.shuffle(order);
    double loss_sum = 0.0;
    std::size_t cursor = 0;
    while (cursor < order.size()) {
      std::size_t batch = std::min(config.batch_pairs, order.size() - cursor);
      std::fill(grad.w1.begin(), grad.w1.end(), 0.0);
      std::fill(grad.b1.begin(), grad.b1.end(), 0.0);
      std::fill(grad.w2.begin(), grad.w2.end(), 0.0);
      grad.b2 = 0.0;
      for (std::size_t i = 0; i < batch; ++i) {
        const ResolvedPair& rp = resolved[order[cursor + i]];
        tp.x = pooled[rp.x];
        tp.y = pooled[rp.y];
        tp.p = rp.p;
        tp.err_x = abs_err[rp.x];
        tp.err_y = abs_err[rp.y];
        loss_sum += pair_loss_gradient(params, tp, config.loss_kind, config.prob_clamp, grad);
      }
      double scale = config.learning_rate / static_cast<double>(batch);
      for (std::size_t i = 0; i < params.w1.size(); ++i) params.w1[i] -= scale * grad.w1[i];
      for (std::size_t i = 0; i < params.b1.size(); ++i) params.b1[i] -= scale * grad.b1[i];
      for (std::size_t i = 0; i < params.w2.size(); ++i) params.w2[i] -= scale * grad.w2[i];
      params.b2 -= scale * grad.b2;
      cursor += batch;
    }
    result.epoch_mean_loss.push_back(loss_sum / static_cast<double>(resolved.size()));
  }

  result.params = std::move(params);
  return result;
}

ScoreMap score_pool(const RankerParams& params, const FeatureStore& store, Pooling pooling) {
  if (params.input_dim != store.dim()) {
    throw Error("score: checkpoint dimension " + std::to_string(params.input_dim) +
                " does not match store dimension " + std::to_string(store.dim()));
  }
  ScoreMap scores;
  std::vector<double> scratch;
  for (const VideoRecord& rec : store) {
    std::vector<double> v = pool_features(rec, pooling);
    scores[rec.id] = forward_with_hidden(params, v, scratch);
  }
  return scores;
}

void save_ranker(const RankerParams& params, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("checkpoint: cannot write " + path.string());
  out.write(kCheckpointMagic, 8);
  write_u32_le(out, 1);  // version
  write_u32_le(out, static_cast<std::uint32_t>(params.input_dim));
  write_u32_le(out, static_cast<std::uint32_t>(params.hidden));
  for (double v : params.w1) write_f64_le(out, v);
  for (double v : params.b1) write_f64_le(out, v);
  for (double v : params.w2) write_f64_le(out, v);
  write_f64_le(out, params.b2);
  if (!out) throw Error("checkpoint: failed writing " + path.string());
}

RankerParams load_ranker(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("checkpoint: cannot open " + path.string());
  char magic[8];
  in.read(magic, 8);
  if (!in || std::memcmp(magic, kCheckpointMagic, 8) != 0) {
    throw Error("checkpoint: bad magic in " + path.string());
  }
  std::uint32_t version = read_u32_le(in);
  if (version != 1) throw Error("checkpoint: unsupported version " + std::to_string(version));
  std::uint32_t d = read_u32_le(in);
  std::uint32_t h = read_u32_le(in);
  if (!in || d < 1 || h < 1) throw Error("checkpoint: corrupt header in " + path.string());
  RankerParams p = RankerParams::zeros(d, h);
  for (double& v : p.w1) v = read_f64_le(in);
  for (double& v : p.b1) v = read_f64_le(in);
  for (double& v : p.w2) v = read_f64_le(in);
  p.b2 = read_f64_le(in);
  if (!in) throw Error("checkpoint: truncated file " + path.string());
  for (double v : p.w1) {
    if (!std::isfinite(v)) throw Error("checkpoint: non-finite weight in " + path.string());
  }
  return p;
}

void save_pair_labels(const std::vector<PairLabel>& pairs, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error("pair labels: cannot write " + path.string());
  out << "x_id,y_id,p\n";
  for (const PairLabel& pl : pairs) out << pl.x_id << ',' << pl.y_id << ',' << pl.p << '\n';
}

std::vector<PairLabel> load_pair_labels(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("pair labels: cannot open " + path.string());
  std::string line;
  if (!std::getline(in, line)) throw Error("pair labels: empty file " + path.string());
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != "x_id,y_id,p") {
    throw Error("pair labels: expected header 'x_id,y_id,p', got '" + line + "'");
  }
  std::vector<PairLabel> out;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::size_t c1 = line.find(',');
    std::size_t c2 = c1 == std::string::npos ? std::string::npos : line.find(',', c1 + 1);
    if (c2 == std::string::npos) {
      throw Error("pair labels: malformed line " + std::to_string(line_no));
    }
    PairLabel pl;
    pl.x_id = line.substr(0, c1);
    pl.y_id = line.substr(c1 + 1, c2 - c1 - 1);
    std::string p = line.substr(c2 + 1);
    if (p == "0") pl.p = 0;
    else if (p == "1") pl.p = 1;
    else throw Error("pair labels: p must be 0 or 1 on line " + std::to_string(line_no));
    if (pl.x_id.empty() || pl.y_id.empty() || pl.x_id == pl.y_id) {
      throw Error("pair labels: bad ids on line " + std::to_string(line_no));
    }
    out.push_back(std::move(pl));
  }
  return out;
}

}  // namespace vqsel
