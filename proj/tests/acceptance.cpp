// Acceptance suite: one line per criterion, nonzero exit on any failure.
// Criteria 5-8 share a single 10-seed bench run on the default fixture.

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "oracles.hpp"
#include "vqsel/bench.hpp"
#include "vqsel/diversity.hpp"
#include "vqsel/feature_store.hpp"
#include "vqsel/gmad.hpp"
#include "vqsel/metrics.hpp"
#include "vqsel/ranker.hpp"
#include "vqsel/rng.hpp"
#include "vqsel/selection.hpp"

using namespace vqsel;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = true;
  std::ostringstream detail;
};

#define REQUIRE_ACC(out, cond, msg)                         \
  do {                                                      \
    if (!(cond)) {                                          \
      (out).pass = false;                                   \
      (out).detail << " [" << msg << "]";                   \
    }                                                       \
  } while (0)

double now_seconds() {
  using clock = std::chrono::steady_clock;
  static const clock::time_point t0 = clock::now();
  return std::chrono::duration<double>(clock::now() - t0).count();
}

int g_failures = 0;

void report(int index, const std::string& name, const Outcome& out, double seconds, double limit) {
  bool pass = out.pass && seconds < limit;
  if (!pass) ++g_failures;
  std::cout << "criterion " << index << " " << name << ": " << (pass ? "PASS" : "FAIL") << " ("
            << seconds << " s, limit " << limit << " s)" << out.detail.str();
  if (out.pass && seconds >= limit) std::cout << " [runtime limit exceeded]";
  std::cout << "\n"
            << std::flush;
}

// ---------------------------------------------------------------- criterion 1

Outcome criterion_loss_mathematics() {
  Outcome out;
  const double eps = 1e-6;

  for (int pi = 0; pi <= 1; ++pi) {
    for (int i = 0; i < 5000; ++i) {
      double p_hat = eps + (1.0 - 2 * eps) * i / 4999.0;
      double l = fidelity_loss(pi, p_hat);
      REQUIRE_ACC(out, l >= 0.0 && l <= 1.0, "fidelity loss outside [0,1]");
    }
  }

  Prng rng(2024);
  for (int i = 0; i < 2000; ++i) {
    double gx = rng.uniform(-6, 6), gy = rng.uniform(-6, 6);
    double s = pairwise_probability(gx, gy, eps) + pairwise_probability(gy, gx, eps);
    REQUIRE_ACC(out, std::abs(s - 1.0) <= 2e-6, "complement identity violated");
  }

  for (int i = 0; i < 1000; ++i) {
    double z = -6.0 + 12.0 * i / 999.0;
    REQUIRE_ACC(out, std::abs(std_normal_cdf(z) - oracles::phi_by_quadrature(z)) < 1e-6,
                "Phi deviates from the quadrature oracle");
  }
  return out;
}

// ---------------------------------------------------------------- criterion 2

double* param_at(RankerParams& p, std::size_t i) {
  if (i < p.w1.size()) return &p.w1[i];
  i -= p.w1.size();
  if (i < p.b1.size()) return &p.b1[i];
  i -= p.b1.size();
  if (i < p.w2.size()) return &p.w2[i];
  i -= p.w2.size();
  return &p.b2;
}

double grad_at(const RankerParams& g, std::size_t i) {
  if (i < g.w1.size()) return g.w1[i];
  i -= g.w1.size();
  if (i < g.b1.size()) return g.b1[i];
  i -= g.b1.size();
  if (i < g.w2.size()) return g.w2[i];
  i -= g.w2.size();
  return g.b2;
}

Outcome criterion_gradients() {
  Outcome out;
  Prng rng(515);
  const double step = 1e-5;
  double max_rel = 0.0;
  int done = 0;
  while (done < 100) {
    std::size_t d = 1 + rng.uniform_index(6);
    std::size_t h = 1 + rng.uniform_index(4);
    RankerParams p = RankerParams::zeros(d, h);
    for (auto& v : p.w1) v = rng.uniform(-0.8, 0.8);
    for (auto& v : p.b1) v = rng.uniform(-0.8, 0.8);
    for (auto& v : p.w2) v = rng.uniform(-0.8, 0.8);
    p.b2 = rng.uniform(-0.8, 0.8);

    TrainPair pair;
    pair.x.resize(d);
    pair.y.resize(d);
    for (auto& v : pair.x) v = rng.uniform(-1.5, 1.5);
    for (auto& v : pair.y) v = rng.uniform(-1.5, 1.5);
    pair.p = double(rng.uniform_index(2));
    pair.err_x = rng.uniform(0.0, 2.0);
    pair.err_y = rng.uniform(0.0, 2.0);
    LossKind kind = static_cast<LossKind>(done % 3);

    double gx = ranker_forward(p, pair.x), gy = ranker_forward(p, pair.y);
    double p_raw = std_normal_cdf((gx - gy) / std::sqrt(2.0));
    if (kind != LossKind::kRegression && (p_raw < 2e-6 || p_raw > 1.0 - 2e-6)) continue;

    RankerParams grad = RankerParams::zeros(d, h);
    pair_loss_gradient(p, pair, kind, 1e-6, grad);
    for (std::size_t i = 0; i < p.parameter_count(); ++i) {
      RankerParams plus = p, minus = p;
      *param_at(plus, i) += step;
      *param_at(minus, i) -= step;
      double fd = (pair_loss(plus, pair, kind, 1e-6) - pair_loss(minus, pair, kind, 1e-6)) /
                  (2 * step);
      double rel = std::abs(grad_at(grad, i) - fd) /
                   std::max(std::abs(grad_at(grad, i)) + std::abs(fd), 1e-3);
      max_rel = std::max(max_rel, rel);
    }
    ++done;
  }
  REQUIRE_ACC(out, max_rel < 1e-4, "max relative gradient error " << max_rel);
  return out;
}

// ---------------------------------------------------------------- criterion 3

Outcome criterion_chamfer() {
  Outcome out;
  Prng rng(616);
  for (int trial = 0; trial < 100; ++trial) {
    std::size_t d = 1 + rng.uniform_index(64);
    std::size_t ta = 1 + rng.uniform_index(32);
    std::size_t tb = 1 + rng.uniform_index(32);
    FeatureMatrix a(ta, d), b(tb, d);
    for (auto& v : a.data()) v = float(rng.uniform(-3, 3));
    for (auto& v : b.data()) v = float(rng.uniform(-3, 3));

    double ab = chamfer_distance(a, b);
    double ba = chamfer_distance(b, a);
    REQUIRE_ACC(out, std::abs(ab - ba) <= 1e-9, "asymmetric chamfer");
    double ref = oracles::naive_chamfer(a, b);
    REQUIRE_ACC(out, std::abs(ab - ref) <= 1e-9 * std::max(1.0, std::abs(ref)),
                "disagrees with the naive double loop");
    REQUIRE_ACC(out, chamfer_distance(a, a) == 0.0, "nonzero on identical sets");
  }
  return out;
}

// ---------------------------------------------------------------- criterion 4

Outcome criterion_greedy() {
  Outcome out;
  Prng rng(717);
  for (int trial = 0; trial < 50; ++trial) {
    std::size_t n = 4 + rng.uniform_index(9);  // <= 12
    std::size_t k = 1 + rng.uniform_index(std::min<std::size_t>(4, n));
    double lambda = rng.uniform(0.0, 1.5);
    FeatureStore store = oracles::random_store(rng, n, 2, 3);
    ScoreMap scores = oracles::random_scores(rng, store, -1, 2);

    SelectionConfig cfg;
    cfg.lambda = lambda;
    cfg.budget = Budget::of_count(k);
    SelectionResult greedy = greedy_select(store, scores, cfg);
    REQUIRE_ACC(out, greedy.selected == oracles::reference_greedy(store, scores, lambda, k),
                "greedy disagrees with the independent reference");

    std::vector<std::string> exact = exhaustive_select(store, scores, lambda, k);
    double greedy_obj = k == 1 ? set_difficulty(greedy.selected, scores)
                               : subset_objective(greedy.selected, scores, store, lambda);
    double exact_obj = k == 1 ? set_difficulty(exact, scores)
                              : subset_objective(exact, scores, store, lambda);
    REQUIRE_ACC(out, greedy_obj <= exact_obj + 1e-9, "greedy exceeds the exhaustive optimum");

    SelectionConfig topk_cfg;
    topk_cfg.lambda = 0.0;
    topk_cfg.budget = Budget::of_count(k);
    SelectionResult topk = greedy_select(store, scores, topk_cfg);
    std::vector<std::string> expected;
    for (const auto& [id, g] : scores) expected.push_back(id);
    std::stable_sort(expected.begin(), expected.end(), [&](const auto& a, const auto& b) {
      if (scores.at(a) != scores.at(b)) return scores.at(a) > scores.at(b);
      return a < b;
    });
    expected.resize(k);
    REQUIRE_ACC(out, topk.selected == expected, "lambda 0 is not top-k");
  }

  // the 4-item hand fixture
  FeatureStore pool(1);
  for (auto [id, x] :
       std::vector<std::pair<std::string, float>>{{"a", 0}, {"b", 10}, {"c", 0.1f}, {"d", 5}}) {
    FeatureMatrix m(1, 1);
    m.at(0, 0) = x;
    pool.add(VideoRecord{id, std::move(m), std::nullopt, std::nullopt});
  }
  ScoreMap g{{"a", 1.0}, {"b", 0.9}, {"c", 0.95}, {"d", 0.2}};
  SelectionConfig cfg;
  cfg.lambda = 1.0;
  cfg.budget = Budget::of_count(2);
  SelectionResult hand = greedy_select(pool, g, cfg);
  REQUIRE_ACC(out, (hand.selected == std::vector<std::string>{"a", "b"}),
              "hand fixture did not return [a, b]");
  return out;
}

// ------------------------------------------------------- criteria 5 through 8

BenchReport default_fixture_bench() {
  BenchConfig cfg;
  // default fixture: n_target = 2000, d = 16, T = 4, hard fraction 0.3
  cfg.num_seeds = 10;
  cfg.seed = 20240501;
  cfg.sweep_lambda = true;
  cfg.ablate_loss = true;
  return run_bench(cfg);
}

Outcome criterion_failure_identification(const BenchReport& r) {
  Outcome out;
  double mds = r.methods.at("mds").mean_fi_srcc;
  double random = r.methods.at("random").mean_fi_srcc;
  double topk = r.methods.at("topk_difficulty").mean_fi_srcc;
  out.detail << " mds=" << mds << " random=" << random << " topk=" << topk;
  REQUIRE_ACC(out, random - mds >= 0.15, "mds not lower than random by 0.15");
  REQUIRE_ACC(out, mds <= topk, "mds above topk");
  return out;
}

Outcome criterion_active_finetune(const BenchReport& r) {
  Outcome out;
  const MethodSummary& mds = r.methods.at("mds");
  const MethodSummary& random = r.methods.at("random");
  out.detail << " mds_after=" << mds.mean_ft_after << " random_after=" << random.mean_ft_after
             << " before=" << mds.mean_ft_before;
  REQUIRE_ACC(out, mds.mean_ft_after - random.mean_ft_after >= 0.02,
              "mds does not beat random by 0.02");
  REQUIRE_ACC(out, mds.mean_ft_after >= mds.mean_ft_before, "mds below its before value");
  REQUIRE_ACC(out, random.mean_ft_after >= random.mean_ft_before, "random below its before value");
  return out;
}

Outcome criterion_lambda_sweep(const BenchReport& r) {
  Outcome out;
  double at_zero = r.lambda_sweep.at("0").mean_ft_after;
  double at_default = r.lambda_sweep.at("0.25").mean_ft_after;
  out.detail << " ft_after(0)=" << at_zero << " ft_after(0.25)=" << at_default;
  REQUIRE_ACC(out, at_default >= at_zero, "lambda 0.25 below lambda 0");
  return out;
}

Outcome criterion_loss_ablation(const BenchReport& r) {
  Outcome out;
  double fid = r.loss_ablation.at("fidelity").mean_fi_srcc;
  double reg = r.loss_ablation.at("regression").mean_fi_srcc;
  out.detail << " fidelity=" << fid << " regression=" << reg;
  REQUIRE_ACC(out, fid < reg, "fidelity not below regression");
  return out;
}

// ---------------------------------------------------------------- criterion 9

Outcome criterion_gmad() {
  Outcome out;
  Prng rng(818);

  for (int trial = 0; trial < 10; ++trial) {
    std::size_t n = 20 + rng.uniform_index(181);  // <= 200
    ScoreMap defender, attacker;
    for (std::size_t i = 0; i < n; ++i) {
      char buf[16];
      std::snprintf(buf, sizeof(buf), "v%04zu", i);
      defender[buf] = rng.uniform(-2, 2);
      attacker[buf] = rng.uniform(0, 9);
    }
    GmadConfig cfg;
    cfg.num_levels = 1 + rng.uniform_index(6);
    cfg.level_tolerance = rng.uniform(0.03, 0.2);

    double lo = defender.begin()->second, hi = lo;
    for (const auto& [id, s] : defender) {
      lo = std::min(lo, s);
      hi = std::max(hi, s);
    }
    auto levels = gmad_pairs(defender, attacker, cfg);
    for (const auto& level : levels) {
      // exhaustive enumeration of admissible pairs
      std::vector<std::string> admissible;
      for (const auto& [id, s] : defender) {
        if (std::abs((s - lo) / (hi - lo) - level.center) <= cfg.level_tolerance) {
          admissible.push_back(id);
        }
      }
      double best = -1;
      for (std::size_t i = 0; i < admissible.size(); ++i) {
        for (std::size_t j = i + 1; j < admissible.size(); ++j) {
          best = std::max(best, std::abs(attacker.at(admissible[i]) - attacker.at(admissible[j])));
        }
      }
      if (best < 0) {
        REQUIRE_ACC(out, level.pairs.empty(), "pair returned for a starved level");
      } else {
        REQUIRE_ACC(out, level.pairs.size() == 1 && level.pairs[0].attacker_gap == best,
                    "level pair is not the exhaustive maximizer");
      }
    }
  }

  // exact affine invariance
  ScoreMap defender{{"a", 1.0}, {"b", 3.0}, {"c", 4.0}, {"d", 6.0}, {"e", 8.0}};
  ScoreMap attacker{{"a", 0.2}, {"b", 4.0}, {"c", 1.0}, {"d", 2.5}, {"e", 0.0}};
  GmadConfig cfg;
  cfg.num_levels = 4;
  cfg.level_tolerance = 0.25;
  auto base = gmad_pairs(defender, attacker, cfg);
  ScoreMap moved;
  for (const auto& [id, s] : defender) moved[id] = 2.0 * s + 1.0;
  auto shifted = gmad_pairs(moved, attacker, cfg);
  bool identical = base.size() == shifted.size();
  for (std::size_t i = 0; identical && i < base.size(); ++i) {
    identical = base[i].pairs.size() == shifted[i].pairs.size();
    for (std::size_t j = 0; identical && j < base[i].pairs.size(); ++j) {
      identical = base[i].pairs[j].id_a == shifted[i].pairs[j].id_a &&
                  base[i].pairs[j].id_b == shifted[i].pairs[j].id_b &&
                  base[i].pairs[j].defender_gap == shifted[i].pairs[j].defender_gap &&
                  base[i].pairs[j].attacker_gap == shifted[i].pairs[j].attacker_gap;
    }
  }
  REQUIRE_ACC(out, identical, "affine transform changed the output");

  // MOS-perfect model wins the tournament
  ScoreMap mos, perfect, noisy;
  for (int i = 0; i < 30; ++i) {
    std::string id = "v" + std::to_string(i);
    mos[id] = 1.0 + 0.13 * i;
    perfect[id] = mos[id];
    noisy[id] = 3.0 + 0.3 * rng.normal();
  }
  GmadReport report = gmad_tournament({{"perfect", perfect}, {"noisy", noisy}}, mos, GmadConfig{});
  REQUIRE_ACC(out, report.tournament.at("perfect").rank == 1, "MOS-perfect model not rank 1");
  return out;
}

// --------------------------------------------------------------- criterion 10

int run_cli(const std::string& cli, const std::string& args) {
  std::string cmd = cli + " " + args + " >/dev/null 2>&1";
  return WEXITSTATUS(std::system(cmd.c_str()));
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Outcome criterion_cli_determinism() {
  Outcome out;
  const char* cli_env = std::getenv("VQSEL_CLI");
  if (!cli_env) {
    out.pass = false;
    out.detail << " [VQSEL_CLI not set]";
    return out;
  }
  std::string cli = cli_env;

  fs::path root = fs::temp_directory_path() / "vqsel_acceptance_cli";
  fs::remove_all(root);
  fs::create_directories(root);

  std::ofstream(root / "cfg.json") << R"({"seed": 5, "synth": {"n_source": 140, "n_target": 140,)"
                                   << R"( "dim": 6, "frames": 2, "n_clusters": 8},)"
                                   << R"( "train": {"epochs": 3}})";
  std::string cfg = (root / "cfg.json").string();

  auto both = [&](const std::string& args_template) {
    for (int i = 1; i <= 2; ++i) {
      std::string args = args_template;
      std::string token = "{run}";
      for (std::size_t at = args.find(token); at != std::string::npos; at = args.find(token)) {
        args.replace(at, token.size(), std::to_string(i));
      }
      if (run_cli(cli, args) != 0) return false;
    }
    return true;
  };
  auto identical = [&](const fs::path& a, const fs::path& b) { return slurp(a) == slurp(b); };

  bool ok = both("gen-synth --config " + cfg + " --with-base-preds --out " +
                 (root / "gen{run}").string());
  REQUIRE_ACC(out, ok, "gen-synth failed");
  for (const char* pool : {"source", "target"}) {
    for (const char* file : {"manifest.json", "features.bin", "scores.csv"}) {
      REQUIRE_ACC(out, identical(root / "gen1" / pool / file, root / "gen2" / pool / file),
                  "gen-synth not byte-identical: " << pool << "/" << file);
    }
  }

  std::string manifest = (root / "gen1" / "source" / "manifest.json").string();
  std::string scores = (root / "gen1" / "source" / "scores.csv").string();
  ok = both("train-ranker --config " + cfg + " --manifest " + manifest + " --scores " + scores +
            " --out " + (root / "ckpt{run}.bin").string() + " --pairs-out " +
            (root / "pairs{run}.csv").string());
  REQUIRE_ACC(out, ok, "train-ranker failed");
  REQUIRE_ACC(out, identical(root / "ckpt1.bin", root / "ckpt2.bin"),
              "checkpoints not byte-identical");
  REQUIRE_ACC(out, identical(root / "pairs1.csv", root / "pairs2.csv"),
              "pair labels not byte-identical");

  std::string tmanifest = (root / "gen1" / "target" / "manifest.json").string();
  std::string tscores = (root / "gen1" / "target" / "scores.csv").string();
  ok = both("select --config " + cfg + " --manifest " + tmanifest + " --ckpt " +
            (root / "ckpt1.bin").string() + " --budget 0.1 --scores " + tscores +
            " --export-pairs " + (root / "sel_pairs{run}.csv").string() + " --out " +
            (root / "sel{run}.json").string());
  REQUIRE_ACC(out, ok, "select failed");
  REQUIRE_ACC(out, identical(root / "sel1.json", root / "sel2.json"),
              "selection reports not byte-identical");
  REQUIRE_ACC(out, identical(root / "sel_pairs1.csv", root / "sel_pairs2.csv"),
              "exported pairs not byte-identical");

  ok = both("eval --selection " + (root / "sel1.json").string() + " --scores " + tscores +
            " --out " + (root / "eval{run}.json").string());
  REQUIRE_ACC(out, ok, "eval failed");
  REQUIRE_ACC(out, identical(root / "eval1.json", root / "eval2.json"),
              "eval outputs not byte-identical");

  // two models from the target scores: base predictions and a shifted copy
  {
    FeatureStore target = load_feature_store(root / "gen1" / "target" / "manifest.json");
    apply_scores(target, load_scores(root / "gen1" / "target" / "scores.csv"));
    ScoreMap m1, m2;
    for (const VideoRecord& rec : target) {
      m1[rec.id] = *rec.base_pred;
      m2[rec.id] = 0.8 * *rec.base_pred + 0.3;
    }
    save_score_csv(m1, root / "m1.csv");
    save_score_csv(m2, root / "m2.csv");
  }
  ok = both("gmad --config " + cfg + " --mos " + tscores + " --model one=" +
            (root / "m1.csv").string() + " --model two=" + (root / "m2.csv").string() + " --out " +
            (root / "gmad{run}.json").string());
  REQUIRE_ACC(out, ok, "gmad failed");
  REQUIRE_ACC(out, identical(root / "gmad1.json", root / "gmad2.json"),
              "gmad reports not byte-identical");

  ok = both("bench --config " + cfg + " --seeds 2 --out-dir " + (root / "bench{run}").string());
  REQUIRE_ACC(out, ok, "bench failed");
  REQUIRE_ACC(out,
              identical(root / "bench1" / "bench_report.json", root / "bench2" / "bench_report.json"),
              "bench reports not byte-identical");
  REQUIRE_ACC(out,
              identical(root / "bench1" / "bench_report.csv", root / "bench2" / "bench_report.csv"),
              "bench csv not byte-identical");
  return out;
}

}  // namespace

int main() {
  struct Timed {
    Outcome out;
    double seconds;
  };
  auto timed = [](auto&& fn) {
    double t0 = now_seconds();
    Outcome out = fn();
    return Timed{std::move(out), now_seconds() - t0};
  };

  Timed c1 = timed(criterion_loss_mathematics);
  report(1, "loss-mathematics", c1.out, c1.seconds, 1.0);

  Timed c2 = timed(criterion_gradients);
  report(2, "gradient-correctness", c2.out, c2.seconds, 10.0);

  Timed c3 = timed(criterion_chamfer);
  report(3, "chamfer-correctness", c3.out, c3.seconds, 5.0);

  Timed c4 = timed(criterion_greedy);
  report(4, "greedy-correctness", c4.out, c4.seconds, 30.0);

  double bench_t0 = now_seconds();
  BenchReport bench = default_fixture_bench();
  double bench_seconds = now_seconds() - bench_t0;

  Outcome c5 = criterion_failure_identification(bench);
  report(5, "failure-identification-direction", c5, bench_seconds, 300.0);
  Outcome c6 = criterion_active_finetune(bench);
  report(6, "active-finetune-direction", c6, bench_seconds, 300.0);
  Outcome c7 = criterion_lambda_sweep(bench);
  report(7, "lambda-ablation-direction", c7, bench_seconds, 300.0);
  Outcome c8 = criterion_loss_ablation(bench);
  report(8, "loss-ablation-direction", c8, bench_seconds, 300.0);

  Timed c9 = timed(criterion_gmad);
  report(9, "gmad-correctness", c9.out, c9.seconds, 30.0);

  Timed c10 = timed(criterion_cli_determinism);
  report(10, "cli-determinism", c10.out, c10.seconds, 600.0);

  if (g_failures > 0) {
    std::cout << g_failures << " criterion(s) failed\n";
    return 1;
  }
  std::cout << "all criteria passed\n";
  return 0;
}
