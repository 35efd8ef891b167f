// vqsel: train a failure predictor over pooled video embeddings, select a
// budget-constrained hard-and-diverse subset, and evaluate the selection.

#include <charconv>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "vqsel/bench.hpp"
#include "vqsel/feature_store.hpp"
#include "vqsel/gmad.hpp"
#include "vqsel/metrics.hpp"
#include "vqsel/ranker.hpp"
#include "vqsel/rng.hpp"
#include "vqsel/run_config.hpp"
#include "vqsel/selection.hpp"
#include "vqsel/types.hpp"

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

std::string fmt(double v) {
  char buf[32];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

struct CommonOpts {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<double> lambda;
  std::optional<std::string> budget;
  std::optional<std::string> loss;
  std::optional<std::string> pooling;
  bool normalize_terms = false;
  bool l2_normalize = false;
};

void add_common(CLI::App* cmd, CommonOpts& o, bool selection_flags) {
  cmd->add_option("--config", o.config_path, "JSON run configuration file");
  cmd->add_option("--seed", o.seed, "global 64-bit seed (overrides config)");
  if (selection_flags) {
    cmd->add_option("--lambda", o.lambda, "difficulty-diversity trade-off (overrides config)");
    cmd->add_option("--budget", o.budget,
                    "labeling budget: fraction like 0.05 or absolute count like 25");
    cmd->add_flag("--normalize-terms", o.normalize_terms,
                  "min-max normalize both objective terms per iteration");
    cmd->add_flag("--l2-normalize", o.l2_normalize, "L2-normalize frames before Chamfer");
  }
  cmd->add_option("--loss", o.loss, "ranker loss: fidelity, classification or regression");
  cmd->add_option("--pooling", o.pooling, "frame pooling: mean or max");
}

vqsel::RunConfig resolve_config(const CommonOpts& o, const CLI::App* cmd) {
  vqsel::RunConfig cfg;
  if (!o.config_path.empty()) cfg = vqsel::load_run_config(o.config_path);
  if (o.seed) cfg.seed = *o.seed;
  if (o.lambda) {
    if (*o.lambda < 0.0) throw vqsel::Error("lambda must be >= 0");
    cfg.selection.lambda = *o.lambda;
  }
  if (o.budget) cfg.selection.budget = vqsel::parse_budget(*o.budget);
  if (o.loss) cfg.train.loss_kind = vqsel::parse_loss_kind(*o.loss);
  if (o.pooling) cfg.pooling = vqsel::parse_pooling(*o.pooling);
  const CLI::Option* norm = cmd->get_option_no_throw("--normalize-terms");
  if (norm && norm->count() > 0) cfg.selection.normalize_terms = o.normalize_terms;
  const CLI::Option* l2 = cmd->get_option_no_throw("--l2-normalize");
  if (l2 && l2->count() > 0) cfg.selection.l2_normalize_features = o.l2_normalize;
  return cfg;
}

json synth_config_json(const vqsel::SynthConfig& s) {
  return json{{"n_source", s.n_source},
              {"n_target", s.n_target},
              {"dim", s.dim},
              {"frames", s.frames},
              {"n_clusters", s.n_clusters},
              {"cluster_spread", s.cluster_spread},
              {"quality_scale", s.quality_scale},
              {"nonlinearity", s.nonlinearity},
              {"hard_region_fraction", s.hard_region_fraction},
              {"noise_sigma", s.noise_sigma},
              {"hard_quality_offset", s.hard_quality_offset},
              {"hard_feature_shift", s.hard_feature_shift}};
}

int cmd_gen_synth(const CommonOpts& common, const CLI::App* cmd, const std::string& out_dir,
                  bool with_base_preds) {
  vqsel::RunConfig cfg = resolve_config(common, cmd);
  vqsel::SynthConfig sc = cfg.synth;
  sc.seed = vqsel::derive_seed(cfg.seed, "gen-synth");

  auto [source, target] = vqsel::gen_synthetic(sc);
  if (with_base_preds) {
    vqsel::ToyBaseModel base = vqsel::fit_toy_base(source, cfg.bench_ridge_reg);
    for (const auto& [id, v] : vqsel::predict_toy(base, source)) source.set_base_pred(id, v);
    for (const auto& [id, v] : vqsel::predict_toy(base, target)) target.set_base_pred(id, v);
  }

  fs::path root(out_dir);
  vqsel::save_feature_store(source, root / "source");
  vqsel::save_scores(source, root / "source" / "scores.csv");
  vqsel::save_feature_store(target, root / "target");
  vqsel::save_scores(target, root / "target" / "scores.csv");

  json report;
  report["config"]["synth"] = synth_config_json(cfg.synth);
  report["config"]["seed"] = cfg.seed;
  report["config"]["with_base_preds"] = with_base_preds;
  report["source_records"] = source.size();
  report["target_records"] = target.size();
  std::ofstream out(root / "gen_report.json");
  if (!out) throw vqsel::Error("gen-synth: cannot write " + (root / "gen_report.json").string());
  out << report.dump(2) << "\n";

  std::cout << "wrote " << source.size() << " source and " << target.size()
            << " target records under " << root.string() << "\n";
  return 0;
}

int cmd_train_ranker(const CommonOpts& common, const CLI::App* cmd, const std::string& manifest,
                     const std::string& scores_path, const std::string& out_ckpt,
                     const std::string& pairs_in, const std::string& pairs_out) {
  vqsel::RunConfig cfg = resolve_config(common, cmd);

  vqsel::FeatureStore store = vqsel::load_feature_store(manifest);
  vqsel::apply_scores(store, vqsel::load_scores(scores_path));

  std::vector<vqsel::PairLabel> pairs;
  if (!pairs_in.empty()) {
    pairs = vqsel::load_pair_labels(pairs_in);
  } else {
    pairs = vqsel::make_pair_labels(store, vqsel::PairingStrategy{},
                                    vqsel::derive_seed(cfg.seed, "pairs"));
  }
  if (!pairs_out.empty()) vqsel::save_pair_labels(pairs, pairs_out);

  vqsel::TrainConfig tc = cfg.train;
  tc.seed = vqsel::derive_seed(cfg.seed, "ranker");
  vqsel::TrainResult result = vqsel::train_ranker(store, pairs, tc, cfg.pooling);
  vqsel::save_ranker(result.params, out_ckpt);

  std::cout << "pairs=" << pairs.size() << " epochs=" << tc.epochs << "\n";
  if (!result.epoch_mean_loss.empty()) {
    std::cout << "first_epoch_mean_loss=" << fmt(result.epoch_mean_loss.front()) << "\n";
    std::cout << "last_epoch_mean_loss=" << fmt(result.epoch_mean_loss.back()) << "\n";
  }
  std::cout << "checkpoint=" << out_ckpt << "\n";
  return 0;
}

int cmd_select(const CommonOpts& common, const CLI::App* cmd, const std::string& manifest,
               const std::string& ckpt, const std::string& out_json, const std::string& scores_path,
               const std::string& export_pairs) {
  vqsel::RunConfig cfg = resolve_config(common, cmd);

  vqsel::FeatureStore store = vqsel::load_feature_store(manifest);
  vqsel::RankerParams params = vqsel::load_ranker(ckpt);
  vqsel::ScoreMap g = vqsel::score_pool(params, store, cfg.pooling);

  vqsel::SelectionResult result = vqsel::greedy_select(store, g, cfg.selection);
  vqsel::save_selection_report(result, cfg.seed, out_json);

  if (!export_pairs.empty()) {
    if (scores_path.empty()) {
      throw vqsel::Error("select: --export-pairs needs --scores for the MOS values");
    }
    vqsel::apply_scores(store, vqsel::load_scores(scores_path));
    auto prefs = vqsel::export_pair_labels(result.selected, store);
    vqsel::save_pair_preferences(prefs, export_pairs);
    std::cout << "exported_pairs=" << prefs.size() << "\n";
  }

  std::cout << "selected=" << result.selected.size() << " report=" << out_json << "\n";
  return 0;
}

int cmd_eval(const CommonOpts& common, const CLI::App* cmd, const std::string& selection_json,
             const std::string& scores_path, const std::string& out_json) {
  vqsel::RunConfig cfg = resolve_config(common, cmd);

  std::vector<std::string> selected = vqsel::load_selected_ids(selection_json);
  vqsel::ScoreTable table = vqsel::load_scores(scores_path);
  vqsel::ScoreMap preds, mos;
  for (const auto& [id, row] : table) {
    if (row.mos) mos[id] = *row.mos;
    if (row.base_pred) preds[id] = *row.base_pred;
  }
  auto [s, p] = vqsel::eval_failure_identification(selected, preds, mos);
  std::cout << "srcc=" << fmt(s) << "\n";
  std::cout << "plcc=" << fmt(p) << "\n";

  if (!out_json.empty()) {
    json j;
    j["config"]["seed"] = cfg.seed;
    j["selected_count"] = selected.size();
    j["srcc"] = s;
    j["plcc"] = p;
    std::ofstream out(out_json);
    if (!out) throw vqsel::Error("eval: cannot write " + out_json);
    out << j.dump(2) << "\n";
  }
  return 0;
}

int cmd_gmad(const CommonOpts& common, const CLI::App* cmd, const std::string& mos_path,
             const std::vector<std::string>& model_specs, const std::string& out_json) {
  vqsel::RunConfig cfg = resolve_config(common, cmd);

  std::map<std::string, vqsel::ScoreMap> models;
  for (const std::string& spec : model_specs) {
    std::size_t eq = spec.find('=');
    if (eq == std::string::npos || eq == 0 || eq + 1 == spec.size()) {
      throw vqsel::Error("gmad: --model expects NAME=FILE, got '" + spec + "'");
    }
    std::string name = spec.substr(0, eq);
    if (models.count(name)) throw vqsel::Error("gmad: duplicate model name '" + name + "'");
    models[name] = vqsel::load_score_csv(spec.substr(eq + 1));
  }

  vqsel::ScoreTable table = vqsel::load_scores(mos_path);
  vqsel::ScoreMap mos;
  for (const auto& [id, row] : table) {
    if (row.mos) mos[id] = *row.mos;
  }

  vqsel::GmadReport report = vqsel::gmad_tournament(models, mos, cfg.gmad);
  vqsel::save_gmad_report(report, cfg.gmad, cfg.seed, out_json);

  for (const auto& [name, standing] : report.tournament) {
    std::cout << name << " wins=" << fmt(standing.wins) << " rank=" << standing.rank << "\n";
  }
  return 0;
}

int cmd_bench(const CommonOpts& common, const CLI::App* cmd, const std::string& out_dir,
              std::optional<std::size_t> seeds, bool sweep_lambda, bool ablate_loss) {
  vqsel::RunConfig cfg = resolve_config(common, cmd);

  vqsel::BenchConfig bc;
  bc.synth = cfg.synth;
  bc.train = cfg.train;
  bc.lambda = cfg.selection.lambda;
  bc.budget = cfg.selection.budget;
  bc.normalize_terms = cfg.selection.normalize_terms;
  bc.ridge_reg = cfg.bench_ridge_reg;
  bc.num_seeds = seeds.value_or(cfg.bench_num_seeds);
  bc.seed = cfg.seed;
  bc.sweep_lambda = sweep_lambda;
  bc.ablate_loss = ablate_loss;

  vqsel::BenchReport report = vqsel::run_bench(bc);

  fs::path root(out_dir);
  fs::create_directories(root);
  vqsel::save_bench_report(report, root / "bench_report.json", root / "bench_report.csv");

  for (const auto& [name, summary] : report.methods) {
    std::cout << name << " fi_srcc=" << fmt(summary.mean_fi_srcc)
              << " ft_before=" << fmt(summary.mean_ft_before)
              << " ft_after=" << fmt(summary.mean_ft_after) << "\n";
  }
  for (const auto& [name, summary] : report.lambda_sweep) {
    std::cout << "lambda=" << name << " fi_srcc=" << fmt(summary.mean_fi_srcc)
              << " ft_after=" << fmt(summary.mean_ft_after) << "\n";
  }
  for (const auto& [name, summary] : report.loss_ablation) {
    std::cout << "loss=" << name << " fi_srcc=" << fmt(summary.mean_fi_srcc)
              << " ft_after=" << fmt(summary.mean_ft_after) << "\n";
  }
  std::cout << "report=" << (root / "bench_report.json").string() << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"budgeted hard-and-diverse sample selection for quality models"};
  app.require_subcommand(1);

  // gen-synth
  auto* gen = app.add_subcommand("gen-synth", "generate a synthetic source/target pool pair");
  CommonOpts gen_opts;
  std::string gen_out;
  bool gen_with_preds = false;
  add_common(gen, gen_opts, false);
  gen->add_option("--out", gen_out, "output directory")->required();
  gen->add_flag("--with-base-preds", gen_with_preds,
                "fit the toy base model on source and fill base_pred columns");

  // train-ranker
  auto* train = app.add_subcommand("train-ranker", "train the difficulty predictor");
  CommonOpts train_opts;
  std::string train_manifest, train_scores, train_out, train_pairs_in, train_pairs_out;
  add_common(train, train_opts, false);
  train->add_option("--manifest", train_manifest, "pool manifest.json")->required();
  train->add_option("--scores", train_scores, "scores.csv with mos and base_pred")->required();
  train->add_option("--out", train_out, "checkpoint output path")->required();
  train->add_option("--pairs-in", train_pairs_in, "use these pair labels instead of constructing");
  train->add_option("--pairs-out", train_pairs_out, "also write the constructed pair labels");

  // select
  auto* sel = app.add_subcommand("select", "greedy budgeted subset selection");
  CommonOpts sel_opts;
  std::string sel_manifest, sel_ckpt, sel_out, sel_scores, sel_export;
  add_common(sel, sel_opts, true);
  sel->add_option("--manifest", sel_manifest, "pool manifest.json")->required();
  sel->add_option("--ckpt", sel_ckpt, "ranker checkpoint")->required();
  sel->add_option("--out", sel_out, "selection report JSON path")->required();
  sel->add_option("--scores", sel_scores, "scores.csv (required with --export-pairs)");
  sel->add_option("--export-pairs", sel_export, "write better/worse pair labels CSV here");

  // eval
  auto* ev = app.add_subcommand("eval", "failure identification on a selection report");
  CommonOpts ev_opts;
  std::string ev_selection, ev_scores, ev_out;
  add_common(ev, ev_opts, false);
  ev->add_option("--selection", ev_selection, "selection report JSON")->required();
  ev->add_option("--scores", ev_scores, "scores.csv with mos and base_pred")->required();
  ev->add_option("--out", ev_out, "optional JSON output");

  // gmad
  auto* gm = app.add_subcommand("gmad", "worst-case tournament between models");
  CommonOpts gm_opts;
  std::string gm_mos, gm_out;
  std::vector<std::string> gm_models;
  add_common(gm, gm_opts, false);
  gm->add_option("--mos", gm_mos, "scores.csv providing the MOS column")->required();
  gm->add_option("--model", gm_models, "model predictions as NAME=FILE (id,score csv); repeatable")
      ->required();
  gm->add_option("--out", gm_out, "gMAD report JSON path")->required();

  // bench
  auto* be = app.add_subcommand("bench", "synthetic end-to-end benchmark");
  CommonOpts be_opts;
  std::string be_out;
  std::optional<std::size_t> be_seeds;
  bool be_sweep = false, be_ablate = false;
  add_common(be, be_opts, true);
  be->add_option("--out-dir", be_out, "output directory")->required();
  be->add_option("--seeds", be_seeds, "number of independent seeds");
  be->add_flag("--sweep-lambda", be_sweep, "also sweep lambda over {0, 0.125, 0.25, 0.5}");
  be->add_flag("--ablate-loss", be_ablate, "also ablate the training loss");

  CLI11_PARSE(app, argc, argv);

  try {
    if (gen->parsed()) return cmd_gen_synth(gen_opts, gen, gen_out, gen_with_preds);
    if (train->parsed()) {
      return cmd_train_ranker(train_opts, train, train_manifest, train_scores, train_out,
                              train_pairs_in, train_pairs_out);
    }
    if (sel->parsed()) return cmd_select(sel_opts, sel, sel_manifest, sel_ckpt, sel_out, sel_scores, sel_export);
    if (ev->parsed()) return cmd_eval(ev_opts, ev, ev_selection, ev_scores, ev_out);
    if (gm->parsed()) return cmd_gmad(gm_opts, gm, gm_mos, gm_models, gm_out);
    if (be->parsed()) return cmd_bench(be_opts, be, be_out, be_seeds, be_sweep, be_ablate);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
