// Copyright 2026 The xmrs Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "xmrs/xmrs.hpp"

namespace fs = std::filesystem;

namespace {

xmrs::ModalityDims parse_dims(const std::string& arg) {
  // "text=8x16,visual=8x12,acoustic=8x10" (t=/v=/a= also accepted)
  xmrs::ModalityDims dims{};
  std::array<bool, 3> seen{};
  std::size_t at = 0;
  while (at < arg.size()) {
    std::size_t comma = arg.find(',', at);
    std::string tok = arg.substr(at, comma == std::string::npos
                                          ? std::string::npos
                                          : comma - at);
    std::size_t eq = tok.find('=');
    std::size_t x = tok.find('x', eq == std::string::npos ? 0 : eq);
    if (eq == std::string::npos || x == std::string::npos) {
      throw xmrs::ConfigError("bad --dims entry '" + tok +
                              "', expected name=LxD");
    }
    xmrs::ModalityId m = xmrs::modality_from_name(tok.substr(0, eq));
    long L = std::stol(tok.substr(eq + 1, x - eq - 1));
    long D = std::stol(tok.substr(x + 1));
    if (L < 1 || D < 1) throw xmrs::ConfigError("--dims values must be >= 1");
    dims[xmrs::index_of(m)] = {L, D};
    seen[xmrs::index_of(m)] = true;
    if (comma == std::string::npos) break;
    at = comma + 1;
  }
  for (xmrs::ModalityId m : xmrs::kAllModalities) {
    if (!seen[xmrs::index_of(m)]) {
      throw xmrs::ConfigError("--dims missing modality '" +
                              std::string(xmrs::name_of(m)) + "'");
    }
  }
  return dims;
}

xmrs::ModelConfig load_config_file(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw xmrs::IoError("cannot open config: " + path);
  nlohmann::json j;
  try {
    f >> j;
  } catch (const nlohmann::json::exception& e) {
    throw xmrs::ConfigError("bad config " + path + ": " + e.what());
  }
  return xmrs::config_from_json(j);
}

// Shared model/training flags. A --config JSON provides the base; explicit
// flags override individual fields.
struct ConfigFlags {
  std::string config_path;
  int d_model = 0, d_shared = 0, prompt_len = 0, batch_size = 0, epochs = 0,
      ffn_mult = 0;
  double learning_rate = 0, lambda = 0, gamma = 0, temperature = 0;
  std::uint64_t seed = 0;
  std::string contrastive, ablate_csv;

  CLI::Option *o_config = nullptr, *o_d_model = nullptr, *o_d_shared = nullptr,
              *o_prompt_len = nullptr, *o_batch = nullptr, *o_epochs = nullptr,
              *o_ffn = nullptr, *o_lr = nullptr, *o_lambda = nullptr,
              *o_gamma = nullptr, *o_temp = nullptr, *o_seed = nullptr,
              *o_contrastive = nullptr, *o_ablate = nullptr;

  void attach(CLI::App* cmd) {
    o_config = cmd->add_option("--config", config_path,
                               "JSON config file; flags below override it");
    o_d_model = cmd->add_option("--d-model", d_model, "model width");
    o_d_shared = cmd->add_option("--d-shared", d_shared, "shared retrieval dim");
    o_prompt_len = cmd->add_option("--prompt-len", prompt_len, "prompt length");
    o_batch = cmd->add_option("--batch-size", batch_size, "mini-batch size");
    o_epochs = cmd->add_option("--epochs", epochs, "training epochs");
    o_ffn = cmd->add_option("--ffn-mult", ffn_mult, "FFN hidden multiplier");
    o_lr = cmd->add_option("--lr", learning_rate, "learning rate");
    o_lambda = cmd->add_option("--lambda", lambda, "contrastive loss weight");
    o_gamma = cmd->add_option("--gamma", gamma, "contrastive margin");
    o_temp = cmd->add_option("--temperature", temperature, "InfoNCE temperature");
    o_seed = cmd->add_option("--seed", seed, "RNG seed");
    o_contrastive = cmd->add_option("--contrastive", contrastive,
                                    "contrastive variant: ccrl|infonce|none");
    o_ablate = cmd->add_option(
        "--ablate", ablate_csv,
        "comma-separated ablations: no_mmg,no_smg,no_mcae,no_scae");
  }

  xmrs::ModelConfig build() const {
    xmrs::ModelConfig cfg;
    if (*o_config) cfg = load_config_file(config_path);
    if (*o_d_model) cfg.d_model = d_model;
    if (*o_d_shared) cfg.d_shared = d_shared;
    if (*o_prompt_len) cfg.prompt_len = prompt_len;
    if (*o_batch) cfg.batch_size = batch_size;
    if (*o_epochs) cfg.epochs = epochs;
    if (*o_ffn) cfg.ffn_mult = ffn_mult;
    if (*o_lr) cfg.learning_rate = learning_rate;
    if (*o_lambda) cfg.lambda = lambda;
    if (*o_gamma) cfg.gamma = gamma;
    if (*o_temp) cfg.infonce_temperature = temperature;
    if (*o_seed) cfg.seed = seed;
    if (*o_contrastive) cfg.contrastive = xmrs::contrastive_from_name(contrastive);
    if (*o_ablate) cfg.ablations = xmrs::parse_ablations(ablate_csv);
    cfg.validate();
    return cfg;
  }
};

std::optional<xmrs::Dataset> try_load(const fs::path& dir, const std::string& split) {
  try {
    return xmrs::load_dataset(dir, split);
  } catch (const xmrs::IoError&) {
    return std::nullopt;
  }
}

std::string pick_eval_split(const fs::path& dir, const std::string& flag) {
  if (!flag.empty()) return flag;
  if (try_load(dir, "test")) return "test";
  return "valid";
}

struct RunOutcome {
  xmrs::EvalReport report;
  double initial_abs_gap = 0.0;  // |lambda * l_ccrl - l_msa| at the first step
  std::size_t trainable_params = 0;
};

RunOutcome train_and_eval(const fs::path& data_dir, const xmrs::ModelConfig& cfg,
                          const std::string& eval_split) {
  xmrs::Dataset train_ds = xmrs::load_dataset(data_dir, "train");
  auto valid_ds = try_load(data_dir, "valid");
  xmrs::Dataset eval_ds = xmrs::load_dataset(data_dir, eval_split);

  xmrs::Dataset empty_valid;
  empty_valid.split = xmrs::Split::kValid;
  empty_valid.dims = train_ds.dims;
  xmrs::TrainResult result =
      xmrs::train(train_ds, valid_ds ? *valid_ds : empty_valid, cfg);

  xmrs::Model model = xmrs::model_from_checkpoint(result.checkpoint);
  RunOutcome out;
  out.report = xmrs::evaluate_model(model, train_ds, eval_ds);
  if (!result.log.empty()) {
    out.initial_abs_gap =
        std::abs(cfg.lambda * result.log.front().l_ccrl - result.log.front().l_msa);
  }
  out.trainable_params = model.parameter_count();
  return out;
}

void write_metric_row(std::ofstream& f, const std::string& key,
                      const xmrs::EvalReport& r) {
  f << key << ',' << xmrs::format_double(r.acc2) << ','
    << xmrs::format_double(r.f1) << ',' << xmrs::format_double(r.mae) << ','
    << xmrs::format_double(r.corr) << ',' << xmrs::format_double(r.acc7);
}

int run_gen_synthetic(const std::string& dims_spec, long n, double signal,
                      std::uint64_t seed, const std::string& split,
                      const fs::path& out) {
  if (n < 0) throw xmrs::ConfigError("--n must be >= 0");
  xmrs::ModalityDims dims = parse_dims(dims_spec);
  xmrs::Dataset ds =
      xmrs::generate_synthetic(static_cast<std::size_t>(n), dims, signal, seed,
                               xmrs::split_from_name(split));
  xmrs::write_dataset(ds, out);
  std::cout << "wrote " << ds.size() << " samples to " << out.string() << " ("
            << split << ")\n";
  return 0;
}

int run_train(const fs::path& data_dir, const xmrs::ModelConfig& cfg,
              const fs::path& out_dir, bool trace, int repeats = 1) {
  xmrs::Dataset train_ds = xmrs::load_dataset(data_dir, "train");
  auto valid_ds = try_load(data_dir, "valid");
  xmrs::Dataset empty_valid;
  empty_valid.split = xmrs::Split::kValid;
  empty_valid.dims = train_ds.dims;

  if (repeats <= 1) {
    xmrs::TrainOptions opts;
    opts.out_dir = out_dir;
    opts.trace = trace;
    xmrs::TrainResult result =
        xmrs::train(train_ds, valid_ds ? *valid_ds : empty_valid, cfg, opts);

    nlohmann::json summary;
    summary["steps"] = result.checkpoint.step;
    summary["epochs_done"] = result.checkpoint.epochs_done;
    summary["best_epoch"] = result.checkpoint.best_epoch;
    summary["best_valid_mae"] =
        std::isfinite(result.checkpoint.best_valid_mae)
            ? nlohmann::json(result.checkpoint.best_valid_mae)
            : nlohmann::json(nullptr);
    summary["final_l_total"] =
        result.log.empty() ? 0.0 : result.log.back().l_total;
    summary["checkpoint"] = (out_dir / "checkpoint.json").string();
    std::cout << summary.dump(2) << '\n';
    return 0;
  }

  // Repeated-experiment protocol: seeds seed .. seed+k-1, mean and best of
  // the validation metrics, best-MAE checkpoint kept at the top level.
  if (!valid_ds) {
    throw xmrs::ConfigError("--repeats needs a 'valid' split to report metrics");
  }
  nlohmann::json runs = nlohmann::json::array();
  std::vector<xmrs::EvalReport> reports;
  double best_mae = std::numeric_limits<double>::infinity();
  for (int i = 0; i < repeats; ++i) {
    xmrs::ModelConfig run_cfg = cfg;
    run_cfg.seed = cfg.seed + static_cast<std::uint64_t>(i);
    xmrs::TrainOptions opts;
    opts.out_dir = out_dir / ("run" + std::to_string(i));
    opts.trace = trace;
    xmrs::TrainResult result = xmrs::train(train_ds, *valid_ds, run_cfg, opts);
    xmrs::Model model = xmrs::model_from_checkpoint(result.checkpoint);
    xmrs::EvalReport rep = xmrs::evaluate_model(model, train_ds, *valid_ds);
    nlohmann::json row = xmrs::report_to_json(rep);
    row["seed"] = run_cfg.seed;
    runs.push_back(row);
    reports.push_back(rep);
    if (rep.mae < best_mae) {
      best_mae = rep.mae;
      xmrs::save_checkpoint(result.checkpoint, out_dir / "checkpoint.json");
    }
  }
  auto agg = [&](auto get, bool higher_is_better) {
    double mean = 0.0;
    double best = get(reports.front());
    for (const auto& r : reports) {
      double v = get(r);
      mean += v;
      best = higher_is_better ? std::max(best, v) : std::min(best, v);
    }
    return std::make_pair(mean / static_cast<double>(reports.size()), best);
  };
  nlohmann::json summary;
  summary["runs"] = runs;
  auto [acc2_m, acc2_b] = agg([](const auto& r) { return r.acc2; }, true);
  auto [f1_m, f1_b] = agg([](const auto& r) { return r.f1; }, true);
  auto [mae_m, mae_b] = agg([](const auto& r) { return r.mae; }, false);
  auto [corr_m, corr_b] = agg([](const auto& r) { return r.corr; }, true);
  auto [acc7_m, acc7_b] = agg([](const auto& r) { return r.acc7; }, true);
  summary["mean"] = {{"acc2", acc2_m}, {"f1", f1_m},     {"mae", mae_m},
                     {"corr", corr_m}, {"acc7", acc7_m}};
  summary["best"] = {{"acc2", acc2_b}, {"f1", f1_b},     {"mae", mae_b},
                     {"corr", corr_b}, {"acc7", acc7_b}};
  summary["checkpoint"] = (out_dir / "checkpoint.json").string();
  std::cout << summary.dump(2) << '\n';
  return 0;
}

int run_eval(const fs::path& data_dir, const fs::path& ckpt_path,
             const std::string& split, const std::string& acc2_convention,
             const std::string& append_csv, bool use_final) {
  xmrs::Checkpoint ck = xmrs::load_checkpoint(ckpt_path);
  xmrs::Model model = xmrs::model_from_checkpoint(ck, !use_final);
  xmrs::Dataset train_ds = xmrs::load_dataset(data_dir, "train");
  xmrs::Dataset eval_ds = xmrs::load_dataset(data_dir, split);

  xmrs::Acc2Convention conv = xmrs::Acc2Convention::kNonZero;
  if (acc2_convention == "all") {
    conv = xmrs::Acc2Convention::kAllNonNegVsNeg;
  } else if (acc2_convention != "nonzero") {
    throw xmrs::ConfigError("--acc2-convention must be nonzero|all");
  }
  xmrs::EvalReport report = xmrs::evaluate_model(model, train_ds, eval_ds, conv);
  std::cout << xmrs::report_to_json(report).dump(2) << '\n';

  if (!append_csv.empty()) {
    bool fresh = !fs::exists(append_csv);
    std::ofstream f(append_csv, std::ios::app);
    if (!f) throw xmrs::IoError("cannot append to " + append_csv);
    if (fresh) f << "split,acc2,f1,mae,corr,acc7,n_eval\n";
    f << split << ',' << xmrs::format_double(report.acc2) << ','
      << xmrs::format_double(report.f1) << ',' << xmrs::format_double(report.mae)
      << ',' << xmrs::format_double(report.corr) << ','
      << xmrs::format_double(report.acc7) << ',' << report.n_eval << '\n';
  }
  return 0;
}

int run_ablate_suite(const fs::path& data_dir, const xmrs::ModelConfig& base,
                     const std::string& eval_split, const fs::path& out_csv) {
  std::vector<std::pair<std::string, std::set<xmrs::Ablation>>> variants = {
      {"full", {}},
      {"no_mmg", {xmrs::Ablation::kNoMmg}},
      {"no_smg", {xmrs::Ablation::kNoSmg}},
      {"no_mcae", {xmrs::Ablation::kNoMcae}},
      {"no_scae", {xmrs::Ablation::kNoScae}},
  };
  std::ofstream f(out_csv, std::ios::trunc);
  if (!f) throw xmrs::IoError("cannot write " + out_csv.string());
  f << "model,acc2,f1,mae,corr,acc7,trainable_params\n";
  for (const auto& [name, flags] : variants) {
    xmrs::ModelConfig cfg = xmrs::ablate(base, flags);
    RunOutcome outcome = train_and_eval(data_dir, cfg, eval_split);
    write_metric_row(f, name, outcome.report);
    f << ',' << outcome.trainable_params << '\n';
    std::cout << name << ": acc2=" << xmrs::format_double(outcome.report.acc2)
              << " params=" << outcome.trainable_params << '\n';
  }
  return 0;
}

int run_sweep_prompt_len(const fs::path& data_dir, const xmrs::ModelConfig& base,
                         const std::vector<int>& values,
                         const std::string& eval_split, const fs::path& out_csv) {
  std::ofstream f(out_csv, std::ios::trunc);
  if (!f) throw xmrs::IoError("cannot write " + out_csv.string());
  f << "swept_value,acc2,f1,mae,corr,acc7\n";
  for (int v : values) {
    xmrs::ModelConfig cfg = base;
    cfg.prompt_len = v;
    RunOutcome outcome = train_and_eval(data_dir, cfg, eval_split);
    write_metric_row(f, std::to_string(v), outcome.report);
    f << '\n';
    std::cout << "prompt_len=" << v
              << ": acc2=" << xmrs::format_double(outcome.report.acc2) << '\n';
  }
  return 0;
}

int run_sweep_lambda(const fs::path& data_dir, const xmrs::ModelConfig& base,
                     const std::vector<double>& values,
                     const std::string& eval_split, const fs::path& out_csv) {
  std::ofstream f(out_csv, std::ios::trunc);
  if (!f) throw xmrs::IoError("cannot write " + out_csv.string());
  f << "swept_value,acc2,f1,mae,corr,acc7,initial_abs_gap\n";
  for (double v : values) {
    xmrs::ModelConfig cfg = base;
    cfg.lambda = v;
    RunOutcome outcome = train_and_eval(data_dir, cfg, eval_split);
    write_metric_row(f, xmrs::format_double(v), outcome.report);
    f << ',' << xmrs::format_double(outcome.initial_abs_gap) << '\n';
    std::cout << "lambda=" << xmrs::format_double(v)
              << ": acc2=" << xmrs::format_double(outcome.report.acc2)
              << " gap=" << xmrs::format_double(outcome.initial_abs_gap) << '\n';
  }
  return 0;
}

int run_compare_contrastive(const fs::path& data_dir,
                            const xmrs::ModelConfig& base,
                            const std::string& eval_split,
                            const fs::path& out_csv) {
  std::ofstream f(out_csv, std::ios::trunc);
  if (!f) throw xmrs::IoError("cannot write " + out_csv.string());
  f << "swept_value,acc2,f1,mae,corr,acc7\n";
  for (auto variant :
       {xmrs::ContrastiveVariant::kCcrl, xmrs::ContrastiveVariant::kInfoNce}) {
    xmrs::ModelConfig cfg = base;
    cfg.contrastive = variant;
    RunOutcome outcome = train_and_eval(data_dir, cfg, eval_split);
    write_metric_row(f, xmrs::contrastive_name(variant), outcome.report);
    f << '\n';
    std::cout << xmrs::contrastive_name(variant)
              << ": acc2=" << xmrs::format_double(outcome.report.acc2) << '\n';
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{
      "xmrs: retrieval-augmented multimodal sentiment analysis harness.\n"
      "Set XMRS_THREADS to cap worker parallelism (0 = single-threaded\n"
      "deterministic mode, the default)."};
  app.require_subcommand(1);

  // gen-synthetic
  auto* gen = app.add_subcommand("gen-synthetic",
                                 "Generate a synthetic dataset split");
  long gen_n = 0;
  double gen_signal = 1.0;
  std::uint64_t gen_seed = 0;
  std::string gen_dims, gen_split = "train", gen_out;
  gen->add_option("--n", gen_n, "number of samples")->required();
  gen->add_option("--dims", gen_dims,
                  "per-modality shapes, e.g. text=8x16,visual=8x12,acoustic=8x10")
      ->required();
  gen->add_option("--signal", gen_signal, "label signal strength (>= 0)");
  gen->add_option("--seed", gen_seed, "RNG seed");
  gen->add_option("--split", gen_split, "split name: train|valid|test");
  gen->add_option("--out", gen_out, "output dataset directory")->required();

  // train
  auto* tr = app.add_subcommand("train", "Train a model on a dataset directory");
  std::string tr_data, tr_out = "out";
  int tr_repeats = 1;
  ConfigFlags tr_cfg;
  tr->add_option("--data", tr_data, "dataset directory")->required();
  tr->add_option("--out", tr_out,
                 "output directory (train_log.csv, checkpoint.json)");
  tr->add_option("--repeats", tr_repeats,
                 "train k times with seeds seed..seed+k-1 and report "
                 "mean/best validation metrics");
  tr_cfg.attach(tr);

  // eval
  auto* ev = app.add_subcommand(
      "eval", "Evaluate a checkpoint; prints a JSON report. Optional CSV row:\n"
              "split,acc2,f1,mae,corr,acc7,n_eval");
  std::string ev_data, ev_ckpt, ev_split = "test", ev_conv = "nonzero",
              ev_append;
  bool ev_final = false;
  ev->add_option("--data", ev_data, "dataset directory")->required();
  ev->add_option("--checkpoint", ev_ckpt, "checkpoint file")->required();
  ev->add_option("--split", ev_split, "split to evaluate");
  ev->add_option("--acc2-convention", ev_conv,
                 "nonzero (exclude label==0) or all (>=0 vs <0)");
  ev->add_option("--append-csv", ev_append, "append the report to this CSV");
  ev->add_flag("--use-final", ev_final,
               "evaluate the final state instead of the best-validation one");

  // ablate-suite
  auto* ab = app.add_subcommand(
      "ablate-suite",
      "Train the full model and the four single ablations. CSV schema:\n"
      "model,acc2,f1,mae,corr,acc7,trainable_params");
  std::string ab_data, ab_out = "ablate_results.csv", ab_eval_split;
  ConfigFlags ab_cfg;
  ab->add_option("--data", ab_data, "dataset directory")->required();
  ab->add_option("--out", ab_out, "output CSV path");
  ab->add_option("--eval-split", ab_eval_split,
                 "split to report (default: test, else valid)");
  ab_cfg.attach(ab);

  // sweep-prompt-len
  auto* sp = app.add_subcommand(
      "sweep-prompt-len", "Train per prompt length. CSV schema:\n"
                          "swept_value,acc2,f1,mae,corr,acc7");
  std::string sp_data, sp_out = "prompt_len_sweep.csv", sp_eval_split;
  std::vector<int> sp_values;
  ConfigFlags sp_cfg;
  sp->add_option("--data", sp_data, "dataset directory")->required();
  sp->add_option("--values", sp_values, "prompt lengths, e.g. 16,64,128,256")
      ->required()
      ->delimiter(',');
  sp->add_option("--out", sp_out, "output CSV path");
  sp->add_option("--eval-split", sp_eval_split,
                 "split to report (default: test, else valid)");
  sp_cfg.attach(sp);

  // sweep-lambda
  auto* sl = app.add_subcommand(
      "sweep-lambda",
      "Train per lambda. CSV schema:\n"
      "swept_value,acc2,f1,mae,corr,acc7,initial_abs_gap\n"
      "(initial_abs_gap = |lambda*l_ccrl - l_msa| at the first step)");
  std::string sl_data, sl_out = "lambda_sweep.csv", sl_eval_split;
  std::vector<double> sl_values;
  ConfigFlags sl_cfg;
  sl->add_option("--data", sl_data, "dataset directory")->required();
  sl->add_option("--values", sl_values, "lambda values, e.g. 0.0002,0.001,0.0018")
      ->required()
      ->delimiter(',');
  sl->add_option("--out", sl_out, "output CSV path");
  sl->add_option("--eval-split", sl_eval_split,
                 "split to report (default: test, else valid)");
  sl_cfg.attach(sl);

  // trace-retrieval
  auto* trc = app.add_subcommand(
      "trace-retrieval",
      "Train while logging per-step retrieval decisions. trace.csv schema:\n"
      "step,sample_id,target_modality,retrieved_modality,pos_id,pos_sim,"
      "neg_id,neg_sim");
  std::string trc_data, trc_out = "out";
  ConfigFlags trc_cfg;
  trc->add_option("--data", trc_data, "dataset directory")->required();
  trc->add_option("--out", trc_out,
                  "output directory (adds trace.csv next to the checkpoint)");
  trc_cfg.attach(trc);

  // compare-contrastive
  auto* cc = app.add_subcommand(
      "compare-contrastive",
      "Train with the margin-based contrastive loss vs InfoNCE. CSV schema:\n"
      "swept_value,acc2,f1,mae,corr,acc7");
  std::string cc_data, cc_out = "contrastive_compare.csv", cc_eval_split;
  ConfigFlags cc_cfg;
  cc->add_option("--data", cc_data, "dataset directory")->required();
  cc->add_option("--out", cc_out, "output CSV path");
  cc->add_option("--eval-split", cc_eval_split,
                 "split to report (default: test, else valid)");
  cc_cfg.attach(cc);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << e.what() << "\n(run with --help for usage)\n";
    return 2;
  }

  try {
    if (gen->parsed()) {
      return run_gen_synthetic(gen_dims, gen_n, gen_signal, gen_seed, gen_split,
                               gen_out);
    }
    if (tr->parsed()) {
      return run_train(tr_data, tr_cfg.build(), tr_out, false, tr_repeats);
    }
    if (ev->parsed()) {
      return run_eval(ev_data, ev_ckpt, ev_split, ev_conv, ev_append, ev_final);
    }
    if (ab->parsed()) {
      return run_ablate_suite(ab_data, ab_cfg.build(),
                              pick_eval_split(ab_data, ab_eval_split), ab_out);
    }
    if (sp->parsed()) {
      return run_sweep_prompt_len(sp_data, sp_cfg.build(), sp_values,
                                  pick_eval_split(sp_data, sp_eval_split), sp_out);
    }
    if (sl->parsed()) {
      return run_sweep_lambda(sl_data, sl_cfg.build(), sl_values,
                              pick_eval_split(sl_data, sl_eval_split), sl_out);
    }
    if (trc->parsed()) return run_train(trc_data, trc_cfg.build(), trc_out, true);
    if (cc->parsed()) {
      return run_compare_contrastive(cc_data, cc_cfg.build(),
                                     pick_eval_split(cc_data, cc_eval_split),
                                     cc_out);
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 2;
}
