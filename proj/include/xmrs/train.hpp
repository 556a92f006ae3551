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

#ifndef XMRS_TRAIN_HPP_
#define XMRS_TRAIN_HPP_

#include <filesystem>
#include <fstream>
#include <limits>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "xmrs/checkpoint.hpp"
#include "xmrs/common.hpp"
#include "xmrs/config.hpp"
#include "xmrs/data.hpp"
#include "xmrs/metrics.hpp"
#include "xmrs/model.hpp"
#include "xmrs/objective.hpp"
#include "xmrs/optimizer.hpp"

namespace xmrs {

struct TrainLogRow {
  long step = 0;
  double l_msa = 0.0;
  double l_ccrl = 0.0;
  double l_total = 0.0;
  int skipped_terms = 0;
};

struct TraceRow {
  long step = 0;
  std::string sample_id;
  ModalityId target_modality = ModalityId::kText;
  ModalityId retrieved_modality = ModalityId::kText;
  std::string pos_id;
  double pos_sim = 0.0;
  bool has_neg = false;
  std::string neg_id;
  double neg_sim = 0.0;
};

struct EpochValidRow {
  int epoch = 0;  // 1-based
  EvalReport report;
};

struct TrainOptions {
  std::filesystem::path out_dir;  // empty: keep everything in memory
  bool trace = false;
  const Checkpoint* resume = nullptr;
};

struct TrainResult {
  Checkpoint checkpoint;  // final state with embedded best-validation snapshot
  std::vector<TrainLogRow> log;
  std::vector<TraceRow> trace;
  std::vector<EpochValidRow> valid_history;
};

inline std::vector<double> labels_of(const Dataset& ds) {
  std::vector<double> out;
  out.reserve(ds.size());
  for (const auto& s : ds.samples) out.push_back(s.label);
  return out;
}

// Per-epoch shuffle seed derived from the run seed (splitmix64 step), so a
// resumed run replays the exact same batch order.
inline std::uint64_t epoch_shuffle_seed(std::uint64_t seed, int epoch) {
  std::uint64_t z =
      seed + 0x9E3779B97F4A7C15ull * static_cast<std::uint64_t>(epoch + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

inline void write_train_log_csv(const std::filesystem::path& path,
                                const std::vector<TrainLogRow>& rows) {
  std::ofstream f(path, std::ios::trunc);
  if (!f) throw IoError("cannot write training log: " + path.string());
  f << "step,l_msa,l_ccrl,l_total,skipped_terms\n";
  for (const auto& r : rows) {
    f << r.step << ',' << format_double(r.l_msa) << ',' << format_double(r.l_ccrl)
      << ',' << format_double(r.l_total) << ',' << r.skipped_terms << '\n';
  }
}

inline void write_trace_csv(const std::filesystem::path& path,
                            const std::vector<TraceRow>& rows) {
  std::ofstream f(path, std::ios::trunc);
  if (!f) throw IoError("cannot write trace: " + path.string());
  f << "step,sample_id,target_modality,retrieved_modality,pos_id,pos_sim,"
       "neg_id,neg_sim\n";
  for (const auto& r : rows) {
    f << r.step << ',' << r.sample_id << ',' << name_of(r.target_modality) << ','
      << name_of(r.retrieved_modality) << ',' << r.pos_id << ','
      << format_double(r.pos_sim) << ',';
    if (r.has_neg) {
      f << r.neg_id << ',' << format_double(r.neg_sim);
    } else {
      f << ',';
    }
    f << '\n';
  }
}

inline EvalReport evaluate_model(const Model& model, const Dataset& train_split,
                                 const Dataset& eval_split,
                                 Acc2Convention conv = Acc2Convention::kNonZero) {
  MemoryBank bank = model.make_memory_bank(train_split);
  std::vector<double> preds = model.predict(eval_split, bank);
  std::vector<double> lbls = labels_of(eval_split);
  return evaluate(preds, lbls, conv);
}

inline Model model_from_checkpoint(const Checkpoint& c, bool use_best = true) {
  Model m(c.config, c.dims);
  if (use_best && !c.best_params.empty()) {
    m.load_state(c.best_params);
  } else {
    m.load_state(c.params);
  }
  return m;
}

namespace detail {

inline void append_trace(std::vector<TraceRow>& trace, long step,
                         const BatchForward& fwd) {
  for (const auto& sf : fwd.samples) {
    for (const auto& rs : sf.retrieval) {
      for (ModalityId mb : kAllModalities) {
        const auto& pos = rs.positives[index_of(mb)];
        if (!pos) continue;
        TraceRow row;
        row.step = step;
        row.sample_id = rs.target_id;
        row.target_modality = rs.target_modality;
        row.retrieved_modality = mb;
        row.pos_id = pos->sample_id;
        row.pos_sim = pos->similarity;
        const auto& neg = rs.negatives[index_of(mb)];
        if (neg) {
          row.has_neg = true;
          row.neg_id = neg->sample_id;
          row.neg_sim = neg->similarity;
        }
        trace.push_back(std::move(row));
      }
    }
  }
}

inline nlohmann::json arch_fingerprint(const ModelConfig& c) {
  nlohmann::json j = config_to_json(c);
  j.erase("epochs");
  return j;
}

}  // namespace detail

// Runs the full training loop: mini-batch forward, combined objective,
// backprop, AdamW step, per-step logging, and per-epoch validation with
// best-MAE checkpoint selection. Deterministic for a fixed seed in
// single-threaded mode.
inline TrainResult train(const Dataset& train_set, const Dataset& valid_set,
                         const ModelConfig& cfg, const TrainOptions& opts = {}) {
  cfg.validate();
  if (train_set.size() < 2) {
    throw ConfigError("train: training set needs at least 2 samples");
  }

  Model model(cfg, train_set.dims);
  AdamW opt(cfg);
  long step = 0;
  int start_epoch = 0;
  double best_mae = std::numeric_limits<double>::infinity();
  int best_epoch = -1;
  std::map<std::string, Matrix> best_params;

  if (opts.resume != nullptr) {
    if (detail::arch_fingerprint(opts.resume->config) !=
        detail::arch_fingerprint(cfg)) {
      throw ConfigError("resume: checkpoint config does not match");
    }
    model.load_state(opts.resume->params);
    opt.load_state(opts.resume->opt);
    step = opts.resume->step;
    start_epoch = opts.resume->epochs_done;
    best_mae = opts.resume->best_valid_mae;
    best_epoch = opts.resume->best_epoch;
    best_params = opts.resume->best_params;
  }

  TrainResult res;
  for (int epoch = start_epoch; epoch < cfg.epochs; ++epoch) {
    auto batches = make_batches(train_set, cfg.batch_size,
                                epoch_shuffle_seed(cfg.seed, epoch));
    for (const auto& batch_idx : batches) {
      std::vector<const Sample*> batch;
      std::vector<double> batch_labels;
      batch.reserve(batch_idx.size());
      for (std::size_t idx : batch_idx) {
        batch.push_back(&train_set.samples[idx]);
        batch_labels.push_back(train_set.samples[idx].label);
      }

      BatchForward fwd = model.forward_batch(batch);
      ad::Var msa = mse_loss(fwd.predictions, batch_labels);

      int skipped = 0;
      for (const auto& item : fwd.ccrl_items) {
        if (item.skipped) skipped += 9;
      }
      ad::Var contrast;
      switch (cfg.contrastive) {
        case ContrastiveVariant::kCcrl:
          contrast = ccrl_loss(fwd.ccrl_items, cfg.gamma, &skipped);
          break;
        case ContrastiveVariant::kInfoNce:
          contrast = infonce_loss(fwd.infonce_items, cfg.infonce_temperature);
          break;
        case ContrastiveVariant::kNone:
          contrast = ad::scalar_constant(0.0);
          break;
      }
      ad::Var total = combine_losses(msa, contrast, cfg.lambda);
      LossBreakdown breakdown =
          total_loss(msa->scalar(), contrast->scalar(), cfg.lambda, skipped);
      ++step;
      if (!std::isfinite(breakdown.l_total)) {
        throw DivergenceError("training diverged: non-finite loss at step " +
                              std::to_string(step));
      }
      ad::backward(total);
      opt.step(model.parameters());

      res.log.push_back({step, breakdown.l_msa, breakdown.l_ccrl,
                         breakdown.l_total, breakdown.skipped_contrastive_terms});
      if (opts.trace) detail::append_trace(res.trace, step, fwd);
    }

    if (valid_set.size() > 0) {
      EvalReport report = evaluate_model(model, train_set, valid_set);
      res.valid_history.push_back({epoch + 1, report});
      if (report.mae < best_mae) {
        best_mae = report.mae;
        best_epoch = epoch + 1;
        best_params = model.state();
      }
    }
  }

  Checkpoint& ck = res.checkpoint;
  ck.config = cfg;
  ck.dims = train_set.dims;
  ck.step = step;
  ck.epochs_done = std::max(start_epoch, cfg.epochs);
  ck.best_valid_mae = best_mae;
  ck.best_epoch = best_epoch;
  ck.params = model.state();
  ck.best_params = best_params.empty() ? ck.params : std::move(best_params);
  ck.opt = opt.state();

  if (!opts.out_dir.empty()) {
    std::error_code ec;
    std::filesystem::create_directories(opts.out_dir, ec);
    write_train_log_csv(opts.out_dir / "train_log.csv", res.log);
    if (opts.trace) write_trace_csv(opts.out_dir / "trace.csv", res.trace);
    save_checkpoint(ck, opts.out_dir / "checkpoint.json");
  }
  return res;
}

}  // namespace xmrs

#endif  // XMRS_TRAIN_HPP_
