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

#ifndef XMRS_MODEL_HPP_
#define XMRS_MODEL_HPP_

#include <array>
#include <map>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "xmrs/autodiff.hpp"
#include "xmrs/common.hpp"
#include "xmrs/config.hpp"
#include "xmrs/data.hpp"
#include "xmrs/encoder.hpp"
#include "xmrs/modality.hpp"
#include "xmrs/objective.hpp"
#include "xmrs/prompts.hpp"
#include "xmrs/retrieval.hpp"

namespace xmrs {

struct NamedParam {
  std::string name;
  ad::Var var;
};

struct SampleForward {
  ad::Var prediction;  // 1 x 1
  std::array<RetrievalSet, 3> retrieval;  // per target modality
  bool ccrl_skipped = false;
};

struct BatchForward {
  std::vector<SampleForward> samples;
  std::vector<ad::Var> predictions;
  std::vector<CcrlItem> ccrl_items;
  std::vector<InfoNceItem> infonce_items;
};

// The full architecture: retrieval projections, input projections, the
// hierarchical prompt bank, both context-generation networks, two CAE
// branches (modality-level and sample-level), and the fusion head. Ablation
// flags drop whole parameter groups at construction time; the six fusion
// streams always exist (an ablated branch passes its self-attended target
// through unchanged).
class Model {
 public:
  Model(const ModelConfig& cfg, const ModalityDims& dims)
      : cfg_(cfg), dims_(dims) {
    cfg_.validate();
    std::mt19937_64 rng(cfg_.seed);

    use_modality_ctx_ = !cfg_.ablated(Ablation::kNoMmg) &&
                        !cfg_.ablated(Ablation::kNoMcae);
    use_sample_ctx_ = !cfg_.ablated(Ablation::kNoSmg) &&
                      !cfg_.ablated(Ablation::kNoScae);

    const Eigen::Index dm = cfg_.d_model;
    const Eigen::Index ds = cfg_.d_shared;
    const Eigen::Index hidden = static_cast<Eigen::Index>(cfg_.ffn_mult) * dm;

    for (ModalityId m : kAllModalities) {
      const Eigen::Index native = dims_[index_of(m)].dim;
      const std::string mn(name_of(m));
      retrieval_proj_[index_of(m)] = {
          reg("retrieval_proj." + mn + ".weight", xavier(native, ds, rng)),
          reg("retrieval_proj." + mn + ".bias", Matrix::Zero(1, ds))};
      input_proj_[index_of(m)] = {
          reg("input_proj." + mn + ".weight", xavier(native, dm, rng)),
          reg("input_proj." + mn + ".bias", Matrix::Zero(1, dm))};
    }

    PromptBank bank = init_prompt_bank(cfg_.prompt_len, dm, rng());
    if (!cfg_.ablated(Ablation::kNoMmg)) {
      for (ModalityId m : kAllModalities) {
        prompts_.modality_prompts[index_of(m)] =
            reg("prompt.modality." + std::string(name_of(m)),
                std::move(bank.modality_prompts[index_of(m)]));
      }
    }
    if (!cfg_.ablated(Ablation::kNoSmg)) {
      for (ModalityId m : kAllModalities) {
        prompts_.sample_prompts[index_of(m)] =
            reg("prompt.sample." + std::string(name_of(m)),
                std::move(bank.sample_prompts[index_of(m)]));
      }
    }

    if (!cfg_.ablated(Ablation::kNoMmg)) {
      build_generator("gen.modality.", gen_modality_, rng);
    }
    if (!cfg_.ablated(Ablation::kNoSmg)) {
      build_generator("gen.sample.", gen_sample_, rng);
    }

    build_branch("cae.modality.", !cfg_.ablated(Ablation::kNoMcae),
                 self_modality_, cross_modality_, hidden, rng);
    build_branch("cae.sample.", !cfg_.ablated(Ablation::kNoScae),
                 self_sample_, cross_sample_, hidden, rng);

    fusion_.h1 = {reg("fusion.h1.weight", xavier(6 * dm, dm, rng)),
                  reg("fusion.h1.bias", Matrix::Zero(1, dm))};
    fusion_.h2 = {reg("fusion.h2.weight", xavier(dm, 1, rng)),
                  reg("fusion.h2.bias", Matrix::Zero(1, 1))};
  }

  Model(const Model&) = delete;
  Model& operator=(const Model&) = delete;
  Model(Model&&) = default;
  Model& operator=(Model&&) = default;

  const ModelConfig& config() const { return cfg_; }
  const ModalityDims& dims() const { return dims_; }
  const std::vector<NamedParam>& parameters() const { return params_; }

  std::size_t parameter_count() const {
    std::size_t n = 0;
    for (const auto& p : params_) n += static_cast<std::size_t>(p.var->value.size());
    return n;
  }

  std::map<std::string, Matrix> state() const {
    std::map<std::string, Matrix> s;
    for (const auto& p : params_) s[p.name] = p.var->value;
    return s;
  }

  void load_state(const std::map<std::string, Matrix>& state) {
    if (state.size() != params_.size()) {
      throw ValidationError("checkpoint parameter set does not match model");
    }
    for (auto& p : params_) {
      auto it = state.find(p.name);
      if (it == state.end()) {
        throw ValidationError("checkpoint missing parameter: " + p.name);
      }
      if (it->second.rows() != p.var->value.rows() ||
          it->second.cols() != p.var->value.cols()) {
        throw ValidationError("checkpoint shape mismatch for: " + p.name);
      }
      p.var->value = it->second;
    }
  }

  std::array<PoolProjection, 3> retrieval_projections() const {
    std::array<PoolProjection, 3> out;
    for (int m = 0; m < 3; ++m) {
      out[m].weight = retrieval_proj_[m].weight->value;
      out[m].bias = retrieval_proj_[m].bias->value.row(0);
    }
    return out;
  }

  MemoryBank make_memory_bank(const Dataset& train_split) const {
    return build_memory_bank(train_split, retrieval_projections());
  }

  ad::Var pooled_var(ModalityId m, const Matrix& features) const {
    const auto& p = retrieval_proj_[index_of(m)];
    return pooled_embedding_var(ad::constant(features), p.weight, p.bias);
  }

  // Training-mode forward: the batch is its own retrieval pool. Returns
  // per-sample predictions plus the wired contrastive terms.
  BatchForward forward_batch(const std::vector<const Sample*>& batch) {
    std::vector<PoolEntry> pool(batch.size());
    std::vector<std::array<ad::Var, 3>> emb(batch.size());
    for (std::size_t i = 0; i < batch.size(); ++i) {
      pool[i].sample = *batch[i];
      for (ModalityId m : kAllModalities) {
        emb[i][index_of(m)] = pooled_var(m, batch[i]->feature(m).data);
        pool[i].emb[index_of(m)] = emb[i][index_of(m)]->value.row(0);
      }
    }

    BatchForward out;
    out.samples.reserve(batch.size());
    for (std::size_t i = 0; i < batch.size(); ++i) {
      SampleForward sf;
      for (ModalityId ma : kAllModalities) {
        sf.retrieval[index_of(ma)] =
            retrieve(*batch[i], ma, pool[i].emb[index_of(ma)], pool,
                     RetrievalMode::kTrain);
        sf.ccrl_skipped |= sf.retrieval[index_of(ma)].degenerate;
      }

      CcrlItem item;
      item.skipped = sf.ccrl_skipped;
      if (!item.skipped) {
        const Polarity tpol = batch[i]->polarity();
        for (int a = 0; a < 3; ++a) {
          item.anchor[a] = emb[i][a];
          for (int b = 0; b < 3; ++b) {
            const auto& rs = sf.retrieval[a];
            item.positive[a][b] = emb[rs.positives[b]->pool_index][b];
            item.negative[a][b] = emb[rs.negatives[b]->pool_index][b];
          }
        }
        if (cfg_.contrastive == ContrastiveVariant::kInfoNce) {
          for (int a = 0; a < 3; ++a) {
            for (int b = 0; b < 3; ++b) {
              InfoNceItem nce;
              nce.anchor = emb[i][a];
              nce.positive = emb[sf.retrieval[a].positives[b]->pool_index][b];
              for (std::size_t q = 0; q < batch.size(); ++q) {
                if (q == i) continue;
                if (batch[q]->polarity() == opposite(tpol) &&
                    batch[q]->polarity() != Polarity::kNeutral) {
                  nce.negatives.push_back(emb[q][b]);
                }
              }
              out.infonce_items.push_back(std::move(nce));
            }
          }
        }
      }
      out.ccrl_items.push_back(std::move(item));

      sf.prediction = forward_sample(*batch[i], sf.retrieval);
      out.predictions.push_back(sf.prediction);
      out.samples.push_back(std::move(sf));
    }
    return out;
  }

  double predict_one(const Sample& s, const MemoryBank& bank) const {
    ad::NoGradGuard ng;
    std::array<RetrievalSet, 3> rs;
    for (ModalityId ma : kAllModalities) {
      RowVec e = pooled_var(ma, s.feature(ma).data)->value.row(0);
      rs[index_of(ma)] =
          retrieve(s, ma, e, bank.pool(), RetrievalMode::kInference);
    }
    return forward_sample(s, rs)->scalar();
  }

  std::vector<double> predict(const Dataset& ds, const MemoryBank& bank) const {
    std::vector<double> out(ds.size());
    parallel_for(ds.size(), [&](std::size_t i) {
      out[i] = predict_one(ds.samples[i], bank);
    });
    return out;
  }

  // Encodes one sample given its retrieval sets and fuses the six streams.
  ad::Var forward_sample(const Sample& s,
                         const std::array<RetrievalSet, 3>& retrieval) const {
    std::array<const Matrix*, 3> own_feats{};
    for (ModalityId m : kAllModalities) {
      own_feats[index_of(m)] = &s.feature(m).data;
    }

    std::array<ad::Var, 6> streams;  // t_m, v_m, a_m, t_s, v_s, a_s
    for (ModalityId m : kAllModalities) {
      const int i = index_of(m);
      const auto& ip = input_proj_[i];
      ad::Var h = ad::affine(ad::constant(s.feature(m).data), ip.weight, ip.bias);

      ad::Var mod_stream = self_attend(h, self_modality_[i]);
      if (use_modality_ctx_) {
        auto ctx = generate_modality_context(m, own_feats, prompts_, gen_modality_);
        mod_stream = cross_augment(mod_stream, ctx.context, cross_modality_[i]);
      }
      streams[i] = mod_stream;

      ad::Var samp_stream = self_attend(h, self_sample_[i]);
      if (use_sample_ctx_) {
        std::array<const Matrix*, 3> pos_feats{};
        for (int b = 0; b < 3; ++b) {
          const auto& ref = retrieval[i].positives[b];
          if (!ref) {
            throw InputError("forward: missing retrieved positive for sample '" +
                             s.id + "'");
          }
          pos_feats[b] = &ref->features.data;
        }
        auto ctx = generate_sample_context(m, pos_feats, prompts_, gen_sample_);
        samp_stream = cross_augment(samp_stream, ctx.context, cross_sample_[i]);
      }
      streams[3 + i] = samp_stream;
    }
    return fuse_and_predict(streams, fusion_);
  }

 private:
  static Matrix xavier(Eigen::Index fan_in, Eigen::Index fan_out,
                       std::mt19937_64& rng) {
    const double bound = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
    std::uniform_real_distribution<double> u(-bound, bound);
    Matrix m(fan_in, fan_out);
    for (Eigen::Index i = 0; i < fan_in; ++i)
      for (Eigen::Index j = 0; j < fan_out; ++j) m(i, j) = u(rng);
    return m;
  }

  ad::Var reg(const std::string& name, Matrix init) {
    ad::Var v = ad::parameter(std::move(init));
    params_.push_back({name, v});
    return v;
  }

  void build_generator(const std::string& prefix, GeneratorLevelVars& gen,
                       std::mt19937_64& rng) {
    const Eigen::Index dm = cfg_.d_model;
    for (ModalityId src : kAllModalities) {
      for (ModalityId tgt : kAllModalities) {
        const std::string base = prefix + std::string(name_of(src)) + "_to_" +
                                 std::string(name_of(tgt));
        const Eigen::Index native = dims_[index_of(src)].dim;
        gen.pair_proj[index_of(src)][index_of(tgt)] = {
            reg(base + ".weight", xavier(native, dm, rng)),
            reg(base + ".bias", Matrix::Zero(1, dm))};
      }
    }
    for (ModalityId tgt : kAllModalities) {
      const std::string base = prefix + "agg." + std::string(name_of(tgt));
      gen.aggregator[index_of(tgt)] = {reg(base + ".weight", xavier(dm, dm, rng)),
                                       reg(base + ".bias", Matrix::Zero(1, dm))};
    }
  }

  void build_branch(const std::string& prefix, bool with_cross,
                    std::array<SelfAttentionVars, 3>& self_vars,
                    std::array<CrossBlockVars, 3>& cross_vars,
                    Eigen::Index hidden, std::mt19937_64& rng) {
    const Eigen::Index dm = cfg_.d_model;
    for (ModalityId m : kAllModalities) {
      const std::string base = prefix + std::string(name_of(m));
      auto attn_affine = [&](const std::string& tag) {
        return AffineVars{reg(base + tag + ".weight", xavier(dm, dm, rng)),
                          reg(base + tag + ".bias", Matrix::Zero(1, dm))};
      };
      self_vars[index_of(m)] = {attn_affine(".self.q"), attn_affine(".self.k"),
                                attn_affine(".self.v")};
      if (!with_cross) continue;
      CrossBlockVars cb;
      cb.q = attn_affine(".cross.q");
      cb.k = attn_affine(".cross.k");
      cb.v = attn_affine(".cross.v");
      cb.ln_gamma = reg(base + ".ln.gamma", Matrix::Ones(1, dm));
      cb.ln_beta = reg(base + ".ln.beta", Matrix::Zero(1, dm));
      cb.ffn1 = {reg(base + ".ffn1.weight", xavier(dm, hidden, rng)),
                 reg(base + ".ffn1.bias", Matrix::Zero(1, hidden))};
      cb.ffn2 = {reg(base + ".ffn2.weight", xavier(hidden, dm, rng)),
                 reg(base + ".ffn2.bias", Matrix::Zero(1, dm))};
      cross_vars[index_of(m)] = std::move(cb);
    }
  }

  ModelConfig cfg_;
  ModalityDims dims_;
  bool use_modality_ctx_ = true;
  bool use_sample_ctx_ = true;

  std::vector<NamedParam> params_;
  std::array<AffineVars, 3> retrieval_proj_;
  std::array<AffineVars, 3> input_proj_;
  PromptBankVars prompts_;
  GeneratorLevelVars gen_modality_;
  GeneratorLevelVars gen_sample_;
  std::array<SelfAttentionVars, 3> self_modality_;
  std::array<SelfAttentionVars, 3> self_sample_;
  std::array<CrossBlockVars, 3> cross_modality_;
  std::array<CrossBlockVars, 3> cross_sample_;
  FusionHeadVars fusion_;
};

}  // namespace xmrs

#endif  // XMRS_MODEL_HPP_
