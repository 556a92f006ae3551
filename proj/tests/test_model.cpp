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

#include "xmrs/model.hpp"

#include <gtest/gtest.h>

#include <random>

#include "oracles.hpp"
#include "test_util.hpp"

namespace xmrs {
namespace {

using testing::make_sample;
namespace oracle = testing::oracle;

const ModalityDims kDims = {{{3, 5}, {3, 4}, {3, 3}}};

ModelConfig tiny_config() {
  ModelConfig cfg;
  cfg.d_model = 6;
  cfg.d_shared = 4;
  cfg.prompt_len = 2;
  cfg.ffn_mult = 2;
  cfg.batch_size = 4;
  cfg.seed = 7;
  return cfg;
}

std::vector<Sample> mixed_batch(std::mt19937_64& rng, int n = 4) {
  std::vector<Sample> out;
  for (int i = 0; i < n; ++i) {
    double label = (i % 2 == 0) ? 1.0 + 0.3 * i : -1.0 - 0.3 * i;
    out.push_back(make_sample("b" + std::to_string(i), std::min(3.0, std::max(-3.0, label)),
                              kDims, rng));
  }
  return out;
}

std::vector<const Sample*> ptrs(const std::vector<Sample>& v) {
  std::vector<const Sample*> p;
  for (const auto& s : v) p.push_back(&s);
  return p;
}

// Recomposes the whole per-sample pipeline from the model's named parameters
// with the straight-line oracles.
double oracle_forward(const std::map<std::string, Matrix>& st,
                      const ModelConfig& cfg, const Sample& s,
                      const std::array<RetrievalSet, 3>& rs) {
  auto W = [&](const std::string& name) -> const Matrix& {
    auto it = st.find(name);
    EXPECT_TRUE(it != st.end()) << "missing param " << name;
    return it->second;
  };
  auto B = [&](const std::string& name) -> RowVec { return W(name).row(0); };

  const bool mod_ctx =
      !cfg.ablated(Ablation::kNoMmg) && !cfg.ablated(Ablation::kNoMcae);
  const bool samp_ctx =
      !cfg.ablated(Ablation::kNoSmg) && !cfg.ablated(Ablation::kNoScae);

  auto cross_weights = [&](const std::string& base) {
    oracle::CrossBlockWeights w;
    w.wq = W(base + ".cross.q.weight");
    w.bq = B(base + ".cross.q.bias");
    w.wk = W(base + ".cross.k.weight");
    w.bk = B(base + ".cross.k.bias");
    w.wv = W(base + ".cross.v.weight");
    w.bv = B(base + ".cross.v.bias");
    w.ln_gamma = B(base + ".ln.gamma");
    w.ln_beta = B(base + ".ln.beta");
    w.w1 = W(base + ".ffn1.weight");
    w.b1 = B(base + ".ffn1.bias");
    w.w2 = W(base + ".ffn2.weight");
    w.b2 = B(base + ".ffn2.bias");
    return w;
  };

  std::vector<Matrix> streams_mod, streams_samp;
  for (ModalityId m : kAllModalities) {
    const std::string mn(name_of(m));
    Matrix h = oracle::affine(s.feature(m).data, W("input_proj." + mn + ".weight"),
                              B("input_proj." + mn + ".bias"));
    const std::string mbase = "cae.modality." + mn;
    Matrix sm = oracle::attention(h, h, W(mbase + ".self.q.weight"),
                                  B(mbase + ".self.q.bias"),
                                  W(mbase + ".self.k.weight"),
                                  B(mbase + ".self.k.bias"),
                                  W(mbase + ".self.v.weight"),
                                  B(mbase + ".self.v.bias"));
    if (mod_ctx) {
      std::vector<Matrix> sources;
      std::vector<Matrix> pw;
      std::vector<RowVec> pb;
      for (ModalityId src : kAllModalities) {
        sources.push_back(s.feature(src).data);
        const std::string pair = "gen.modality." + std::string(name_of(src)) +
                                 "_to_" + mn;
        pw.push_back(W(pair + ".weight"));
        pb.push_back(B(pair + ".bias"));
      }
      Matrix ctx = oracle::context_generation(
          W("prompt.modality." + mn), sources, pw, pb,
          W("gen.modality.agg." + mn + ".weight"),
          B("gen.modality.agg." + mn + ".bias"));
      sm = oracle::cross_block(sm, ctx, cross_weights(mbase));
    }
    streams_mod.push_back(sm);

    const std::string sbase = "cae.sample." + mn;
    Matrix ss = oracle::attention(h, h, W(sbase + ".self.q.weight"),
                                  B(sbase + ".self.q.bias"),
                                  W(sbase + ".self.k.weight"),
                                  B(sbase + ".self.k.bias"),
                                  W(sbase + ".self.v.weight"),
                                  B(sbase + ".self.v.bias"));
    if (samp_ctx) {
      std::vector<Matrix> sources;
      std::vector<Matrix> pw;
      std::vector<RowVec> pb;
      for (ModalityId src : kAllModalities) {
        sources.push_back(rs[index_of(m)].positives[index_of(src)]->features.data);
        const std::string pair =
            "gen.sample." + std::string(name_of(src)) + "_to_" + mn;
        pw.push_back(W(pair + ".weight"));
        pb.push_back(B(pair + ".bias"));
      }
      Matrix ctx = oracle::context_generation(
          W("prompt.sample." + mn), sources, pw, pb,
          W("gen.sample.agg." + mn + ".weight"),
          B("gen.sample.agg." + mn + ".bias"));
      ss = oracle::cross_block(ss, ctx, cross_weights(sbase));
    }
    streams_samp.push_back(ss);
  }
  std::vector<Matrix> all = streams_mod;
  all.insert(all.end(), streams_samp.begin(), streams_samp.end());
  Matrix y = oracle::fusion_head(all, W("fusion.h1.weight"), B("fusion.h1.bias"),
                                 W("fusion.h2.weight"), B("fusion.h2.bias"));
  return y(0, 0);
}

TEST(Model, ForwardSmokeProducesFiniteScalars) {
  std::mt19937_64 rng(101);
  Model model(tiny_config(), kDims);
  auto batch = mixed_batch(rng, 2);
  BatchForward fwd = model.forward_batch(ptrs(batch));
  ASSERT_EQ(fwd.predictions.size(), 2u);
  for (const auto& p : fwd.predictions) {
    EXPECT_TRUE(std::isfinite(p->scalar()));
    EXPECT_EQ(p->value.rows(), 1);
    EXPECT_EQ(p->value.cols(), 1);
  }
}

TEST(Model, ForwardMatchesFullPipelineOracle) {
  std::mt19937_64 rng(102);
  for (const auto& ablations :
       std::vector<std::set<Ablation>>{{},
                                       {Ablation::kNoMmg},
                                       {Ablation::kNoSmg},
                                       {Ablation::kNoMcae},
                                       {Ablation::kNoScae}}) {
    ModelConfig cfg = ablate(tiny_config(), ablations);
    Model model(cfg, kDims);
    auto batch = mixed_batch(rng);
    BatchForward fwd = model.forward_batch(ptrs(batch));
    auto st = model.state();
    for (std::size_t i = 0; i < batch.size(); ++i) {
      double expect = oracle_forward(st, cfg, batch[i], fwd.samples[i].retrieval);
      EXPECT_NEAR(fwd.predictions[i]->scalar(), expect, 1e-6)
          << "sample " << i << " ablations " << ablations.size();
    }
  }
}

TEST(Model, AblateWithEmptyFlagSetIsIdentity) {
  ModelConfig cfg = tiny_config();
  cfg.ablations = {Ablation::kNoSmg};
  ModelConfig same = ablate(cfg, {});
  EXPECT_EQ(config_to_json(same), config_to_json(cfg));
  ModelConfig more = ablate(cfg, {Ablation::kNoMcae});
  EXPECT_TRUE(more.ablated(Ablation::kNoSmg));
  EXPECT_TRUE(more.ablated(Ablation::kNoMcae));
  EXPECT_THROW(parse_ablations("no_mmg,bogus"), ConfigError);
}

TEST(Model, ParameterCountStrictlyOrderedUnderAblation) {
  const ModalityDims dims = kDims;
  auto count = [&](const std::set<Ablation>& flags) {
    return Model(ablate(tiny_config(), flags), dims).parameter_count();
  };
  const std::size_t full = count({});
  const std::size_t no_mmg = count({Ablation::kNoMmg});
  const std::size_t no_smg = count({Ablation::kNoSmg});
  const std::size_t no_mcae = count({Ablation::kNoMcae});
  const std::size_t no_scae = count({Ablation::kNoScae});
  EXPECT_LT(no_mmg, full);
  EXPECT_LT(no_smg, full);
  EXPECT_LT(no_mcae, full);
  EXPECT_LT(no_scae, full);
  const std::size_t both_m = count({Ablation::kNoMmg, Ablation::kNoMcae});
  EXPECT_LT(both_m, no_mmg);
  EXPECT_LT(both_m, no_mcae);
  const std::size_t both_s = count({Ablation::kNoSmg, Ablation::kNoScae});
  EXPECT_LT(both_s, no_smg);
  EXPECT_LT(both_s, no_scae);
}

TEST(Model, SameSeedSameParameters) {
  Model a(tiny_config(), kDims);
  Model b(tiny_config(), kDims);
  auto sa = a.state();
  auto sb = b.state();
  ASSERT_EQ(sa.size(), sb.size());
  for (const auto& [name, m] : sa) {
    EXPECT_EQ(m, sb.at(name)) << name;
  }
  ModelConfig other = tiny_config();
  other.seed = 8;
  Model c(other, kDims);
  EXPECT_NE(a.state().at("fusion.h1.weight"), c.state().at("fusion.h1.weight"));
}

TEST(Model, CcrlItemsWiredToRetrievalChoices) {
  std::mt19937_64 rng(103);
  Model model(tiny_config(), kDims);
  auto batch = mixed_batch(rng);
  BatchForward fwd = model.forward_batch(ptrs(batch));
  ASSERT_EQ(fwd.ccrl_items.size(), batch.size());
  for (std::size_t i = 0; i < batch.size(); ++i) {
    const auto& item = fwd.ccrl_items[i];
    ASSERT_FALSE(item.skipped);
    for (int a = 0; a < 3; ++a) {
      const auto& rs = fwd.samples[i].retrieval[a];
      for (int b = 0; b < 3; ++b) {
        // the positive embedding var is the pooled embedding of the chosen
        // pool sample for modality b
        std::size_t pidx = rs.positives[b]->pool_index;
        ad::Var expect = model.pooled_var(
            kAllModalities[b], batch[pidx].feature(kAllModalities[b]).data);
        EXPECT_LT(testing::max_abs_diff(item.positive[a][b]->value, expect->value),
                  1e-12);
        EXPECT_EQ(polarity_of(batch[pidx].label), polarity_of(batch[i].label));
      }
    }
  }
}

TEST(Model, InfoNceItemsOnlyForInfoNceVariant) {
  std::mt19937_64 rng(104);
  ModelConfig cfg = tiny_config();
  Model m1(cfg, kDims);
  auto batch = mixed_batch(rng);
  EXPECT_TRUE(m1.forward_batch(ptrs(batch)).infonce_items.empty());

  cfg.contrastive = ContrastiveVariant::kInfoNce;
  Model m2(cfg, kDims);
  BatchForward fwd = m2.forward_batch(ptrs(batch));
  EXPECT_EQ(fwd.infonce_items.size(), batch.size() * 9);
  for (const auto& item : fwd.infonce_items) {
    EXPECT_GE(item.negatives.size(), 1u);
  }
}

TEST(Model, PolarityPureBatchSkipsContrastive) {
  std::mt19937_64 rng(105);
  ModelConfig cfg = tiny_config();
  Model model(cfg, kDims);
  std::vector<Sample> batch;
  for (int i = 0; i < 3; ++i) {
    batch.push_back(make_sample("p" + std::to_string(i), 0.5 + 0.5 * i, kDims, rng));
  }
  BatchForward fwd = model.forward_batch(ptrs(batch));
  for (const auto& item : fwd.ccrl_items) EXPECT_TRUE(item.skipped);
  for (const auto& sf : fwd.samples) {
    EXPECT_TRUE(sf.ccrl_skipped);
    EXPECT_TRUE(std::isfinite(sf.prediction->scalar()));
  }
}

TEST(Model, InferencePredictionsDeterministic) {
  std::mt19937_64 rng(106);
  Model model(tiny_config(), kDims);
  Dataset train;
  train.dims = kDims;
  for (int i = 0; i < 6; ++i) {
    train.samples.push_back(
        make_sample("t" + std::to_string(i), i % 2 ? 1.0 : -1.0, kDims, rng));
  }
  MemoryBank bank = model.make_memory_bank(train);
  Sample probe = make_sample("probe", 0.5, kDims, rng);
  double a = model.predict_one(probe, bank);
  double b = model.predict_one(probe, bank);
  EXPECT_EQ(a, b);
}

TEST(Model, ParallelPredictMatchesSerial) {
  std::mt19937_64 rng(109);
  Model model(tiny_config(), kDims);
  Dataset train;
  train.dims = kDims;
  for (int i = 0; i < 8; ++i) {
    train.samples.push_back(
        make_sample("t" + std::to_string(i), i % 2 ? 1.0 : -1.0, kDims, rng));
  }
  Dataset eval_set;
  eval_set.dims = kDims;
  for (int i = 0; i < 7; ++i) {
    eval_set.samples.push_back(
        make_sample("e" + std::to_string(i), i % 2 ? 2.0 : -0.7, kDims, rng));
  }
  setenv("XMRS_THREADS", "0", 1);
  MemoryBank bank = model.make_memory_bank(train);
  std::vector<double> serial = model.predict(eval_set, bank);
  setenv("XMRS_THREADS", "4", 1);
  MemoryBank bank_p = model.make_memory_bank(train);
  std::vector<double> parallel = model.predict(eval_set, bank_p);
  setenv("XMRS_THREADS", "0", 1);
  ASSERT_EQ(serial.size(), parallel.size());
  for (std::size_t i = 0; i < serial.size(); ++i) {
    EXPECT_EQ(serial[i], parallel[i]);  // scheduling cannot change results
  }
}

TEST(Model, StateRoundTripPreservesPredictions) {
  std::mt19937_64 rng(107);
  Model a(tiny_config(), kDims);
  auto batch = mixed_batch(rng);
  double base = a.forward_batch(ptrs(batch)).predictions[0]->scalar();

  ModelConfig cfg = tiny_config();
  cfg.seed = 12345;  // different init, then overwritten by load_state
  Model b(cfg, kDims);
  b.load_state(a.state());
  EXPECT_EQ(b.forward_batch(ptrs(batch)).predictions[0]->scalar(), base);

  auto broken = a.state();
  broken.erase("fusion.h2.bias");
  EXPECT_THROW(b.load_state(broken), ValidationError);
}

TEST(Model, GradientFlowsIntoAllGroups) {
  std::mt19937_64 rng(108);
  ModelConfig cfg = tiny_config();
  Model model(cfg, kDims);
  auto batch = mixed_batch(rng);
  BatchForward fwd = model.forward_batch(ptrs(batch));
  std::vector<double> labels;
  for (const auto& s : batch) labels.push_back(s.label);
  ad::Var msa = mse_loss(fwd.predictions, labels);
  int skipped = 0;
  ad::Var ccrl = ccrl_loss(fwd.ccrl_items, cfg.gamma, &skipped);
  ad::Var total = combine_losses(msa, ccrl, 0.01);
  for (const auto& p : model.parameters()) p.var->zero_grad();
  ad::backward(total);
  // every major group receives a nonzero gradient somewhere
  for (const std::string& prefix :
       {"retrieval_proj.", "input_proj.", "prompt.", "gen.", "cae.", "fusion."}) {
    double gmax = 0.0;
    for (const auto& p : model.parameters()) {
      if (p.name.rfind(prefix, 0) == 0) {
        gmax = std::max(gmax, p.var->grad.cwiseAbs().maxCoeff());
      }
    }
    EXPECT_GT(gmax, 0.0) << "no gradient reached group " << prefix;
  }
}

}  // namespace
}  // namespace xmrs
