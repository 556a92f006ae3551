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

#ifndef XMRS_PROMPTS_HPP_
#define XMRS_PROMPTS_HPP_

#include <array>
#include <cmath>
#include <random>
#include <utility>
#include <vector>

#include "xmrs/autodiff.hpp"
#include "xmrs/common.hpp"
#include "xmrs/modality.hpp"

namespace xmrs {

// Six trainable continuous prompt matrices: one per (level, modality).
struct PromptBank {
  std::array<Matrix, 3> modality_prompts;  // P_m, each p_len x d_model
  std::array<Matrix, 3> sample_prompts;    // P_s
  bool trainable = true;
};

// Half-width of the uniform initialization interval: sqrt(b / ((1+a^2) *
// fan_in)) with negative slope a = 5, constant b = 6, and fan_in equal to
// the prompt's feature dimension.
inline double prompt_init_bound(Eigen::Index d_model) {
  return std::sqrt(6.0 / (26.0 * static_cast<double>(d_model)));
}

inline PromptBank init_prompt_bank(Eigen::Index p_len, Eigen::Index d_model,
                                   std::uint64_t seed) {
  if (p_len < 1 || d_model < 1) {
    throw ConfigError("init_prompt_bank: p_len and d_model must be >= 1");
  }
  const double bound = prompt_init_bound(d_model);
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-bound, bound);
  auto draw = [&] {
    Matrix m(p_len, d_model);
    for (Eigen::Index i = 0; i < p_len; ++i)
      for (Eigen::Index j = 0; j < d_model; ++j) m(i, j) = u(rng);
    return m;
  };
  PromptBank bank;
  for (ModalityId m : kAllModalities) bank.modality_prompts[index_of(m)] = draw();
  for (ModalityId m : kAllModalities) bank.sample_prompts[index_of(m)] = draw();
  return bank;
}

// Graph-side parameter bundles used by the context generators.
struct AffineVars {
  ad::Var weight;
  ad::Var bias;
};

struct PromptBankVars {
  std::array<ad::Var, 3> modality_prompts;
  std::array<ad::Var, 3> sample_prompts;
};

// One level's generation network: nine cross-modal projections
// f_{src->tgt} (native dim -> d_model) plus a tokenwise aggregator
// f_{tva->tgt} (d_model -> d_model, tanh) per target modality.
struct GeneratorLevelVars {
  std::array<std::array<AffineVars, 3>, 3> pair_proj;  // [src][tgt]
  std::array<AffineVars, 3> aggregator;                // [tgt]
};

enum class ContextLevel { kModality, kSample };

struct ReferenceContext {
  ContextLevel level = ContextLevel::kModality;
  ModalityId target = ModalityId::kText;
  ad::Var context;  // (p_len + sum of source lengths) x d_model
};

namespace detail {

inline ReferenceContext generate_context(ContextLevel level, ModalityId target,
                                         const std::array<const Matrix*, 3>& sources,
                                         const ad::Var& prompt,
                                         const GeneratorLevelVars& params) {
  for (ModalityId m : kAllModalities) {
    if (sources[index_of(m)] == nullptr) {
      throw InputError("context generation: missing " +
                       std::string(name_of(m)) + " input for target " +
                       std::string(name_of(target)));
    }
  }
  const int tgt = index_of(target);
  std::vector<ad::Var> parts;
  parts.reserve(4);
  parts.push_back(prompt);
  for (ModalityId src : kAllModalities) {
    const auto& p = params.pair_proj[index_of(src)][tgt];
    parts.push_back(ad::affine(ad::constant(*sources[index_of(src)]), p.weight,
                               p.bias));
  }
  ad::Var stacked = ad::concat_rows(parts);
  const auto& agg = params.aggregator[tgt];
  ad::Var ctx = ad::tanh_(ad::affine(stacked, agg.weight, agg.bias));
  return ReferenceContext{level, target, std::move(ctx)};
}

}  // namespace detail

// Modality-level reference context: the same sample's three modality
// sequences, projected into the target's model space and aggregated behind
// the modality-level prompt.
inline ReferenceContext generate_modality_context(
    ModalityId target, const std::array<const Matrix*, 3>& sample_features,
    const PromptBankVars& bank, const GeneratorLevelVars& theta_m) {
  return detail::generate_context(ContextLevel::kModality, target,
                                  sample_features,
                                  bank.modality_prompts[index_of(target)],
                                  theta_m);
}

// Sample-level reference context: the retrieved POSITIVE references (one per
// retrieved modality), behind the sample-level prompt. Negatives never enter
// here; they only feed the contrastive loss.
inline ReferenceContext generate_sample_context(
    ModalityId target, const std::array<const Matrix*, 3>& retrieved_positives,
    const PromptBankVars& bank, const GeneratorLevelVars& theta_s) {
  return detail::generate_context(ContextLevel::kSample, target,
                                  retrieved_positives,
                                  bank.sample_prompts[index_of(target)],
                                  theta_s);
}

}  // namespace xmrs

#endif  // XMRS_PROMPTS_HPP_
