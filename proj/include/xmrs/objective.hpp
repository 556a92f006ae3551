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

#ifndef XMRS_OBJECTIVE_HPP_
#define XMRS_OBJECTIVE_HPP_

#include <array>
#include <cmath>
#include <vector>

#include "xmrs/autodiff.hpp"
#include "xmrs/common.hpp"

namespace xmrs {

// Per-step loss record. l_total is the exact composition
// l_msa + lambda * l_ccrl in double arithmetic.
struct LossBreakdown {
  double l_msa = 0.0;
  double l_ccrl = 0.0;
  double l_total = 0.0;
  double lambda = 0.0;
  int skipped_contrastive_terms = 0;
};

inline LossBreakdown total_loss(double l_msa, double l_ccrl, double lambda,
                                int skipped_terms = 0) {
  if (lambda < 0.0) throw ConfigError("total_loss: lambda must be >= 0");
  LossBreakdown b;
  b.l_msa = l_msa;
  b.l_ccrl = l_ccrl;
  b.lambda = lambda;
  b.l_total = l_msa + lambda * l_ccrl;
  b.skipped_contrastive_terms = skipped_terms;
  return b;
}

// Graph-side composition matching total_loss bit for bit.
inline ad::Var combine_losses(const ad::Var& l_msa, const ad::Var& l_ccrl,
                              double lambda) {
  return ad::add(l_msa, ad::scale(l_ccrl, lambda));
}

// Mean squared error over scalar predictions.
inline ad::Var mse_loss(const std::vector<ad::Var>& predictions,
                        const std::vector<double>& labels) {
  if (predictions.empty() || predictions.size() != labels.size()) {
    throw InputError("mse_loss: need equal nonzero prediction/label counts");
  }
  ad::Var acc = ad::scalar_constant(0.0);
  for (std::size_t i = 0; i < predictions.size(); ++i) {
    acc = ad::add(acc, ad::sum_sq(ad::add_const(predictions[i], -labels[i])));
  }
  return ad::scale(acc, 1.0 / static_cast<double>(predictions.size()));
}

// The contrastive terms of one target sample: its pooled anchor per target
// modality, and the retrieved positive/negative pooled embeddings per
// (target modality, retrieved modality) pair. Samples whose retrieval
// degenerated carry skipped = true and contribute nothing.
struct CcrlItem {
  bool skipped = false;
  std::array<ad::Var, 3> anchor;                      // per m_alpha
  std::array<std::array<ad::Var, 3>, 3> positive;     // [m_alpha][m_beta]
  std::array<std::array<ad::Var, 3>, 3> negative;
};

// Squared positive distance plus hinge on the squared negative distance with
// margin gamma, summed over samples and all nine modality pairs, then
// averaged over contributing pairs.
inline ad::Var ccrl_loss(const std::vector<CcrlItem>& items, double gamma,
                         int* skipped_terms = nullptr) {
  if (gamma <= 0.0) throw ConfigError("ccrl_loss: gamma must be > 0");
  if (skipped_terms) *skipped_terms = 0;
  ad::Var acc = ad::scalar_constant(0.0);
  long contributing = 0;
  for (const auto& item : items) {
    if (item.skipped) {
      if (skipped_terms) *skipped_terms += 9;
      continue;
    }
    for (int a = 0; a < 3; ++a) {
      for (int b = 0; b < 3; ++b) {
        ad::Var pos_d2 = ad::squared_distance(item.anchor[a], item.positive[a][b]);
        ad::Var neg_d2 = ad::squared_distance(item.anchor[a], item.negative[a][b]);
        ad::Var hinge = ad::relu(ad::rsub_const(gamma, neg_d2));
        acc = ad::add(acc, ad::add(pos_d2, hinge));
        ++contributing;
      }
    }
  }
  if (contributing == 0) return ad::scalar_constant(0.0);
  return ad::scale(acc, 1.0 / static_cast<double>(contributing));
}

// One InfoNCE anchor: similarities are cosine in the shared space.
struct InfoNceItem {
  ad::Var anchor;
  ad::Var positive;
  std::vector<ad::Var> negatives;
};

// -log( exp(s+/t) / sum exp(s/t) ) for one anchor, from precomputed
// similarity scalars.
inline ad::Var infonce_from_sims(const ad::Var& pos_sim,
                                 const std::vector<ad::Var>& neg_sims,
                                 double temperature) {
  if (temperature <= 0.0) {
    throw ConfigError("infonce: temperature must be > 0");
  }
  const double inv_t = 1.0 / temperature;
  std::vector<ad::Var> scaled;
  scaled.reserve(neg_sims.size() + 1);
  scaled.push_back(ad::scale(pos_sim, inv_t));
  for (const auto& s : neg_sims) scaled.push_back(ad::scale(s, inv_t));
  ad::Var logits = ad::concat_cols(scaled);
  const double shift = logits->value.maxCoeff();
  ad::Var lse = ad::add_const(
      ad::log_(ad::sum_all(ad::exp_(ad::add_const(logits, -shift)))), shift);
  return ad::sub(lse, scaled[0]);
}

inline ad::Var infonce_loss(const std::vector<InfoNceItem>& items,
                            double temperature) {
  if (temperature <= 0.0) {
    throw ConfigError("infonce: temperature must be > 0");
  }
  if (items.empty()) return ad::scalar_constant(0.0);
  ad::Var acc = ad::scalar_constant(0.0);
  for (const auto& item : items) {
    ad::Var pos = ad::cosine(item.anchor, item.positive);
    std::vector<ad::Var> negs;
    negs.reserve(item.negatives.size());
    for (const auto& n : item.negatives) negs.push_back(ad::cosine(item.anchor, n));
    acc = ad::add(acc, infonce_from_sims(pos, negs, temperature));
  }
  return ad::scale(acc, 1.0 / static_cast<double>(items.size()));
}

}  // namespace xmrs

#endif  // XMRS_OBJECTIVE_HPP_
