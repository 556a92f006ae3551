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

#ifndef XMRS_ENCODER_HPP_
#define XMRS_ENCODER_HPP_

#include <array>
#include <cmath>
#include <utility>
#include <vector>

#include "xmrs/autodiff.hpp"
#include "xmrs/common.hpp"
#include "xmrs/modality.hpp"
#include "xmrs/prompts.hpp"

namespace xmrs {

// Single-head scaled dot-product attention parameters for one stream.
struct SelfAttentionVars {
  AffineVars q, k, v;  // each d_model -> d_model
};

// One cross-modal augmented encoder block: cross-attention (queries from the
// target, keys/values from a reference context) with residual, then a
// layer-normalized feed-forward sub-block with its own residual.
struct CrossBlockVars {
  AffineVars q, k, v;
  ad::Var ln_gamma, ln_beta;  // 1 x d_model
  AffineVars ffn1, ffn2;      // d_model -> h -> d_model
};

// softmax(Q K^T / sqrt(d)) V + x. Single head, no positional encoding,
// no masking (sequences are fixed-length and fully valid).
inline ad::Var self_attend(const ad::Var& x, const SelfAttentionVars& p) {
  const double scale = 1.0 / std::sqrt(static_cast<double>(x->value.cols()));
  ad::Var q = ad::affine(x, p.q.weight, p.q.bias);
  ad::Var k = ad::affine(x, p.k.weight, p.k.bias);
  ad::Var v = ad::affine(x, p.v.weight, p.v.bias);
  ad::Var attn = ad::softmax_rows(ad::scale(ad::matmul_nt(q, k), scale));
  return ad::add(ad::matmul(attn, v), x);
}

// Cross-attention augmentation. Output keeps the target's length for any
// context length >= 1.
inline ad::Var cross_augment(const ad::Var& target, const ad::Var& context,
                             const CrossBlockVars& p) {
  if (target->value.cols() != context->value.cols()) {
    throw ShapeError("cross_augment: target and context model dims differ");
  }
  const double scale = 1.0 / std::sqrt(static_cast<double>(target->value.cols()));
  ad::Var q = ad::affine(target, p.q.weight, p.q.bias);
  ad::Var k = ad::affine(context, p.k.weight, p.k.bias);
  ad::Var v = ad::affine(context, p.v.weight, p.v.bias);
  ad::Var attn = ad::softmax_rows(ad::scale(ad::matmul_nt(q, k), scale));
  ad::Var y0 = ad::add(ad::matmul(attn, v), target);
  ad::Var normed = ad::layer_norm_rows(y0, p.ln_gamma, p.ln_beta);
  ad::Var ffn = ad::affine(ad::gelu(ad::affine(normed, p.ffn1.weight, p.ffn1.bias)),
                           p.ffn2.weight, p.ffn2.bias);
  return ad::add(ffn, y0);
}

// Two-layer fusion head over the six enhanced streams.
struct FusionHeadVars {
  AffineVars h1;  // 6*d_model -> d_model
  AffineVars h2;  // d_model -> 1
};

// Mean-pool each stream, concatenate in the fixed order
// (t_m, v_m, a_m, t_s, v_s, a_s), then MLP with tanh to a scalar score.
inline ad::Var fuse_and_predict(const std::array<ad::Var, 6>& streams,
                                const FusionHeadVars& p) {
  std::vector<ad::Var> pooled;
  pooled.reserve(6);
  for (std::size_t i = 0; i < streams.size(); ++i) {
    if (!streams[i]) {
      throw InputError("fuse_and_predict: missing stream " + std::to_string(i));
    }
    pooled.push_back(ad::mean_rows(streams[i]));
  }
  ad::Var joint = ad::concat_cols(pooled);
  ad::Var hidden = ad::tanh_(ad::affine(joint, p.h1.weight, p.h1.bias));
  return ad::affine(hidden, p.h2.weight, p.h2.bias);
}

}  // namespace xmrs

#endif  // XMRS_ENCODER_HPP_
