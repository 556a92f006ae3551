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

#ifndef XMRS_OPTIMIZER_HPP_
#define XMRS_OPTIMIZER_HPP_

#include <cmath>
#include <map>
#include <string>
#include <vector>

#include "xmrs/common.hpp"
#include "xmrs/config.hpp"
#include "xmrs/model.hpp"

namespace xmrs {

struct OptimizerState {
  long t = 0;
  std::map<std::string, Matrix> m;
  std::map<std::string, Matrix> v;
};

// Adam with decoupled weight decay and a global-norm gradient clip applied
// before the moment updates.
class AdamW {
 public:
  explicit AdamW(const ModelConfig& cfg)
      : lr_(cfg.learning_rate),
        beta1_(cfg.beta1),
        beta2_(cfg.beta2),
        eps_(cfg.adam_eps),
        weight_decay_(cfg.weight_decay),
        clip_(cfg.grad_clip) {}

  void step(const std::vector<NamedParam>& params) {
    double sq_norm = 0.0;
    for (const auto& p : params) sq_norm += p.var->grad.squaredNorm();
    const double norm = std::sqrt(sq_norm);
    const double scale = (clip_ > 0.0 && norm > clip_) ? clip_ / norm : 1.0;

    ++state_.t;
    const double bc1 = 1.0 - std::pow(beta1_, static_cast<double>(state_.t));
    const double bc2 = 1.0 - std::pow(beta2_, static_cast<double>(state_.t));
    for (const auto& p : params) {
      Matrix g = p.var->grad * scale;
      Matrix& m = moment(state_.m, p, 0.0);
      Matrix& v = moment(state_.v, p, 0.0);
      m = beta1_ * m + (1.0 - beta1_) * g;
      v = beta2_ * v + (1.0 - beta2_) * g.cwiseProduct(g);
      Matrix mhat = m / bc1;
      Matrix vhat = v / bc2;
      p.var->value -=
          lr_ * (mhat.array() / (vhat.array().sqrt() + eps_)).matrix();
      if (weight_decay_ > 0.0) p.var->value -= lr_ * weight_decay_ * p.var->value;
      p.var->zero_grad();
    }
  }

  const OptimizerState& state() const { return state_; }
  void load_state(OptimizerState s) { state_ = std::move(s); }

 private:
  Matrix& moment(std::map<std::string, Matrix>& store, const NamedParam& p,
                 double init) {
    auto it = store.find(p.name);
    if (it == store.end()) {
      it = store
               .emplace(p.name, Matrix::Constant(p.var->value.rows(),
                                                 p.var->value.cols(), init))
               .first;
    }
    return it->second;
  }

  double lr_, beta1_, beta2_, eps_, weight_decay_, clip_;
  OptimizerState state_;
};

}  // namespace xmrs

#endif  // XMRS_OPTIMIZER_HPP_
