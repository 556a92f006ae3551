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

#ifndef XMRS_METRICS_HPP_
#define XMRS_METRICS_HPP_

#include <algorithm>
#include <cmath>
#include <span>
#include <string>

#include <nlohmann/json.hpp>

#include "xmrs/common.hpp"

namespace xmrs {

// Binarization rule for Acc2/F1. kNonZero scores positive vs negative on
// samples with label != 0 (zeros excluded); kAllNonNegVsNeg scores >= 0 vs
// < 0 over every sample.
enum class Acc2Convention { kNonZero, kAllNonNegVsNeg };

struct EvalReport {
  double acc2 = 0.0;
  double f1 = 0.0;
  double mae = 0.0;
  double corr = 0.0;
  double acc7 = 0.0;
  std::size_t n_eval = 0;
  std::size_t n_excluded_zero = 0;
  bool corr_degenerate = false;  // constant input; corr reported as 0
};

// Integer sentiment bucket in [-3, 3], rounding halves away from zero.
inline int acc7_class(double v) {
  double r = std::round(v);
  r = std::clamp(r, -3.0, 3.0);
  return static_cast<int>(r);
}

inline EvalReport evaluate(std::span<const double> predictions,
                           std::span<const double> labels,
                           Acc2Convention convention = Acc2Convention::kNonZero) {
  if (predictions.size() != labels.size()) {
    throw InputError("evaluate: prediction/label length mismatch");
  }
  if (predictions.empty()) throw InputError("evaluate: empty input");

  const std::size_t n = predictions.size();
  EvalReport r;
  r.n_eval = n;

  double abs_err = 0.0;
  std::size_t acc7_hits = 0;
  for (std::size_t i = 0; i < n; ++i) {
    abs_err += std::abs(predictions[i] - labels[i]);
    if (acc7_class(predictions[i]) == acc7_class(labels[i])) ++acc7_hits;
  }
  r.mae = abs_err / static_cast<double>(n);
  r.acc7 = static_cast<double>(acc7_hits) / static_cast<double>(n);

  // Binary accuracy and F1. A prediction of exactly 0 counts as positive.
  std::size_t considered = 0, hits = 0, tp = 0, fp = 0, fn = 0;
  for (std::size_t i = 0; i < n; ++i) {
    bool in_subset = true;
    bool label_pos, pred_pos;
    if (convention == Acc2Convention::kNonZero) {
      if (labels[i] == 0.0) {
        ++r.n_excluded_zero;
        in_subset = false;
        label_pos = pred_pos = false;
      } else {
        label_pos = labels[i] > 0.0;
        pred_pos = predictions[i] >= 0.0;
      }
    } else {
      label_pos = labels[i] >= 0.0;
      pred_pos = predictions[i] >= 0.0;
    }
    if (!in_subset) continue;
    ++considered;
    if (label_pos == pred_pos) ++hits;
    if (pred_pos && label_pos) ++tp;
    if (pred_pos && !label_pos) ++fp;
    if (!pred_pos && label_pos) ++fn;
  }
  if (considered > 0) {
    r.acc2 = static_cast<double>(hits) / static_cast<double>(considered);
    double precision = (tp + fp) > 0 ? static_cast<double>(tp) / (tp + fp) : 0.0;
    double recall = (tp + fn) > 0 ? static_cast<double>(tp) / (tp + fn) : 0.0;
    r.f1 = (precision + recall) > 0.0
               ? 2.0 * precision * recall / (precision + recall)
               : 0.0;
  }

  // Pearson correlation; constant vectors are degenerate and report 0.
  if (n >= 2) {
    double mp = 0.0, ml = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      mp += predictions[i];
      ml += labels[i];
    }
    mp /= static_cast<double>(n);
    ml /= static_cast<double>(n);
    double cov = 0.0, vp = 0.0, vl = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      double dp = predictions[i] - mp;
      double dl = labels[i] - ml;
      cov += dp * dl;
      vp += dp * dp;
      vl += dl * dl;
    }
    if (vp < 1e-24 || vl < 1e-24) {
      r.corr = 0.0;
      r.corr_degenerate = true;
    } else {
      r.corr = cov / std::sqrt(vp * vl);
    }
  } else {
    r.corr = 0.0;
    r.corr_degenerate = true;
  }
  return r;
}

inline nlohmann::json report_to_json(const EvalReport& r) {
  return nlohmann::json{{"acc2", r.acc2},
                        {"f1", r.f1},
                        {"mae", r.mae},
                        {"corr", r.corr},
                        {"acc7", r.acc7},
                        {"n_eval", r.n_eval},
                        {"n_excluded_zero", r.n_excluded_zero},
                        {"corr_degenerate", r.corr_degenerate}};
}

}  // namespace xmrs

#endif  // XMRS_METRICS_HPP_
