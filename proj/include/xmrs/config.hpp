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

#ifndef XMRS_CONFIG_HPP_
#define XMRS_CONFIG_HPP_

#include <cstdint>
#include <set>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "xmrs/common.hpp"

namespace xmrs {

enum class ContrastiveVariant { kCcrl, kInfoNce, kNone };

inline std::string contrastive_name(ContrastiveVariant v) {
  switch (v) {
    case ContrastiveVariant::kCcrl: return "ccrl";
    case ContrastiveVariant::kInfoNce: return "infonce";
    case ContrastiveVariant::kNone: return "none";
  }
  return "?";
}

inline ContrastiveVariant contrastive_from_name(const std::string& s) {
  if (s == "ccrl") return ContrastiveVariant::kCcrl;
  if (s == "infonce") return ContrastiveVariant::kInfoNce;
  if (s == "none") return ContrastiveVariant::kNone;
  throw ConfigError("unknown contrastive variant: " + s);
}

// no_mmg / no_smg remove a context-generation level; no_mcae / no_scae
// remove the corresponding cross-modal augmented encoder blocks.
enum class Ablation { kNoMmg, kNoSmg, kNoMcae, kNoScae };

inline std::string ablation_name(Ablation a) {
  switch (a) {
    case Ablation::kNoMmg: return "no_mmg";
    case Ablation::kNoSmg: return "no_smg";
    case Ablation::kNoMcae: return "no_mcae";
    case Ablation::kNoScae: return "no_scae";
  }
  return "?";
}

inline Ablation ablation_from_name(const std::string& s) {
  if (s == "no_mmg") return Ablation::kNoMmg;
  if (s == "no_smg") return Ablation::kNoSmg;
  if (s == "no_mcae") return Ablation::kNoMcae;
  if (s == "no_scae") return Ablation::kNoScae;
  throw ConfigError("unknown ablation flag: " + s);
}

struct ModelConfig {
  int d_model = 128;
  int d_shared = 128;
  int prompt_len = 128;
  double gamma = 50.0;
  double lambda = 0.001;
  int batch_size = 8;
  double learning_rate = 1e-5;
  int epochs = 50;
  ContrastiveVariant contrastive = ContrastiveVariant::kCcrl;
  std::set<Ablation> ablations;
  std::uint64_t seed = 0;
  int ffn_mult = 4;
  double weight_decay = 0.01;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double adam_eps = 1e-8;
  double grad_clip = 1.0;
  double infonce_temperature = 0.07;

  bool ablated(Ablation a) const { return ablations.count(a) != 0; }

  void validate() const {
    if (d_model < 1 || d_shared < 1 || prompt_len < 1 || ffn_mult < 1) {
      throw ConfigError("model dims must be positive");
    }
    if (gamma <= 0.0) throw ConfigError("gamma must be > 0");
    if (lambda < 0.0) throw ConfigError("lambda must be >= 0");
    if (batch_size < 2) throw ConfigError("batch_size must be >= 2");
    if (learning_rate <= 0.0) throw ConfigError("learning_rate must be > 0");
    if (epochs < 0) throw ConfigError("epochs must be >= 0");
    if (infonce_temperature <= 0.0) throw ConfigError("temperature must be > 0");
    if (grad_clip <= 0.0) throw ConfigError("grad_clip must be > 0");
  }
};

// Applies ablation flags to a config. Unknown flag names raise ConfigError
// at parse time; an empty set leaves the config unchanged.
inline ModelConfig ablate(ModelConfig cfg, const std::set<Ablation>& flags) {
  cfg.ablations.insert(flags.begin(), flags.end());
  return cfg;
}

inline std::set<Ablation> parse_ablations(const std::string& csv) {
  std::set<Ablation> out;
  std::size_t at = 0;
  while (at <= csv.size()) {
    std::size_t c = csv.find(',', at);
    std::string tok = csv.substr(at, c == std::string::npos ? c : c - at);
    if (!tok.empty()) out.insert(ablation_from_name(tok));
    if (c == std::string::npos) break;
    at = c + 1;
  }
  return out;
}

inline nlohmann::json config_to_json(const ModelConfig& c) {
  nlohmann::json j;
  j["d_model"] = c.d_model;
  j["d_shared"] = c.d_shared;
  j["prompt_len"] = c.prompt_len;
  j["gamma"] = c.gamma;
  j["lambda"] = c.lambda;
  j["batch_size"] = c.batch_size;
  j["learning_rate"] = c.learning_rate;
  j["epochs"] = c.epochs;
  j["contrastive_variant"] = contrastive_name(c.contrastive);
  std::vector<std::string> abl;
  for (Ablation a : c.ablations) abl.push_back(ablation_name(a));
  j["ablations"] = abl;
  j["seed"] = c.seed;
  j["ffn_mult"] = c.ffn_mult;
  j["weight_decay"] = c.weight_decay;
  j["beta1"] = c.beta1;
  j["beta2"] = c.beta2;
  j["adam_eps"] = c.adam_eps;
  j["grad_clip"] = c.grad_clip;
  j["infonce_temperature"] = c.infonce_temperature;
  return j;
}

inline ModelConfig config_from_json(const nlohmann::json& j) {
  ModelConfig c;
  for (const auto& [key, value] : j.items()) {
    if (key == "d_model") c.d_model = value.get<int>();
    else if (key == "d_shared") c.d_shared = value.get<int>();
    else if (key == "prompt_len") c.prompt_len = value.get<int>();
    else if (key == "gamma") c.gamma = value.get<double>();
    else if (key == "lambda") c.lambda = value.get<double>();
    else if (key == "batch_size") c.batch_size = value.get<int>();
    else if (key == "learning_rate") c.learning_rate = value.get<double>();
    else if (key == "epochs") c.epochs = value.get<int>();
    else if (key == "contrastive_variant")
      c.contrastive = contrastive_from_name(value.get<std::string>());
    else if (key == "ablations") {
      for (const auto& a : value) c.ablations.insert(ablation_from_name(a.get<std::string>()));
    } else if (key == "seed") c.seed = value.get<std::uint64_t>();
    else if (key == "ffn_mult") c.ffn_mult = value.get<int>();
    else if (key == "weight_decay") c.weight_decay = value.get<double>();
    else if (key == "beta1") c.beta1 = value.get<double>();
    else if (key == "beta2") c.beta2 = value.get<double>();
    else if (key == "adam_eps") c.adam_eps = value.get<double>();
    else if (key == "grad_clip") c.grad_clip = value.get<double>();
    else if (key == "infonce_temperature") c.infonce_temperature = value.get<double>();
    else throw ConfigError("unknown config key: " + key);
  }
  c.validate();
  return c;
}

}  // namespace xmrs

#endif  // XMRS_CONFIG_HPP_
