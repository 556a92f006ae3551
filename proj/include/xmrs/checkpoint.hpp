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

#ifndef XMRS_CHECKPOINT_HPP_
#define XMRS_CHECKPOINT_HPP_

#include <filesystem>
#include <fstream>
#include <limits>
#include <map>
#include <string>
#include <utility>

#include <nlohmann/json.hpp>

#include "xmrs/common.hpp"
#include "xmrs/config.hpp"
#include "xmrs/data.hpp"
#include "xmrs/optimizer.hpp"

namespace xmrs {

// Self-describing training snapshot: config, dims, the resumable parameter
// and optimizer state, and the best-validation parameter snapshot.
struct Checkpoint {
  ModelConfig config;
  ModalityDims dims{};
  long step = 0;
  int epochs_done = 0;
  double best_valid_mae = std::numeric_limits<double>::infinity();
  int best_epoch = -1;
  std::map<std::string, Matrix> params;
  std::map<std::string, Matrix> best_params;
  OptimizerState opt;
};

namespace detail {

inline nlohmann::json matrix_to_json(const Matrix& m) {
  nlohmann::json j;
  j["rows"] = m.rows();
  j["cols"] = m.cols();
  nlohmann::json data = nlohmann::json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index c = 0; c < m.cols(); ++c) data.push_back(m(i, c));
  j["data"] = std::move(data);
  return j;
}

inline Matrix matrix_from_json(const nlohmann::json& j) {
  const Eigen::Index rows = j.at("rows").get<Eigen::Index>();
  const Eigen::Index cols = j.at("cols").get<Eigen::Index>();
  const auto& data = j.at("data");
  if (static_cast<Eigen::Index>(data.size()) != rows * cols) {
    throw ValidationError("checkpoint matrix size mismatch");
  }
  Matrix m(rows, cols);
  std::size_t at = 0;
  for (Eigen::Index i = 0; i < rows; ++i)
    for (Eigen::Index c = 0; c < cols; ++c) m(i, c) = data[at++].get<double>();
  return m;
}

inline nlohmann::json param_map_to_json(const std::map<std::string, Matrix>& ps) {
  nlohmann::json j = nlohmann::json::object();
  for (const auto& [name, m] : ps) j[name] = matrix_to_json(m);
  return j;
}

inline std::map<std::string, Matrix> param_map_from_json(const nlohmann::json& j) {
  std::map<std::string, Matrix> out;
  for (const auto& [name, m] : j.items()) out[name] = matrix_from_json(m);
  return out;
}

}  // namespace detail

inline nlohmann::json checkpoint_to_json(const Checkpoint& c) {
  nlohmann::json j;
  j["format"] = "xmrs-checkpoint";
  j["version"] = 1;
  j["config"] = config_to_json(c.config);
  nlohmann::json dims = nlohmann::json::object();
  for (ModalityId m : kAllModalities) {
    dims[std::string(name_of(m))] = {c.dims[index_of(m)].len,
                                     c.dims[index_of(m)].dim};
  }
  j["dims"] = dims;
  j["step"] = c.step;
  j["epochs_done"] = c.epochs_done;
  j["best_valid_mae"] = std::isfinite(c.best_valid_mae)
                            ? nlohmann::json(c.best_valid_mae)
                            : nlohmann::json(nullptr);
  j["best_epoch"] = c.best_epoch;
  j["params"] = detail::param_map_to_json(c.params);
  j["best_params"] = detail::param_map_to_json(c.best_params);
  j["opt"] = {{"t", c.opt.t},
              {"m", detail::param_map_to_json(c.opt.m)},
              {"v", detail::param_map_to_json(c.opt.v)}};
  return j;
}

inline Checkpoint checkpoint_from_json(const nlohmann::json& j) {
  if (!j.contains("format") || j.at("format") != "xmrs-checkpoint") {
    throw ValidationError("not an xmrs checkpoint");
  }
  Checkpoint c;
  c.config = config_from_json(j.at("config"));
  for (ModalityId m : kAllModalities) {
    const auto& d = j.at("dims").at(std::string(name_of(m)));
    c.dims[index_of(m)] = {d[0].get<Eigen::Index>(), d[1].get<Eigen::Index>()};
  }
  c.step = j.at("step").get<long>();
  c.epochs_done = j.at("epochs_done").get<int>();
  c.best_valid_mae = j.at("best_valid_mae").is_null()
                         ? std::numeric_limits<double>::infinity()
                         : j.at("best_valid_mae").get<double>();
  c.best_epoch = j.at("best_epoch").get<int>();
  c.params = detail::param_map_from_json(j.at("params"));
  c.best_params = detail::param_map_from_json(j.at("best_params"));
  c.opt.t = j.at("opt").at("t").get<long>();
  c.opt.m = detail::param_map_from_json(j.at("opt").at("m"));
  c.opt.v = detail::param_map_from_json(j.at("opt").at("v"));
  return c;
}

inline void save_checkpoint(const Checkpoint& c, const std::filesystem::path& path) {
  std::ofstream f(path, std::ios::trunc);
  if (!f) throw IoError("cannot write checkpoint: " + path.string());
  f << checkpoint_to_json(c).dump() << '\n';
  if (!f) throw IoError("checkpoint write failed: " + path.string());
}

inline Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream f(path);
  if (!f) throw IoError("cannot open checkpoint: " + path.string());
  nlohmann::json j;
  try {
    f >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError("bad checkpoint " + path.string() + ": " + e.what());
  }
  return checkpoint_from_json(j);
}

}  // namespace xmrs

#endif  // XMRS_CHECKPOINT_HPP_
