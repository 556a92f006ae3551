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

#ifndef XMRS_DATA_HPP_
#define XMRS_DATA_HPP_

#include <algorithm>
#include <array>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <optional>
#include <random>
#include <string>
#include <unordered_set>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "xmrs/common.hpp"
#include "xmrs/modality.hpp"

namespace xmrs {

struct SeqShape {
  Eigen::Index len = 0;
  Eigen::Index dim = 0;
  bool operator==(const SeqShape&) const = default;
};

// Per-modality (sequence length, feature dim), fixed for a whole split.
using ModalityDims = std::array<SeqShape, 3>;

struct FeatureSequence {
  Matrix data;  // rows = sequence positions, cols = feature dim
  ModalityId modality = ModalityId::kText;
};

// One video clip: pre-extracted feature sequences plus a continuous
// sentiment label in [-3, +3].
struct Sample {
  std::string id;
  std::array<FeatureSequence, 3> features;
  double label = 0.0;

  const FeatureSequence& feature(ModalityId m) const {
    return features[index_of(m)];
  }
  Polarity polarity() const { return polarity_of(label); }
};

enum class Split { kTrain, kValid, kTest };

inline std::string_view split_name(Split s) {
  switch (s) {
    case Split::kTrain: return "train";
    case Split::kValid: return "valid";
    case Split::kTest: return "test";
  }
  return "?";
}

inline Split split_from_name(std::string_view s) {
  if (s == "train") return Split::kTrain;
  if (s == "valid") return Split::kValid;
  if (s == "test") return Split::kTest;
  throw InputError("unknown split name: " + std::string(s));
}

struct Dataset {
  Split split = Split::kTrain;
  std::vector<Sample> samples;
  ModalityDims dims{};

  std::size_t size() const { return samples.size(); }
};

namespace detail {

inline void validate_sample(const Sample& s, const ModalityDims& dims) {
  if (!(s.label >= -3.0 && s.label <= 3.0)) {
    throw ValidationError("sample '" + s.id + "': label " +
                          format_double(s.label) + " outside [-3, 3]");
  }
  for (ModalityId m : kAllModalities) {
    const auto& fs = s.features[index_of(m)];
    const auto& want = dims[index_of(m)];
    if (fs.data.rows() != want.len || fs.data.cols() != want.dim) {
      throw ValidationError("sample '" + s.id + "': " + std::string(name_of(m)) +
                            " shape mismatch vs manifest");
    }
    if (!fs.data.allFinite()) {
      throw ValidationError("sample '" + s.id + "': non-finite value in " +
                            std::string(name_of(m)) + " features");
    }
  }
}

inline Matrix parse_feature_matrix(const nlohmann::json& rows,
                                   const std::string& sample_id,
                                   ModalityId m, const SeqShape& want) {
  if (!rows.is_array() || rows.empty()) {
    throw ValidationError("sample '" + sample_id + "': " +
                          std::string(name_of(m)) + " features missing or empty");
  }
  const Eigen::Index raw_len = static_cast<Eigen::Index>(rows.size());
  const Eigen::Index keep = std::min(raw_len, want.len);
  Matrix out = Matrix::Zero(want.len, want.dim);  // zero rows pad short inputs
  for (Eigen::Index i = 0; i < keep; ++i) {
    const auto& row = rows[static_cast<std::size_t>(i)];
    if (!row.is_array() ||
        static_cast<Eigen::Index>(row.size()) != want.dim) {
      throw ValidationError("sample '" + sample_id + "': " +
                            std::string(name_of(m)) +
                            " feature dim mismatch vs manifest");
    }
    for (Eigen::Index j = 0; j < want.dim; ++j) {
      const auto& cell = row[static_cast<std::size_t>(j)];
      if (!cell.is_number()) {
        throw ValidationError("sample '" + sample_id + "': non-numeric value in " +
                              std::string(name_of(m)) + " features");
      }
      out(i, j) = cell.get<double>();
    }
  }
  return out;
}

inline nlohmann::json feature_matrix_to_json(const Matrix& m) {
  nlohmann::json rows = nlohmann::json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    nlohmann::json row = nlohmann::json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace detail

inline ModalityDims dims_from_manifest(const nlohmann::json& manifest) {
  ModalityDims dims;
  if (!manifest.contains("dims")) throw ValidationError("manifest missing 'dims'");
  for (ModalityId m : kAllModalities) {
    const std::string key(name_of(m));
    const auto& d = manifest.at("dims");
    if (!d.contains(key) || !d.at(key).is_array() || d.at(key).size() != 2) {
      throw ValidationError("manifest dims." + key + " must be [L, d]");
    }
    dims[index_of(m)] = {d.at(key)[0].get<Eigen::Index>(),
                         d.at(key)[1].get<Eigen::Index>()};
    if (dims[index_of(m)].len < 1 || dims[index_of(m)].dim < 1) {
      throw ValidationError("manifest dims." + key + " must be >= 1");
    }
  }
  return dims;
}

// Loads one split from a directory holding manifest.json plus JSON-lines
// data files. Sequences shorter than the declared length are zero-padded,
// longer ones keep their prefix; feature dims must match exactly.
inline Dataset load_dataset(const std::filesystem::path& dir,
                            std::string_view split) {
  const auto manifest_path = dir / "manifest.json";
  std::ifstream mf(manifest_path);
  if (!mf) throw IoError("cannot open manifest: " + manifest_path.string());
  nlohmann::json manifest;
  try {
    mf >> manifest;
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError("bad manifest " + manifest_path.string() + ": " + e.what());
  }

  Dataset ds;
  ds.split = split_from_name(split);
  ds.dims = dims_from_manifest(manifest);

  const std::string split_key(split);
  if (!manifest.contains("splits") || !manifest.at("splits").contains(split_key)) {
    throw IoError("manifest " + manifest_path.string() + " has no split '" +
                  split_key + "'");
  }
  const auto data_path =
      dir / manifest.at("splits").at(split_key).get<std::string>();
  std::ifstream df(data_path);
  if (!df) throw IoError("cannot open data file: " + data_path.string());

  std::unordered_set<std::string> seen_ids;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(df, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      throw ValidationError(data_path.string() + ":" + std::to_string(lineno) +
                            ": bad JSON: " + e.what());
    }
    Sample s;
    if (!j.contains("id") || !j.at("id").is_string()) {
      throw ValidationError(data_path.string() + ":" + std::to_string(lineno) +
                            ": missing string 'id'");
    }
    s.id = j.at("id").get<std::string>();
    if (!j.contains("label") || !j.at("label").is_number()) {
      throw ValidationError("sample '" + s.id + "': missing numeric 'label'");
    }
    s.label = j.at("label").get<double>();
    if (!std::isfinite(s.label)) {
      throw ValidationError("sample '" + s.id + "': non-finite label");
    }
    for (ModalityId m : kAllModalities) {
      const std::string key(name_of(m));
      if (!j.contains(key)) {
        throw ValidationError("sample '" + s.id + "': missing modality '" + key + "'");
      }
      s.features[index_of(m)] = {
          detail::parse_feature_matrix(j.at(key), s.id, m, ds.dims[index_of(m)]),
          m};
    }
    detail::validate_sample(s, ds.dims);
    if (!seen_ids.insert(s.id).second) {
      throw ValidationError("duplicate sample id '" + s.id + "' in split '" +
                            split_key + "'");
    }
    ds.samples.push_back(std::move(s));
  }
  return ds;
}

// Writes (or extends) a dataset directory so that load_dataset reproduces
// the dataset bit-exactly. An existing manifest must declare the same dims.
inline void write_dataset(const Dataset& ds, const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  const auto manifest_path = dir / "manifest.json";

  nlohmann::json manifest;
  if (std::filesystem::exists(manifest_path)) {
    std::ifstream mf(manifest_path);
    if (!mf) throw IoError("cannot open manifest: " + manifest_path.string());
    mf >> manifest;
    if (dims_from_manifest(manifest) != ds.dims) {
      throw ValidationError("existing manifest dims differ: " +
                            manifest_path.string());
    }
  } else {
    manifest["dims"] = nlohmann::json::object();
    for (ModalityId m : kAllModalities) {
      manifest["dims"][std::string(name_of(m))] = {ds.dims[index_of(m)].len,
                                                   ds.dims[index_of(m)].dim};
    }
    manifest["splits"] = nlohmann::json::object();
  }

  const std::string split_key(split_name(ds.split));
  const std::string data_name = split_key + ".jsonl";
  manifest["splits"][split_key] = data_name;

  for (const auto& s : ds.samples) detail::validate_sample(s, ds.dims);

  {
    std::ofstream df(dir / data_name, std::ios::trunc);
    if (!df) throw IoError("cannot write data file: " + (dir / data_name).string());
    for (const auto& s : ds.samples) {
      nlohmann::json j;
      j["id"] = s.id;
      j["label"] = s.label;
      for (ModalityId m : kAllModalities) {
        j[std::string(name_of(m))] =
            detail::feature_matrix_to_json(s.features[index_of(m)].data);
      }
      df << j.dump() << '\n';
    }
    if (!df) throw IoError("write failed: " + (dir / data_name).string());
  }
  std::ofstream mf(manifest_path, std::ios::trunc);
  if (!mf) throw IoError("cannot write manifest: " + manifest_path.string());
  mf << manifest.dump(2) << '\n';
}

// Fixed, seed-independent unit direction along which the label is planted
// in each modality's features.
inline RowVec synthetic_direction(ModalityId m, Eigen::Index dim) {
  RowVec dir(dim);
  for (Eigen::Index k = 0; k < dim; ++k) {
    dir(k) = std::sin(0.7 * static_cast<double>(k + 1) +
                      2.1 * static_cast<double>(index_of(m)));
  }
  dir /= dir.norm();
  return dir;
}

// Synthetic desk-scale dataset: Gaussian noise plus
// signal_strength * label * direction in every sequence position, so
// polarity is linearly recoverable from every modality. Labels are uniform
// over [-3,-0.1] U [0.1,3] (dead zone of width 0.2 around 0).
inline Dataset generate_synthetic(std::size_t n, const ModalityDims& dims,
                                  double signal_strength, std::uint64_t seed,
                                  Split split = Split::kTrain) {
  Dataset ds;
  ds.split = split;
  ds.dims = dims;
  ds.samples.reserve(n);

  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> magnitude(0.1, 3.0);
  std::uniform_int_distribution<int> coin(0, 1);
  std::normal_distribution<double> noise(0.0, 1.0);

  std::array<RowVec, 3> directions;
  for (ModalityId m : kAllModalities) {
    directions[index_of(m)] = synthetic_direction(m, dims[index_of(m)].dim);
  }

  for (std::size_t i = 0; i < n; ++i) {
    Sample s;
    s.id = std::string(split_name(split)) + "-" + std::to_string(i);
    double mag = magnitude(rng);
    s.label = coin(rng) == 0 ? -mag : mag;
    for (ModalityId m : kAllModalities) {
      const auto& shape = dims[index_of(m)];
      Matrix x(shape.len, shape.dim);
      for (Eigen::Index r = 0; r < shape.len; ++r) {
        for (Eigen::Index c = 0; c < shape.dim; ++c) x(r, c) = noise(rng);
      }
      x.rowwise() += signal_strength * s.label * directions[index_of(m)];
      s.features[index_of(m)] = {std::move(x), m};
    }
    ds.samples.push_back(std::move(s));
  }
  return ds;
}

using Batch = std::vector<std::size_t>;  // indices into Dataset::samples

// Partitions the dataset into batches that double as retrieval pools.
// Every batch has at least 2 samples: a trailing singleton is merged into
// the previous batch. No shuffle seed keeps the original order.
inline std::vector<Batch> make_batches(const Dataset& ds, std::size_t batch_size,
                                       std::optional<std::uint64_t> shuffle_seed) {
  if (batch_size < 2) throw ConfigError("batch_size must be >= 2");
  if (ds.size() < 2) {
    throw ConfigError("dataset has fewer than 2 samples; retrieval pools need 2");
  }
  std::vector<std::size_t> order(ds.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  if (shuffle_seed) {
    std::mt19937_64 rng(*shuffle_seed);
    std::shuffle(order.begin(), order.end(), rng);
  }
  std::vector<Batch> batches;
  for (std::size_t at = 0; at < order.size(); at += batch_size) {
    std::size_t end = std::min(at + batch_size, order.size());
    batches.emplace_back(order.begin() + static_cast<std::ptrdiff_t>(at),
                         order.begin() + static_cast<std::ptrdiff_t>(end));
  }
  if (batches.size() >= 2 && batches.back().size() == 1) {
    batches[batches.size() - 2].push_back(batches.back()[0]);
    batches.pop_back();
  }
  return batches;
}

}  // namespace xmrs

#endif  // XMRS_DATA_HPP_
