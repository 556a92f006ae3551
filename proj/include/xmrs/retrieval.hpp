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

#ifndef XMRS_RETRIEVAL_HPP_
#define XMRS_RETRIEVAL_HPP_

#include <array>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "xmrs/autodiff.hpp"
#include "xmrs/common.hpp"
#include "xmrs/data.hpp"
#include "xmrs/modality.hpp"

namespace xmrs {

// Affine projection from a modality's native feature dim into the shared
// retrieval space of dim d_s.
struct PoolProjection {
  Matrix weight;  // d_m x d_s
  RowVec bias;    // d_s
};

struct PooledEmbedding {
  RowVec vector;  // shared dim d_s
  ModalityId modality = ModalityId::kText;
  std::string sample_id;
  Polarity polarity = Polarity::kNeutral;
};

// Differentiable pooled projection: mean over sequence positions followed
// by an affine map into the shared space.
inline ad::Var pooled_embedding_var(const ad::Var& x, const ad::Var& weight,
                                    const ad::Var& bias) {
  return ad::affine(ad::mean_rows(x), weight, bias);
}

inline PooledEmbedding pool_and_project(const FeatureSequence& x,
                                        const PoolProjection& params,
                                        const std::string& sample_id = "",
                                        double label = 0.0) {
  if (x.data.cols() != params.weight.rows()) {
    throw ShapeError("pool_and_project: feature dim " +
                     std::to_string(x.data.cols()) + " vs projection rows " +
                     std::to_string(params.weight.rows()));
  }
  ad::NoGradGuard ng;
  Matrix b(1, params.bias.cols());
  b.row(0) = params.bias;
  auto v = pooled_embedding_var(ad::constant(x.data),
                                ad::constant(params.weight),
                                ad::constant(std::move(b)));
  return PooledEmbedding{v->value.row(0), x.modality, sample_id,
                         polarity_of(label)};
}

// Cosine similarity with the degenerate-input rule: vectors with norm below
// 1e-12 compare as 0. Result clamped to [-1, 1].
inline double cosine_similarity(const RowVec& a, const RowVec& b) {
  if (a.cols() != b.cols()) {
    throw ShapeError("cosine_similarity: dim mismatch " +
                     std::to_string(a.cols()) + " vs " + std::to_string(b.cols()));
  }
  constexpr double kEps = 1e-12;
  const double na = a.norm();
  const double nb = b.norm();
  if (na < kEps || nb < kEps) return 0.0;
  double c = a.dot(b) / (na * nb);
  return std::clamp(c, -1.0, 1.0);
}

enum class RetrievalMode { kTrain, kInference };

// One entry of a retrieval pool: a sample with its pooled embeddings.
struct PoolEntry {
  Sample sample;
  std::array<RowVec, 3> emb;  // per modality, shared dim
};

struct RetrievedRef {
  std::string sample_id;
  std::size_t pool_index = 0;
  double similarity = 0.0;
  FeatureSequence features;  // the retrieved modality's sequence
};

// For one (target sample, target modality): the best cross-modal reference
// per retrieved modality. In train mode positives match the target's
// polarity and negatives oppose it; `degenerate` marks pools where that
// guidance was impossible (the contrastive term is then skipped).
struct RetrievalSet {
  ModalityId target_modality = ModalityId::kText;
  std::string target_id;
  bool degenerate = false;
  std::array<std::optional<RetrievedRef>, 3> positives;  // by retrieved modality
  std::array<std::optional<RetrievedRef>, 3> negatives;
};

namespace detail {

template <typename Pred>
std::optional<std::size_t> argmax_candidate(const RowVec& target_emb,
                                            std::span<const PoolEntry> pool,
                                            ModalityId retrieved, Pred keep,
                                            double* best_sim_out) {
  std::optional<std::size_t> best;
  double best_sim = 0.0;
  for (std::size_t j = 0; j < pool.size(); ++j) {
    if (!keep(pool[j])) continue;
    double sim = cosine_similarity(target_emb, pool[j].emb[index_of(retrieved)]);
    if (!best || sim > best_sim) {  // strict: ties keep the lowest pool index
      best = j;
      best_sim = sim;
    }
  }
  if (best && best_sim_out) *best_sim_out = best_sim;
  return best;
}

inline RetrievedRef make_ref(std::span<const PoolEntry> pool, std::size_t j,
                             ModalityId retrieved, double sim) {
  return RetrievedRef{pool[j].sample.id, j, sim,
                      pool[j].sample.feature(retrieved)};
}

}  // namespace detail

// Cross-modal retrieval (one target modality against the pool).
// Train mode filters candidates by sentiment polarity before the argmax;
// inference mode ranks all candidates by similarity alone and returns no
// negatives. The target itself is always excluded by id.
inline RetrievalSet retrieve(const Sample& target, ModalityId target_modality,
                             const RowVec& target_embedding,
                             std::span<const PoolEntry> pool,
                             RetrievalMode mode) {
  RetrievalSet out;
  out.target_modality = target_modality;
  out.target_id = target.id;

  const auto not_self = [&](const PoolEntry& e) {
    return e.sample.id != target.id;
  };
  bool any_candidate = false;
  for (const auto& e : pool) {
    if (not_self(e)) {
      any_candidate = true;
      break;
    }
  }
  if (!any_candidate) {
    throw InputError("retrieve: pool has no candidates besides the target '" +
                     target.id + "'");
  }

  const Polarity tpol = target.polarity();
  const auto similarity_only = [&](ModalityId m_beta,
                                   std::array<std::optional<RetrievedRef>, 3>& slot) {
    double sim = 0.0;
    auto j = detail::argmax_candidate(target_embedding, pool, m_beta, not_self, &sim);
    slot[index_of(m_beta)] = detail::make_ref(pool, *j, m_beta, sim);
  };

  if (mode == RetrievalMode::kInference) {
    for (ModalityId m_beta : kAllModalities) similarity_only(m_beta, out.positives);
    return out;
  }

  // Train mode. Neutral candidates never participate; a neutral target or a
  // pool missing one polarity degrades to similarity-only positives with the
  // contrastive term flagged for skipping.
  bool have_same = false;
  bool have_opp = false;
  if (tpol != Polarity::kNeutral) {
    for (const auto& e : pool) {
      if (!not_self(e)) continue;
      Polarity p = e.sample.polarity();
      if (p == tpol) have_same = true;
      if (p == opposite(tpol) && p != Polarity::kNeutral) have_opp = true;
    }
  }

  if (tpol == Polarity::kNeutral || !have_same) {
    out.degenerate = true;
    for (ModalityId m_beta : kAllModalities) similarity_only(m_beta, out.positives);
  } else {
    const auto same_pol = [&](const PoolEntry& e) {
      return not_self(e) && e.sample.polarity() == tpol;
    };
    for (ModalityId m_beta : kAllModalities) {
      double sim = 0.0;
      auto j = detail::argmax_candidate(target_embedding, pool, m_beta, same_pol, &sim);
      out.positives[index_of(m_beta)] = detail::make_ref(pool, *j, m_beta, sim);
    }
  }

  if (tpol != Polarity::kNeutral && have_opp) {
    const auto opp_pol = [&](const PoolEntry& e) {
      return not_self(e) && e.sample.polarity() == opposite(tpol) &&
             e.sample.polarity() != Polarity::kNeutral;
    };
    for (ModalityId m_beta : kAllModalities) {
      double sim = 0.0;
      auto j = detail::argmax_candidate(target_embedding, pool, m_beta, opp_pol, &sim);
      out.negatives[index_of(m_beta)] = detail::make_ref(pool, *j, m_beta, sim);
    }
  } else {
    out.degenerate = true;
  }
  return out;
}

// Frozen inference-time reference pool built from a dataset (the training
// split) with the current projection parameters.
struct MemoryBank {
  std::vector<PoolEntry> entries;
  bool frozen = false;

  std::span<const PoolEntry> pool() const { return entries; }
};

inline MemoryBank build_memory_bank(const Dataset& ds,
                                    const std::array<PoolProjection, 3>& params) {
  if (ds.samples.empty()) {
    throw ConfigError("build_memory_bank: dataset is empty");
  }
  MemoryBank bank;
  bank.entries.resize(ds.samples.size());
  parallel_for(ds.samples.size(), [&](std::size_t i) {
    const Sample& s = ds.samples[i];
    PoolEntry e;
    e.sample = s;
    for (ModalityId m : kAllModalities) {
      e.emb[index_of(m)] =
          pool_and_project(s.feature(m), params[index_of(m)], s.id, s.label)
              .vector;
    }
    bank.entries[i] = std::move(e);
  });
  bank.frozen = true;
  return bank;
}

}  // namespace xmrs

#endif  // XMRS_RETRIEVAL_HPP_
