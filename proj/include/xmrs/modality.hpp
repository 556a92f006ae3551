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

#ifndef XMRS_MODALITY_HPP_
#define XMRS_MODALITY_HPP_

#include <array>
#include <string>
#include <string_view>

#include "xmrs/common.hpp"

namespace xmrs {

// The three input streams. The ordering text < visual < acoustic is relied
// on wherever modalities are concatenated or iterated.
enum class ModalityId : int { kText = 0, kVisual = 1, kAcoustic = 2 };

inline constexpr std::array<ModalityId, 3> kAllModalities = {
    ModalityId::kText, ModalityId::kVisual, ModalityId::kAcoustic};

inline constexpr int index_of(ModalityId m) { return static_cast<int>(m); }

inline std::string_view name_of(ModalityId m) {
  switch (m) {
    case ModalityId::kText: return "text";
    case ModalityId::kVisual: return "visual";
    case ModalityId::kAcoustic: return "acoustic";
  }
  return "?";
}

inline ModalityId modality_from_name(std::string_view s) {
  if (s == "text" || s == "t") return ModalityId::kText;
  if (s == "visual" || s == "v") return ModalityId::kVisual;
  if (s == "acoustic" || s == "a") return ModalityId::kAcoustic;
  throw InputError("unknown modality name: " + std::string(s));
}

// Sentiment polarity derived from the sign of a continuous label.
enum class Polarity : int { kNegative = -1, kNeutral = 0, kPositive = 1 };

inline Polarity polarity_of(double label) {
  if (label > 0.0) return Polarity::kPositive;
  if (label < 0.0) return Polarity::kNegative;
  return Polarity::kNeutral;
}

inline Polarity opposite(Polarity p) {
  return static_cast<Polarity>(-static_cast<int>(p));
}

}  // namespace xmrs

#endif  // XMRS_MODALITY_HPP_
