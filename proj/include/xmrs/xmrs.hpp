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

#ifndef XMRS_XMRS_HPP_
#define XMRS_XMRS_HPP_

#include "xmrs/autodiff.hpp"
#include "xmrs/checkpoint.hpp"
#include "xmrs/common.hpp"
#include "xmrs/config.hpp"
#include "xmrs/data.hpp"
#include "xmrs/encoder.hpp"
#include "xmrs/metrics.hpp"
#include "xmrs/modality.hpp"
#include "xmrs/model.hpp"
#include "xmrs/objective.hpp"
#include "xmrs/optimizer.hpp"
#include "xmrs/prompts.hpp"
#include "xmrs/retrieval.hpp"
#include "xmrs/train.hpp"

#endif  // XMRS_XMRS_HPP_
