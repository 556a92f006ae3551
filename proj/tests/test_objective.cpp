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

#include "xmrs/objective.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "oracles.hpp"
#include "test_util.hpp"

namespace xmrs {
namespace {

using testing::random_matrix;
using testing::random_rowvec;
namespace oracle = testing::oracle;

ad::Var row_param(const RowVec& v) {
  Matrix m(1, v.cols());
  m.row(0) = v;
  return ad::parameter(std::move(m));
}

CcrlItem random_item(Eigen::Index d, std::mt19937_64& rng) {
  CcrlItem item;
  for (int a = 0; a < 3; ++a) {
    item.anchor[a] = row_param(random_rowvec(d, rng, 2.0));
    for (int b = 0; b < 3; ++b) {
      item.positive[a][b] = row_param(random_rowvec(d, rng, 2.0));
      item.negative[a][b] = row_param(random_rowvec(d, rng, 2.0));
    }
  }
  return item;
}

oracle::CcrlOracleSample to_oracle(const CcrlItem& item) {
  oracle::CcrlOracleSample s;
  s.skipped = item.skipped;
  if (item.skipped) return s;
  for (int a = 0; a < 3; ++a) {
    s.anchor[a] = item.anchor[a]->value.row(0);
    for (int b = 0; b < 3; ++b) {
      s.positive[a][b] = item.positive[a][b]->value.row(0);
      s.negative[a][b] = item.negative[a][b]->value.row(0);
    }
  }
  return s;
}

TEST(MseLoss, HandCases) {
  std::vector<ad::Var> preds = {ad::scalar_constant(1.0), ad::scalar_constant(-1.0)};
  EXPECT_DOUBLE_EQ(mse_loss(preds, {1.0, -1.0})->scalar(), 0.0);
  EXPECT_DOUBLE_EQ(mse_loss(preds, {0.0, 0.0})->scalar(), 1.0);
  EXPECT_THROW(mse_loss({}, {}), InputError);
  EXPECT_THROW(mse_loss(preds, {1.0}), InputError);
}

TEST(MseLoss, MatchesOneLineOracle) {
  std::mt19937_64 rng(81);
  std::vector<ad::Var> preds;
  std::vector<double> labels;
  double expect = 0.0;
  std::normal_distribution<double> d(0, 2);
  for (int i = 0; i < 7; ++i) {
    double p = d(rng), l = d(rng);
    preds.push_back(ad::scalar_constant(p));
    labels.push_back(l);
    expect += (p - l) * (p - l);
  }
  expect /= 7.0;
  EXPECT_NEAR(mse_loss(preds, labels)->scalar(), expect, 1e-9);
}

TEST(CcrlLoss, HandCases) {
  const double gamma = 50.0;
  // one pair with d(pos)=0 and d(neg)^2 = gamma -> 0
  CcrlItem item;
  RowVec anchor(2);
  anchor << 1.0, 2.0;
  RowVec neg(2);
  neg << 1.0 + std::sqrt(gamma), 2.0;  // squared distance exactly gamma
  for (int a = 0; a < 3; ++a) {
    item.anchor[a] = row_param(anchor);
    for (int b = 0; b < 3; ++b) {
      item.positive[a][b] = row_param(anchor);
      item.negative[a][b] = row_param(neg);
    }
  }
  EXPECT_DOUBLE_EQ(ccrl_loss({item}, gamma)->scalar(), 0.0);

  // one pair with d(pos)=1, d(neg)=0 -> 1 + 50 = 51
  RowVec pos(2);
  pos << 2.0, 2.0;  // distance 1 from anchor
  for (int a = 0; a < 3; ++a) {
    for (int b = 0; b < 3; ++b) {
      item.positive[a][b] = row_param(pos);
      item.negative[a][b] = row_param(anchor);
    }
  }
  EXPECT_DOUBLE_EQ(ccrl_loss({item}, gamma)->scalar(), 51.0);
}

TEST(CcrlLoss, MatchesNestedLoopOracle) {
  std::mt19937_64 rng(82);
  for (int trial = 0; trial < 10; ++trial) {
    std::vector<CcrlItem> items;
    std::vector<oracle::CcrlOracleSample> oracle_items;
    for (int i = 0; i < 4; ++i) {
      CcrlItem item = random_item(5, rng);
      item.skipped = (i == 2 && trial % 2 == 0);
      oracle_items.push_back(to_oracle(item));
      items.push_back(std::move(item));
    }
    int skipped = 0;
    double got = ccrl_loss(items, 50.0, &skipped)->scalar();
    double expect = oracle::ccrl(oracle_items, 50.0);
    EXPECT_NEAR(got, expect, 1e-6 * std::max(1.0, std::abs(expect)));
    EXPECT_EQ(skipped, (trial % 2 == 0) ? 9 : 0);
  }
}

TEST(CcrlLoss, NonNegativeAndZeroCondition) {
  std::mt19937_64 rng(83);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<CcrlItem> items = {random_item(4, rng)};
    EXPECT_GE(ccrl_loss(items, 10.0)->scalar(), 0.0);
  }
}

TEST(CcrlLoss, Monotonicity) {
  std::mt19937_64 rng(84);
  CcrlItem item = random_item(4, rng);
  const double gamma = 50.0;
  double base = ccrl_loss({item}, gamma)->scalar();

  // moving a positive farther away never decreases the loss
  RowVec dir = item.positive[0][0]->value.row(0) - item.anchor[0]->value.row(0);
  if (dir.norm() < 1e-9) dir = RowVec::Ones(4);
  item.positive[0][0]->value.row(0) += dir * 0.5;
  double farther_pos = ccrl_loss({item}, gamma)->scalar();
  EXPECT_GE(farther_pos, base - 1e-12);

  // moving a negative farther away never increases the loss
  double before = farther_pos;
  RowVec ndir = item.negative[1][2]->value.row(0) - item.anchor[1]->value.row(0);
  if (ndir.norm() < 1e-9) ndir = RowVec::Ones(4);
  item.negative[1][2]->value.row(0) += ndir * 0.5;
  EXPECT_LE(ccrl_loss({item}, gamma)->scalar(), before + 1e-12);
}

TEST(CcrlLoss, GradientAwayFromHingeKink) {
  std::mt19937_64 rng(85);
  const double gamma = 6.0;
  std::vector<CcrlItem> items = {random_item(4, rng)};
  // keep all negative squared distances away from the kink
  bool near_kink = false;
  for (int a = 0; a < 3; ++a) {
    for (int b = 0; b < 3; ++b) {
      double d2 = (items[0].anchor[a]->value - items[0].negative[a][b]->value)
                      .squaredNorm();
      if (std::abs(gamma - d2) < 1e-2) near_kink = true;
    }
  }
  ASSERT_FALSE(near_kink) << "reseed the fixture";
  std::vector<ad::Var> leaves;
  for (int a = 0; a < 3; ++a) {
    leaves.push_back(items[0].anchor[a]);
    for (int b = 0; b < 3; ++b) {
      leaves.push_back(items[0].positive[a][b]);
      leaves.push_back(items[0].negative[a][b]);
    }
  }
  ad::zero_grad(leaves);
  ad::backward(ccrl_loss(items, gamma));
  auto eval = [&] { return ccrl_loss(items, gamma)->scalar(); };
  for (const auto& leaf : leaves) {
    for (Eigen::Index j = 0; j < leaf->value.cols(); ++j) {
      double numeric = oracle::central_difference(eval, &leaf->value(0, j));
      EXPECT_TRUE(oracle::grads_close(leaf->grad(0, j), numeric, 1e-4, 1e-7))
          << leaf->grad(0, j) << " vs " << numeric;
    }
  }
}

TEST(CcrlLoss, RejectsBadGamma) {
  EXPECT_THROW(ccrl_loss({}, 0.0), ConfigError);
  EXPECT_THROW(ccrl_loss({}, -1.0), ConfigError);
}

TEST(CcrlLoss, AllSkippedGivesZero) {
  std::mt19937_64 rng(86);
  CcrlItem item;
  item.skipped = true;
  int skipped = 0;
  EXPECT_DOUBLE_EQ(ccrl_loss({item, item}, 50.0, &skipped)->scalar(), 0.0);
  EXPECT_EQ(skipped, 18);
}

TEST(InfoNce, TrivialCases) {
  // lone positive -> probability 1 -> loss 0
  auto pos = ad::scalar_constant(0.3);
  EXPECT_NEAR(infonce_from_sims(pos, {}, 0.07)->scalar(), 0.0, 1e-12);
  // one negative with equal similarity -> ln 2
  auto neg = ad::scalar_constant(0.3);
  EXPECT_NEAR(infonce_from_sims(pos, {neg}, 0.5)->scalar(), std::log(2.0), 1e-12);
  EXPECT_THROW(infonce_from_sims(pos, {}, 0.0), ConfigError);
  EXPECT_THROW(infonce_loss({}, -0.1), ConfigError);
}

TEST(InfoNce, MatchesDirectSoftmaxOracle) {
  std::mt19937_64 rng(87);
  const double tau = 0.07;
  std::vector<InfoNceItem> items;
  double expect = 0.0;
  for (int i = 0; i < 3; ++i) {
    InfoNceItem item;
    item.anchor = row_param(random_rowvec(6, rng));
    item.positive = row_param(random_rowvec(6, rng));
    for (int n = 0; n < 4; ++n) item.negatives.push_back(row_param(random_rowvec(6, rng)));
    double pos_sim =
        oracle::cosine(item.anchor->value.row(0), item.positive->value.row(0));
    std::vector<double> neg_sims;
    for (const auto& n : item.negatives) {
      neg_sims.push_back(oracle::cosine(item.anchor->value.row(0), n->value.row(0)));
    }
    expect += oracle::infonce(pos_sim, neg_sims, tau);
    items.push_back(std::move(item));
  }
  expect /= 3.0;
  EXPECT_NEAR(infonce_loss(items, tau)->scalar(), expect, 1e-6);
}

TEST(InfoNce, InvariantToConstantShiftOfOneAnchorsSims) {
  std::mt19937_64 rng(88);
  std::vector<double> sims = {0.2, -0.4, 0.7, 0.1};
  auto eval = [&](double shift) {
    auto pos = ad::scalar_constant(sims[0] + shift);
    std::vector<ad::Var> negs;
    for (std::size_t i = 1; i < sims.size(); ++i) {
      negs.push_back(ad::scalar_constant(sims[i] + shift));
    }
    return infonce_from_sims(pos, negs, 0.07)->scalar();
  };
  EXPECT_NEAR(eval(0.0), eval(3.7), 1e-9);
  EXPECT_NEAR(eval(0.0), eval(-12.0), 1e-9);
}

TEST(InfoNce, GradientCheck) {
  std::mt19937_64 rng(89);
  InfoNceItem item;
  item.anchor = row_param(random_rowvec(5, rng));
  item.positive = row_param(random_rowvec(5, rng));
  for (int n = 0; n < 3; ++n) item.negatives.push_back(row_param(random_rowvec(5, rng)));
  std::vector<InfoNceItem> items = {item};
  std::vector<ad::Var> leaves = {item.anchor, item.positive, item.negatives[0],
                                 item.negatives[1], item.negatives[2]};
  ad::zero_grad(leaves);
  ad::backward(infonce_loss(items, 0.07));
  auto eval = [&] { return infonce_loss(items, 0.07)->scalar(); };
  for (const auto& leaf : leaves) {
    for (Eigen::Index j = 0; j < leaf->value.cols(); ++j) {
      double numeric = oracle::central_difference(eval, &leaf->value(0, j));
      EXPECT_TRUE(oracle::grads_close(leaf->grad(0, j), numeric, 1e-4, 1e-7));
    }
  }
}

TEST(TotalLoss, ExactComposition) {
  LossBreakdown b = total_loss(1.0, 0.0, 123.0);
  EXPECT_DOUBLE_EQ(b.l_total, 1.0);
  b = total_loss(0.5, 1000.0, 0.001);
  EXPECT_DOUBLE_EQ(b.l_total, 1.5);
  // decomposition holds exactly as computed
  std::mt19937_64 rng(90);
  std::uniform_real_distribution<double> u(0, 10);
  for (int i = 0; i < 50; ++i) {
    double msa = u(rng), ccrl = u(rng), lambda = u(rng) / 100.0;
    LossBreakdown lb = total_loss(msa, ccrl, lambda, 3);
    EXPECT_EQ(lb.l_total - (lb.l_msa + lb.lambda * lb.l_ccrl), 0.0);
    EXPECT_EQ(lb.skipped_contrastive_terms, 3);
    // matches the graph composition bit for bit
    ad::Var graph = combine_losses(ad::scalar_constant(msa),
                                   ad::scalar_constant(ccrl), lambda);
    EXPECT_EQ(graph->scalar(), lb.l_total);
  }
  EXPECT_THROW(total_loss(1.0, 1.0, -0.5), ConfigError);
}

TEST(TotalLoss, LambdaZeroDropsContrastiveTerm) {
  LossBreakdown b = total_loss(2.5, 999.0, 0.0);
  EXPECT_DOUBLE_EQ(b.l_total, 2.5);
}

}  // namespace
}  // namespace xmrs
