/*
 * Copyright 2026 The imgrec Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *   http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include <cmath>
#include <numeric>
#include <random>
#include <sstream>

#include <gtest/gtest.h>

#include "error.hpp"
#include "model.hpp"
#include "support.hpp"

using namespace imgrec;

namespace {

ModelConfig config(Mode mode, size_t k, uint64_t seed = 1) {
  ModelConfig c;
  c.mode = mode;
  c.embedDim = k;
  c.ftDim = 3;
  c.headLayers = {4, 2};
  c.seed = seed;
  return c;
}

std::string checkpointBytes(const ModelParams& p) {
  std::ostringstream out;
  saveCheckpoint(out, p);
  return out.str();
}

// Dense oracle: concat(one_hot(i), features) . W_item + b_item.
std::vector<double> denseItemEmbedding(const ModelParams& p, ItemId i,
                                       const std::vector<double>& features) {
  std::vector<double> input(p.numItems + features.size(), 0.0);
  input[i] = 1.0;
  std::copy(features.begin(), features.end(), input.begin() + static_cast<ptrdiff_t>(p.numItems));
  std::vector<double> z(p.embedDim, 0.0);
  for (size_t r = 0; r < input.size(); ++r) {
    for (size_t c = 0; c < p.embedDim; ++c) {
      z[c] += input[r] * p.itemWeight(r, c);
    }
  }
  for (size_t c = 0; c < p.embedDim; ++c) {
    z[c] += p.itemBias(0, c);
  }
  return z;
}

}  // namespace

TEST(InitParams, DirShapes) {
  const auto p = initParams(config(Mode::kDir, 2), 3, 4, 5);
  EXPECT_EQ(p.userWeight.rows(), 3u);
  EXPECT_EQ(p.userWeight.cols(), 2u);
  EXPECT_EQ(p.itemWeight.rows(), 9u);
  EXPECT_EQ(p.itemWeight.cols(), 2u);
  EXPECT_FALSE(p.fineTune.has_value());
  EXPECT_TRUE(p.head.empty());
  EXPECT_EQ(p.parameterCount(), 3u * 2 + 2 + (4 + 5) * 2 + 2);
}

TEST(InitParams, EteShapes) {
  const auto p = initParams(config(Mode::kEte, 2), 3, 4, 5);
  ASSERT_EQ(p.head.size(), 2u);
  EXPECT_EQ(p.head[0].weight.rows(), 5u);
  EXPECT_EQ(p.head[0].weight.cols(), 4u);
  EXPECT_EQ(p.head[1].weight.cols(), 2u);
  EXPECT_EQ(p.fineTune->weight.rows(), 2u);
  EXPECT_EQ(p.fineTune->weight.cols(), 3u);
  EXPECT_EQ(p.itemWeight.rows(), 4u + 3);
}

TEST(InitParams, DeterministicAndBounded) {
  const auto a = initParams(config(Mode::kFt, 3, 9), 5, 6, 4);
  EXPECT_EQ(a, initParams(config(Mode::kFt, 3, 9), 5, 6, 4));
  EXPECT_NE(a, initParams(config(Mode::kFt, 3, 10), 5, 6, 4));
  for (const auto& t : a.tensors()) {
    const double bound = glorotBound(t.tensor->rows(), t.tensor->cols());
    for (const float v : t.tensor->values()) {
      if (t.isWeight) {
        EXPECT_LE(std::abs(v), bound);
      } else {
        EXPECT_EQ(v, 0.0f);
      }
    }
  }
}

TEST(InitParams, GlorotBound) {
  EXPECT_NEAR(glorotBound(4, 6), std::sqrt(0.6), 1e-15);
  EXPECT_NEAR(glorotBound(4, 6), 0.7746, 1e-4);
}

TEST(InitParams, FeatureDimMismatchIsConfigError) {
  auto c = config(Mode::kDir, 2);
  c.rawFeatureDim = 7;
  try {
    initParams(c, 3, 4, 5);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kConfig);
  }
}

TEST(ModelConfig, Validation) {
  auto c = config(Mode::kEte, 0);
  EXPECT_THROW(c.validate(), Error);
  c = config(Mode::kEte, 2);
  c.headLayers.clear();
  EXPECT_THROW(c.validate(), Error);
  c = config(Mode::kFt, 2);
  c.ftDim = 0;
  EXPECT_THROW(c.validate(), Error);
}

TEST(ExtractFeatures, DirIsIdentity) {
  auto p = initParams(config(Mode::kDir, 2), 1, 1, 3);
  const std::vector<float> raw = {1, -2, 3};
  EXPECT_EQ(extractFeatures(raw, p), (std::vector<double>{1, -2, 3}));
}

TEST(ExtractFeatures, FtIdentityClampsNegatives) {
  auto c = config(Mode::kFt, 2);
  c.ftDim = 2;
  auto p = initParams(c, 1, 1, 2);
  p.fineTune->weight = Matrix(2, 2);
  p.fineTune->weight(0, 0) = 1;
  p.fineTune->weight(1, 1) = 1;
  EXPECT_EQ(extractFeatures(std::vector<float>{-1, 2}, p), (std::vector<double>{0, 2}));
  p.fineTune->bias(0, 0) = -3;
  p.fineTune->bias(0, 1) = 1;
  EXPECT_EQ(extractFeatures(std::vector<float>{2, 2}, p), (std::vector<double>{0, 3}));
}

TEST(ExtractFeatures, EteRunsHeadThenFineTune) {
  auto c = config(Mode::kEte, 1);
  c.headLayers = {1};
  c.ftDim = 1;
  auto p = initParams(c, 1, 1, 2);
  // head: relu(x0 - x1); ft: relu(2 h + 1)
  p.head[0].weight(0, 0) = 1;
  p.head[0].weight(1, 0) = -1;
  p.fineTune->weight(0, 0) = 2;
  p.fineTune->bias(0, 0) = 1;
  EXPECT_EQ(extractFeatures(std::vector<float>{3, 1}, p), (std::vector<double>{5}));
  EXPECT_EQ(extractFeatures(std::vector<float>{1, 3}, p), (std::vector<double>{1}));
}

TEST(EmbedUser, RowPlusBias) {
  auto p = initParams(config(Mode::kDir, 2), 2, 1, 1);
  p.userWeight(0, 0) = 1;
  p.userWeight(0, 1) = 2;
  EXPECT_EQ(embedUser(0, p), (std::vector<double>{1, 2}));
  p.userBias(0, 0) = 0.5f;
  p.userBias(0, 1) = -0.5f;
  EXPECT_EQ(embedUser(0, p), (std::vector<double>{1.5, 1.5}));
  EXPECT_THROW(embedUser(2, p), Error);
}

TEST(EmbedUser, MatchesOneHotProduct) {
  auto p = initParams(config(Mode::kDir, 3), 5, 2, 2);
  testkit::randomizeParams(p, 4);
  for (UserId u = 0; u < 5; ++u) {
    std::vector<double> oneHot(5, 0.0);
    oneHot[u] = 1.0;
    const auto z = embedUser(u, p);
    for (size_t c = 0; c < 3; ++c) {
      double dense = p.userBias(0, c);
      for (size_t r = 0; r < 5; ++r) {
        dense += oneHot[r] * p.userWeight(r, c);
      }
      EXPECT_NEAR(z[c], dense, 1e-12);
    }
  }
}

TEST(EmbedItem, HandComputed) {
  auto p = initParams(config(Mode::kDir, 2), 1, 1, 1);
  p.itemWeight(0, 0) = 1;
  p.itemWeight(0, 1) = 0;
  p.itemWeight(1, 0) = 0;
  p.itemWeight(1, 1) = 1;
  EXPECT_EQ(embedItem(0, std::vector<double>{3}, p), (std::vector<double>{1, 3}));
  EXPECT_EQ(embedItem(0, std::vector<double>{0}, p), (std::vector<double>{1, 0}));
  EXPECT_THROW(embedItem(0, std::vector<double>{1, 2}, p), Error);
}

TEST(EmbedItem, MatchesDenseOracleInAllModes) {
  std::mt19937_64 rng(5);
  std::normal_distribution<double> normal;
  for (const Mode mode : {Mode::kDir, Mode::kFt, Mode::kEte}) {
    for (uint64_t seed = 0; seed < 5; ++seed) {
      auto p = initParams(config(mode, 3, seed), 4, 6, 5);
      testkit::randomizeParams(p, seed + 100);
      const auto store = testkit::gaussianFeatures(6, 5, seed);
      for (ItemId i = 0; i < 6; ++i) {
        const auto phi = extractFeatures(i, store, p);
        const auto z = embedItem(i, phi, p);
        const auto dense = denseItemEmbedding(p, i, phi);
        for (size_t c = 0; c < z.size(); ++c) {
          EXPECT_NEAR(z[c], dense[c], 1e-6);
        }
      }
    }
  }
}

TEST(Score, SigmoidValues) {
  EXPECT_EQ(sigmoid(0.0), 0.5);
  EXPECT_NEAR(sigmoid(1000.0), 1.0, 1e-12);
  EXPECT_GE(sigmoid(-1000.0), 0.0);
  EXPECT_TRUE(std::isfinite(sigmoid(-1000.0)));
  // z_u = [1, 2], z_i = [0.5, -0.25] -> dot 0 -> 0.5
  auto p = initParams(config(Mode::kDir, 2), 1, 1, 1);
  p.userWeight(0, 0) = 1;
  p.userWeight(0, 1) = 2;
  p.itemWeight(0, 0) = 0.5f;
  p.itemWeight(0, 1) = -0.25f;
  p.itemWeight(1, 0) = 0;
  p.itemWeight(1, 1) = 0;
  const FeatureStore store(1, 1, {1.0f});
  EXPECT_EQ(score(0, 0, store, p), 0.5);
}

TEST(Score, StrictlyInsideUnitIntervalAndMonotone) {
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> dist(-30, 30);
  for (int k = 0; k < 1000; ++k) {
    const double a = dist(rng);
    const double b = dist(rng);
    const double sa = sigmoid(a);
    EXPECT_GT(sa, 0.0);
    EXPECT_LT(sa, 1.0);
    if (a > b) {
      EXPECT_GT(sa, sigmoid(b));
    }
  }
}

TEST(ScoreItems, MatchesScalarScoresAndPermutes) {
  auto p = initParams(config(Mode::kFt, 4), 3, 120, 5);
  testkit::randomizeParams(p, 8);
  const auto store = testkit::gaussianFeatures(120, 5, 3);
  std::vector<ItemId> items(100);
  std::iota(items.begin(), items.end(), 10);
  const auto batch = scoreItems(1, items, store, p);
  for (size_t k = 0; k < items.size(); ++k) {
    EXPECT_EQ(batch[k], score(1, items[k], store, p));
  }
  std::vector<ItemId> single = {items[0]};
  EXPECT_EQ(scoreItems(1, single, store, p)[0], score(1, items[0], store, p));
  auto reversed = items;
  std::reverse(reversed.begin(), reversed.end());
  const auto rev = scoreItems(1, reversed, store, p);
  for (size_t k = 0; k < items.size(); ++k) {
    EXPECT_EQ(rev[k], batch[items.size() - 1 - k]);
  }
  const ModelScorer scorer(p, store);
  const auto cached = scorer.scoreItems(1, items);
  for (size_t k = 0; k < items.size(); ++k) {
    EXPECT_NEAR(cached[k], batch[k], 1e-12);
  }
}

TEST(Checkpoint, RoundTripIsBitExactInAllModes) {
  for (const Mode mode : {Mode::kDir, Mode::kFt, Mode::kEte}) {
    auto p = initParams(config(mode, 3), 4, 5, 6);
    testkit::randomizeParams(p, 17);
    const auto bytes = checkpointBytes(p);
    std::istringstream in(bytes);
    const auto back = loadCheckpoint(in);
    EXPECT_EQ(back, p);
    EXPECT_EQ(checkpointBytes(back), bytes);
  }
}

TEST(Checkpoint, HeaderLayout) {
  const auto p = initParams(config(Mode::kEte, 3), 4, 5, 6);
  const auto bytes = checkpointBytes(p);
  EXPECT_EQ(bytes.substr(0, 4), "IMR1");
  EXPECT_EQ(bytes[4], 2);
  EXPECT_EQ(bytes[5], 4);   // M
  EXPECT_EQ(bytes[9], 5);   // N
  EXPECT_EQ(bytes[13], 3);  // K
  EXPECT_EQ(bytes[17], 6);  // F_raw
  EXPECT_EQ(bytes[21], 3);  // F_ft
  EXPECT_EQ(bytes[25], 2);  // head count
  EXPECT_EQ(bytes.size(), 37 + 4 * p.parameterCount());
}

TEST(Checkpoint, CorruptionIsRejectedWithOffsets) {
  const auto p = initParams(config(Mode::kFt, 2), 2, 2, 2);
  const auto bytes = checkpointBytes(p);
  auto expectError = [](const std::string& b, const std::string& fragment) {
    std::istringstream in(b);
    try {
      loadCheckpoint(in, "ckpt");
      ADD_FAILURE() << "expected failure for " << fragment;
    } catch (const Error& e) {
      EXPECT_EQ(e.code(), ErrorCode::kFormat);
      EXPECT_NE(std::string(e.what()).find(fragment), std::string::npos) << e.what();
    }
  };
  expectError(bytes.substr(0, bytes.size() - 2),
              "unexpected end of file at byte offset " + std::to_string(bytes.size() - 2));
  auto badMode = bytes;
  badMode[4] = 9;
  expectError(badMode, "byte offset 4");
  auto badFt = bytes;
  badFt[21] = 0;  // ft mode with F_ft = 0
  expectError(badFt, "byte offset 21");
  expectError(bytes + "zz", "trailing");
}

TEST(Checkpoint, CompatibilityCheck) {
  const auto c = config(Mode::kFt, 3);
  const auto p = initParams(c, 4, 5, 6);
  EXPECT_NO_THROW(checkCompatible(p, c, 4, 5, 6));
  auto other = c;
  other.embedDim = 4;
  try {
    checkCompatible(p, other, 4, 5, 6);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kCheckpointMismatch);
  }
  EXPECT_THROW(checkCompatible(p, c, 4, 6, 6), Error);
  other = c;
  other.mode = Mode::kDir;
  EXPECT_THROW(checkCompatible(p, other, 4, 5, 6), Error);
}
