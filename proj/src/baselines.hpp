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

#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "data.hpp"
#include "scorer.hpp"

namespace imgrec {

// Ranks items by their number of training interactions, for every user alike.
class PopRank : public Scorer {
 public:
  static PopRank fit(const Split& split, size_t numItems);

  double score(UserId u, ItemId i) const;
  const std::vector<uint64_t>& itemCounts() const { return counts_; }
  std::vector<double> scoreItems(UserId u, std::span<const ItemId> items) const override;

 private:
  std::vector<uint64_t> counts_;
};

struct BprParams {
  size_t numFactors = 0;
  std::vector<double> userFactors;  // M x K
  std::vector<double> itemFactors;  // N x K

  std::span<double> user(UserId u) { return {userFactors.data() + u * numFactors, numFactors}; }
  std::span<const double> user(UserId u) const {
    return {userFactors.data() + u * numFactors, numFactors};
  }
  std::span<double> item(ItemId i) { return {itemFactors.data() + i * numFactors, numFactors}; }
  std::span<const double> item(ItemId i) const {
    return {itemFactors.data() + i * numFactors, numFactors};
  }
};

struct BprConfig {
  size_t numFactors = 20;
  double lr = 0.05;
  double l2 = 1e-4;
  size_t epochs = 50;
  uint64_t seed = 0;
  double initBound = 0.1;  // factors start uniform in [-initBound, initBound]
};

// -ln sigma(p_u.q_i - p_u.q_j) + l2/2 (|p_u|^2 + |q_i|^2 + |q_j|^2)
double bprTripleLoss(const BprParams& params, UserId u, ItemId pos, ItemId neg, double l2);

struct BprTripleGradient {
  std::vector<double> user;
  std::vector<double> pos;
  std::vector<double> neg;
};
BprTripleGradient bprTripleGradient(const BprParams& params, UserId u, ItemId pos, ItemId neg,
                                    double l2);

struct BprResult {
  BprParams params;
  std::vector<double> epochLoss;  // mean triple loss per epoch, before each update
};

// SGD over (u, i+, j-) triples: one per train positive per epoch, with j-
// drawn from the items u never interacted with. Throws kDivergence on
// non-finite factors.
BprResult bprmfTrain(const Split& split, size_t numItems, const BprConfig& config);

class BprScorer : public Scorer {
 public:
  explicit BprScorer(BprParams params) : params_(std::move(params)) {}
  std::vector<double> scoreItems(UserId u, std::span<const ItemId> items) const override;

 private:
  BprParams params_;
};

}  // namespace imgrec
