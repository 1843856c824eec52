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

#include "baselines.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <string>

#include "error.hpp"
#include "model.hpp"
#include "training.hpp"

namespace imgrec {

PopRank PopRank::fit(const Split& split, size_t numItems) {
  PopRank model;
  model.counts_.assign(numItems, 0);
  for (const auto& items : split.train) {
    for (const auto i : items) {
      ++model.counts_.at(i);
    }
  }
  return model;
}

double PopRank::score(UserId, ItemId i) const {
  if (i >= counts_.size()) {
    throw Error(ErrorCode::kIndex, "item id " + std::to_string(i) + " out of range");
  }
  return static_cast<double>(counts_[i]);
}

std::vector<double> PopRank::scoreItems(UserId u, std::span<const ItemId> items) const {
  std::vector<double> out;
  out.reserve(items.size());
  for (const auto i : items) {
    out.push_back(score(u, i));
  }
  return out;
}

namespace {

double tripleMargin(const BprParams& p, UserId u, ItemId pos, ItemId neg) {
  const auto pu = p.user(u);
  const auto qi = p.item(pos);
  const auto qj = p.item(neg);
  double x = 0.0;
  for (size_t k = 0; k < p.numFactors; ++k) {
    x += pu[k] * (qi[k] - qj[k]);
  }
  return x;
}

double sq(std::span<const double> v) {
  double s = 0.0;
  for (const double x : v) {
    s += x * x;
  }
  return s;
}

}  // namespace

double bprTripleLoss(const BprParams& params, UserId u, ItemId pos, ItemId neg, double l2) {
  const double x = tripleMargin(params, u, pos, neg);
  return softplus(-x) +
         0.5 * l2 * (sq(params.user(u)) + sq(params.item(pos)) + sq(params.item(neg)));
}

BprTripleGradient bprTripleGradient(const BprParams& params, UserId u, ItemId pos, ItemId neg,
                                    double l2) {
  const double s = sigmoid(-tripleMargin(params, u, pos, neg));
  const auto pu = params.user(u);
  const auto qi = params.item(pos);
  const auto qj = params.item(neg);
  BprTripleGradient g;
  g.user.resize(params.numFactors);
  g.pos.resize(params.numFactors);
  g.neg.resize(params.numFactors);
  for (size_t k = 0; k < params.numFactors; ++k) {
    g.user[k] = -s * (qi[k] - qj[k]) + l2 * pu[k];
    g.pos[k] = -s * pu[k] + l2 * qi[k];
    g.neg[k] = s * pu[k] + l2 * qj[k];
  }
  // pos == neg cannot happen for sampled triples, but keep the sum correct.
  if (pos == neg) {
    for (size_t k = 0; k < params.numFactors; ++k) {
      g.pos[k] += g.neg[k];
      g.neg[k] = g.pos[k];
    }
  }
  return g;
}

BprResult bprmfTrain(const Split& split, size_t numItems, const BprConfig& config) {
  if (config.numFactors < 1 || numItems == 0 || split.numUsers() == 0) {
    throw Error(ErrorCode::kConfig, "BPR-MF needs positive dimensions");
  }
  BprResult result;
  auto& p = result.params;
  p.numFactors = config.numFactors;
  p.userFactors.resize(split.numUsers() * config.numFactors);
  p.itemFactors.resize(numItems * config.numFactors);
  Rng rng(config.seed);
  std::uniform_real_distribution<double> init(-config.initBound, config.initBound);
  for (auto& v : p.userFactors) {
    v = init(rng);
  }
  for (auto& v : p.itemFactors) {
    v = init(rng);
  }

  for (size_t epoch = 0; epoch < config.epochs; ++epoch) {
    const auto sampled = sampleTrainingExamples(split, numItems, 1, rng);
    const auto& ex = sampled.examples;
    double total = 0.0;
    size_t triples = 0;
    for (size_t k = 0; k + 1 < ex.size(); k += 2) {
      const UserId u = ex[k].user;
      const ItemId i = ex[k].item;
      const ItemId j = ex[k + 1].item;
      total += bprTripleLoss(p, u, i, j, config.l2);
      ++triples;
      const auto g = bprTripleGradient(p, u, i, j, config.l2);
      auto pu = p.user(u);
      auto qi = p.item(i);
      auto qj = p.item(j);
      for (size_t f = 0; f < p.numFactors; ++f) {
        pu[f] -= config.lr * g.user[f];
        qi[f] -= config.lr * g.pos[f];
        qj[f] -= config.lr * g.neg[f];
      }
    }
    const double mean = triples ? total / static_cast<double>(triples) : 0.0;
    if (!std::isfinite(mean)) {
      throw Error(ErrorCode::kDivergence,
                  "BPR-MF loss became non-finite at epoch " + std::to_string(epoch + 1));
    }
    result.epochLoss.push_back(mean);
  }
  return result;
}

std::vector<double> BprScorer::scoreItems(UserId u, std::span<const ItemId> items) const {
  const auto pu = params_.user(u);
  std::vector<double> out;
  out.reserve(items.size());
  for (const auto i : items) {
    const auto qi = params_.item(i);
    double s = 0.0;
    for (size_t k = 0; k < params_.numFactors; ++k) {
      s += pu[k] * qi[k];
    }
    out.push_back(s);
  }
  return out;
}

}  // namespace imgrec
