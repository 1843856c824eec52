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
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "data.hpp"
#include "features.hpp"
#include "model.hpp"

namespace imgrec {

struct TrainConfig {
  double lr = 1e-4;
  // Unset: 1e-6 for ete, 0.1 for dir/ft.
  std::optional<double> l2Stage1;
  double l2Stage2 = 5e-5;
  size_t negPerPos = 1;
  size_t batchSize = 256;
  size_t epochsStage1 = 50;
  size_t epochsStage2 = 20;
  double adamBeta1 = 0.9;
  double adamBeta2 = 0.999;
  double adamEps = 1e-8;
  // 0 disables early stopping.
  size_t earlyStopPatience = 10;
  // Stage 2 starts with a fresh patience counter (otherwise it inherits the
  // count left over from stage 1).
  bool restartPatienceStage2 = true;
  uint64_t seed = 0;

  double l2ForStage1(Mode mode) const;
  void validate() const;
};

struct Example {
  UserId user;
  ItemId item;
  double label;  // 1 observed, 0 sampled negative
};
using Batch = std::vector<Example>;

struct EpochExamples {
  Batch examples;
  std::vector<UserId> skippedUsers;  // every item interacted; no negatives possible
};

// One epoch: every train positive once, each followed by negPerPos items
// sampled uniformly from the items the user never interacted with (train, val
// or test). Positives are visited in shuffled order.
EpochExamples sampleTrainingExamples(const Split& split, size_t numItems,
                                     size_t negPerPos, Rng& rng);

// Per-user sorted union of train, val and test items.
std::vector<std::vector<ItemId>> interactionSets(const Split& split);

enum class Stage { kFrozenHead = 1, kJoint = 2 };

// Negative log-likelihood summed over the batch, computed from logits, plus
// l2 * sum of squared entries of every weight matrix (biases excluded).
double loss(const Batch& batch, const ModelParams& params, const FeatureStore& store,
            double l2);

// Gradient buffers aligned with ModelParams::tensors().
struct Gradients {
  std::vector<std::vector<double>> tensors;

  static Gradients zerosLike(const ModelParams& params);
};

struct LossParts {
  double data = 0.0;
  double regularization = 0.0;
  double total() const { return data + regularization; }
};

// Analytic gradient of loss(). In the frozen-head stage the head tensors get
// an all-zero gradient, regularizer included.
Gradients gradients(const Batch& batch, const ModelParams& params,
                    const FeatureStore& store, double l2, Stage stage);
LossParts lossAndGradients(const Batch& batch, const ModelParams& params,
                           const FeatureStore& store, double l2, Stage stage,
                           Gradients& grads);

struct AdamSettings {
  double lr = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

class AdamState {
 public:
  AdamState() = default;
  explicit AdamState(const std::vector<size_t>& tensorSizes);
  static AdamState forParams(const ModelParams& params);

  uint64_t step() const { return step_; }
  const std::vector<std::vector<double>>& firstMoment() const { return m_; }
  const std::vector<std::vector<double>>& secondMoment() const { return v_; }

  // m <- b1 m + (1-b1) g;  v <- b2 v + (1-b2) g^2;
  // theta <- theta - lr * mhat / (sqrt(vhat) + eps), with bias-corrected
  // mhat, vhat. The step counter advances once per call; tensors flagged in
  // `frozen` keep their values and moments.
  void update(std::span<const std::span<float>> params,
              const std::vector<std::vector<double>>& grads, const AdamSettings& settings,
              const std::vector<bool>& frozen = {});

 private:
  std::vector<std::vector<double>> m_;
  std::vector<std::vector<double>> v_;
  uint64_t step_ = 0;
};

void adamUpdate(ModelParams& params, const Gradients& grads, AdamState& state,
                const AdamSettings& settings, const std::vector<bool>& frozen = {});

std::vector<bool> frozenMask(const ModelParams& params, Stage stage);

struct EpochRecord {
  size_t epoch;  // 1-based, continues across stages
  int stage;
  double trainLoss;  // mean per-example negative log-likelihood
  double valAuc;     // NaN when no user has a validation item
};

struct TrainResult {
  ModelParams params;
  std::vector<EpochRecord> history;
  std::vector<UserId> skippedUsers;
};

struct TrainCallbacks {
  // Called with the stage and params each time validation AUC improves.
  std::function<void(int, const ModelParams&)> onBest;
  std::function<void(const EpochRecord&)> onEpoch;
};

// Stage 1 trains with the head frozen and l2Stage1, early stopping on
// validation AUC; the best params are restored. In ete mode stage 2 then
// unfreezes the head with l2Stage2 and a fresh optimizer state. Throws
// kDivergence naming the epoch when the loss becomes non-finite.
TrainResult train(const TrainConfig& config, const ModelConfig& modelConfig,
                  const Split& split, const FeatureStore& store,
                  const TrainCallbacks& callbacks = {});

}  // namespace imgrec
