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

// Test-only fixtures: toy splits, the synthetic datasets used by the
// acceptance suite, and a central-difference gradient oracle.

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "data.hpp"
#include "features.hpp"
#include "model.hpp"
#include "training.hpp"

namespace imgrec::testkit {

// A Split with the given train lists and no held-out items.
Split trainOnlySplit(const std::vector<std::vector<ItemId>>& train);

FeatureStore gaussianFeatures(size_t numItems, size_t dim, uint64_t seed);

// 50 users x 100 items, 5 train positives per user, 16-dim Gaussian features.
struct OverfitData {
  Split split;
  FeatureStore store;
};
OverfitData overfitDataset(uint64_t seed);

// Items carry a planted latent signal s_i (dim `signalDim`) embedded linearly
// in their feature vectors plus Gaussian noise; each user picks items with
// probability proportional to exp(sharpness * w_u . s_i). Interactions get
// random timestamps, so the leave-one-out split holds out random picks.
struct SignalDataConfig {
  size_t numUsers = 300;
  size_t numItems = 700;
  size_t perUser = 10;
  size_t signalDim = 4;
  size_t featureDim = 16;
  double noise = 0.3;
  double sharpness = 3.0;
  size_t evalNegatives = 100;
};
struct SignalData {
  Dataset dataset;
  Split split;
  FeatureStore store;
};
SignalData signalDataset(const SignalDataConfig& config, uint64_t seed);

// Fills every tensor (biases included) with uniform values in [-scale, scale].
void randomizeParams(ModelParams& params, uint64_t seed, double scale = 0.5);

// Smallest |pre-activation| of any extractor unit over the given items;
// +inf in dir mode.
double minPreActivation(const ModelParams& params, const FeatureStore& store,
                        const std::vector<ItemId>& items);

struct GradientCheck {
  std::string tensor;
  size_t index;
  double analytic;
  double numeric;
  double relError;
};

// Central differences of loss() with step h per entry. The step is applied to
// the float storage and the realised difference is used as the denominator.
// Relative error is |a - n| / max(|a|, |n|, floor).
std::vector<GradientCheck> finiteDifferenceCheck(const Batch& batch, ModelParams params,
                                                 const FeatureStore& store, double l2,
                                                 const Gradients& analytic, double h,
                                                 const std::function<bool(const TensorRef&)>& include,
                                                 double floor = 1e-6);

class TempDir {
 public:
  TempDir();
  ~TempDir();
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

std::string readFile(const std::filesystem::path& path);
void writeText(const std::filesystem::path& path, const std::string& text);

// Writes the signal dataset as an interaction CSV and IFV1 feature file.
void writeSignalFiles(const SignalData& data, const std::filesystem::path& interactions,
                      const std::filesystem::path& features);

}  // namespace imgrec::testkit
