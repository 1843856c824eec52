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
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "data.hpp"
#include "features.hpp"
#include "matrix.hpp"
#include "scorer.hpp"

namespace imgrec {

// How item image features enter the item tower.
//   Dir: raw feature vector concatenated to the item one-hot.
//   FT:  ReLU(x W_ft + b_ft) concatenated instead.
//   EtE: cut-layer activations pass through a trainable head (affine + ReLU
//        per layer) before the FT layer; the head is frozen in stage 1.
enum class Mode : uint8_t { kDir = 0, kFt = 1, kEte = 2 };

const char* modeName(Mode mode);
Mode parseMode(const std::string& name);

struct ModelConfig {
  Mode mode = Mode::kDir;
  size_t embedDim = 20;          // K, shared by both towers
  size_t rawFeatureDim = 0;      // 0: take it from the feature store
  size_t ftDim = 150;
  std::vector<size_t> headLayers = {512};
  bool normalizeFeatures = false;
  uint64_t seed = 0;

  void validate() const;
};

struct Layer {
  Matrix weight;  // in x out
  Matrix bias;    // 1 x out

  bool operator==(const Layer&) const = default;
};

enum class TensorGroup { kUser, kItem, kFineTune, kHead };

struct TensorRef {
  std::string name;
  TensorGroup group;
  bool isWeight;  // biases are excluded from L2
  Matrix* tensor;
};

struct ConstTensorRef {
  std::string name;
  TensorGroup group;
  bool isWeight;
  const Matrix* tensor;
};

struct ModelParams {
  Mode mode = Mode::kDir;
  size_t numUsers = 0;
  size_t numItems = 0;
  size_t embedDim = 0;
  size_t rawFeatureDim = 0;

  Matrix userWeight;  // M x K
  Matrix userBias;    // 1 x K
  Matrix itemWeight;  // (N + F_in) x K; rows [0, N) are item rows
  Matrix itemBias;    // 1 x K
  std::optional<Layer> fineTune;  // FT/EtE
  std::vector<Layer> head;        // EtE only, applied before fineTune

  // F_in: width of the feature block in itemWeight.
  size_t featureInputDim() const;
  // Width fed into the fine-tune layer: last head width, or F_raw.
  size_t headOutputDim() const;

  // Stable order: user W/b, item W/b, fine-tune W/b, head layers W/b.
  std::vector<TensorRef> tensors();
  std::vector<ConstTensorRef> tensors() const;
  size_t parameterCount() const;

  bool operator==(const ModelParams&) const = default;
};

// Glorot-uniform weights (bound sqrt(6 / (fan_in + fan_out))), zero biases.
// Throws kConfig when config.rawFeatureDim is set and differs from featureDim.
ModelParams initParams(const ModelConfig& config, size_t numUsers, size_t numItems,
                       size_t featureDim);

double glorotBound(size_t fanIn, size_t fanOut);

double sigmoid(double t);
// log(1 + e^t) without overflow.
double softplus(double t);

// phi(x_i) for the item, in double precision. Dir returns the stored vector.
std::vector<double> extractFeatures(ItemId i, const FeatureStore& store,
                                    const ModelParams& params);
std::vector<double> extractFeatures(std::span<const float> raw, const ModelParams& params);

std::vector<double> embedUser(UserId u, const ModelParams& params);
std::vector<double> embedItem(ItemId i, std::span<const double> features,
                              const ModelParams& params);

double dot(std::span<const double> a, std::span<const double> b);

double score(UserId u, ItemId i, const FeatureStore& store, const ModelParams& params);
std::vector<double> scoreItems(UserId u, std::span<const ItemId> items,
                               const FeatureStore& store, const ModelParams& params);

// Precomputes every item embedding once; used by evaluation.
class ModelScorer : public Scorer {
 public:
  ModelScorer(const ModelParams& params, const FeatureStore& store);
  std::vector<double> scoreItems(UserId u, std::span<const ItemId> items) const override;

 private:
  const ModelParams& params_;
  size_t dim_;
  std::vector<double> itemEmbeddings_;  // N x K
};

// IMR1 checkpoint: "IMR1" | u8 mode | u32 M, N, K, F_raw, F_ft, head count,
// head widths... | tensors in tensors() order as row-major f32.
void saveCheckpoint(std::ostream& out, const ModelParams& params);
void saveCheckpoint(const std::filesystem::path& path, const ModelParams& params);
ModelParams loadCheckpoint(std::istream& in, const std::string& name = "IMR1");
ModelParams loadCheckpoint(const std::filesystem::path& path);

// Throws kCheckpointMismatch when params do not have the shapes implied by
// config and the data dimensions.
void checkCompatible(const ModelParams& params, const ModelConfig& config,
                     size_t numUsers, size_t numItems, size_t featureDim);

}  // namespace imgrec
