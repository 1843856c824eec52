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

#include "model.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <random>
#include <sstream>

#include "binary_io.hpp"
#include "error.hpp"
#include "parallel.hpp"

namespace imgrec {

const char* modeName(Mode mode) {
  switch (mode) {
    case Mode::kDir: return "dir";
    case Mode::kFt: return "ft";
    case Mode::kEte: return "ete";
  }
  return "?";
}

Mode parseMode(const std::string& name) {
  std::string lower = name;
  std::transform(lower.begin(), lower.end(), lower.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  if (lower == "dir") return Mode::kDir;
  if (lower == "ft") return Mode::kFt;
  if (lower == "ete") return Mode::kEte;
  throw Error(ErrorCode::kConfig, "unknown mode '" + name + "' (expected dir, ft or ete)");
}

void ModelConfig::validate() const {
  if (embedDim < 1) {
    throw Error(ErrorCode::kConfig, "K must be >= 1");
  }
  if (mode != Mode::kDir && ftDim < 1) {
    throw Error(ErrorCode::kConfig, "F_ft must be >= 1 in ft/ete mode");
  }
  if (mode == Mode::kEte) {
    if (headLayers.empty()) {
      throw Error(ErrorCode::kConfig, "head_layers must be non-empty in ete mode");
    }
    for (const auto w : headLayers) {
      if (w < 1) {
        throw Error(ErrorCode::kConfig, "head layer widths must be >= 1");
      }
    }
  }
}

size_t ModelParams::featureInputDim() const {
  return mode == Mode::kDir ? rawFeatureDim : fineTune->weight.cols();
}

size_t ModelParams::headOutputDim() const {
  return head.empty() ? rawFeatureDim : head.back().weight.cols();
}

std::vector<TensorRef> ModelParams::tensors() {
  std::vector<TensorRef> out = {
    {"user.weight", TensorGroup::kUser, true, &userWeight},
    {"user.bias", TensorGroup::kUser, false, &userBias},
    {"item.weight", TensorGroup::kItem, true, &itemWeight},
    {"item.bias", TensorGroup::kItem, false, &itemBias},
  };
  if (fineTune) {
    out.push_back({"finetune.weight", TensorGroup::kFineTune, true, &fineTune->weight});
    out.push_back({"finetune.bias", TensorGroup::kFineTune, false, &fineTune->bias});
  }
  for (size_t l = 0; l < head.size(); ++l) {
    const auto prefix = "head." + std::to_string(l);
    out.push_back({prefix + ".weight", TensorGroup::kHead, true, &head[l].weight});
    out.push_back({prefix + ".bias", TensorGroup::kHead, false, &head[l].bias});
  }
  return out;
}

std::vector<ConstTensorRef> ModelParams::tensors() const {
  std::vector<ConstTensorRef> out;
  for (auto& t : const_cast<ModelParams*>(this)->tensors()) {
    out.push_back({t.name, t.group, t.isWeight, t.tensor});
  }
  return out;
}

size_t ModelParams::parameterCount() const {
  size_t n = 0;
  for (const auto& t : tensors()) {
    n += t.tensor->size();
  }
  return n;
}

double glorotBound(size_t fanIn, size_t fanOut) {
  return std::sqrt(6.0 / static_cast<double>(fanIn + fanOut));
}

ModelParams initParams(const ModelConfig& config, size_t numUsers, size_t numItems,
                       size_t featureDim) {
  config.validate();
  if (numUsers == 0 || numItems == 0 || featureDim == 0) {
    throw Error(ErrorCode::kConfig, "model dimensions must be positive");
  }
  if (config.rawFeatureDim != 0 && config.rawFeatureDim != featureDim) {
    throw Error(ErrorCode::kConfig, "configured feature dimension " +
                                      std::to_string(config.rawFeatureDim) +
                                      " does not match feature store dimension " +
                                      std::to_string(featureDim));
  }
  const size_t k = config.embedDim;
  ModelParams p;
  p.mode = config.mode;
  p.numUsers = numUsers;
  p.numItems = numItems;
  p.embedDim = k;
  p.rawFeatureDim = featureDim;

  if (config.mode == Mode::kEte) {
    size_t in = featureDim;
    for (const auto width : config.headLayers) {
      p.head.push_back(Layer{Matrix(in, width), Matrix(1, width)});
      in = width;
    }
  }
  if (config.mode != Mode::kDir) {
    p.fineTune = Layer{Matrix(p.headOutputDim(), config.ftDim), Matrix(1, config.ftDim)};
  }
  p.userWeight = Matrix(numUsers, k);
  p.userBias = Matrix(1, k);
  p.itemWeight = Matrix(numItems + p.featureInputDim(), k);
  p.itemBias = Matrix(1, k);

  std::mt19937_64 rng(config.seed);
  for (auto& t : p.tensors()) {
    if (!t.isWeight) {
      continue;
    }
    const double a = glorotBound(t.tensor->rows(), t.tensor->cols());
    std::uniform_real_distribution<double> dist(-a, a);
    for (auto& w : t.tensor->values()) {
      w = static_cast<float>(dist(rng));
    }
  }
  return p;
}

double sigmoid(double t) {
  if (t >= 0.0) {
    return 1.0 / (1.0 + std::exp(-t));
  }
  const double e = std::exp(t);
  return e / (1.0 + e);
}

double softplus(double t) {
  return std::max(t, 0.0) + std::log1p(std::exp(-std::abs(t)));
}

double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (size_t k = 0; k < a.size(); ++k) {
    s += a[k] * b[k];
  }
  return s;
}

namespace {

// y = ReLU(x W + b)
std::vector<double> affineRelu(std::span<const double> x, const Layer& layer) {
  const size_t out = layer.weight.cols();
  std::vector<double> y(out);
  for (size_t c = 0; c < out; ++c) {
    y[c] = layer.bias(0, c);
  }
  for (size_t r = 0; r < x.size(); ++r) {
    const double xr = x[r];
    if (xr == 0.0) {
      continue;
    }
    const auto w = layer.weight.row(r);
    for (size_t c = 0; c < out; ++c) {
      y[c] += xr * w[c];
    }
  }
  for (auto& v : y) {
    v = std::max(v, 0.0);
  }
  return y;
}

}  // namespace

std::vector<double> extractFeatures(std::span<const float> raw, const ModelParams& params) {
  std::vector<double> x(raw.begin(), raw.end());
  if (params.mode == Mode::kDir) {
    return x;
  }
  for (const auto& layer : params.head) {
    x = affineRelu(x, layer);
  }
  return affineRelu(x, *params.fineTune);
}

std::vector<double> extractFeatures(ItemId i, const FeatureStore& store,
                                    const ModelParams& params) {
  if (i >= store.numItems()) {
    throw Error(ErrorCode::kIndex, "item id " + std::to_string(i) + " not in feature store");
  }
  if (store.dim() != params.rawFeatureDim) {
    throw Error(ErrorCode::kShape, "feature store dimension does not match model");
  }
  return extractFeatures(store.vector(i), params);
}

std::vector<double> embedUser(UserId u, const ModelParams& params) {
  if (u >= params.numUsers) {
    throw Error(ErrorCode::kIndex, "user id " + std::to_string(u) + " out of range");
  }
  const auto row = params.userWeight.row(u);
  std::vector<double> z(params.embedDim);
  for (size_t k = 0; k < z.size(); ++k) {
    z[k] = static_cast<double>(row[k]) + params.userBias(0, k);
  }
  return z;
}

std::vector<double> embedItem(ItemId i, std::span<const double> features,
                              const ModelParams& params) {
  if (i >= params.numItems) {
    throw Error(ErrorCode::kIndex, "item id " + std::to_string(i) + " out of range");
  }
  if (features.size() != params.featureInputDim()) {
    throw Error(ErrorCode::kShape, "item feature length " + std::to_string(features.size()) +
                                     " != " + std::to_string(params.featureInputDim()));
  }
  const size_t k = params.embedDim;
  std::vector<double> z(k);
  const auto row = params.itemWeight.row(i);
  for (size_t c = 0; c < k; ++c) {
    z[c] = static_cast<double>(row[c]) + params.itemBias(0, c);
  }
  for (size_t f = 0; f < features.size(); ++f) {
    const double x = features[f];
    if (x == 0.0) {
      continue;
    }
    const auto w = params.itemWeight.row(params.numItems + f);
    for (size_t c = 0; c < k; ++c) {
      z[c] += x * w[c];
    }
  }
  return z;
}

double score(UserId u, ItemId i, const FeatureStore& store, const ModelParams& params) {
  const auto zu = embedUser(u, params);
  const auto zi = embedItem(i, extractFeatures(i, store, params), params);
  return sigmoid(dot(zu, zi));
}

std::vector<double> scoreItems(UserId u, std::span<const ItemId> items,
                               const FeatureStore& store, const ModelParams& params) {
  const auto zu = embedUser(u, params);
  std::vector<double> out;
  out.reserve(items.size());
  for (const auto i : items) {
    const auto zi = embedItem(i, extractFeatures(i, store, params), params);
    out.push_back(sigmoid(dot(zu, zi)));
  }
  return out;
}

ModelScorer::ModelScorer(const ModelParams& params, const FeatureStore& store)
  : params_(params), dim_(params.embedDim), itemEmbeddings_(params.numItems * params.embedDim) {
  if (store.numItems() != params.numItems || store.dim() != params.rawFeatureDim) {
    throw Error(ErrorCode::kShape, "feature store does not match model dimensions");
  }
  parallelFor(params.numItems, [&](size_t begin, size_t end) {
    for (size_t i = begin; i < end; ++i) {
      const auto id = static_cast<ItemId>(i);
      const auto z = embedItem(id, extractFeatures(store.vector(id), params_), params_);
      std::copy(z.begin(), z.end(), itemEmbeddings_.begin() + static_cast<ptrdiff_t>(i * dim_));
    }
  });
}

std::vector<double> ModelScorer::scoreItems(UserId u, std::span<const ItemId> items) const {
  const auto zu = embedUser(u, params_);
  std::vector<double> out;
  out.reserve(items.size());
  for (const auto i : items) {
    if (i >= params_.numItems) {
      throw Error(ErrorCode::kIndex, "item id " + std::to_string(i) + " out of range");
    }
    out.push_back(sigmoid(dot(zu, {itemEmbeddings_.data() + i * dim_, dim_})));
  }
  return out;
}

namespace {
constexpr char kCheckpointMagic[4] = {'I', 'M', 'R', '1'};

uint32_t toU32(size_t v, const char* what) {
  if (v > UINT32_MAX) {
    throw Error(ErrorCode::kShape, std::string(what) + " does not fit in u32");
  }
  return static_cast<uint32_t>(v);
}
}  // namespace

void saveCheckpoint(std::ostream& out, const ModelParams& params) {
  out.write(kCheckpointMagic, 4);
  binary::putU8(out, static_cast<uint8_t>(params.mode));
  binary::putU32(out, toU32(params.numUsers, "M"));
  binary::putU32(out, toU32(params.numItems, "N"));
  binary::putU32(out, toU32(params.embedDim, "K"));
  binary::putU32(out, toU32(params.rawFeatureDim, "F_raw"));
  binary::putU32(out, params.fineTune ? toU32(params.fineTune->weight.cols(), "F_ft") : 0);
  binary::putU32(out, toU32(params.head.size(), "head count"));
  for (const auto& layer : params.head) {
    binary::putU32(out, toU32(layer.weight.cols(), "head width"));
  }
  for (const auto& t : params.tensors()) {
    for (const float v : t.tensor->values()) {
      binary::putF32(out, v);
    }
  }
}

void saveCheckpoint(const std::filesystem::path& path, const ModelParams& params) {
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    throw Error(ErrorCode::kIo, "cannot write checkpoint: " + path.string());
  }
  saveCheckpoint(out, params);
  if (!out) {
    throw Error(ErrorCode::kIo, "failed writing checkpoint: " + path.string());
  }
}

ModelParams loadCheckpoint(std::istream& in, const std::string& name) {
  binary::Reader r(in, name);
  char magic[4];
  r.bytes(magic, 4);
  if (!std::equal(magic, magic + 4, kCheckpointMagic)) {
    r.failAt(0, "bad magic (expected IMR1)");
  }
  const uint8_t modeTag = r.u8();
  if (modeTag > static_cast<uint8_t>(Mode::kEte)) {
    r.failAt(4, "unknown mode tag " + std::to_string(modeTag));
  }
  ModelConfig config;
  config.mode = static_cast<Mode>(modeTag);
  const uint32_t m = r.u32();
  const uint32_t n = r.u32();
  config.embedDim = r.u32();
  config.rawFeatureDim = r.u32();
  const uint64_t ftAt = r.offset();
  config.ftDim = r.u32();
  const uint64_t headAt = r.offset();
  const uint32_t headCount = r.u32();
  if ((config.mode == Mode::kDir) != (config.ftDim == 0)) {
    r.failAt(ftAt, "F_ft inconsistent with mode");
  }
  if ((config.mode == Mode::kEte) != (headCount > 0)) {
    r.failAt(headAt, "head layer count inconsistent with mode");
  }
  if (headCount > 1024) {
    r.failAt(headAt, "implausible head layer count");
  }
  config.headLayers.clear();
  for (uint32_t l = 0; l < headCount; ++l) {
    const uint64_t at = r.offset();
    const uint32_t w = r.u32();
    if (w == 0) {
      r.failAt(at, "zero head width");
    }
    config.headLayers.push_back(w);
  }
  if (m == 0 || n == 0 || config.embedDim == 0 || config.rawFeatureDim == 0) {
    r.failAt(5, "zero dimension in header");
  }
  // Shapes only; every weight is overwritten below.
  ModelParams p;
  p.mode = config.mode;
  p.numUsers = m;
  p.numItems = n;
  p.embedDim = config.embedDim;
  p.rawFeatureDim = config.rawFeatureDim;
  size_t in_ = config.rawFeatureDim;
  for (const auto w : config.headLayers) {
    p.head.push_back(Layer{Matrix(in_, w), Matrix(1, w)});
    in_ = w;
  }
  if (config.mode != Mode::kDir) {
    p.fineTune = Layer{Matrix(in_, config.ftDim), Matrix(1, config.ftDim)};
  }
  p.userWeight = Matrix(m, config.embedDim);
  p.userBias = Matrix(1, config.embedDim);
  p.itemWeight = Matrix(n + p.featureInputDim(), config.embedDim);
  p.itemBias = Matrix(1, config.embedDim);
  for (auto& t : p.tensors()) {
    for (auto& v : t.tensor->values()) {
      const uint64_t at = r.offset();
      v = r.f32();
      if (!std::isfinite(v)) {
        r.failAt(at, "non-finite value in " + t.name);
      }
    }
  }
  r.expectEnd();
  return p;
}

ModelParams loadCheckpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw Error(ErrorCode::kIo, "cannot read checkpoint: " + path.string());
  }
  return loadCheckpoint(in, path.string());
}

void checkCompatible(const ModelParams& params, const ModelConfig& config,
                     size_t numUsers, size_t numItems, size_t featureDim) {
  std::ostringstream why;
  if (params.mode != config.mode) {
    why << "mode " << modeName(params.mode) << " vs configured " << modeName(config.mode);
  } else if (params.numUsers != numUsers || params.numItems != numItems) {
    why << "checkpoint has " << params.numUsers << " users/" << params.numItems
        << " items, data has " << numUsers << "/" << numItems;
  } else if (params.embedDim != config.embedDim) {
    why << "K=" << params.embedDim << " vs configured " << config.embedDim;
  } else if (params.rawFeatureDim != featureDim) {
    why << "feature dim " << params.rawFeatureDim << " vs feature file " << featureDim;
  } else if (params.fineTune && params.fineTune->weight.cols() != config.ftDim) {
    why << "F_ft=" << params.fineTune->weight.cols() << " vs configured " << config.ftDim;
  } else if (params.mode == Mode::kEte) {
    std::vector<size_t> widths;
    for (const auto& l : params.head) {
      widths.push_back(l.weight.cols());
    }
    if (widths != config.headLayers) {
      why << "head layer widths differ from configuration";
    }
  }
  if (!why.str().empty()) {
    throw Error(ErrorCode::kCheckpointMismatch, "checkpoint does not match config: " + why.str());
  }
}

}  // namespace imgrec
