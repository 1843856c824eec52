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

#include "support.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <random>
#include <sstream>
#include <unistd.h>

namespace imgrec::testkit {

Split trainOnlySplit(const std::vector<std::vector<ItemId>>& train) {
  Split split;
  split.train = train;
  for (auto& items : split.train) {
    std::sort(items.begin(), items.end());
  }
  split.val.assign(train.size(), std::nullopt);
  split.test.assign(train.size(), std::nullopt);
  split.evalNegatives.assign(train.size(), {});
  return split;
}

FeatureStore gaussianFeatures(size_t numItems, size_t dim, uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<float> values(numItems * dim);
  for (auto& v : values) {
    v = static_cast<float>(normal(rng));
  }
  return FeatureStore(numItems, dim, std::move(values));
}

OverfitData overfitDataset(uint64_t seed) {
  constexpr size_t kUsers = 50;
  constexpr size_t kItems = 100;
  constexpr size_t kPositives = 5;
  std::mt19937_64 rng(seed);
  std::vector<std::vector<ItemId>> train(kUsers);
  std::vector<ItemId> all(kItems);
  std::iota(all.begin(), all.end(), 0);
  for (auto& items : train) {
    std::shuffle(all.begin(), all.end(), rng);
    items.assign(all.begin(), all.begin() + kPositives);
  }
  return {trainOnlySplit(train), gaussianFeatures(kItems, 16, seed + 1)};
}

SignalData signalDataset(const SignalDataConfig& c, uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<double> signal(c.numItems * c.signalDim);
  for (auto& v : signal) {
    v = normal(rng);
  }
  std::vector<double> mixing(c.signalDim * c.featureDim);
  for (auto& v : mixing) {
    v = normal(rng) / std::sqrt(static_cast<double>(c.signalDim));
  }
  std::vector<float> features(c.numItems * c.featureDim);
  for (size_t i = 0; i < c.numItems; ++i) {
    for (size_t f = 0; f < c.featureDim; ++f) {
      double x = c.noise * normal(rng);
      for (size_t d = 0; d < c.signalDim; ++d) {
        x += signal[i * c.signalDim + d] * mixing[d * c.featureDim + f];
      }
      features[i * c.featureDim + f] = static_cast<float>(x);
    }
  }

  InteractionLog log;
  std::extreme_value_distribution<double> gumbel(0.0, 1.0);
  std::vector<std::pair<double, ItemId>> keyed(c.numItems);
  for (size_t u = 0; u < c.numUsers; ++u) {
    std::vector<double> pref(c.signalDim);
    for (auto& v : pref) {
      v = normal(rng);
    }
    // Gumbel top-k: a sample without replacement proportional to exp(logit).
    for (ItemId i = 0; i < c.numItems; ++i) {
      double logit = 0.0;
      for (size_t d = 0; d < c.signalDim; ++d) {
        logit += pref[d] * signal[i * c.signalDim + d];
      }
      keyed[i] = {c.sharpness * logit + gumbel(rng), i};
    }
    std::partial_sort(keyed.begin(), keyed.begin() + static_cast<ptrdiff_t>(c.perUser),
                      keyed.end(), std::greater<>());
    std::vector<int64_t> stamps(c.perUser);
    std::iota(stamps.begin(), stamps.end(), 1);
    std::shuffle(stamps.begin(), stamps.end(), rng);
    for (size_t k = 0; k < c.perUser; ++k) {
      log.records.push_back({"u" + std::to_string(u), "i" + std::to_string(keyed[k].second),
                             stamps[k]});
    }
  }
  // Only picked items get ids; copy their feature rows into id order.
  SignalData data;
  data.dataset = buildDataset(log);
  std::vector<float> aligned(data.dataset.numItems() * c.featureDim);
  for (ItemId i = 0; i < data.dataset.numItems(); ++i) {
    const auto original = static_cast<size_t>(std::stoul(data.dataset.items.key(i).substr(1)));
    std::copy_n(features.begin() + static_cast<ptrdiff_t>(original * c.featureDim), c.featureDim,
                aligned.begin() + static_cast<ptrdiff_t>(i * c.featureDim));
  }
  data.store = FeatureStore(data.dataset.numItems(), c.featureDim, std::move(aligned));
  data.split = leaveOneOutSplit(data.dataset, c.evalNegatives, seed + 7);
  return data;
}

void randomizeParams(ModelParams& params, uint64_t seed, double scale) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> dist(-scale, scale);
  for (auto& t : params.tensors()) {
    for (auto& v : t.tensor->values()) {
      v = static_cast<float>(dist(rng));
    }
  }
}

double minPreActivation(const ModelParams& params, const FeatureStore& store,
                        const std::vector<ItemId>& items) {
  double best = std::numeric_limits<double>::infinity();
  if (params.mode == Mode::kDir) {
    return best;
  }
  for (const auto i : items) {
    const auto raw = store.vector(i);
    std::vector<double> x(raw.begin(), raw.end());
    std::vector<const Layer*> layers;
    for (const auto& l : params.head) {
      layers.push_back(&l);
    }
    layers.push_back(&*params.fineTune);
    for (const Layer* layer : layers) {
      std::vector<double> y(layer->weight.cols());
      for (size_t c = 0; c < y.size(); ++c) {
        double pre = layer->bias(0, c);
        for (size_t r = 0; r < x.size(); ++r) {
          pre += x[r] * layer->weight(r, c);
        }
        best = std::min(best, std::abs(pre));
        y[c] = std::max(pre, 0.0);
      }
      x = std::move(y);
    }
  }
  return best;
}

std::vector<GradientCheck> finiteDifferenceCheck(const Batch& batch, ModelParams params,
                                                 const FeatureStore& store, double l2,
                                                 const Gradients& analytic, double h,
                                                 const std::function<bool(const TensorRef&)>& include,
                                                 double floor) {
  std::vector<GradientCheck> out;
  auto refs = params.tensors();
  for (size_t t = 0; t < refs.size(); ++t) {
    if (!include(refs[t])) {
      continue;
    }
    auto values = refs[t].tensor->values();
    for (size_t j = 0; j < values.size(); ++j) {
      const float original = values[j];
      const float up = static_cast<float>(original + h);
      const float down = static_cast<float>(original - h);
      values[j] = up;
      const double lossUp = loss(batch, params, store, l2);
      values[j] = down;
      const double lossDown = loss(batch, params, store, l2);
      values[j] = original;
      const double numeric =
        (lossUp - lossDown) / (static_cast<double>(up) - static_cast<double>(down));
      const double a = analytic.tensors[t][j];
      const double denom = std::max({std::abs(a), std::abs(numeric), floor});
      out.push_back({refs[t].name, j, a, numeric, std::abs(a - numeric) / denom});
    }
  }
  return out;
}

TempDir::TempDir() {
  auto base = std::filesystem::temp_directory_path() / "imgrec-test-XXXXXX";
  std::string tmpl = base.string();
  if (!mkdtemp(tmpl.data())) {
    throw std::runtime_error("mkdtemp failed");
  }
  path_ = tmpl;
}

TempDir::~TempDir() {
  std::error_code ec;
  std::filesystem::remove_all(path_, ec);
}

std::string readFile(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

void writeText(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  out << text;
}

void writeSignalFiles(const SignalData& data, const std::filesystem::path& interactions,
                      const std::filesystem::path& features) {
  std::ofstream out(interactions, std::ios::binary);
  for (UserId u = 0; u < data.dataset.numUsers(); ++u) {
    for (size_t k = 0; k < data.dataset.interactions[u].size(); ++k) {
      out << data.dataset.users.key(u) << ','
          << data.dataset.items.key(data.dataset.interactions[u][k]) << ",1,"
          << *data.dataset.timestamps[u][k] << '\n';
    }
  }
  writeFeatureFile(features, featureFileFromStore(data.store, data.dataset));
}

}  // namespace imgrec::testkit
