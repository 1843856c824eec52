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

#include "training.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <unordered_map>

#include "error.hpp"
#include "eval.hpp"

namespace imgrec {

double TrainConfig::l2ForStage1(Mode mode) const {
  if (l2Stage1) {
    return *l2Stage1;
  }
  return mode == Mode::kEte ? 1e-6 : 0.1;
}

void TrainConfig::validate() const {
  if (!(lr > 0.0)) {
    throw Error(ErrorCode::kConfig, "lr must be > 0");
  }
  if (!(adamBeta1 > 0.0 && adamBeta1 < 1.0) || !(adamBeta2 > 0.0 && adamBeta2 < 1.0)) {
    throw Error(ErrorCode::kConfig, "adam betas must lie in (0, 1)");
  }
  if (!(adamEps > 0.0)) {
    throw Error(ErrorCode::kConfig, "adam_eps must be > 0");
  }
  if ((l2Stage1 && *l2Stage1 < 0.0) || l2Stage2 < 0.0) {
    throw Error(ErrorCode::kConfig, "l2 must be >= 0");
  }
  if (negPerPos < 1) {
    throw Error(ErrorCode::kConfig, "neg_per_pos must be >= 1");
  }
  if (batchSize < 1) {
    throw Error(ErrorCode::kConfig, "batch_size must be >= 1");
  }
}

std::vector<std::vector<ItemId>> interactionSets(const Split& split) {
  std::vector<std::vector<ItemId>> sets(split.numUsers());
  for (UserId u = 0; u < split.numUsers(); ++u) {
    auto& s = sets[u];
    s = split.train[u];
    if (split.val[u]) {
      s.push_back(*split.val[u]);
    }
    if (split.test[u]) {
      s.push_back(*split.test[u]);
    }
    std::sort(s.begin(), s.end());
  }
  return sets;
}

EpochExamples sampleTrainingExamples(const Split& split, size_t numItems, size_t negPerPos,
                                     Rng& rng) {
  const auto interacted = interactionSets(split);
  std::vector<std::pair<UserId, ItemId>> positives;
  EpochExamples out;
  for (UserId u = 0; u < split.numUsers(); ++u) {
    if (split.train[u].empty()) {
      continue;
    }
    if (interacted[u].size() >= numItems) {
      out.skippedUsers.push_back(u);
      continue;
    }
    for (const auto i : split.train[u]) {
      positives.emplace_back(u, i);
    }
  }
  std::shuffle(positives.begin(), positives.end(), rng);
  out.examples.reserve(positives.size() * (1 + negPerPos));
  for (const auto& [u, i] : positives) {
    out.examples.push_back({u, i, 1.0});
    const auto& seen = interacted[u];
    std::uniform_int_distribution<uint64_t> dist(0, numItems - seen.size() - 1);
    for (size_t k = 0; k < negPerPos; ++k) {
      out.examples.push_back({u, nthNonInteracted(seen, dist(rng)), 0.0});
    }
  }
  return out;
}

namespace {

double squaredNorm(const Matrix& m) {
  double s = 0.0;
  for (const float v : m.values()) {
    s += static_cast<double>(v) * v;
  }
  return s;
}

double regularizer(const ModelParams& params, double l2) {
  if (l2 == 0.0) {
    return 0.0;
  }
  double s = 0.0;
  for (const auto& t : params.tensors()) {
    if (t.isWeight) {
      s += squaredNorm(*t.tensor);
    }
  }
  return l2 * s;
}

void checkBatch(const Batch& batch, const ModelParams& params, const FeatureStore& store) {
  if (batch.empty()) {
    throw Error(ErrorCode::kPrecondition, "batch is empty");
  }
  if (store.dim() != params.rawFeatureDim || store.numItems() != params.numItems) {
    throw Error(ErrorCode::kShape, "feature store does not match model dimensions");
  }
}

// Forward activations of the feature extractor for one item:
// acts[0] is the raw input, acts[l + 1] the ReLU output of head layer l, and
// the last entry the fine-tune output (absent in dir mode).
struct ItemTrace {
  std::vector<std::vector<double>> acts;
  std::vector<double> embedding;
  std::vector<double> featureGrad;  // d loss / d phi(x_i), accumulated over the batch

  const std::vector<double>& features() const { return acts.back(); }
};

void forwardLayer(const std::vector<double>& x, const Layer& layer, std::vector<double>& y) {
  const size_t out = layer.weight.cols();
  y.assign(out, 0.0);
  for (size_t c = 0; c < out; ++c) {
    y[c] = layer.bias(0, c);
  }
  for (size_t r = 0; r < x.size(); ++r) {
    const auto w = layer.weight.row(r);
    for (size_t c = 0; c < out; ++c) {
      y[c] += x[r] * w[c];
    }
  }
  for (auto& v : y) {
    v = std::max(v, 0.0);
  }
}

ItemTrace traceItem(ItemId i, const ModelParams& params, const FeatureStore& store) {
  ItemTrace t;
  const auto raw = store.vector(i);
  t.acts.emplace_back(raw.begin(), raw.end());
  if (params.mode != Mode::kDir) {
    for (const auto& layer : params.head) {
      std::vector<double> y;
      forwardLayer(t.acts.back(), layer, y);
      t.acts.push_back(std::move(y));
    }
    std::vector<double> y;
    forwardLayer(t.acts.back(), *params.fineTune, y);
    t.acts.push_back(std::move(y));
  }
  t.embedding = embedItem(i, t.features(), params);
  t.featureGrad.assign(t.features().size(), 0.0);
  return t;
}

// Backprop dy (w.r.t. the ReLU output y = ReLU(x W + b)) into W, b and,
// when dx is non-null, into x. Subgradient 0 at the kink.
void backwardLayer(const std::vector<double>& x, const std::vector<double>& y,
                   const std::vector<double>& dy, const Layer& layer,
                   std::vector<double>& dW, std::vector<double>& db,
                   std::vector<double>* dx) {
  const size_t out = layer.weight.cols();
  std::vector<double> dpre(out);
  for (size_t c = 0; c < out; ++c) {
    dpre[c] = y[c] > 0.0 ? dy[c] : 0.0;
    db[c] += dpre[c];
  }
  if (dx) {
    dx->assign(x.size(), 0.0);
  }
  for (size_t r = 0; r < x.size(); ++r) {
    const auto w = layer.weight.row(r);
    double acc = 0.0;
    for (size_t c = 0; c < out; ++c) {
      dW[r * out + c] += x[r] * dpre[c];
      acc += w[c] * dpre[c];
    }
    if (dx) {
      (*dx)[r] = acc;
    }
  }
}

}  // namespace

double loss(const Batch& batch, const ModelParams& params, const FeatureStore& store,
            double l2) {
  checkBatch(batch, params, store);
  double total = 0.0;
  for (const auto& ex : batch) {
    const auto zu = embedUser(ex.user, params);
    const auto zi = embedItem(ex.item, extractFeatures(ex.item, store, params), params);
    const double t = dot(zu, zi);
    // -[y log s(t) + (1-y) log(1 - s(t))] = softplus(t) - y t
    total += softplus(t) - ex.label * t;
  }
  return total + regularizer(params, l2);
}

Gradients Gradients::zerosLike(const ModelParams& params) {
  Gradients g;
  for (const auto& t : params.tensors()) {
    g.tensors.emplace_back(t.tensor->size(), 0.0);
  }
  return g;
}

LossParts lossAndGradients(const Batch& batch, const ModelParams& params,
                           const FeatureStore& store, double l2, Stage stage,
                           Gradients& grads) {
  checkBatch(batch, params, store);
  grads = Gradients::zerosLike(params);
  const auto refs = params.tensors();
  // Indices follow ModelParams::tensors().
  auto& gUserW = grads.tensors[0];
  auto& gUserB = grads.tensors[1];
  auto& gItemW = grads.tensors[2];
  auto& gItemB = grads.tensors[3];
  const size_t k = params.embedDim;
  const size_t n = params.numItems;

  std::unordered_map<ItemId, ItemTrace> traces;
  LossParts parts;
  for (const auto& ex : batch) {
    auto it = traces.find(ex.item);
    if (it == traces.end()) {
      it = traces.emplace(ex.item, traceItem(ex.item, params, store)).first;
    }
    auto& trace = it->second;
    const auto zu = embedUser(ex.user, params);
    const auto& zi = trace.embedding;
    const double t = dot(zu, zi);
    parts.data += softplus(t) - ex.label * t;
    const double g = sigmoid(t) - ex.label;
    if (g == 0.0) {
      continue;
    }
    const auto& phi = trace.features();
    for (size_t c = 0; c < k; ++c) {
      const double dzu = g * zi[c];
      const double dzi = g * zu[c];
      gUserW[ex.user * k + c] += dzu;
      gUserB[c] += dzu;
      gItemW[ex.item * k + c] += dzi;
      gItemB[c] += dzi;
    }
    for (size_t f = 0; f < phi.size(); ++f) {
      const auto w = params.itemWeight.row(n + f);
      double acc = 0.0;
      for (size_t c = 0; c < k; ++c) {
        const double dzi = g * zu[c];
        gItemW[(n + f) * k + c] += phi[f] * dzi;
        acc += w[c] * dzi;
      }
      trace.featureGrad[f] += acc;
    }
  }

  if (params.mode != Mode::kDir) {
    const size_t ftIndex = 4;
    const size_t headBase = 6;
    const bool headTrainable = stage == Stage::kJoint && !params.head.empty();
    // Deterministic order regardless of hash-map iteration.
    std::vector<ItemId> items;
    items.reserve(traces.size());
    for (const auto& [i, _] : traces) {
      items.push_back(i);
    }
    std::sort(items.begin(), items.end());
    for (const auto i : items) {
      const auto& trace = traces.at(i);
      const size_t L = params.head.size();
      std::vector<double> dx;
      backwardLayer(trace.acts[L], trace.acts[L + 1], trace.featureGrad, *params.fineTune,
                    grads.tensors[ftIndex], grads.tensors[ftIndex + 1],
                    headTrainable ? &dx : nullptr);
      if (!headTrainable) {
        continue;
      }
      for (size_t l = L; l-- > 0;) {
        std::vector<double> dprev;
        backwardLayer(trace.acts[l], trace.acts[l + 1], dx, params.head[l],
                      grads.tensors[headBase + 2 * l], grads.tensors[headBase + 2 * l + 1],
                      l > 0 ? &dprev : nullptr);
        dx = std::move(dprev);
      }
    }
  }

  if (l2 != 0.0) {
    for (size_t t = 0; t < refs.size(); ++t) {
      if (!refs[t].isWeight) {
        continue;
      }
      parts.regularization += l2 * squaredNorm(*refs[t].tensor);
      if (stage == Stage::kFrozenHead && refs[t].group == TensorGroup::kHead) {
        continue;
      }
      const auto values = refs[t].tensor->values();
      auto& g = grads.tensors[t];
      for (size_t j = 0; j < values.size(); ++j) {
        g[j] += 2.0 * l2 * values[j];
      }
    }
  }
  return parts;
}

Gradients gradients(const Batch& batch, const ModelParams& params, const FeatureStore& store,
                    double l2, Stage stage) {
  Gradients g;
  lossAndGradients(batch, params, store, l2, stage, g);
  return g;
}

AdamState::AdamState(const std::vector<size_t>& tensorSizes) {
  for (const auto n : tensorSizes) {
    m_.emplace_back(n, 0.0);
    v_.emplace_back(n, 0.0);
  }
}

AdamState AdamState::forParams(const ModelParams& params) {
  std::vector<size_t> sizes;
  for (const auto& t : params.tensors()) {
    sizes.push_back(t.tensor->size());
  }
  return AdamState(sizes);
}

void AdamState::update(std::span<const std::span<float>> params,
                       const std::vector<std::vector<double>>& grads,
                       const AdamSettings& settings, const std::vector<bool>& frozen) {
  if (params.size() != m_.size() || grads.size() != m_.size()) {
    throw Error(ErrorCode::kShape, "optimizer state does not match parameter list");
  }
  ++step_;
  const double t = static_cast<double>(step_);
  const double c1 = 1.0 - std::pow(settings.beta1, t);
  const double c2 = 1.0 - std::pow(settings.beta2, t);
  for (size_t k = 0; k < params.size(); ++k) {
    if (!frozen.empty() && frozen[k]) {
      continue;
    }
    const auto theta = params[k];
    const auto& g = grads[k];
    auto& m = m_[k];
    auto& v = v_[k];
    if (theta.size() != m.size() || g.size() != m.size()) {
      throw Error(ErrorCode::kShape, "gradient shape does not match parameter");
    }
    for (size_t j = 0; j < theta.size(); ++j) {
      m[j] = settings.beta1 * m[j] + (1.0 - settings.beta1) * g[j];
      v[j] = settings.beta2 * v[j] + (1.0 - settings.beta2) * g[j] * g[j];
      const double mhat = m[j] / c1;
      const double vhat = v[j] / c2;
      theta[j] = static_cast<float>(theta[j] - settings.lr * mhat / (std::sqrt(vhat) + settings.eps));
    }
  }
}

void adamUpdate(ModelParams& params, const Gradients& grads, AdamState& state,
                const AdamSettings& settings, const std::vector<bool>& frozen) {
  std::vector<std::span<float>> views;
  for (auto& t : params.tensors()) {
    views.push_back(t.tensor->values());
  }
  state.update(views, grads.tensors, settings, frozen);
}

std::vector<bool> frozenMask(const ModelParams& params, Stage stage) {
  std::vector<bool> mask;
  for (const auto& t : params.tensors()) {
    mask.push_back(stage == Stage::kFrozenHead && t.group == TensorGroup::kHead);
  }
  return mask;
}

namespace {

struct StageRun {
  Stage stage;
  size_t epochs;
  double l2;
};

}  // namespace

TrainResult train(const TrainConfig& config, const ModelConfig& modelConfig,
                  const Split& split, const FeatureStore& store,
                  const TrainCallbacks& callbacks) {
  config.validate();
  TrainResult result;
  result.params = initParams(modelConfig, split.numUsers(), store.numItems(), store.dim());
  if (split.numTrainPositives() == 0) {
    throw Error(ErrorCode::kPrecondition, "split has no training positives");
  }

  Rng rng(config.seed);
  const AdamSettings adam{config.lr, config.adamBeta1, config.adamBeta2, config.adamEps};
  std::vector<StageRun> stages = {
    {Stage::kFrozenHead, config.epochsStage1, config.l2ForStage1(modelConfig.mode)}};
  if (modelConfig.mode == Mode::kEte) {
    stages.push_back({Stage::kJoint, config.epochsStage2, config.l2Stage2});
  }

  size_t epoch = 0;
  size_t sinceBest = 0;
  for (const auto& run : stages) {
    if (run.epochs == 0) {
      continue;
    }
    AdamState state = AdamState::forParams(result.params);
    const auto frozen = frozenMask(result.params, run.stage);
    double bestAuc = -std::numeric_limits<double>::infinity();
    std::optional<ModelParams> best;
    if (run.stage == Stage::kJoint && config.restartPatienceStage2) {
      sinceBest = 0;
    }
    for (size_t e = 0; e < run.epochs; ++e) {
      ++epoch;
      auto sampled = sampleTrainingExamples(split, store.numItems(), config.negPerPos, rng);
      if (epoch == 1) {
        result.skippedUsers = sampled.skippedUsers;
      }
      const auto& examples = sampled.examples;
      double dataLoss = 0.0;
      Gradients grads;
      for (size_t start = 0; start < examples.size(); start += config.batchSize) {
        const size_t end = std::min(examples.size(), start + config.batchSize);
        const Batch batch(examples.begin() + static_cast<ptrdiff_t>(start),
                          examples.begin() + static_cast<ptrdiff_t>(end));
        const auto parts = lossAndGradients(batch, result.params, store, run.l2, run.stage, grads);
        if (!std::isfinite(parts.total())) {
          throw Error(ErrorCode::kDivergence,
                      "non-finite training loss at epoch " + std::to_string(epoch) +
                        " (stage " + std::to_string(static_cast<int>(run.stage)) + ")");
        }
        dataLoss += parts.data;
        adamUpdate(result.params, grads, state, adam, frozen);
      }
      for (const auto& t : result.params.tensors()) {
        for (const float v : t.tensor->values()) {
          if (!std::isfinite(v)) {
            throw Error(ErrorCode::kDivergence, "non-finite parameter in " + t.name +
                                                  " after epoch " + std::to_string(epoch));
          }
        }
      }

      ModelScorer scorer(result.params, store);
      EpochRecord rec{epoch, static_cast<int>(run.stage),
                      dataLoss / static_cast<double>(examples.size()),
                      heldOutAuc(scorer, split, HeldOut::kValidation)};
      result.history.push_back(rec);
      if (callbacks.onEpoch) {
        callbacks.onEpoch(rec);
      }
      if (std::isnan(rec.valAuc)) {
        continue;  // nothing to select on; keep the latest params
      }
      if (rec.valAuc > bestAuc) {
        bestAuc = rec.valAuc;
        best = result.params;
        sinceBest = 0;
        if (callbacks.onBest) {
          callbacks.onBest(static_cast<int>(run.stage), result.params);
        }
      } else {
        ++sinceBest;
        if (config.earlyStopPatience > 0 && sinceBest >= config.earlyStopPatience) {
          break;
        }
      }
    }
    if (best) {
      result.params = std::move(*best);
    }
  }
  return result;
}

}  // namespace imgrec
