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

#include "config.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <istream>

#include "error.hpp"

namespace imgrec {

namespace {

// Derived stream for training so it does not replay the init stream.
constexpr uint64_t kTrainSeedOffset = 0x9E3779B97F4A7C15ULL;

std::string trim(const std::string& s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string::npos) {
    return "";
  }
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

[[noreturn]] void badValue(const std::string& key, const std::string& value, const char* want) {
  throw Error(ErrorCode::kConfig, "invalid value '" + value + "' for " + key + " (expected " +
                                    want + ")");
}

}  // namespace

const std::vector<ConfigKey>& RunConfig::knownKeys() {
  static const std::vector<ConfigKey> keys = {
    // model
    {"mode", "dir", "feature mode: dir, ft or ete"},
    {"K", "20", "user/item embedding size"},
    {"F_raw", "0", "expected raw feature dimension (0 = from feature file)"},
    {"F_ft", "150", "fine-tuning layer width"},
    {"head_layers", "512", "comma-separated trainable head widths (ete)"},
    {"activation_embed", "linear", "embedding activation (linear only)"},
    {"normalize_features", "false", "L2-normalize feature vectors on load"},
    {"seed", "0", "seed for splitting, init, sampling and evaluation"},
    // training
    {"lr", "0.0001", "Adam learning rate"},
    {"l2_stage1", "", "stage-1 L2 (empty: 1e-6 for ete, 0.1 otherwise)"},
    {"l2_stage2", "0.00005", "stage-2 L2 (ete)"},
    {"neg_per_pos", "1", "sampled negatives per training positive"},
    {"batch_size", "256", "examples per gradient step"},
    {"epochs_stage1", "50", "max epochs with the head frozen"},
    {"epochs_stage2", "20", "max joint epochs (ete)"},
    {"adam_beta1", "0.9", "Adam beta1"},
    {"adam_beta2", "0.999", "Adam beta2"},
    {"adam_eps", "1e-8", "Adam epsilon"},
    {"early_stop_patience", "10", "epochs without validation gain before stopping (0 = off)"},
    {"restart_patience_stage2", "true", "reset the patience counter when stage 2 starts"},
    // evaluation
    {"negatives", "100", "sampled negatives per user"},
    {"trials", "5", "evaluation trials"},
    {"frozen_first_trial", "false", "trial 0 uses the split's stored negatives"},
    // baselines
    {"bpr_K", "20", "BPR-MF factors"},
    {"bpr_lr", "0.05", "BPR-MF SGD learning rate"},
    {"bpr_l2", "0.0001", "BPR-MF L2"},
    {"bpr_epochs", "50", "BPR-MF epochs"},
    // paths
    {"interactions", "", "interaction file"},
    {"format", "csv", "interaction file format: csv or tsv"},
    {"data", "", "prepared data directory"},
    {"features", "", "IFV1 feature file (final image features)"},
    {"cut_features", "", "IFV1 cut-layer feature file for ete (defaults to features)"},
    {"checkpoint", "", "model checkpoint"},
    {"out", "", "output directory"},
  };
  return keys;
}

bool RunConfig::isKnown(const std::string& key) {
  const auto& keys = knownKeys();
  return std::any_of(keys.begin(), keys.end(), [&](const auto& k) { return key == k.name; });
}

RunConfig::RunConfig() {
  for (const auto& k : knownKeys()) {
    values_[k.name] = k.defaultValue;
  }
}

void RunConfig::set(const std::string& key, const std::string& value) {
  if (!isKnown(key)) {
    throw Error(ErrorCode::kConfig, "unknown config key '" + key + "'");
  }
  values_[key] = value;
}

void RunConfig::parse(std::istream& in, const std::string& name) {
  std::string line;
  size_t lineNo = 0;
  while (std::getline(in, line)) {
    ++lineNo;
    const auto hash = line.find('#');
    if (hash != std::string::npos) {
      line.resize(hash);
    }
    line = trim(line);
    if (line.empty()) {
      continue;
    }
    const auto eq = line.find('=');
    const auto where = name + ":" + std::to_string(lineNo);
    if (eq == std::string::npos) {
      throw Error(ErrorCode::kConfig, where + ": expected key=value");
    }
    const auto key = trim(line.substr(0, eq));
    if (!isKnown(key)) {
      throw Error(ErrorCode::kConfig, where + ": unknown config key '" + key + "'");
    }
    values_[key] = trim(line.substr(eq + 1));
  }
}

void RunConfig::loadFile(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw Error(ErrorCode::kIo, "cannot read config file: " + path.string());
  }
  parse(in, path.string());
}

const std::string& RunConfig::get(const std::string& key) const {
  const auto it = values_.find(key);
  if (it == values_.end()) {
    throw Error(ErrorCode::kConfig, "unknown config key '" + key + "'");
  }
  return it->second;
}

uint64_t RunConfig::getU64(const std::string& key) const {
  const auto& v = get(key);
  uint64_t out = 0;
  auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (v.empty() || ec != std::errc() || ptr != v.data() + v.size()) {
    badValue(key, v, "a non-negative integer");
  }
  return out;
}

size_t RunConfig::getSize(const std::string& key) const {
  return static_cast<size_t>(getU64(key));
}

double RunConfig::getDouble(const std::string& key) const {
  const auto& v = get(key);
  try {
    size_t used = 0;
    const double d = std::stod(v, &used);
    if (used != v.size()) {
      badValue(key, v, "a number");
    }
    return d;
  } catch (const std::logic_error&) {
    badValue(key, v, "a number");
  }
}

bool RunConfig::getBool(const std::string& key) const {
  const auto& v = get(key);
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  badValue(key, v, "true or false");
}

std::filesystem::path RunConfig::getPath(const std::string& key) const {
  const auto& v = get(key);
  if (v.empty()) {
    throw Error(ErrorCode::kConfig, "missing required setting '" + key + "'");
  }
  return v;
}

std::vector<size_t> parseWidths(const std::string& text) {
  std::vector<size_t> out;
  size_t start = 0;
  while (start <= text.size()) {
    const auto comma = text.find(',', start);
    const auto piece = trim(text.substr(start, comma == std::string::npos ? std::string::npos
                                                                          : comma - start));
    size_t w = 0;
    auto [ptr, ec] = std::from_chars(piece.data(), piece.data() + piece.size(), w);
    if (piece.empty() || ec != std::errc() || ptr != piece.data() + piece.size() || w == 0) {
      badValue("head_layers", text, "comma-separated positive widths");
    }
    out.push_back(w);
    if (comma == std::string::npos) {
      break;
    }
    start = comma + 1;
  }
  return out;
}

ModelConfig RunConfig::modelConfig() const {
  ModelConfig c;
  c.mode = parseMode(get("mode"));
  c.embedDim = getSize("K");
  c.rawFeatureDim = getSize("F_raw");
  c.ftDim = getSize("F_ft");
  c.headLayers = parseWidths(get("head_layers"));
  if (get("activation_embed") != "linear") {
    badValue("activation_embed", get("activation_embed"), "linear");
  }
  c.normalizeFeatures = getBool("normalize_features");
  c.seed = getU64("seed");
  c.validate();
  return c;
}

TrainConfig RunConfig::trainConfig() const {
  TrainConfig c;
  c.lr = getDouble("lr");
  if (hasValue("l2_stage1")) {
    c.l2Stage1 = getDouble("l2_stage1");
  }
  c.l2Stage2 = getDouble("l2_stage2");
  c.negPerPos = getSize("neg_per_pos");
  c.batchSize = getSize("batch_size");
  c.epochsStage1 = getSize("epochs_stage1");
  c.epochsStage2 = getSize("epochs_stage2");
  c.adamBeta1 = getDouble("adam_beta1");
  c.adamBeta2 = getDouble("adam_beta2");
  c.adamEps = getDouble("adam_eps");
  c.earlyStopPatience = getSize("early_stop_patience");
  c.restartPatienceStage2 = getBool("restart_patience_stage2");
  c.seed = getU64("seed") + kTrainSeedOffset;
  c.validate();
  return c;
}

EvalOptions RunConfig::evalOptions() const {
  EvalOptions o;
  o.trials = getSize("trials");
  o.numNegatives = getSize("negatives");
  o.baseSeed = getU64("seed");
  o.frozenFirstTrial = getBool("frozen_first_trial");
  if (o.trials < 1) {
    badValue("trials", get("trials"), "a positive integer");
  }
  if (o.numNegatives < 1) {
    badValue("negatives", get("negatives"), "a positive integer");
  }
  return o;
}

BprConfig RunConfig::bprConfig() const {
  BprConfig c;
  c.numFactors = getSize("bpr_K");
  c.lr = getDouble("bpr_lr");
  c.l2 = getDouble("bpr_l2");
  c.epochs = getSize("bpr_epochs");
  c.seed = getU64("seed");
  return c;
}

InteractionFormat RunConfig::interactionFormat() const {
  const auto& f = get("format");
  if (f == "csv") return InteractionFormat::kCsv;
  if (f == "tsv") return InteractionFormat::kTsv;
  badValue("format", f, "csv or tsv");
}

}  // namespace imgrec
