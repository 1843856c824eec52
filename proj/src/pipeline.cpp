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

#include "pipeline.hpp"

#include <fstream>
#include <iomanip>
#include <sstream>

#include "error.hpp"

namespace imgrec {

namespace fs = std::filesystem;

namespace {

fs::path requireFile(const RunConfig& config, const std::string& key) {
  const auto path = config.getPath(key);
  std::error_code ec;
  if (!fs::is_regular_file(path, ec)) {
    throw Error(ErrorCode::kIo, key + " path does not exist or is not a file: " + path.string());
  }
  return path;
}

fs::path requireDataDir(const RunConfig& config) {
  const auto dir = config.getPath("data");
  for (const char* name : {"users.txt", "items.txt", "split.tsv"}) {
    std::error_code ec;
    if (!fs::is_regular_file(dir / name, ec)) {
      throw Error(ErrorCode::kIo, "prepared data is missing " + (dir / name).string());
    }
  }
  return dir;
}

fs::path makeOutDir(const RunConfig& config) {
  const auto dir = config.getPath("out");
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) {
    throw Error(ErrorCode::kIo, "cannot create output directory " + dir.string());
  }
  return dir;
}

// ete reads cut-layer activations when provided; the other modes read the
// final features.
fs::path featurePathFor(const RunConfig& config, Mode mode) {
  if (mode == Mode::kEte && config.hasValue("cut_features")) {
    return requireFile(config, "cut_features");
  }
  return requireFile(config, "features");
}

FeatureStore loadStore(const fs::path& path, const Dataset& dataset, const ModelConfig& mc) {
  auto store = loadFeatureStore(path, dataset);
  if (mc.normalizeFeatures) {
    store.normalize();
  }
  return store;
}

std::ofstream openOut(const fs::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    throw Error(ErrorCode::kIo, "cannot write " + path.string());
  }
  return out;
}

void logWarnings(const LogFn& log, const std::vector<std::string>& warnings, size_t total) {
  if (!log) {
    return;
  }
  for (const auto& w : warnings) {
    log(LogLevel::kWarning, "skipped malformed " + w);
  }
  if (total > warnings.size()) {
    log(LogLevel::kWarning, std::to_string(total - warnings.size()) +
                              " further malformed line(s) skipped");
  }
}

void info(const LogFn& log, const std::string& msg) {
  if (log) {
    log(LogLevel::kInfo, msg);
  }
}

TrainResult trainWithArtifacts(const RunConfig& config, const ModelConfig& mc,
                               const Prepared& prepared, const FeatureStore& store,
                               const fs::path& outDir, const LogFn& log) {
  const auto tc = config.trainConfig();
  TrainCallbacks callbacks;
  callbacks.onBest = [&outDir](int stage, const ModelParams& params) {
    saveCheckpoint(outDir / ("model.stage" + std::to_string(stage) + ".best"), params);
  };
  callbacks.onEpoch = [&log, &mc](const EpochRecord& r) {
    info(log, std::string(modeName(mc.mode)) + " epoch " + std::to_string(r.epoch) + " stage " +
                std::to_string(r.stage) + " loss " + formatDouble(r.trainLoss) + " val_auc " +
                formatDouble(r.valAuc));
  };
  auto result = train(tc, mc, prepared.split, store, callbacks);
  if (!result.skippedUsers.empty() && log) {
    log(LogLevel::kWarning, std::to_string(result.skippedUsers.size()) +
                              " user(s) interacted with every item and were skipped");
  }
  return result;
}

}  // namespace

void writeHistory(std::ostream& out, const std::vector<EpochRecord>& history) {
  out << "epoch,stage,train_loss,val_auc\n";
  for (const auto& r : history) {
    out << r.epoch << ',' << r.stage << ',' << formatDouble(r.trainLoss, 8) << ','
        << formatDouble(r.valAuc, 8) << '\n';
  }
}

PrepareStats runPrepare(const RunConfig& config, const LogFn& log) {
  const auto input = requireFile(config, "interactions");
  const auto format = config.interactionFormat();
  const auto negatives = config.getSize("negatives");
  const auto seed = config.getU64("seed");
  const auto outDir = makeOutDir(config);

  const auto interactions = loadInteractions(input, format);
  logWarnings(log, interactions.warnings, interactions.malformedLines);
  const auto dataset = buildDataset(interactions);
  const auto split = leaveOneOutSplit(dataset, negatives, seed);
  writePrepared(outDir, dataset, split);

  PrepareStats stats;
  stats.records = interactions.records.size();
  stats.malformedLines = interactions.malformedLines;
  stats.users = dataset.numUsers();
  stats.items = dataset.numItems();
  stats.interactions = dataset.numInteractions();
  stats.evaluableUsers = split.numEvaluable();
  stats.excludedUsers = split.excludedUsers.size();

  std::ostringstream s;
  s << "users=" << stats.users << " items=" << stats.items
    << " interactions=" << stats.interactions << " records=" << stats.records
    << " malformed_lines=" << stats.malformedLines << " evaluable_users=" << stats.evaluableUsers
    << " excluded_users=" << stats.excludedUsers;
  auto out = openOut(outDir / "stats.txt");
  out << s.str() << '\n';
  info(log, s.str());
  if (stats.excludedUsers > 0 && log) {
    log(LogLevel::kWarning, std::to_string(stats.excludedUsers) +
                              " user(s) with fewer than 3 interactions kept in train only");
  }
  return stats;
}

TrainResult runTrain(const RunConfig& config, const LogFn& log) {
  const auto mc = config.modelConfig();
  config.trainConfig();
  const auto dataDir = requireDataDir(config);
  const auto featPath = featurePathFor(config, mc.mode);
  const auto outDir = makeOutDir(config);

  const auto prepared = readPrepared(dataDir);
  const auto store = loadStore(featPath, prepared.dataset, mc);
  auto result = trainWithArtifacts(config, mc, prepared, store, outDir, log);
  saveCheckpoint(outDir / "model.bin", result.params);
  auto hist = openOut(outDir / "history.csv");
  writeHistory(hist, result.history);
  return result;
}

EvalReport runEvaluate(const RunConfig& config, const LogFn& log) {
  const auto mc = config.modelConfig();
  const auto options = config.evalOptions();
  const auto dataDir = requireDataDir(config);
  const auto featPath = featurePathFor(config, mc.mode);
  const auto ckptPath = requireFile(config, "checkpoint");
  const auto outDir = makeOutDir(config);

  const auto prepared = readPrepared(dataDir);
  const auto store = loadStore(featPath, prepared.dataset, mc);
  const auto params = loadCheckpoint(ckptPath);
  checkCompatible(params, mc, prepared.dataset.numUsers(), prepared.dataset.numItems(),
                  store.dim());
  const ModelScorer scorer(params, store);
  const auto report = evaluate(scorer, prepared.split, prepared.dataset.numItems(), options);

  auto out = openOut(outDir / "report.txt");
  writeReport(out, report);
  auto summary = openOut(outDir / "summary.txt");
  summary << summaryLine(report) << '\n';
  info(log, summaryLine(report));
  return report;
}

std::vector<AblationRow> runAblate(const RunConfig& config, const LogFn& log) {
  const auto options = config.evalOptions();
  const auto bpr = config.bprConfig();
  const auto dataDir = requireDataDir(config);
  requireFile(config, "features");
  if (config.hasValue("cut_features")) {
    requireFile(config, "cut_features");
  }
  std::vector<std::pair<Mode, RunConfig>> variants;
  for (const Mode mode : {Mode::kDir, Mode::kFt, Mode::kEte}) {
    RunConfig c = config;
    c.set("mode", modeName(mode));
    c.modelConfig();
    c.trainConfig();
    variants.emplace_back(mode, c);
  }
  const auto outDir = makeOutDir(config);
  const auto prepared = readPrepared(dataDir);
  const size_t numItems = prepared.dataset.numItems();

  std::vector<AblationRow> rows;
  for (const auto& [mode, c] : variants) {
    const auto mc = c.modelConfig();
    const auto store = loadStore(featurePathFor(c, mode), prepared.dataset, mc);
    const auto sub = outDir / modeName(mode);
    fs::create_directories(sub);
    const auto result = trainWithArtifacts(c, mc, prepared, store, sub, log);
    saveCheckpoint(sub / "model.bin", result.params);
    auto hist = openOut(sub / "history.csv");
    writeHistory(hist, result.history);
    const ModelScorer scorer(result.params, store);
    rows.push_back({std::string("ImgRec-") + (mode == Mode::kDir  ? "Dir"
                                               : mode == Mode::kFt ? "FT"
                                                                   : "EtE"),
                    evaluate(scorer, prepared.split, numItems, options)});
  }
  const auto pop = PopRank::fit(prepared.split, numItems);
  rows.push_back({"PopRank", evaluate(pop, prepared.split, numItems, options)});
  auto bprResult = bprmfTrain(prepared.split, numItems, bpr);
  const BprScorer bprScorer(std::move(bprResult.params));
  rows.push_back({"BPR-MF", evaluate(bprScorer, prepared.split, numItems, options)});

  auto out = openOut(outDir / "ablation.csv");
  writeAblation(out, rows);
  info(log, formatAblationTable(rows));
  return rows;
}

void writeAblation(std::ostream& out, const std::vector<AblationRow>& rows) {
  out << "model,mean_auc";
  const size_t trials = rows.empty() ? 0 : rows.front().report.perTrialAuc.size();
  for (size_t t = 0; t < trials; ++t) {
    out << ",trial_" << t;
  }
  out << '\n';
  for (const auto& row : rows) {
    out << row.model << ',' << formatDouble(row.report.meanAuc);
    for (const double a : row.report.perTrialAuc) {
      out << ',' << formatDouble(a);
    }
    out << '\n';
  }
}

std::string formatAblationTable(const std::vector<AblationRow>& rows) {
  std::ostringstream s;
  s << std::left << std::setw(12) << "model" << std::setw(10) << "mean AUC" << "per-trial AUC";
  for (const auto& row : rows) {
    s << '\n' << std::setw(12) << row.model << std::setw(10) << formatDouble(row.report.meanAuc, 4);
    for (size_t t = 0; t < row.report.perTrialAuc.size(); ++t) {
      s << (t ? " " : "") << formatDouble(row.report.perTrialAuc[t], 4);
    }
  }
  return s.str();
}

}  // namespace imgrec
