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

// Command-level workflows behind the CLI: each reads a RunConfig, validates
// every input path up front, and writes its artifacts under `out`.

#include <functional>
#include <string>
#include <vector>

#include "config.hpp"

namespace imgrec {

enum class LogLevel { kInfo, kWarning };
using LogFn = std::function<void(LogLevel, const std::string&)>;

struct PrepareStats {
  size_t records = 0;
  size_t malformedLines = 0;
  size_t users = 0;
  size_t items = 0;
  size_t interactions = 0;
  size_t evaluableUsers = 0;
  size_t excludedUsers = 0;
};

// Needs interactions and out. Writes users.txt, items.txt, split.tsv and
// stats.txt.
PrepareStats runPrepare(const RunConfig& config, const LogFn& log);

// Needs data, features (or cut_features for ete) and out. Writes
// history.csv, model.bin and model.stage<N>.best per stage.
TrainResult runTrain(const RunConfig& config, const LogFn& log);

// Needs data, features, checkpoint and out. Writes report.txt and summary.txt.
EvalReport runEvaluate(const RunConfig& config, const LogFn& log);

struct AblationRow {
  std::string model;
  EvalReport report;
};

// Trains dir, ft and ete under one seed, fits PopRank and BPR-MF, evaluates
// all five and writes ablation.csv.
std::vector<AblationRow> runAblate(const RunConfig& config, const LogFn& log);

void writeHistory(std::ostream& out, const std::vector<EpochRecord>& history);
void writeAblation(std::ostream& out, const std::vector<AblationRow>& rows);
std::string formatAblationTable(const std::vector<AblationRow>& rows);

}  // namespace imgrec
