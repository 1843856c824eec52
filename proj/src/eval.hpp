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
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "data.hpp"
#include "scorer.hpp"

namespace imgrec {

// Fraction of negatives scored strictly below the positive; ties count 0.
// Throws kPrecondition on an empty negative list.
double aucUser(double pos, std::span<const double> negs);

struct EvalOptions {
  size_t trials = 5;
  size_t numNegatives = 100;
  uint64_t baseSeed = 0;
  // Trial 0 reuses the split's frozen negative sets instead of resampling.
  bool frozenFirstTrial = false;
};

struct EvalReport {
  double meanAuc = 0.0;
  std::vector<double> perTrialAuc;
  size_t numNegatives = 0;
  size_t numUsers = 0;
  std::vector<uint64_t> seeds;
};

// Per trial t, draws numNegatives fresh negatives per evaluable user with seed
// baseSeed + t and averages the per-user AUC of the test item uniformly over
// users. Throws kPrecondition when no user is evaluable or a user has too few
// candidate negatives.
EvalReport evaluate(const Scorer& scorer, const Split& split, size_t numItems,
                    const EvalOptions& options);

enum class HeldOut { kValidation, kTest };

// Mean AUC of the held-out item against the split's frozen negatives.
// Returns NaN when no user has the held-out item.
double heldOutAuc(const Scorer& scorer, const Split& split, HeldOut which);

// Mean over users of the per-user AUC of each train positive against every
// item the user never interacted with.
double trainAuc(const Scorer& scorer, const Split& split, size_t numItems);

// "trial,auc" rows followed by "mean,<value>".
void writeReport(std::ostream& out, const EvalReport& report);
// Single line: mean_auc=... trials=... negatives=... users=... seeds=a,b,...
std::string summaryLine(const EvalReport& report);

std::string formatDouble(double v, int precision = 6);

}  // namespace imgrec
