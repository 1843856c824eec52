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

#include "eval.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <ostream>
#include <sstream>

#include "error.hpp"
#include "parallel.hpp"
#include "training.hpp"

namespace imgrec {

double aucUser(double pos, std::span<const double> negs) {
  if (negs.empty()) {
    throw Error(ErrorCode::kPrecondition, "AUC needs at least one negative");
  }
  size_t wins = 0;
  for (const double s : negs) {
    if (pos > s) {
      ++wins;
    }
  }
  return static_cast<double>(wins) / static_cast<double>(negs.size());
}

namespace {

// Mean over the listed users of aucUser(score(pos_u), scores(negs_u)).
double meanUserAuc(const Scorer& scorer, const std::vector<UserId>& users,
                   const std::vector<ItemId>& positives,
                   const std::vector<std::vector<ItemId>>& negatives) {
  std::vector<double> perUser(users.size());
  parallelFor(users.size(), [&](size_t begin, size_t end) {
    for (size_t k = begin; k < end; ++k) {
      const ItemId pos = positives[k];
      const auto scores = scorer.scoreItems(users[k], {&pos, 1});
      const auto negScores = scorer.scoreItems(users[k], negatives[k]);
      perUser[k] = aucUser(scores[0], negScores);
    }
  });
  double sum = 0.0;
  for (const double a : perUser) {
    sum += a;
  }
  return sum / static_cast<double>(users.size());
}

}  // namespace

EvalReport evaluate(const Scorer& scorer, const Split& split, size_t numItems,
                    const EvalOptions& options) {
  if (options.trials < 1) {
    throw Error(ErrorCode::kConfig, "trials must be >= 1");
  }
  if (options.numNegatives < 1) {
    throw Error(ErrorCode::kConfig, "number of negatives must be >= 1");
  }
  std::vector<UserId> users;
  std::vector<ItemId> positives;
  for (UserId u = 0; u < split.numUsers(); ++u) {
    if (split.evaluable(u)) {
      users.push_back(u);
      positives.push_back(*split.test[u]);
    }
  }
  if (users.empty()) {
    throw Error(ErrorCode::kPrecondition, "no user has a test item");
  }
  const auto interacted = interactionSets(split);
  std::vector<UserId> tooFew;
  for (const auto u : users) {
    if (interacted[u].size() + options.numNegatives > numItems) {
      tooFew.push_back(u);
    }
  }
  if (!tooFew.empty()) {
    std::ostringstream msg;
    msg << tooFew.size() << " user(s) have fewer than " << options.numNegatives
        << " candidate negatives (user ids:";
    for (size_t k = 0; k < tooFew.size() && k < 10; ++k) {
      msg << ' ' << tooFew[k];
    }
    msg << (tooFew.size() > 10 ? " ...)" : ")");
    throw Error(ErrorCode::kPrecondition, msg.str());
  }

  EvalReport report;
  report.numNegatives = options.numNegatives;
  report.numUsers = users.size();
  for (size_t t = 0; t < options.trials; ++t) {
    const uint64_t seed = options.baseSeed + t;
    report.seeds.push_back(seed);
    std::vector<std::vector<ItemId>> negatives(users.size());
    if (t == 0 && options.frozenFirstTrial) {
      if (split.numEvalNegatives != options.numNegatives) {
        throw Error(ErrorCode::kPrecondition,
                    "frozen negative sets have " + std::to_string(split.numEvalNegatives) +
                      " items per user, requested " + std::to_string(options.numNegatives));
      }
      for (size_t k = 0; k < users.size(); ++k) {
        negatives[k] = split.evalNegatives[users[k]];
      }
    } else {
      Rng rng(seed);
      for (size_t k = 0; k < users.size(); ++k) {
        negatives[k] =
          sampleNonInteracted(interacted[users[k]], numItems, options.numNegatives, rng);
      }
    }
    report.perTrialAuc.push_back(meanUserAuc(scorer, users, positives, negatives));
  }
  double sum = 0.0;
  for (const double a : report.perTrialAuc) {
    sum += a;
  }
  report.meanAuc = sum / static_cast<double>(report.perTrialAuc.size());
  return report;
}

double heldOutAuc(const Scorer& scorer, const Split& split, HeldOut which) {
  const auto& held = which == HeldOut::kValidation ? split.val : split.test;
  std::vector<UserId> users;
  std::vector<ItemId> positives;
  std::vector<std::vector<ItemId>> negatives;
  for (UserId u = 0; u < split.numUsers(); ++u) {
    if (held[u] && !split.evalNegatives[u].empty()) {
      users.push_back(u);
      positives.push_back(*held[u]);
      negatives.push_back(split.evalNegatives[u]);
    }
  }
  if (users.empty()) {
    return std::numeric_limits<double>::quiet_NaN();
  }
  return meanUserAuc(scorer, users, positives, negatives);
}

double trainAuc(const Scorer& scorer, const Split& split, size_t numItems) {
  const auto interacted = interactionSets(split);
  std::vector<double> perUser(split.numUsers(), 0.0);
  std::vector<char> counted(split.numUsers(), 0);
  parallelFor(split.numUsers(), [&](size_t begin, size_t end) {
    for (size_t u = begin; u < end; ++u) {
      const auto& pos = split.train[u];
      if (pos.empty() || interacted[u].size() >= numItems) {
        continue;
      }
      std::vector<ItemId> negs;
      for (ItemId i = 0; i < numItems; ++i) {
        if (!std::binary_search(interacted[u].begin(), interacted[u].end(), i)) {
          negs.push_back(i);
        }
      }
      const auto uid = static_cast<UserId>(u);
      const auto posScores = scorer.scoreItems(uid, pos);
      const auto negScores = scorer.scoreItems(uid, negs);
      double sum = 0.0;
      for (const double s : posScores) {
        sum += aucUser(s, negScores);
      }
      perUser[u] = sum / static_cast<double>(pos.size());
      counted[u] = 1;
    }
  });
  double sum = 0.0;
  size_t n = 0;
  for (size_t u = 0; u < perUser.size(); ++u) {
    if (counted[u]) {
      sum += perUser[u];
      ++n;
    }
  }
  return n == 0 ? std::numeric_limits<double>::quiet_NaN() : sum / static_cast<double>(n);
}

std::string formatDouble(double v, int precision) {
  if (std::isnan(v)) {
    return "nan";
  }
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*f", precision, v);
  return buf;
}

void writeReport(std::ostream& out, const EvalReport& report) {
  out << "trial,auc\n";
  for (size_t t = 0; t < report.perTrialAuc.size(); ++t) {
    out << t << ',' << formatDouble(report.perTrialAuc[t]) << '\n';
  }
  out << "mean," << formatDouble(report.meanAuc) << '\n';
}

std::string summaryLine(const EvalReport& report) {
  std::ostringstream s;
  s << "mean_auc=" << formatDouble(report.meanAuc) << " trials=" << report.perTrialAuc.size()
    << " negatives=" << report.numNegatives << " users=" << report.numUsers << " seeds=";
  for (size_t k = 0; k < report.seeds.size(); ++k) {
    s << (k ? "," : "") << report.seeds[k];
  }
  return s.str();
}

}  // namespace imgrec
