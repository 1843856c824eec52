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

#include <algorithm>
#include <random>
#include <set>
#include <sstream>

#include <gtest/gtest.h>

#include "data.hpp"
#include "error.hpp"
#include "support.hpp"

using namespace imgrec;

namespace {

InteractionLog parse(const std::string& text, InteractionFormat fmt = InteractionFormat::kCsv) {
  std::istringstream in(text);
  return parseInteractions(in, fmt);
}

std::string serialize(const Split& split) {
  std::ostringstream out;
  writeSplit(out, split);
  return out.str();
}

Dataset randomDataset(uint64_t seed, size_t users, size_t items, bool timestamps) {
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<size_t> pickItem(0, items - 1);
  std::uniform_int_distribution<size_t> pickCount(1, 8);
  InteractionLog log;
  int64_t clock = 0;
  for (size_t u = 0; u < users; ++u) {
    const size_t n = pickCount(rng);
    for (size_t k = 0; k < n; ++k) {
      InteractionRecord r{"u" + std::to_string(u), "i" + std::to_string(pickItem(rng)), {}};
      if (timestamps) {
        r.timestamp = ++clock;
      }
      log.records.push_back(r);
    }
  }
  // make sure every item id exists, two items per filler user
  for (size_t i = 0; i < items; ++i) {
    const auto ts = timestamps ? std::optional<int64_t>(++clock) : std::nullopt;
    log.records.push_back({"filler" + std::to_string(i / 2), "i" + std::to_string(i), ts});
  }
  return buildDataset(log);
}

}  // namespace

TEST(LoadInteractions, ParsesRecordsInOrder) {
  const auto log = parse("u1,i1,5,100\nu1,i2,4,200\nu2,i1,3,50\n");
  ASSERT_EQ(log.records.size(), 3u);
  EXPECT_EQ(log.malformedLines, 0u);
  EXPECT_EQ(log.records[0].user, "u1");
  EXPECT_EQ(log.records[1].item, "i2");
  EXPECT_EQ(log.records[2].timestamp, 50);
}

TEST(LoadInteractions, SkipsMalformedLineWithWarning) {
  const auto log = parse("u1,i1,5,100\nbroken-line\nu2,i1,3,50\n");
  EXPECT_EQ(log.records.size(), 2u);
  EXPECT_EQ(log.malformedLines, 1u);
  ASSERT_EQ(log.warnings.size(), 1u);
  EXPECT_NE(log.warnings[0].find("line 2"), std::string::npos);
}

TEST(LoadInteractions, RejectsEmptyKeysAndBadTimestamps) {
  const auto log = parse("u1,,5,100\n,i1\nu1,i1,5,notanumber\nu1,i2\n");
  EXPECT_EQ(log.records.size(), 1u);
  EXPECT_EQ(log.malformedLines, 3u);
  EXPECT_FALSE(log.records[0].timestamp.has_value());
}

TEST(LoadInteractions, TsvAndCrlf) {
  const auto log = parse("u1\ti1\r\nu2\ti2\t1\t7\r\n", InteractionFormat::kTsv);
  ASSERT_EQ(log.records.size(), 2u);
  EXPECT_EQ(log.records[0].item, "i1");
  EXPECT_EQ(log.records[1].timestamp, 7);
}

TEST(LoadInteractions, EmptyInputIsAnError) {
  try {
    parse("garbage\n\n");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kEmptyInput);
  }
}

TEST(LoadInteractions, MissingFileIsIoError) {
  try {
    loadInteractions("/nonexistent/file.csv", InteractionFormat::kCsv);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kIo);
  }
}

TEST(BuildDataset, AssignsIdsInFirstAppearanceOrder) {
  const auto ds = buildDataset(parse("u1,i2\nu1,i1\nu2,i1\n"));
  EXPECT_EQ(ds.numUsers(), 2u);
  EXPECT_EQ(ds.numItems(), 2u);
  EXPECT_EQ(ds.items.key(0), "i2");
  EXPECT_EQ(ds.items.find("i1"), 1u);
  EXPECT_EQ(ds.interactions[0], (std::vector<ItemId>{0, 1}));
}

TEST(BuildDataset, CollapsesDuplicates) {
  const auto ds = buildDataset(parse("u1,i1,1,10\nu1,i1,1,30\nu1,i2,1,20\n"));
  EXPECT_EQ(ds.numInteractions(), 2u);
  EXPECT_EQ(ds.timestamps[0][0], 30);  // latest timestamp kept
}

TEST(BuildDataset, IdMapsAreBijections) {
  const auto ds = randomDataset(3, 40, 30, false);
  for (uint32_t u = 0; u < ds.numUsers(); ++u) {
    EXPECT_EQ(ds.users.find(ds.users.key(u)), u);
  }
  for (uint32_t i = 0; i < ds.numItems(); ++i) {
    EXPECT_EQ(ds.items.find(ds.items.key(i)), i);
  }
  for (const auto& items : ds.interactions) {
    EXPECT_TRUE(std::is_sorted(items.begin(), items.end()));
    EXPECT_EQ(std::adjacent_find(items.begin(), items.end()), items.end());
    for (const auto i : items) {
      EXPECT_LT(i, ds.numItems());
    }
  }
}

TEST(LeaveOneOut, LatestIsTestSecondLatestIsVal) {
  auto ds = buildDataset(parse("u1,a,1,3\nu1,b,1,2\nu1,c,1,1\nu2,a,1,1\nu2,d,1,1\n"));
  const auto a = ds.items.find("a"), b = ds.items.find("b"), c = ds.items.find("c");
  const auto split = leaveOneOutSplit(ds, 1, 0);
  EXPECT_EQ(split.test[0], a);
  EXPECT_EQ(split.val[0], b);
  EXPECT_EQ(split.train[0], std::vector<ItemId>{c});
}

TEST(LeaveOneOut, UserWithTwoInteractionsIsExcluded) {
  auto ds = buildDataset(parse("u1,a,1,1\nu1,b,1,2\nu1,c,1,3\nu2,a,1,1\nu2,b,1,2\nu3,d\n"));
  const auto split = leaveOneOutSplit(ds, 1, 0);
  const auto u2 = ds.users.find("u2");
  EXPECT_FALSE(split.evaluable(u2));
  EXPECT_EQ(split.train[u2].size(), 2u);
  EXPECT_EQ(split.excludedUsers.size(), 2u);
  EXPECT_TRUE(split.evalNegatives[u2].empty());
}

TEST(LeaveOneOut, TooFewCandidatesListsUser) {
  auto ds = buildDataset(parse("u1,a\nu1,b\nu1,c\nu2,d\n"));
  try {
    leaveOneOutSplit(ds, 2, 0);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kPrecondition);
    EXPECT_NE(std::string(e.what()).find("u1"), std::string::npos);
  }
}

TEST(LeaveOneOut, PartitionAndNegativeDisjointness) {
  for (const bool timed : {true, false}) {
    const auto ds = randomDataset(11, 60, 50, timed);
    const auto split = leaveOneOutSplit(ds, 10, 42);
    for (UserId u = 0; u < ds.numUsers(); ++u) {
      std::vector<ItemId> rebuilt = split.train[u];
      if (split.evaluable(u)) {
        ASSERT_TRUE(split.val[u].has_value());
        EXPECT_NE(*split.val[u], *split.test[u]);
        EXPECT_FALSE(std::binary_search(split.train[u].begin(), split.train[u].end(), *split.val[u]));
        EXPECT_FALSE(std::binary_search(split.train[u].begin(), split.train[u].end(), *split.test[u]));
        rebuilt.push_back(*split.val[u]);
        rebuilt.push_back(*split.test[u]);
        EXPECT_EQ(split.evalNegatives[u].size(), 10u);
        std::set<ItemId> negs(split.evalNegatives[u].begin(), split.evalNegatives[u].end());
        EXPECT_EQ(negs.size(), 10u);
        for (const auto j : negs) {
          EXPECT_FALSE(ds.hasInteraction(u, j));
        }
      } else {
        EXPECT_LT(ds.interactions[u].size(), 3u);
      }
      std::sort(rebuilt.begin(), rebuilt.end());
      EXPECT_EQ(rebuilt, ds.interactions[u]);
    }
  }
}

TEST(LeaveOneOut, DeterministicUnderSeed) {
  const auto ds = randomDataset(5, 50, 40, false);
  EXPECT_EQ(serialize(leaveOneOutSplit(ds, 5, 9)), serialize(leaveOneOutSplit(ds, 5, 9)));
  EXPECT_NE(serialize(leaveOneOutSplit(ds, 5, 9)), serialize(leaveOneOutSplit(ds, 5, 10)));
}

TEST(Sampling, NthNonInteractedMatchesEnumeration) {
  std::mt19937_64 rng(1);
  for (int trial = 0; trial < 200; ++trial) {
    const size_t n = 1 + rng() % 40;
    std::vector<ItemId> seen;
    for (ItemId i = 0; i < n; ++i) {
      if (rng() % 3 == 0) {
        seen.push_back(i);
      }
    }
    std::vector<ItemId> free;
    for (ItemId i = 0; i < n; ++i) {
      if (!std::binary_search(seen.begin(), seen.end(), i)) {
        free.push_back(i);
      }
    }
    for (size_t r = 0; r < free.size(); ++r) {
      ASSERT_EQ(nthNonInteracted(seen, r), free[r]);
    }
  }
}

TEST(Sampling, WithoutReplacementCanExhaustCandidates) {
  Rng rng(3);
  const std::vector<ItemId> seen = {1, 4};
  const auto all = sampleNonInteracted(seen, 6, 4, rng);
  EXPECT_EQ(all, (std::vector<ItemId>{0, 2, 3, 5}));
}

TEST(Prepared, RoundTripsThroughDirectory) {
  testkit::TempDir dir;
  const auto ds = randomDataset(8, 30, 40, true);
  const auto split = leaveOneOutSplit(ds, 4, 1);
  writePrepared(dir.path(), ds, split);
  const auto back = readPrepared(dir.path());
  EXPECT_EQ(back.dataset.users.keys(), ds.users.keys());
  EXPECT_EQ(back.dataset.items.keys(), ds.items.keys());
  EXPECT_EQ(back.dataset.interactions, ds.interactions);
  EXPECT_EQ(serialize(back.split), serialize(split));
  EXPECT_EQ(back.split.numEvalNegatives, 4u);
  EXPECT_EQ(back.split.excludedUsers, split.excludedUsers);
}

TEST(Prepared, RejectsUnknownRole) {
  testkit::TempDir dir;
  testkit::writeText(dir / "users.txt", "u\n");
  testkit::writeText(dir / "items.txt", "a\nb\n");
  testkit::writeText(dir / "split.tsv", "0\ttrain\t0\n0\tbogus\t1\n");
  try {
    readPrepared(dir.path());
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kFormat);
    EXPECT_NE(std::string(e.what()).find(":2:"), std::string::npos);
  }
}
