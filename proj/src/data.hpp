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
#include <random>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

namespace imgrec {

using UserId = uint32_t;
using ItemId = uint32_t;
using Rng = std::mt19937_64;

struct InteractionRecord {
  std::string user;
  std::string item;
  std::optional<int64_t> timestamp;
};

enum class InteractionFormat { kCsv, kTsv };

struct InteractionLog {
  std::vector<InteractionRecord> records;
  size_t malformedLines = 0;
  // One message per malformed line, capped; malformedLines has the full count.
  std::vector<std::string> warnings;
};

// Columns are user, item[, rating][, timestamp]. Ratings are ignored.
// Lines with fewer than two fields, an empty key, or a non-integer timestamp
// are skipped and counted. Throws kIo if the file cannot be read and
// kEmptyInput if no valid record remains.
InteractionLog loadInteractions(const std::filesystem::path& path,
                                InteractionFormat format);
InteractionLog parseInteractions(std::istream& in, InteractionFormat format);

// Bijection between external string keys and dense ids in [0, size()).
class IdIndex {
 public:
  static constexpr uint32_t kMissing = UINT32_MAX;

  uint32_t getOrAdd(const std::string& key);
  uint32_t find(const std::string& key) const;
  const std::string& key(uint32_t id) const { return keys_.at(id); }
  size_t size() const { return keys_.size(); }
  const std::vector<std::string>& keys() const { return keys_; }

 private:
  std::unordered_map<std::string, uint32_t> ids_;
  std::vector<std::string> keys_;
};

struct Dataset {
  IdIndex users;
  IdIndex items;
  // R in sparse form: per-user sorted, duplicate-free item ids.
  std::vector<std::vector<ItemId>> interactions;
  // Aligned with interactions. Duplicates keep their latest timestamp.
  std::vector<std::vector<std::optional<int64_t>>> timestamps;
  // Aligned with interactions: index of the first record of the pair in the log.
  std::vector<std::vector<uint64_t>> firstSeen;

  size_t numUsers() const { return users.size(); }
  size_t numItems() const { return items.size(); }
  size_t numInteractions() const;
  bool hasInteraction(UserId u, ItemId i) const;
};

// Ids are assigned in order of first appearance.
Dataset buildDataset(const InteractionLog& log);

struct Split {
  std::vector<std::vector<ItemId>> train;  // sorted
  std::vector<std::optional<ItemId>> val;
  std::vector<std::optional<ItemId>> test;
  // Sorted; empty for users excluded from evaluation.
  std::vector<std::vector<ItemId>> evalNegatives;
  // Users with fewer than three interactions; they stay in train only.
  std::vector<UserId> excludedUsers;
  size_t numEvalNegatives = 0;

  size_t numUsers() const { return train.size(); }
  bool evaluable(UserId u) const { return test[u].has_value(); }
  size_t numEvaluable() const;
  size_t numTrainPositives() const;
};

// Holds out the latest (test) and second-latest (validation) item per user;
// users without complete timestamps get a seeded uniform choice instead.
// Evaluation negatives are drawn without replacement from items the user never
// interacted with. Throws kPrecondition listing the users that do not have
// enough candidate negatives.
Split leaveOneOutSplit(const Dataset& dataset, size_t numEvalNegatives,
                       uint64_t seed);

// The r-th item id (0-based) in [0, numItems) that is absent from the sorted
// list `interacted`. Requires r < numItems - interacted.size().
ItemId nthNonInteracted(std::span<const ItemId> interacted, uint64_t r);

// Uniform sample of `count` distinct non-interacted items, returned sorted.
// Requires count <= numItems - interacted.size().
std::vector<ItemId> sampleNonInteracted(std::span<const ItemId> interacted,
                                        size_t numItems, size_t count, Rng& rng);

// Line format: user_id<TAB>role<TAB>item_id, role in {train,val,test,neg}.
void writeSplit(std::ostream& out, const Split& split);

// A prepared data directory holds users.txt and items.txt (one key per line in
// id order) plus split.tsv.
void writePrepared(const std::filesystem::path& dir, const Dataset& dataset,
                   const Split& split);

struct Prepared {
  Dataset dataset;
  Split split;
};
// Rebuilds the dataset as the union of each user's train/val/test items
// (timestamps are not retained).
Prepared readPrepared(const std::filesystem::path& dir);

}  // namespace imgrec
