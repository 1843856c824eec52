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

#include "data.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <map>
#include <numeric>
#include <ostream>
#include <sstream>
#include <unordered_set>

#include "error.hpp"

namespace imgrec {

namespace {

constexpr size_t kMaxWarnings = 20;

std::vector<std::string_view> splitFields(std::string_view line, char delim) {
  std::vector<std::string_view> fields;
  size_t start = 0;
  while (true) {
    const size_t pos = line.find(delim, start);
    if (pos == std::string_view::npos) {
      fields.push_back(line.substr(start));
      break;
    }
    fields.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
  return fields;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) {
    s.remove_prefix(1);
  }
  while (!s.empty() &&
         (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) {
    s.remove_suffix(1);
  }
  return s;
}

template <typename T>
bool parseInt(std::string_view s, T& out) {
  const auto* end = s.data() + s.size();
  auto [ptr, ec] = std::from_chars(s.data(), end, out);
  return ec == std::errc() && ptr == end;
}

}  // namespace

InteractionLog parseInteractions(std::istream& in, InteractionFormat format) {
  const char delim = format == InteractionFormat::kCsv ? ',' : '\t';
  InteractionLog log;
  std::string line;
  size_t lineNo = 0;
  auto reject = [&log, &lineNo](const std::string& why) {
    ++log.malformedLines;
    if (log.warnings.size() < kMaxWarnings) {
      log.warnings.push_back("line " + std::to_string(lineNo) + ": " + why);
    }
  };
  while (std::getline(in, line)) {
    ++lineNo;
    std::string_view view = line;
    if (!view.empty() && view.back() == '\r') {
      view.remove_suffix(1);
    }
    if (trim(view).empty()) {
      continue;
    }
    const auto fields = splitFields(view, delim);
    if (fields.size() < 2) {
      reject("expected at least 2 fields");
      continue;
    }
    InteractionRecord rec;
    rec.user = std::string(trim(fields[0]));
    rec.item = std::string(trim(fields[1]));
    if (rec.user.empty() || rec.item.empty()) {
      reject("empty user or item key");
      continue;
    }
    if (fields.size() >= 4) {
      const auto ts = trim(fields[3]);
      int64_t value = 0;
      if (!ts.empty()) {
        if (!parseInt(ts, value)) {
          reject("timestamp is not an integer");
          continue;
        }
        rec.timestamp = value;
      }
    }
    log.records.push_back(std::move(rec));
  }
  if (log.records.empty()) {
    throw Error(ErrorCode::kEmptyInput, "no valid interaction records");
  }
  return log;
}

InteractionLog loadInteractions(const std::filesystem::path& path,
                                InteractionFormat format) {
  std::ifstream in(path);
  if (!in) {
    throw Error(ErrorCode::kIo, "cannot read interaction file: " + path.string());
  }
  try {
    return parseInteractions(in, format);
  } catch (const Error& e) {
    throw Error(e.code(), std::string(e.what()) + " in " + path.string());
  }
}

uint32_t IdIndex::getOrAdd(const std::string& key) {
  auto [it, inserted] = ids_.try_emplace(key, static_cast<uint32_t>(keys_.size()));
  if (inserted) {
    keys_.push_back(key);
  }
  return it->second;
}

uint32_t IdIndex::find(const std::string& key) const {
  const auto it = ids_.find(key);
  return it == ids_.end() ? kMissing : it->second;
}

size_t Dataset::numInteractions() const {
  size_t n = 0;
  for (const auto& items : interactions) {
    n += items.size();
  }
  return n;
}

bool Dataset::hasInteraction(UserId u, ItemId i) const {
  const auto& items = interactions.at(u);
  return std::binary_search(items.begin(), items.end(), i);
}

Dataset buildDataset(const InteractionLog& log) {
  if (log.records.empty()) {
    throw Error(ErrorCode::kEmptyInput, "interaction log is empty");
  }
  struct Entry {
    std::optional<int64_t> timestamp;
    uint64_t firstSeen;
  };
  Dataset ds;
  std::vector<std::map<ItemId, Entry>> perUser;
  for (size_t r = 0; r < log.records.size(); ++r) {
    const auto& rec = log.records[r];
    const UserId u = ds.users.getOrAdd(rec.user);
    const ItemId i = ds.items.getOrAdd(rec.item);
    if (u >= perUser.size()) {
      perUser.resize(u + 1);
    }
    auto [it, inserted] = perUser[u].try_emplace(i, Entry{rec.timestamp, r});
    if (!inserted) {
      auto& ts = it->second.timestamp;
      if (!ts || (rec.timestamp && *rec.timestamp > *ts)) {
        ts = rec.timestamp;
      }
    }
  }
  const size_t m = ds.users.size();
  ds.interactions.resize(m);
  ds.timestamps.resize(m);
  ds.firstSeen.resize(m);
  for (UserId u = 0; u < m; ++u) {
    for (const auto& [item, entry] : perUser[u]) {
      ds.interactions[u].push_back(item);
      ds.timestamps[u].push_back(entry.timestamp);
      ds.firstSeen[u].push_back(entry.firstSeen);
    }
  }
  return ds;
}

size_t Split::numEvaluable() const {
  return static_cast<size_t>(
    std::count_if(test.begin(), test.end(), [](const auto& t) { return t.has_value(); }));
}

size_t Split::numTrainPositives() const {
  size_t n = 0;
  for (const auto& items : train) {
    n += items.size();
  }
  return n;
}

ItemId nthNonInteracted(std::span<const ItemId> interacted, uint64_t r) {
  // interacted[j] - j is nondecreasing, and the answer is r + k where k counts
  // the interacted ids lying below it, i.e. those with interacted[j] - j <= r.
  size_t lo = 0;
  size_t hi = interacted.size();
  while (lo < hi) {
    const size_t mid = lo + (hi - lo) / 2;
    if (interacted[mid] - mid <= r) {
      lo = mid + 1;
    } else {
      hi = mid;
    }
  }
  return static_cast<ItemId>(r + lo);
}

std::vector<ItemId> sampleNonInteracted(std::span<const ItemId> interacted,
                                        size_t numItems, size_t count, Rng& rng) {
  const size_t candidates = numItems - interacted.size();
  // Floyd's algorithm over candidate ranks.
  std::unordered_set<uint64_t> chosen;
  std::vector<uint64_t> ranks;
  ranks.reserve(count);
  for (uint64_t j = candidates - count; j < candidates; ++j) {
    std::uniform_int_distribution<uint64_t> dist(0, j);
    const uint64_t t = dist(rng);
    const uint64_t pick = chosen.contains(t) ? j : t;
    chosen.insert(pick);
    ranks.push_back(pick);
  }
  std::vector<ItemId> out;
  out.reserve(count);
  for (const auto r : ranks) {
    out.push_back(nthNonInteracted(interacted, r));
  }
  std::sort(out.begin(), out.end());
  return out;
}

Split leaveOneOutSplit(const Dataset& dataset, size_t numEvalNegatives,
                       uint64_t seed) {
  if (numEvalNegatives < 1) {
    throw Error(ErrorCode::kConfig, "number of evaluation negatives must be >= 1");
  }
  if (dataset.numUsers() == 0 || dataset.numItems() == 0) {
    throw Error(ErrorCode::kEmptyInput, "dataset is empty");
  }
  const size_t m = dataset.numUsers();
  const size_t n = dataset.numItems();
  Rng rng(seed);
  Split split;
  split.numEvalNegatives = numEvalNegatives;
  split.train.resize(m);
  split.val.resize(m);
  split.test.resize(m);
  split.evalNegatives.resize(m);
  std::vector<std::string> short_;

  for (UserId u = 0; u < m; ++u) {
    const auto& items = dataset.interactions[u];
    if (items.size() < 3) {
      split.train[u] = items;
      split.excludedUsers.push_back(u);
      continue;
    }
    const auto& ts = dataset.timestamps[u];
    const bool timed =
      std::all_of(ts.begin(), ts.end(), [](const auto& t) { return t.has_value(); });
    size_t testPos = 0;
    size_t valPos = 0;
    if (timed) {
      std::vector<size_t> order(items.size());
      std::iota(order.begin(), order.end(), 0);
      const auto& seen = dataset.firstSeen[u];
      std::sort(order.begin(), order.end(), [&](size_t a, size_t b) {
        if (*ts[a] != *ts[b]) {
          return *ts[a] < *ts[b];
        }
        return seen[a] < seen[b];
      });
      testPos = order[order.size() - 1];
      valPos = order[order.size() - 2];
    } else {
      std::uniform_int_distribution<size_t> pickTest(0, items.size() - 1);
      testPos = pickTest(rng);
      std::uniform_int_distribution<size_t> pickVal(0, items.size() - 2);
      valPos = pickVal(rng);
      if (valPos >= testPos) {
        ++valPos;
      }
    }
    split.test[u] = items[testPos];
    split.val[u] = items[valPos];
    for (size_t k = 0; k < items.size(); ++k) {
      if (k != testPos && k != valPos) {
        split.train[u].push_back(items[k]);
      }
    }
    if (numEvalNegatives > n - items.size()) {
      short_.push_back(dataset.users.key(u));
      continue;
    }
    split.evalNegatives[u] = sampleNonInteracted(items, n, numEvalNegatives, rng);
  }
  if (!short_.empty()) {
    std::ostringstream msg;
    msg << short_.size() << " user(s) have fewer than " << numEvalNegatives
        << " non-interacted items:";
    for (size_t k = 0; k < short_.size() && k < 10; ++k) {
      msg << ' ' << short_[k];
    }
    if (short_.size() > 10) {
      msg << " ...";
    }
    throw Error(ErrorCode::kPrecondition, msg.str());
  }
  return split;
}

void writeSplit(std::ostream& out, const Split& split) {
  for (UserId u = 0; u < split.numUsers(); ++u) {
    for (const auto i : split.train[u]) {
      out << u << "\ttrain\t" << i << '\n';
    }
    if (split.val[u]) {
      out << u << "\tval\t" << *split.val[u] << '\n';
    }
    if (split.test[u]) {
      out << u << "\ttest\t" << *split.test[u] << '\n';
    }
    for (const auto i : split.evalNegatives[u]) {
      out << u << "\tneg\t" << i << '\n';
    }
  }
}

namespace {

void writeKeys(const std::filesystem::path& path, const IdIndex& index) {
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    throw Error(ErrorCode::kIo, "cannot write " + path.string());
  }
  for (const auto& key : index.keys()) {
    out << key << '\n';
  }
}

IdIndex readKeys(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw Error(ErrorCode::kIo, "cannot read " + path.string());
  }
  IdIndex index;
  std::string line;
  size_t lineNo = 0;
  while (std::getline(in, line)) {
    ++lineNo;
    if (line.empty()) {
      throw Error(ErrorCode::kFormat,
                  path.string() + ":" + std::to_string(lineNo) + ": empty key");
    }
    if (index.getOrAdd(line) != lineNo - 1) {
      throw Error(ErrorCode::kFormat,
                  path.string() + ":" + std::to_string(lineNo) + ": duplicate key");
    }
  }
  return index;
}

}  // namespace

void writePrepared(const std::filesystem::path& dir, const Dataset& dataset,
                   const Split& split) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) {
    throw Error(ErrorCode::kIo, "cannot create directory " + dir.string());
  }
  writeKeys(dir / "users.txt", dataset.users);
  writeKeys(dir / "items.txt", dataset.items);
  std::ofstream out(dir / "split.tsv", std::ios::binary);
  if (!out) {
    throw Error(ErrorCode::kIo, "cannot write " + (dir / "split.tsv").string());
  }
  writeSplit(out, split);
}

Prepared readPrepared(const std::filesystem::path& dir) {
  Prepared p;
  p.dataset.users = readKeys(dir / "users.txt");
  p.dataset.items = readKeys(dir / "items.txt");
  const size_t m = p.dataset.numUsers();
  const size_t n = p.dataset.numItems();
  auto& split = p.split;
  split.train.resize(m);
  split.val.resize(m);
  split.test.resize(m);
  split.evalNegatives.resize(m);

  const auto path = dir / "split.tsv";
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw Error(ErrorCode::kIo, "cannot read " + path.string());
  }
  std::string line;
  size_t lineNo = 0;
  while (std::getline(in, line)) {
    ++lineNo;
    auto bad = [&](const std::string& why) {
      return Error(ErrorCode::kFormat,
                   path.string() + ":" + std::to_string(lineNo) + ": " + why);
    };
    const auto fields = splitFields(line, '\t');
    if (fields.size() != 3) {
      throw bad("expected 3 tab-separated fields");
    }
    UserId u = 0;
    ItemId i = 0;
    if (!parseInt(fields[0], u) || u >= m) {
      throw bad("user id out of range");
    }
    if (!parseInt(fields[2], i) || i >= n) {
      throw bad("item id out of range");
    }
    const auto role = fields[1];
    if (role == "train") {
      split.train[u].push_back(i);
    } else if (role == "val") {
      split.val[u] = i;
    } else if (role == "test") {
      split.test[u] = i;
    } else if (role == "neg") {
      split.evalNegatives[u].push_back(i);
    } else {
      throw bad("unknown role");
    }
  }

  auto& ds = p.dataset;
  ds.interactions.resize(m);
  ds.timestamps.resize(m);
  ds.firstSeen.resize(m);
  std::optional<size_t> negCount;
  for (UserId u = 0; u < m; ++u) {
    std::sort(split.train[u].begin(), split.train[u].end());
    std::sort(split.evalNegatives[u].begin(), split.evalNegatives[u].end());
    auto items = split.train[u];
    if (split.val[u]) {
      items.push_back(*split.val[u]);
    }
    if (split.test[u]) {
      items.push_back(*split.test[u]);
    } else {
      split.excludedUsers.push_back(u);
    }
    std::sort(items.begin(), items.end());
    if (std::adjacent_find(items.begin(), items.end()) != items.end()) {
      throw Error(ErrorCode::kFormat, path.string() + ": user " + std::to_string(u) +
                                        " has overlapping split roles");
    }
    if (split.test[u]) {
      if (!negCount) {
        negCount = split.evalNegatives[u].size();
      } else if (*negCount != split.evalNegatives[u].size()) {
        throw Error(ErrorCode::kFormat,
                    path.string() + ": inconsistent negative counts across users");
      }
    }
    ds.timestamps[u].assign(items.size(), std::nullopt);
    ds.firstSeen[u].assign(items.size(), 0);
    ds.interactions[u] = std::move(items);
  }
  split.numEvalNegatives = negCount.value_or(0);
  return p;
}

}  // namespace imgrec
