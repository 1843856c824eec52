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

#include "features.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>
#include <unordered_set>

#include "binary_io.hpp"
#include "error.hpp"

namespace imgrec {

namespace {
constexpr char kMagic[4] = {'I', 'F', 'V', '1'};
constexpr uint32_t kVersion = 1;
}  // namespace

FeatureFile readFeatureFile(std::istream& in, const std::string& name) {
  binary::Reader r(in, name);
  char magic[4];
  r.bytes(magic, 4);
  if (!std::equal(magic, magic + 4, kMagic)) {
    r.failAt(0, "bad magic (expected IFV1)");
  }
  const uint64_t versionAt = r.offset();
  if (r.u32() != kVersion) {
    r.failAt(versionAt, "unsupported version");
  }
  const uint32_t count = r.u32();
  FeatureFile file;
  file.dim = r.u32();
  if (file.dim == 0) {
    r.failAt(12, "feature dimension is zero");
  }
  file.keys.reserve(count);
  std::unordered_set<std::string> seen;
  std::vector<float> row(file.dim);
  for (uint32_t k = 0; k < count; ++k) {
    const uint64_t recordAt = r.offset();
    const uint16_t len = r.u16();
    if (len == 0) {
      r.failAt(recordAt, "empty item key");
    }
    std::string key(len, '\0');
    r.bytes(key.data(), len);
    if (!seen.insert(key).second) {
      r.failAt(recordAt, "duplicate item key '" + key + "'");
    }
    for (uint32_t f = 0; f < file.dim; ++f) {
      const uint64_t at = r.offset();
      const float v = r.f32();
      if (!std::isfinite(v)) {
        r.failAt(at, "non-finite feature value for item '" + key + "'");
      }
      file.values.push_back(v);
    }
    file.keys.push_back(std::move(key));
  }
  r.expectEnd();
  return file;
}

FeatureFile readFeatureFile(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw Error(ErrorCode::kIo, "cannot read feature file: " + path.string());
  }
  return readFeatureFile(in, path.string());
}

void writeFeatureFile(std::ostream& out, const FeatureFile& file) {
  if (file.values.size() != file.keys.size() * file.dim) {
    throw Error(ErrorCode::kShape, "feature file values do not match keys x dim");
  }
  std::vector<size_t> order(file.keys.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](size_t a, size_t b) { return file.keys[a] < file.keys[b]; });
  out.write(kMagic, 4);
  binary::putU32(out, kVersion);
  binary::putU32(out, static_cast<uint32_t>(file.keys.size()));
  binary::putU32(out, file.dim);
  for (const size_t k : order) {
    const auto& key = file.keys[k];
    if (key.empty() || key.size() > UINT16_MAX) {
      throw Error(ErrorCode::kFormat, "item key length out of range: '" + key + "'");
    }
    binary::putU16(out, static_cast<uint16_t>(key.size()));
    out.write(key.data(), static_cast<std::streamsize>(key.size()));
    for (const float v : file.row(k)) {
      binary::putF32(out, v);
    }
  }
}

void writeFeatureFile(const std::filesystem::path& path, const FeatureFile& file) {
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    throw Error(ErrorCode::kIo, "cannot write feature file: " + path.string());
  }
  writeFeatureFile(out, file);
}

FeatureStore::FeatureStore(size_t numItems, size_t dim, std::vector<float> values)
  : numItems_(numItems), dim_(dim), values_(std::move(values)) {
  if (values_.size() != numItems_ * dim_) {
    throw Error(ErrorCode::kShape, "feature store size mismatch");
  }
}

void FeatureStore::normalize() {
  for (size_t i = 0; i < numItems_; ++i) {
    float* row = values_.data() + i * dim_;
    double sq = 0.0;
    for (size_t f = 0; f < dim_; ++f) {
      sq += static_cast<double>(row[f]) * row[f];
    }
    if (sq > 0.0) {
      const double inv = 1.0 / std::sqrt(sq);
      for (size_t f = 0; f < dim_; ++f) {
        row[f] = static_cast<float>(row[f] * inv);
      }
    }
  }
}

FeatureStore featureStoreFromFile(const FeatureFile& file, const Dataset& dataset) {
  const size_t n = dataset.numItems();
  std::vector<float> values(n * file.dim);
  std::vector<bool> covered(n, false);
  for (size_t k = 0; k < file.keys.size(); ++k) {
    const ItemId i = dataset.items.find(file.keys[k]);
    if (i == IdIndex::kMissing) {
      continue;
    }
    const auto row = file.row(k);
    std::copy(row.begin(), row.end(), values.begin() + static_cast<ptrdiff_t>(i) * file.dim);
    covered[i] = true;
  }
  std::vector<std::string> missing;
  for (ItemId i = 0; i < n; ++i) {
    if (!covered[i]) {
      missing.push_back(dataset.items.key(i));
    }
  }
  if (!missing.empty()) {
    std::ostringstream msg;
    msg << missing.size() << " item(s) have no feature vector:";
    for (size_t k = 0; k < missing.size() && k < 10; ++k) {
      msg << ' ' << missing[k];
    }
    if (missing.size() > 10) {
      msg << " ...";
    }
    throw Error(ErrorCode::kCoverage, msg.str());
  }
  return FeatureStore(n, file.dim, std::move(values));
}

FeatureStore loadFeatureStore(const std::filesystem::path& path, const Dataset& dataset) {
  return featureStoreFromFile(readFeatureFile(path), dataset);
}

FeatureFile featureFileFromStore(const FeatureStore& store, const Dataset& dataset) {
  FeatureFile file;
  file.dim = static_cast<uint32_t>(store.dim());
  file.keys = dataset.items.keys();
  file.values.assign(store.values().begin(), store.values().end());
  return file;
}

}  // namespace imgrec
