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
#include <span>
#include <string>
#include <vector>

#include "data.hpp"

namespace imgrec {

// Raw contents of an IFV1 file:
//   "IFV1" | u32 version=1 | u32 item_count | u32 F |
//   item_count x [u16 key_length | key bytes | F x f32]
// all little-endian. Writers emit records sorted by key.
struct FeatureFile {
  uint32_t dim = 0;
  std::vector<std::string> keys;
  std::vector<float> values;  // keys.size() x dim, row-major

  std::span<const float> row(size_t k) const {
    return {values.data() + k * dim, dim};
  }
};

// Throws kFormat (with byte offset) on bad magic/version, truncation,
// duplicate keys, trailing bytes, or non-finite values.
FeatureFile readFeatureFile(std::istream& in, const std::string& name = "IFV1");
FeatureFile readFeatureFile(const std::filesystem::path& path);

void writeFeatureFile(std::ostream& out, const FeatureFile& file);
void writeFeatureFile(const std::filesystem::path& path, const FeatureFile& file);

// Dense per-item feature vectors indexed by item id.
class FeatureStore {
 public:
  FeatureStore() = default;
  FeatureStore(size_t numItems, size_t dim, std::vector<float> values);

  size_t dim() const { return dim_; }
  size_t numItems() const { return numItems_; }
  std::span<const float> vector(ItemId i) const {
    return {values_.data() + static_cast<size_t>(i) * dim_, dim_};
  }
  std::span<const float> values() const { return values_; }

  // Rescales every vector to unit L2 norm (zero vectors stay zero).
  void normalize();

 private:
  size_t numItems_ = 0;
  size_t dim_ = 0;
  std::vector<float> values_;
};

// Every dataset item must be covered; keys absent from the dataset are
// ignored. Throws kCoverage naming up to 10 missing keys.
FeatureStore featureStoreFromFile(const FeatureFile& file, const Dataset& dataset);
FeatureStore loadFeatureStore(const std::filesystem::path& path, const Dataset& dataset);

FeatureFile featureFileFromStore(const FeatureStore& store, const Dataset& dataset);

}  // namespace imgrec
