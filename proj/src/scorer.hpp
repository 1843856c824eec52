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

#include <span>
#include <vector>

#include "data.hpp"

namespace imgrec {

// Common interface for everything that ranks items for a user: the image-aware
// model and the baselines. Implementations must be safe for concurrent calls.
class Scorer {
 public:
  virtual ~Scorer() = default;
  virtual std::vector<double> scoreItems(UserId u, std::span<const ItemId> items) const = 0;
};

}  // namespace imgrec
