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

#include <cstddef>
#include <functional>

namespace imgrec {

// Worker count: hardware concurrency, capped by IMGREC_THREADS when set.
size_t maxThreads();

// Runs fn(begin, end) over contiguous chunks of [0, n). Chunk boundaries depend
// only on n and the thread count, and callers write results into per-index
// slots, so reductions done afterwards in index order are deterministic.
void parallelFor(size_t n, const std::function<void(size_t, size_t)>& fn);

}  // namespace imgrec
