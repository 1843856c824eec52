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

#include "parallel.hpp"

#include <algorithm>
#include <cstdlib>
#include <exception>
#include <string>
#include <thread>
#include <vector>

namespace imgrec {

size_t maxThreads() {
  size_t n = std::max<size_t>(1, std::thread::hardware_concurrency());
  if (const char* env = std::getenv("IMGREC_THREADS")) {
    try {
      const long cap = std::stol(env);
      if (cap >= 1) {
        n = std::min(n, static_cast<size_t>(cap));
      }
    } catch (const std::exception&) {
      // unparsable value: ignore the cap
    }
  }
  return n;
}

void parallelFor(size_t n, const std::function<void(size_t, size_t)>& fn) {
  if (n == 0) {
    return;
  }
  const size_t nthreads = std::min(maxThreads(), n);
  if (nthreads <= 1) {
    fn(0, n);
    return;
  }
  const size_t chunk = (n + nthreads - 1) / nthreads;
  std::vector<std::thread> workers;
  std::vector<std::exception_ptr> errors(nthreads);
  for (size_t t = 0; t < nthreads; ++t) {
    const size_t begin = t * chunk;
    const size_t end = std::min(n, begin + chunk);
    if (begin >= end) {
      break;
    }
    workers.emplace_back([&fn, &errors, t, begin, end] {
      try {
        fn(begin, end);
      } catch (...) {
        errors[t] = std::current_exception();
      }
    });
  }
  for (auto& w : workers) {
    w.join();
  }
  for (auto& e : errors) {
    if (e) {
      std::rethrow_exception(e);
    }
  }
}

}  // namespace imgrec
