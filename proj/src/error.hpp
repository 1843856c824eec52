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

#include <stdexcept>
#include <string>

namespace imgrec {

enum class ErrorCode {
  kIo,
  kEmptyInput,
  kFormat,
  kCoverage,
  kConfig,
  kShape,
  kIndex,
  kDivergence,
  kCheckpointMismatch,
  kPrecondition,
};

inline const char* errorCodeName(ErrorCode code) {
  switch (code) {
    case ErrorCode::kIo: return "io";
    case ErrorCode::kEmptyInput: return "empty-input";
    case ErrorCode::kFormat: return "format";
    case ErrorCode::kCoverage: return "coverage";
    case ErrorCode::kConfig: return "config";
    case ErrorCode::kShape: return "shape";
    case ErrorCode::kIndex: return "index";
    case ErrorCode::kDivergence: return "divergence";
    case ErrorCode::kCheckpointMismatch: return "checkpoint-mismatch";
    case ErrorCode::kPrecondition: return "precondition";
  }
  return "unknown";
}

// Every failure raised by the core library carries one of the codes above;
// the C API maps them onto its status values.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
    : std::runtime_error(what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace imgrec
