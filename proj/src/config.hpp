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
#include <map>
#include <string>
#include <vector>

#include "baselines.hpp"
#include "data.hpp"
#include "eval.hpp"
#include "model.hpp"
#include "training.hpp"

namespace imgrec {

struct ConfigKey {
  const char* name;
  const char* defaultValue;
  const char* help;
};

// Flat key=value settings shared by every command. Layering is by call order:
// built-in defaults, then loadFile(), then set() for command-line flags.
class RunConfig {
 public:
  RunConfig();

  static const std::vector<ConfigKey>& knownKeys();
  static bool isKnown(const std::string& key);

  // Throws kConfig for unknown keys.
  void set(const std::string& key, const std::string& value);
  // '#' starts a comment; blank lines are ignored. Throws kIo if unreadable
  // and kConfig (with the line number) for malformed lines or unknown keys.
  void loadFile(const std::filesystem::path& path);
  void parse(std::istream& in, const std::string& name);

  const std::string& get(const std::string& key) const;
  bool hasValue(const std::string& key) const { return !get(key).empty(); }

  size_t getSize(const std::string& key) const;
  uint64_t getU64(const std::string& key) const;
  double getDouble(const std::string& key) const;
  bool getBool(const std::string& key) const;
  std::filesystem::path getPath(const std::string& key) const;

  ModelConfig modelConfig() const;
  TrainConfig trainConfig() const;
  EvalOptions evalOptions() const;
  BprConfig bprConfig() const;
  InteractionFormat interactionFormat() const;

 private:
  std::map<std::string, std::string> values_;
};

std::vector<size_t> parseWidths(const std::string& text);

}  // namespace imgrec
