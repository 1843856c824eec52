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

// imgrec: prepare data, train, evaluate and run the feature-mode ablation.
//
//   imgrec prepare  --interactions FILE --out DIR [--format csv|tsv] [--negatives N] [--seed N]
//   imgrec train    --data DIR --features FILE --out DIR [--mode dir|ft|ete] [...]
//   imgrec evaluate --data DIR --features FILE --checkpoint FILE --out DIR [--trials N]
//   imgrec ablate   --data DIR --features FILE --out DIR [--cut_features FILE]
//
// Every setting can come from --config FILE (key=value lines); explicit flags
// take precedence. Exit codes: 0 ok, 2 input error, 3 divergence,
// 4 checkpoint mismatch, 5 protocol precondition failure.

#include <cstdio>
#include <map>
#include <string>

#include "CLI11.hpp"
#include "imgrec/imgrec.h"

namespace {

void printLog(imgrec_log_level level, const char* message, void*) {
  if (level == IMGREC_LOG_WARNING) {
    std::fprintf(stderr, "warning: %s\n", message);
  } else {
    std::printf("%s\n", message);
  }
}

struct Command {
  CLI::App* app;
  std::string configPath;
  std::map<std::string, std::string> overrides;
};

void addSettings(Command& cmd) {
  cmd.app->add_option("--config", cmd.configPath, "key=value settings file");
  for (size_t k = 0; k < imgrec_config_key_count(); ++k) {
    const std::string name = imgrec_config_key_name(k);
    std::string help = imgrec_config_key_help(k);
    const std::string def = imgrec_config_key_default(k);
    if (!def.empty()) {
      help += " [" + def + "]";
    }
    cmd.app->add_option("--" + name, cmd.overrides[name], help);
  }
}

int fail(imgrec_status status) {
  std::fprintf(stderr, "error: %s\n", imgrec_last_error());
  return static_cast<int>(status);
}

int run(const Command& cmd, const std::string& name) {
  imgrec_config* config = nullptr;
  if (imgrec_status s = imgrec_config_create(&config); s != IMGREC_OK) {
    return fail(s);
  }
  std::unique_ptr<imgrec_config, decltype(&imgrec_config_destroy)> guard(config,
                                                                         imgrec_config_destroy);
  if (!cmd.configPath.empty()) {
    if (imgrec_status s = imgrec_config_load_file(config, cmd.configPath.c_str()); s != IMGREC_OK) {
      return fail(s);
    }
  }
  for (const auto& [key, value] : cmd.overrides) {
    if (cmd.app->count("--" + key) == 0) {
      continue;
    }
    if (imgrec_status s = imgrec_config_set(config, key.c_str(), value.c_str()); s != IMGREC_OK) {
      return fail(s);
    }
  }

  imgrec_status status = IMGREC_OK;
  if (name == "prepare") {
    status = imgrec_prepare(config, nullptr);
  } else if (name == "train") {
    status = imgrec_train(config);
  } else if (name == "evaluate") {
    status = imgrec_evaluate(config, nullptr);
  } else {
    status = imgrec_ablate(config);
  }
  return status == IMGREC_OK ? 0 : fail(status);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Image-aware implicit-feedback recommender"};
  app.require_subcommand(1);

  std::map<std::string, Command> commands;
  const std::pair<const char*, const char*> specs[] = {
    {"prepare", "build id maps and the leave-one-out split"},
    {"train", "train a model (two-stage for ete)"},
    {"evaluate", "sampled-negative AUC of a checkpoint"},
    {"ablate", "compare dir/ft/ete with PopRank and BPR-MF"},
  };
  for (const auto& [name, help] : specs) {
    auto& cmd = commands[name];
    cmd.app = app.add_subcommand(name, help);
    addSettings(cmd);
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return IMGREC_ERR_INPUT;
  }

  imgrec_set_log_callback(printLog, nullptr);
  for (const auto& [name, cmd] : commands) {
    if (cmd.app->parsed()) {
      return run(cmd, name);
    }
  }
  return IMGREC_ERR_INPUT;
}
