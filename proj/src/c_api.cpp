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

#include "imgrec/imgrec.h"

#include <memory>
#include <mutex>
#include <string>

#include "config.hpp"
#include "data.hpp"
#include "error.hpp"
#include "features.hpp"
#include "model.hpp"
#include "pipeline.hpp"

struct imgrec_config {
  imgrec::RunConfig config;
};

struct imgrec_data {
  imgrec::Prepared prepared;
};

struct imgrec_features {
  imgrec::FeatureStore store;
};

struct imgrec_model {
  imgrec::ModelParams params;
};

namespace {

thread_local std::string lastError;

std::mutex logMutex;
imgrec_log_fn logFn = nullptr;
void* logUserData = nullptr;

imgrec_status statusFor(imgrec::ErrorCode code) {
  using imgrec::ErrorCode;
  switch (code) {
    case ErrorCode::kDivergence: return IMGREC_ERR_DIVERGENCE;
    case ErrorCode::kCheckpointMismatch: return IMGREC_ERR_CHECKPOINT;
    case ErrorCode::kPrecondition: return IMGREC_ERR_PRECONDITION;
    default: return IMGREC_ERR_INPUT;
  }
}

template <typename Fn>
imgrec_status guarded(Fn&& fn) {
  try {
    fn();
    return IMGREC_OK;
  } catch (const imgrec::Error& e) {
    lastError = std::string(imgrec::errorCodeName(e.code())) + " error: " + e.what();
    return statusFor(e.code());
  } catch (const std::exception& e) {
    lastError = std::string("internal error: ") + e.what();
    return IMGREC_ERR_INTERNAL;
  } catch (...) {
    lastError = "internal error: unknown exception";
    return IMGREC_ERR_INTERNAL;
  }
}

imgrec_status nullArgument(const char* what) {
  lastError = std::string("null argument: ") + what;
  return IMGREC_ERR_INPUT;
}

imgrec::LogFn logger() {
  return [](imgrec::LogLevel level, const std::string& msg) {
    std::lock_guard<std::mutex> lock(logMutex);
    if (logFn) {
      logFn(level == imgrec::LogLevel::kInfo ? IMGREC_LOG_INFO : IMGREC_LOG_WARNING,
            msg.c_str(), logUserData);
    }
  };
}

}  // namespace

extern "C" {

const char* imgrec_version(void) {
  return "1.0.0";
}

const char* imgrec_last_error(void) {
  return lastError.c_str();
}

void imgrec_set_log_callback(imgrec_log_fn fn, void* user_data) {
  std::lock_guard<std::mutex> lock(logMutex);
  logFn = fn;
  logUserData = user_data;
}

imgrec_status imgrec_config_create(imgrec_config** out) {
  if (!out) return nullArgument("out");
  return guarded([&] { *out = new imgrec_config(); });
}

void imgrec_config_destroy(imgrec_config* config) {
  delete config;
}

int imgrec_config_is_known_key(const char* key) {
  return key && imgrec::RunConfig::isKnown(key) ? 1 : 0;
}

imgrec_status imgrec_config_set(imgrec_config* config, const char* key, const char* value) {
  if (!config || !key || !value) return nullArgument("config/key/value");
  return guarded([&] { config->config.set(key, value); });
}

imgrec_status imgrec_config_load_file(imgrec_config* config, const char* path) {
  if (!config || !path) return nullArgument("config/path");
  return guarded([&] { config->config.loadFile(path); });
}

const char* imgrec_config_get(const imgrec_config* config, const char* key) {
  if (!config || !key || !imgrec::RunConfig::isKnown(key)) {
    return nullptr;
  }
  return config->config.get(key).c_str();
}

size_t imgrec_config_key_count(void) {
  return imgrec::RunConfig::knownKeys().size();
}

const char* imgrec_config_key_name(size_t index) {
  const auto& keys = imgrec::RunConfig::knownKeys();
  return index < keys.size() ? keys[index].name : nullptr;
}

const char* imgrec_config_key_default(size_t index) {
  const auto& keys = imgrec::RunConfig::knownKeys();
  return index < keys.size() ? keys[index].defaultValue : nullptr;
}

const char* imgrec_config_key_help(size_t index) {
  const auto& keys = imgrec::RunConfig::knownKeys();
  return index < keys.size() ? keys[index].help : nullptr;
}

imgrec_status imgrec_prepare(const imgrec_config* config, imgrec_prepare_stats* stats) {
  if (!config) return nullArgument("config");
  return guarded([&] {
    const auto s = imgrec::runPrepare(config->config, logger());
    if (stats) {
      *stats = {s.records, s.malformedLines, s.users, s.items,
                s.interactions, s.evaluableUsers, s.excludedUsers};
    }
  });
}

imgrec_status imgrec_train(const imgrec_config* config) {
  if (!config) return nullArgument("config");
  return guarded([&] { imgrec::runTrain(config->config, logger()); });
}

imgrec_status imgrec_evaluate(const imgrec_config* config, imgrec_eval_summary* summary) {
  if (!config) return nullArgument("config");
  return guarded([&] {
    const auto r = imgrec::runEvaluate(config->config, logger());
    if (summary) {
      *summary = {r.meanAuc, r.perTrialAuc.size(), r.numNegatives, r.numUsers};
    }
  });
}

imgrec_status imgrec_ablate(const imgrec_config* config) {
  if (!config) return nullArgument("config");
  return guarded([&] { imgrec::runAblate(config->config, logger()); });
}

imgrec_status imgrec_data_load(const char* dir, imgrec_data** out) {
  if (!dir || !out) return nullArgument("dir/out");
  return guarded([&] {
    auto data = std::make_unique<imgrec_data>();
    data->prepared = imgrec::readPrepared(dir);
    *out = data.release();
  });
}

void imgrec_data_destroy(imgrec_data* data) {
  delete data;
}

size_t imgrec_data_num_users(const imgrec_data* data) {
  return data ? data->prepared.dataset.numUsers() : 0;
}

size_t imgrec_data_num_items(const imgrec_data* data) {
  return data ? data->prepared.dataset.numItems() : 0;
}

size_t imgrec_data_num_interactions(const imgrec_data* data) {
  return data ? data->prepared.dataset.numInteractions() : 0;
}

namespace {
imgrec_status lookup(const imgrec::IdIndex& index, const char* key, uint32_t* id,
                     const char* what) {
  const auto found = index.find(key);
  if (found == imgrec::IdIndex::kMissing) {
    lastError = std::string("unknown ") + what + " key '" + key + "'";
    return IMGREC_ERR_INPUT;
  }
  *id = found;
  return IMGREC_OK;
}
}  // namespace

imgrec_status imgrec_data_user_id(const imgrec_data* data, const char* key, uint32_t* id) {
  if (!data || !key || !id) return nullArgument("data/key/id");
  return lookup(data->prepared.dataset.users, key, id, "user");
}

imgrec_status imgrec_data_item_id(const imgrec_data* data, const char* key, uint32_t* id) {
  if (!data || !key || !id) return nullArgument("data/key/id");
  return lookup(data->prepared.dataset.items, key, id, "item");
}

imgrec_status imgrec_features_write(const char* path, size_t count, size_t dim,
                                    const char* const* keys, const float* values) {
  if (!path || (count > 0 && (!keys || !values))) return nullArgument("path/keys/values");
  return guarded([&] {
    imgrec::FeatureFile file;
    file.dim = static_cast<uint32_t>(dim);
    for (size_t k = 0; k < count; ++k) {
      file.keys.emplace_back(keys[k]);
    }
    file.values.assign(values, values + count * dim);
    imgrec::writeFeatureFile(std::filesystem::path(path), file);
  });
}

imgrec_status imgrec_features_load(const char* path, const imgrec_data* data,
                                   imgrec_features** out) {
  if (!path || !data || !out) return nullArgument("path/data/out");
  return guarded([&] {
    auto f = std::make_unique<imgrec_features>();
    f->store = imgrec::loadFeatureStore(path, data->prepared.dataset);
    *out = f.release();
  });
}

void imgrec_features_destroy(imgrec_features* features) {
  delete features;
}

size_t imgrec_features_dim(const imgrec_features* features) {
  return features ? features->store.dim() : 0;
}

imgrec_status imgrec_model_load(const char* path, imgrec_model** out) {
  if (!path || !out) return nullArgument("path/out");
  return guarded([&] {
    auto m = std::make_unique<imgrec_model>();
    m->params = imgrec::loadCheckpoint(std::filesystem::path(path));
    *out = m.release();
  });
}

imgrec_status imgrec_model_save(const imgrec_model* model, const char* path) {
  if (!model || !path) return nullArgument("model/path");
  return guarded([&] { imgrec::saveCheckpoint(std::filesystem::path(path), model->params); });
}

void imgrec_model_destroy(imgrec_model* model) {
  delete model;
}

int imgrec_model_mode(const imgrec_model* model) {
  return model ? static_cast<int>(model->params.mode) : -1;
}

size_t imgrec_model_embedding_dim(const imgrec_model* model) {
  return model ? model->params.embedDim : 0;
}

imgrec_status imgrec_model_score(const imgrec_model* model, const imgrec_features* features,
                                 uint32_t user, const uint32_t* items, size_t n,
                                 double* scores) {
  if (!model || !features || (n > 0 && (!items || !scores))) {
    return nullArgument("model/features/items/scores");
  }
  return guarded([&] {
    const auto out = imgrec::scoreItems(user, {items, n}, features->store, model->params);
    std::copy(out.begin(), out.end(), scores);
  });
}

}  // extern "C"
