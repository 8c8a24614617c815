// Copyright 2026 The coachd Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <filesystem>
#include <optional>
#include <string>

#include "coachd/coach.hpp"
#include "coachd/common.hpp"
#include "coachd/memory_store.hpp"

namespace coachd {

enum class MemoryMode { frozen, dynamic };

std::string_view to_string(MemoryMode mode);
MemoryMode memory_mode_from_string(std::string_view text);

/// "stub", or "openai" for an OpenAI-compatible HTTP endpoint.
struct BackendConfig {
    std::string type = "stub";
    std::string base_url;     // e.g. http://127.0.0.1:8000
    std::string model;
    std::string api_key_env;  // name of the env var holding the key, never the key
    double timeout_s = 30.0;

    bool operator==(const BackendConfig&) const = default;
};

struct ServiceConfig {
    MemoryMode memory_mode = MemoryMode::dynamic;
    std::size_t top_k = kDefaultTopK;
    double failure_threshold = 0.80;
    double success_threshold = 0.85;
    std::size_t max_advice_sentences = 2;
    std::size_t hard_cap = kDefaultHardCap;
    double step_timeout_s = 30.0;
    /// Budget for condense + retrieve + decide on one step. 0 runs inline without a deadline.
    double coach_deadline_s = 10.0;
    /// Run the coach on every n-th step.
    std::size_t coach_stride = 1;
    double idle_timeout_s = 3600.0;
    bool use_ann = true;
    std::size_t dimension = kDefaultDimension;
    HnswParams hnsw;
    std::string snapshot_path;
    BackendConfig summarizer;
    BackendConfig embedder;
    BackendConfig coach;
    /// When set, startup fails if the compiled template hash differs.
    std::string condenser_template_hash;
    std::string coach_template_hash;

    CoachOptions coach_options() const;
    StoreConfig store_config() const;
};

/// Unknown keys are rejected so typos surface as config errors.
ServiceConfig service_config_from_json(const Json& json);
Json to_json(const ServiceConfig& config);

/// Reads `path` (if non-empty) then applies WEBCOACH_SNAPSHOT and WEBCOACH_MODE.
/// An empty path falls back to WEBCOACH_CONFIG.
ServiceConfig load_service_config(const std::string& path = {});

/// Throws config error when the config is inconsistent.
void check(const ServiceConfig& config);

std::optional<std::string> env_value(const char* name);

}  // namespace coachd
