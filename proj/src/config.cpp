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

#include "coachd/config.hpp"

#include <cstdlib>
#include <fstream>
#include <set>

#include "coachd/prompts.hpp"

namespace coachd {

namespace {

BackendConfig backend_from_json(const Json& json, const std::string& where) {
    if (!json.is_object()) throw Error(ErrorKind::config, where + " must be an object");
    static const std::set<std::string> keys{"type", "base_url", "model", "api_key_env",
                                            "timeout_s"};
    for (const auto& [key, value] : json.items()) {
        if (keys.count(key) == 0) throw Error(ErrorKind::config, "unknown key " + where + "." + key);
    }
    BackendConfig out;
    out.type = json.value("type", out.type);
    out.base_url = json.value("base_url", out.base_url);
    out.model = json.value("model", out.model);
    out.api_key_env = json.value("api_key_env", out.api_key_env);
    out.timeout_s = json.value("timeout_s", out.timeout_s);
    return out;
}

Json backend_to_json(const BackendConfig& config) {
    return Json{{"type", config.type},         {"base_url", config.base_url},
                {"model", config.model},       {"api_key_env", config.api_key_env},
                {"timeout_s", config.timeout_s}};
}

void check_backend(const BackendConfig& config, const std::string& where) {
    if (config.type == "stub") return;
    if (config.type != "openai") {
        throw Error(ErrorKind::config, where + ".type must be stub or openai");
    }
    if (config.base_url.rfind("http://", 0) != 0) {
        throw Error(ErrorKind::config, where + ".base_url must start with http://");
    }
    if (config.model.empty()) throw Error(ErrorKind::config, where + ".model is required");
}

}  // namespace

std::string_view to_string(MemoryMode mode) {
    return mode == MemoryMode::frozen ? "frozen" : "dynamic";
}

MemoryMode memory_mode_from_string(std::string_view text) {
    if (text == "frozen") return MemoryMode::frozen;
    if (text == "dynamic") return MemoryMode::dynamic;
    throw Error(ErrorKind::config, "memory mode must be frozen or dynamic, got '" +
                                       std::string(text) + "'");
}

CoachOptions ServiceConfig::coach_options() const {
    return CoachOptions{top_k, failure_threshold, success_threshold, max_advice_sentences};
}

StoreConfig ServiceConfig::store_config() const {
    StoreConfig out;
    out.dimension = dimension;
    out.hard_cap = hard_cap;
    out.hnsw = hnsw;
    return out;
}

ServiceConfig service_config_from_json(const Json& json) {
    if (!json.is_object()) throw Error(ErrorKind::config, "config must be an object");
    static const std::set<std::string> keys{
        "memory_mode",     "top_k",         "failure_threshold", "success_threshold",
        "max_advice_sentences", "hard_cap", "step_timeout_s",    "coach_deadline_s",
        "coach_stride",    "idle_timeout_s", "use_ann",          "dimension",
        "hnsw",            "snapshot_path", "summarizer",        "embedder",
        "coach",           "condenser_template_hash", "coach_template_hash"};
    for (const auto& [key, value] : json.items()) {
        if (keys.count(key) == 0) throw Error(ErrorKind::config, "unknown config key: " + key);
    }
    ServiceConfig out;
    try {
        if (json.contains("memory_mode")) {
            out.memory_mode = memory_mode_from_string(json["memory_mode"].get<std::string>());
        }
        out.top_k = json.value("top_k", out.top_k);
        out.failure_threshold = json.value("failure_threshold", out.failure_threshold);
        out.success_threshold = json.value("success_threshold", out.success_threshold);
        out.max_advice_sentences = json.value("max_advice_sentences", out.max_advice_sentences);
        out.hard_cap = json.value("hard_cap", out.hard_cap);
        out.step_timeout_s = json.value("step_timeout_s", out.step_timeout_s);
        out.coach_deadline_s = json.value("coach_deadline_s", out.coach_deadline_s);
        out.coach_stride = json.value("coach_stride", out.coach_stride);
        out.idle_timeout_s = json.value("idle_timeout_s", out.idle_timeout_s);
        out.use_ann = json.value("use_ann", out.use_ann);
        out.dimension = json.value("dimension", out.dimension);
        out.snapshot_path = json.value("snapshot_path", out.snapshot_path);
        out.condenser_template_hash =
            json.value("condenser_template_hash", out.condenser_template_hash);
        out.coach_template_hash = json.value("coach_template_hash", out.coach_template_hash);
        if (json.contains("hnsw")) {
            const auto& h = json["hnsw"];
            out.hnsw.M = h.value("M", out.hnsw.M);
            out.hnsw.ef_construction = h.value("ef_construction", out.hnsw.ef_construction);
            out.hnsw.ef_search = h.value("ef_search", out.hnsw.ef_search);
            out.hnsw.seed = h.value("seed", out.hnsw.seed);
        }
    } catch (const Json::exception& e) {
        throw Error(ErrorKind::config, std::string("bad config value: ") + e.what());
    }
    if (json.contains("summarizer")) out.summarizer = backend_from_json(json["summarizer"], "summarizer");
    if (json.contains("embedder")) out.embedder = backend_from_json(json["embedder"], "embedder");
    if (json.contains("coach")) out.coach = backend_from_json(json["coach"], "coach");
    check(out);
    return out;
}

Json to_json(const ServiceConfig& config) {
    return Json{{"memory_mode", std::string(to_string(config.memory_mode))},
                {"top_k", config.top_k},
                {"failure_threshold", config.failure_threshold},
                {"success_threshold", config.success_threshold},
                {"max_advice_sentences", config.max_advice_sentences},
                {"hard_cap", config.hard_cap},
                {"step_timeout_s", config.step_timeout_s},
                {"coach_deadline_s", config.coach_deadline_s},
                {"coach_stride", config.coach_stride},
                {"idle_timeout_s", config.idle_timeout_s},
                {"use_ann", config.use_ann},
                {"dimension", config.dimension},
                {"hnsw",
                 {{"M", config.hnsw.M},
                  {"ef_construction", config.hnsw.ef_construction},
                  {"ef_search", config.hnsw.ef_search},
                  {"seed", config.hnsw.seed}}},
                {"snapshot_path", config.snapshot_path},
                {"summarizer", backend_to_json(config.summarizer)},
                {"embedder", backend_to_json(config.embedder)},
                {"coach", backend_to_json(config.coach)},
                {"condenser_template_hash", config.condenser_template_hash.empty()
                                                ? template_hash(condenser_template())
                                                : config.condenser_template_hash},
                {"coach_template_hash", config.coach_template_hash.empty()
                                            ? template_hash(coach_template())
                                            : config.coach_template_hash}};
}

void check(const ServiceConfig& config) {
    if (config.top_k == 0) throw Error(ErrorKind::config, "top_k must be positive");
    if (config.hard_cap == 0) throw Error(ErrorKind::config, "hard_cap must be positive");
    if (config.dimension == 0) throw Error(ErrorKind::config, "dimension must be positive");
    if (config.coach_stride == 0) throw Error(ErrorKind::config, "coach_stride must be positive");
    if (config.max_advice_sentences == 0) {
        throw Error(ErrorKind::config, "max_advice_sentences must be positive");
    }
    if (config.coach_deadline_s < 0 || config.step_timeout_s <= 0 || config.idle_timeout_s <= 0) {
        throw Error(ErrorKind::config, "timeouts must be positive");
    }
    if (config.hnsw.M < 2) throw Error(ErrorKind::config, "hnsw.M must be at least 2");
    check_backend(config.summarizer, "summarizer");
    check_backend(config.embedder, "embedder");
    check_backend(config.coach, "coach");
    if (!config.condenser_template_hash.empty() &&
        config.condenser_template_hash != template_hash(condenser_template())) {
        throw Error(ErrorKind::config, "condenser template hash mismatch: pinned " +
                                           config.condenser_template_hash + ", built " +
                                           template_hash(condenser_template()));
    }
    if (!config.coach_template_hash.empty() &&
        config.coach_template_hash != template_hash(coach_template())) {
        throw Error(ErrorKind::config, "coach template hash mismatch: pinned " +
                                           config.coach_template_hash + ", built " +
                                           template_hash(coach_template()));
    }
}

std::optional<std::string> env_value(const char* name) {
    const char* value = std::getenv(name);
    if (value == nullptr || *value == '\0') return std::nullopt;
    return std::string(value);
}

ServiceConfig load_service_config(const std::string& path) {
    std::string source = path;
    if (source.empty()) source = env_value("WEBCOACH_CONFIG").value_or("");
    ServiceConfig config;
    if (!source.empty()) {
        std::ifstream in(source);
        if (!in) throw Error(ErrorKind::config, "cannot read config file: " + source);
        Json json = Json::parse(in, nullptr, false);
        if (json.is_discarded()) throw Error(ErrorKind::config, "config is not valid JSON: " + source);
        config = service_config_from_json(json);
    }
    if (auto snapshot = env_value("WEBCOACH_SNAPSHOT")) config.snapshot_path = *snapshot;
    if (auto mode = env_value("WEBCOACH_MODE")) config.memory_mode = memory_mode_from_string(*mode);
    check(config);
    return config;
}

}  // namespace coachd
