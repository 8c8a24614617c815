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

#include "coachd/backends.hpp"

#include <chrono>

#include "httplib.h"

namespace coachd {

namespace {

Json post_json(const BackendConfig& config, const std::string& path, const Json& body) {
    httplib::Client client(config.base_url);
    auto timeout = std::chrono::duration<double>(config.timeout_s);
    client.set_connection_timeout(std::chrono::duration_cast<std::chrono::microseconds>(timeout));
    client.set_read_timeout(std::chrono::duration_cast<std::chrono::microseconds>(timeout));
    client.set_write_timeout(std::chrono::duration_cast<std::chrono::microseconds>(timeout));
    httplib::Headers headers;
    if (!config.api_key_env.empty()) {
        if (auto key = env_value(config.api_key_env.c_str())) {
            headers.emplace("Authorization", "Bearer " + *key);
        }
    }
    auto response = client.Post(path, headers, body.dump(), "application/json");
    if (!response) {
        throw Error(ErrorKind::backend, config.base_url + path + ": " +
                                            httplib::to_string(response.error()));
    }
    if (response->status != 200) {
        throw Error(ErrorKind::backend,
                    config.base_url + path + ": HTTP " + std::to_string(response->status));
    }
    Json json = Json::parse(response->body, nullptr, false);
    if (json.is_discarded()) throw Error(ErrorKind::backend, path + ": response is not JSON");
    return json;
}

}  // namespace

std::string chat_completion(const BackendConfig& config, const std::string& prompt) {
    Json body{{"model", config.model},
              {"temperature", 0},
              {"messages", Json::array({Json{{"role", "user"}, {"content", prompt}}})}};
    auto json = post_json(config, "/v1/chat/completions", body);
    const Json* content = nullptr;
    if (json.contains("choices") && json["choices"].is_array() && !json["choices"].empty()) {
        const auto& choice = json["choices"][0];
        if (choice.contains("message") && choice["message"].contains("content")) {
            content = &choice["message"]["content"];
        }
    }
    if (content == nullptr || !content->is_string()) {
        throw Error(ErrorKind::backend, "chat response has no choices[0].message.content");
    }
    return content->get<std::string>();
}

Vector HttpEmbedder::embed(std::string_view text) {
    Json body{{"model", config_.model}, {"input", std::string(text)}};
    auto json = post_json(config_, "/v1/embeddings", body);
    if (!json.contains("data") || !json["data"].is_array() || json["data"].empty() ||
        !json["data"][0].contains("embedding") || !json["data"][0]["embedding"].is_array()) {
        throw Error(ErrorKind::backend, "embedding response has no data[0].embedding");
    }
    Vector out;
    for (const auto& x : json["data"][0]["embedding"]) {
        if (!x.is_number()) throw Error(ErrorKind::backend, "embedding holds a non-number");
        out.push_back(x.get<double>());
    }
    return out;
}

std::shared_ptr<SummarizerBackend> make_summarizer(const BackendConfig& config,
                                                   std::size_t hard_cap) {
    if (config.type == "stub") return std::make_shared<StubSummarizer>(hard_cap);
    return std::make_shared<ChatSummarizer>(config);
}

std::shared_ptr<EmbedderBackend> make_embedder(const BackendConfig& config, std::size_t dimension) {
    if (config.type == "stub") return std::make_shared<StubEmbedder>(dimension);
    return std::make_shared<HttpEmbedder>(config, dimension);
}

std::shared_ptr<CoachBackend> make_coach(const BackendConfig& config, const CoachOptions& options) {
    if (config.type == "stub") return std::make_shared<StubCoach>(options);
    return std::make_shared<ChatCoach>(config);
}

}  // namespace coachd
