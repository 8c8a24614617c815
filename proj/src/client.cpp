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

#include "coachd/client.hpp"

#include <chrono>

#include "coachd/http_frontend.hpp"
#include "httplib.h"

namespace coachd {

StepResponse step_response_from_json(const Json& json) {
    StepResponse out;
    out.session_id = json.at("session_id").get<std::string>();
    out.step_count = json.at("step_count").get<std::size_t>();
    for (const auto& message : json.at("advice")) {
        out.advice.push_back(SystemMessage{message.at("role").get<std::string>(),
                                           message.at("content").get<std::string>(),
                                           message.at("step_index").get<std::size_t>()});
    }
    out.coached = json.value("coached", false);
    out.finalized = json.value("finalized", false);
    if (json.contains("episode_id")) out.episode_id = json["episode_id"].get<std::string>();
    out.warnings = json.value("warnings", std::vector<std::string>{});
    return out;
}

FinalizeResponse finalize_response_from_json(const Json& json) {
    FinalizeResponse out;
    out.session_id = json.at("session_id").get<std::string>();
    out.episode_id = json.at("episode_id").get<std::string>();
    out.persisted = json.at("persisted").get<bool>();
    out.final_success = tristate_from_json(json.at("final_success"));
    out.total_steps = json.at("total_steps").get<std::size_t>();
    return out;
}

HttpLink::HttpLink(std::string host, int port, double timeout_s)
    : host_(std::move(host)), port_(port), timeout_s_(timeout_s) {}

HttpLink::~HttpLink() = default;

Json HttpLink::request(const std::string& method, const std::string& path,
                       const std::string& body, const std::string& content_type) {
    httplib::Client client(host_, port_);
    auto timeout = std::chrono::duration_cast<std::chrono::microseconds>(
        std::chrono::duration<double>(timeout_s_));
    client.set_connection_timeout(timeout);
    client.set_read_timeout(timeout);
    client.set_write_timeout(timeout);
    auto result = method == "GET" ? client.Get(path)
                                  : client.Post(path, body, content_type);
    if (!result) {
        throw Error(ErrorKind::backend, "sidecar unreachable at " + host_ + ":" +
                                            std::to_string(port_) + ": " +
                                            httplib::to_string(result.error()));
    }
    Json json = Json::parse(result->body, nullptr, false);
    if (json.is_discarded()) {
        throw Error(ErrorKind::backend, "sidecar returned non-JSON (HTTP " +
                                            std::to_string(result->status) + ")");
    }
    if (result->status >= 400) {
        std::string kind = "backend", message = "HTTP " + std::to_string(result->status);
        if (json.contains("error") && json["error"].is_object()) {
            kind = json["error"].value("kind", kind);
            message = json["error"].value("message", message);
        }
        throw Error(error_kind_from_string(kind), message);
    }
    return json;
}

std::string HttpLink::open(const OpenRequest& request) {
    Json body{{"task_id", request.task_id},
              {"goal", request.goal},
              {"domain_root", request.domain_root},
              {"model_name", request.model_name}};
    if (!request.adapter_id.empty()) body["adapter_id"] = request.adapter_id;
    return this->request("POST", "/v1/sessions", body.dump(), "application/json")
        .at("session_id")
        .get<std::string>();
}

StepResponse HttpLink::submit(const std::string& session_id, const std::string& raw) {
    return step_response_from_json(
        request("POST", "/v1/sessions/" + session_id + "/steps", raw, "application/x-ndjson"));
}

FinalizeResponse HttpLink::finalize(const std::string& session_id, const std::string& raw) {
    return finalize_response_from_json(
        request("POST", "/v1/sessions/" + session_id + "/finalize", raw, "application/x-ndjson"));
}

std::vector<SystemMessage> HttpLink::advice(const std::string& session_id) {
    auto json = request("GET", "/v1/sessions/" + session_id + "/advice", {}, {});
    std::vector<SystemMessage> out;
    for (const auto& message : json.at("advice")) {
        out.push_back(SystemMessage{message.at("role").get<std::string>(),
                                    message.at("content").get<std::string>(),
                                    message.at("step_index").get<std::size_t>()});
    }
    return out;
}

Json HttpLink::stats() { return request("GET", "/v1/stats", {}, {}); }

Json HttpLink::search(const std::string& query, std::size_t k, const std::string& exclude_task) {
    std::string path = "/v1/memory/search?q=" + httplib::detail::encode_query_param(query) +
                       "&k=" + std::to_string(k);
    if (!exclude_task.empty()) {
        path += "&exclude_task=" + httplib::detail::encode_query_param(exclude_task);
    }
    return request("GET", path, {}, {});
}

bool HttpLink::healthy() {
    try {
        return request("GET", "/v1/healthz", {}, {}).value("status", "") == "ok";
    } catch (const Error&) {
        return false;
    }
}

}  // namespace coachd
