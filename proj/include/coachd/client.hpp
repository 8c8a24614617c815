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

#include <memory>
#include <string>

#include "coachd/sidecar.hpp"

namespace coachd {

StepResponse step_response_from_json(const Json& json);
FinalizeResponse finalize_response_from_json(const Json& json);

/// How an actor talks to the sidecar: in process or over HTTP.
class CoachLink {
public:
    virtual ~CoachLink() = default;
    virtual std::string open(const OpenRequest& request) = 0;
    virtual StepResponse submit(const std::string& session_id, const std::string& raw) = 0;
    virtual FinalizeResponse finalize(const std::string& session_id, const std::string& raw) = 0;
};

class InProcessLink final : public CoachLink {
public:
    explicit InProcessLink(SidecarService& service) : service_(service) {}
    std::string open(const OpenRequest& request) override { return service_.open_session(request); }
    StepResponse submit(const std::string& session_id, const std::string& raw) override {
        return service_.submit_step(session_id, raw);
    }
    FinalizeResponse finalize(const std::string& session_id, const std::string& raw) override {
        return service_.finalize_session(session_id, raw);
    }

private:
    SidecarService& service_;
};

/// Transport failures throw ErrorKind::backend; HTTP errors rethrow the
/// server's error kind and message.
class HttpLink final : public CoachLink {
public:
    HttpLink(std::string host, int port, double timeout_s = 30.0);
    ~HttpLink() override;

    std::string open(const OpenRequest& request) override;
    StepResponse submit(const std::string& session_id, const std::string& raw) override;
    FinalizeResponse finalize(const std::string& session_id, const std::string& raw) override;

    std::vector<SystemMessage> advice(const std::string& session_id);
    Json stats();
    Json search(const std::string& query, std::size_t k, const std::string& exclude_task = {});
    bool healthy();

private:
    Json request(const std::string& method, const std::string& path, const std::string& body,
                 const std::string& content_type);

    std::string host_;
    int port_;
    double timeout_s_;
};

}  // namespace coachd
