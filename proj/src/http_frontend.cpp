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

#include "coachd/http_frontend.hpp"

#include <chrono>

#include "httplib.h"

namespace coachd {

namespace {

constexpr std::string_view kKindNames[] = {
    "validation", "parse",   "lookup",  "schema",       "conflict",      "routing_violation",
    "domain",     "integrity", "migration", "backend",  "condense",      "precondition",
    "stale_session", "size", "io",      "config"};

void send_json(httplib::Response& res, int status, const Json& body) {
    res.status = status;
    res.set_content(body.dump(), "application/json");
}

void send_error(httplib::Response& res, ErrorKind kind, const std::string& message) {
    send_json(res, http_status_for(kind),
              Json{{"error", {{"kind", std::string(to_string(kind))}, {"message", message}}}});
}

template <class F>
httplib::Server::Handler guarded(F&& body) {
    return [body = std::forward<F>(body)](const httplib::Request& req, httplib::Response& res) {
        try {
            body(req, res);
        } catch (const Error& e) {
            send_error(res, e.kind(), e.what());
        } catch (const Json::exception& e) {
            send_error(res, ErrorKind::validation, e.what());
        } catch (const std::exception& e) {
            send_json(res, 500, Json{{"error", {{"kind", "internal"}, {"message", e.what()}}}});
        }
    };
}

Json parse_body(const httplib::Request& req) {
    if (req.body.empty()) return Json::object();
    Json json = Json::parse(req.body, nullptr, false);
    if (json.is_discarded() || !json.is_object()) {
        throw Error(ErrorKind::validation, "request body must be a JSON object");
    }
    return json;
}

std::size_t parse_count(const std::string& text, const char* name) {
    std::size_t used = 0;
    unsigned long value = 0;
    try {
        value = std::stoul(text, &used);
    } catch (const std::exception&) {
        used = 0;
    }
    if (used != text.size() || text.empty() || value == 0 || value > 1000) {
        throw Error(ErrorKind::validation, std::string(name) + " must be an integer in 1..1000");
    }
    return value;
}

}  // namespace

int http_status_for(ErrorKind kind) {
    switch (kind) {
        case ErrorKind::validation:
        case ErrorKind::parse:
        case ErrorKind::schema:
        case ErrorKind::domain:
            return 400;
        case ErrorKind::lookup: return 404;
        case ErrorKind::conflict:
        case ErrorKind::precondition:
        case ErrorKind::config:
            return 409;
        case ErrorKind::stale_session: return 410;
        case ErrorKind::routing_violation: return 422;
        case ErrorKind::backend:
        case ErrorKind::condense:
            return 502;
        default: return 500;
    }
}

ErrorKind error_kind_from_string(std::string_view text) {
    for (std::size_t i = 0; i < std::size(kKindNames); ++i) {
        if (kKindNames[i] == text) return static_cast<ErrorKind>(i);
    }
    return ErrorKind::backend;
}

HttpFrontend::HttpFrontend(SidecarService& service)
    : service_(service), server_(std::make_unique<httplib::Server>()) {
    install_routes();
}

HttpFrontend::~HttpFrontend() { stop(); }

void HttpFrontend::install_routes() {
    auto& s = *server_;
    auto& service = service_;

    s.Post("/v1/sessions", guarded([&service](const httplib::Request& req, httplib::Response& res) {
        auto body = parse_body(req);
        OpenRequest request;
        request.task_id = body.value("task_id", "");
        request.goal = body.value("goal", "");
        request.domain_root = body.value("domain_root", "");
        request.model_name = body.value("model_name", "");
        request.adapter_id = body.value("adapter_id", "");
        if (request.task_id.empty()) throw Error(ErrorKind::validation, "task_id is required");
        auto id = service.open_session(request);
        send_json(res, 201, Json{{"session_id", id}, {"state", "open"}});
    }));

    s.Post(R"(/v1/sessions/([^/]+)/steps)",
           guarded([&service](const httplib::Request& req, httplib::Response& res) {
               auto response = service.submit_step(req.matches[1].str(), req.body);
               send_json(res, 200, to_json(response));
           }));

    s.Post(R"(/v1/sessions/([^/]+)/finalize)",
           guarded([&service](const httplib::Request& req, httplib::Response& res) {
               auto response = service.finalize_session(req.matches[1].str(), req.body);
               send_json(res, 200, to_json(response));
           }));

    s.Get(R"(/v1/sessions/([^/]+)/advice)",
          guarded([&service](const httplib::Request& req, httplib::Response& res) {
              auto id = req.matches[1].str();
              Json advice = Json::array();
              for (const auto& message : service.poll_advice(id)) advice.push_back(to_json(message));
              send_json(res, 200, Json{{"session_id", id}, {"advice", advice}});
          }));

    s.Get("/v1/memory/search", guarded([&service](const httplib::Request& req,
                                                  httplib::Response& res) {
        auto query = req.get_param_value("q");
        if (trim(query).empty()) throw Error(ErrorKind::validation, "q is required");
        std::size_t k = service.config().top_k;
        if (req.has_param("k")) k = parse_count(req.get_param_value("k"), "k");
        Json results = Json::array();
        for (const auto& hit : service.search(query, k, req.get_param_value("exclude_task"))) {
            results.push_back(to_json(hit));
        }
        send_json(res, 200, Json{{"results", results}});
    }));

    s.Get("/v1/healthz", guarded([&service](const httplib::Request&, httplib::Response& res) {
        send_json(res, 200, Json{{"status", "ok"},
                                 {"memory_mode", std::string(to_string(service.memory_mode()))}});
    }));

    s.Get("/v1/stats", guarded([&service](const httplib::Request&, httplib::Response& res) {
        send_json(res, 200, to_json(service.stats()));
    }));

    s.Post("/v1/adapters", guarded([&service](const httplib::Request& req, httplib::Response& res) {
        auto id = service.register_adapter(AdapterSpec::from_json(parse_body(req)));
        send_json(res, 201, Json{{"adapter_id", id}});
    }));
}

int HttpFrontend::bind(const std::string& host, int port) {
    if (port == 0) {
        port_ = server_->bind_to_any_port(host);
        if (port_ < 0) throw Error(ErrorKind::io, "cannot bind " + host);
    } else {
        if (!server_->bind_to_port(host, port)) {
            throw Error(ErrorKind::io, "cannot bind " + host + ":" + std::to_string(port));
        }
        port_ = port;
    }
    return port_;
}

void HttpFrontend::gc_loop() {
    using namespace std::chrono_literals;
    auto next = std::chrono::steady_clock::now() + 60s;
    while (!stopping_) {
        std::this_thread::sleep_for(200ms);
        if (std::chrono::steady_clock::now() < next) continue;
        service_.collect_idle();
        next = std::chrono::steady_clock::now() + 60s;
    }
}

void HttpFrontend::start() {
    stopping_ = false;
    thread_ = std::thread([this] { server_->listen_after_bind(); });
    gc_thread_ = std::thread([this] { gc_loop(); });
    server_->wait_until_ready();
}

void HttpFrontend::run() {
    stopping_ = false;
    gc_thread_ = std::thread([this] { gc_loop(); });
    server_->listen_after_bind();
    stopping_ = true;
    if (gc_thread_.joinable()) gc_thread_.join();
}

void HttpFrontend::stop() {
    stopping_ = true;
    server_->stop();
    if (thread_.joinable()) thread_.join();
    if (gc_thread_.joinable()) gc_thread_.join();
}

}  // namespace coachd
