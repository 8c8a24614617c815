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

#include <atomic>
#include <memory>
#include <string>
#include <thread>

#include "coachd/sidecar.hpp"

namespace httplib {
class Server;
}

namespace coachd {

/// HTTP status for an error kind: validation/parse/schema 400, lookup 404,
/// conflict/precondition 409, stale_session 410, routing_violation 422,
/// backend/condense 502, everything else 500.
int http_status_for(ErrorKind kind);
ErrorKind error_kind_from_string(std::string_view text);

/// JSON-over-HTTP frontend for a SidecarService.
class HttpFrontend {
public:
    explicit HttpFrontend(SidecarService& service);
    ~HttpFrontend();

    HttpFrontend(const HttpFrontend&) = delete;
    HttpFrontend& operator=(const HttpFrontend&) = delete;

    /// Port 0 picks a free port. Returns the bound port; throws io error on failure.
    int bind(const std::string& host, int port);
    /// Serves on a background thread until stop().
    void start();
    /// Serves on the calling thread until stop().
    void run();
    void stop();
    int port() const { return port_; }

private:
    void install_routes();
    void gc_loop();

    SidecarService& service_;
    std::unique_ptr<httplib::Server> server_;
    std::thread thread_;
    std::thread gc_thread_;
    std::atomic<bool> stopping_{false};
    int port_ = 0;
};

}  // namespace coachd
