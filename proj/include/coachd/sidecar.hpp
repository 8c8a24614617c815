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
#include <chrono>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <string>
#include <unordered_map>
#include <vector>

#include "coachd/coach.hpp"
#include "coachd/condenser.hpp"
#include "coachd/config.hpp"
#include "coachd/memory_store.hpp"
#include "coachd/trajectory.hpp"

namespace coachd {

struct OpenRequest {
    std::string task_id;
    std::string goal;
    std::string domain_root;
    std::string model_name;
    std::string adapter_id;  // empty: canonical layout
};

enum class SessionState { open, finalized };

struct StepResponse {
    std::string session_id;
    std::size_t step_count = 0;
    std::vector<SystemMessage> advice;  // drained from the session queue
    bool coached = false;               // the pipeline produced a decision in time
    bool finalized = false;             // the cap was reached and the session closed
    std::optional<std::string> episode_id;
    std::vector<std::string> warnings;  // degradation notes, never errors
};

struct FinalizeResponse {
    std::string session_id;
    std::string episode_id;
    bool persisted = false;
    TriState final_success = TriState::unknown;
    std::size_t total_steps = 0;
};

struct SearchHit {
    std::string episode_id;
    std::string task_id;
    double score = 0.0;
    TriState final_success = TriState::unknown;
    std::string summary_text;
};

struct ServiceStats {
    std::size_t store_size = 0;
    std::size_t sessions_open = 0;
    std::size_t sessions_finalized = 0;
    std::size_t decisions = 0;
    std::size_t interventions = 0;
    std::size_t parse_failures = 0;
    std::size_t backend_failures = 0;
    std::size_t deadline_misses = 0;
    std::size_t episodes_persisted = 0;
    double intervention_rate() const {
        return decisions == 0 ? 0.0 : static_cast<double>(interventions) / decisions;
    }
};

Json to_json(const StepResponse& response);
Json to_json(const FinalizeResponse& response);
Json to_json(const SearchHit& hit);
Json to_json(const ServiceStats& stats);

struct ServiceBackends {
    std::shared_ptr<SummarizerBackend> summarizer;
    std::shared_ptr<EmbedderBackend> embedder;
    std::shared_ptr<CoachBackend> coach;
};

/// Stub backends, or HTTP ones when the config says so.
ServiceBackends make_backends(const ServiceConfig& config);

/// The condense -> retrieve -> coach loop with per-episode sessions.
/// Transport-agnostic; HttpFrontend exposes it over HTTP.
class SidecarService {
public:
    using Clock = std::chrono::steady_clock;

    SidecarService(ServiceConfig config, ServiceBackends backends,
                   std::shared_ptr<MemoryStore> store = nullptr);
    ~SidecarService();

    SidecarService(const SidecarService&) = delete;
    SidecarService& operator=(const SidecarService&) = delete;

    /// Unknown adapter: lookup error.
    std::string open_session(const OpenRequest& request);

    /// Appends raw line-delimited step records to the session log and runs the
    /// coach pipeline. Only problems with the actor's own log are errors:
    /// parse (bytes not appended), lookup, conflict (session finalized).
    StepResponse submit_step(const std::string& session_id, std::string_view raw);

    /// Appends the final bytes (may be empty) and persists in dynamic mode.
    /// Errors: routing_violation when still incomplete, conflict when already finalized.
    FinalizeResponse finalize_session(const std::string& session_id, std::string_view raw = {});

    std::vector<SystemMessage> poll_advice(const std::string& session_id);

    std::vector<SearchHit> search(std::string_view query_text, std::size_t k,
                                  const std::string& exclude_task = {});

    std::string register_adapter(const AdapterSpec& spec);

    /// The mode is fixed at construction; always throws config error.
    void set_memory_mode(MemoryMode mode);
    MemoryMode memory_mode() const { return config_.memory_mode; }

    /// Finalizes without persisting every open session idle for longer than
    /// the configured timeout. Returns the collected session ids.
    std::vector<std::string> collect_idle(Clock::time_point now = Clock::now());

    ServiceStats stats() const;
    SessionState session_state(const std::string& session_id) const;
    std::size_t session_step_count(const std::string& session_id) const;

    /// Hash over everything the actor can observe about a session.
    std::string session_digest(const std::string& session_id) const;

    /// Writes the store to the configured snapshot path, if any.
    void save_snapshot() const;

    const ServiceConfig& config() const { return config_; }
    MemoryStore& store() { return *core_->store; }
    const AdapterRegistry& adapters() const { return adapters_; }

    /// Test hook: called on every pipeline run before the coach decides.
    void set_pipeline_hook(std::function<void()> hook);

private:
    struct Session {
        std::mutex mutex;
        std::string id;
        OpenRequest request;
        std::string adapter_id;
        std::string buffer;
        std::size_t step_count = 0;
        SessionState state = SessionState::open;
        Clock::time_point last_activity;
    };

    // Shared with pipeline threads that may outlive a missed deadline.
    struct Core {
        ServiceConfig config;
        ServiceBackends backends;
        std::shared_ptr<MemoryStore> store;
        std::function<void()> hook;
        std::mutex hook_mutex;
    };

    struct PipelineResult {
        DecideReport report;
        std::vector<std::string> warnings;
    };

    std::shared_ptr<Session> find_session(const std::string& session_id) const;
    TrajectoryLog parse_locked(const Session& session, std::string_view buffer,
                               std::vector<std::string>* warnings) const;
    FinalizeResponse finalize_locked(Session& session, const TrajectoryLog& log);
    static PipelineResult run_pipeline(const std::shared_ptr<Core>& core, const TrajectoryLog& log,
                                       const std::string& task_id);

    ServiceConfig config_;
    std::shared_ptr<Core> core_;
    AdapterRegistry adapters_;
    AdviceChannel channel_;

    mutable std::shared_mutex sessions_mutex_;
    std::unordered_map<std::string, std::shared_ptr<Session>> sessions_;
    std::atomic<std::uint64_t> next_session_{1};

    std::atomic<std::size_t> decisions_{0};
    std::atomic<std::size_t> interventions_{0};
    std::atomic<std::size_t> parse_failures_{0};
    std::atomic<std::size_t> backend_failures_{0};
    std::atomic<std::size_t> deadline_misses_{0};
    std::atomic<std::size_t> persisted_{0};
};

}  // namespace coachd
