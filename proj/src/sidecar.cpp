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

#include "coachd/sidecar.hpp"

#include <cstdio>
#include <future>
#include <thread>

#include "coachd/backends.hpp"

namespace coachd {

namespace {

std::string append_bytes(const std::string& buffer, std::string_view raw) {
    std::string out = buffer;
    if (!out.empty() && out.back() != '\n' && !raw.empty()) out.push_back('\n');
    out.append(raw);
    return out;
}

}  // namespace

Json to_json(const StepResponse& response) {
    Json advice = Json::array();
    for (const auto& message : response.advice) advice.push_back(to_json(message));
    Json out{{"session_id", response.session_id},
             {"step_count", response.step_count},
             {"advice", advice},
             {"coached", response.coached},
             {"finalized", response.finalized},
             {"warnings", response.warnings}};
    if (response.episode_id) out["episode_id"] = *response.episode_id;
    return out;
}

Json to_json(const FinalizeResponse& response) {
    return Json{{"session_id", response.session_id},
                {"episode_id", response.episode_id},
                {"persisted", response.persisted},
                {"final_success", tristate_to_json(response.final_success)},
                {"total_steps", response.total_steps}};
}

Json to_json(const SearchHit& hit) {
    return Json{{"episode_id", hit.episode_id},
                {"task_id", hit.task_id},
                {"score", hit.score},
                {"final_success", tristate_to_json(hit.final_success)},
                {"summary_text", hit.summary_text}};
}

Json to_json(const ServiceStats& stats) {
    return Json{{"store_size", stats.store_size},
                {"sessions_open", stats.sessions_open},
                {"sessions_finalized", stats.sessions_finalized},
                {"decisions", stats.decisions},
                {"interventions", stats.interventions},
                {"intervention_rate", stats.intervention_rate()},
                {"parse_failures", stats.parse_failures},
                {"backend_failures", stats.backend_failures},
                {"deadline_misses", stats.deadline_misses},
                {"episodes_persisted", stats.episodes_persisted}};
}

ServiceBackends make_backends(const ServiceConfig& config) {
    return ServiceBackends{make_summarizer(config.summarizer, config.hard_cap),
                           make_embedder(config.embedder, config.dimension),
                           make_coach(config.coach, config.coach_options())};
}

SidecarService::SidecarService(ServiceConfig config, ServiceBackends backends,
                               std::shared_ptr<MemoryStore> store)
    : config_(std::move(config)), core_(std::make_shared<Core>()) {
    check(config_);
    if (!backends.summarizer || !backends.embedder || !backends.coach) {
        auto defaults = make_backends(config_);
        if (!backends.summarizer) backends.summarizer = defaults.summarizer;
        if (!backends.embedder) backends.embedder = defaults.embedder;
        if (!backends.coach) backends.coach = defaults.coach;
    }
    backends.summarizer = share_safely(backends.summarizer);
    backends.embedder = share_safely(backends.embedder);
    if (backends.embedder->dimension() != config_.dimension) {
        throw Error(ErrorKind::config, "embedder dimension " +
                                           std::to_string(backends.embedder->dimension()) +
                                           " does not match configured " +
                                           std::to_string(config_.dimension));
    }
    if (!store) {
        if (!config_.snapshot_path.empty() && std::filesystem::exists(config_.snapshot_path)) {
            store = MemoryStore::load(config_.snapshot_path, config_.store_config());
        } else {
            store = std::make_shared<MemoryStore>(config_.store_config());
        }
    }
    if (store->dimension() != config_.dimension) {
        throw Error(ErrorKind::config, "memory store dimension does not match the config");
    }
    core_->config = config_;
    core_->backends = std::move(backends);
    core_->store = std::move(store);
}

SidecarService::~SidecarService() = default;

std::shared_ptr<SidecarService::Session> SidecarService::find_session(
    const std::string& session_id) const {
    std::shared_lock lock(sessions_mutex_);
    auto it = sessions_.find(session_id);
    if (it == sessions_.end()) throw Error(ErrorKind::lookup, "unknown session: " + session_id);
    return it->second;
}

std::string SidecarService::open_session(const OpenRequest& request) {
    auto adapter_id = request.adapter_id.empty() ? AdapterRegistry::canonical_id()
                                                 : request.adapter_id;
    if (!adapters_.contains(adapter_id)) {
        throw Error(ErrorKind::lookup, "unknown adapter: " + adapter_id);
    }
    const auto n = next_session_.fetch_add(1);
    char prefix[32];
    std::snprintf(prefix, sizeof prefix, "s-%06llu-", static_cast<unsigned long long>(n));
    auto id = std::string(prefix) +
              hex64(fnv1a64(request.task_id + '\x1f' + std::to_string(n))).substr(0, 8);

    auto session = std::make_shared<Session>();
    session->id = id;
    session->request = request;
    session->adapter_id = adapter_id;
    session->last_activity = Clock::now();
    channel_.open(id);
    std::unique_lock lock(sessions_mutex_);
    sessions_.emplace(id, std::move(session));
    return id;
}

TrajectoryLog SidecarService::parse_locked(const Session& session, std::string_view buffer,
                                           std::vector<std::string>* warnings) const {
    auto parsed = adapters_.parse(buffer, session.adapter_id, IngestOptions{config_.hard_cap});
    auto& log = parsed.log;
    const auto& request = session.request;
    if (!request.task_id.empty()) log.task_id = request.task_id;
    if (!request.goal.empty()) log.goal = request.goal;
    if (!request.domain_root.empty()) log.domain_root = request.domain_root;
    if (!request.model_name.empty()) log.model_name = request.model_name;
    log.status = detect_completeness(log, config_.hard_cap);
    if (warnings != nullptr) {
        warnings->insert(warnings->end(), parsed.warnings.begin(), parsed.warnings.end());
    }
    return std::move(parsed.log);
}

SidecarService::PipelineResult SidecarService::run_pipeline(const std::shared_ptr<Core>& core,
                                                            const TrajectoryLog& log,
                                                            const std::string& task_id) {
    PipelineResult result;
    const auto& config = core->config;
    CondensedRecord current;
    try {
        current = condense(log, *core->backends.summarizer, *core->backends.embedder,
                           CondenseOptions{config.hard_cap, {}});
    } catch (const std::exception& e) {
        result.report.backend_failure = true;
        result.warnings.push_back(std::string("condense failed: ") + e.what());
        return result;
    }
    try {
        RetrievalFilter filter;
        filter.exclude_task_ids.insert(task_id);
        auto retrieved = config.use_ann
                             ? core->store->search_ann(current.embedding, config.top_k, filter)
                             : core->store->search_exact(current.embedding, config.top_k, filter);
        CoachInput input{std::move(current), std::move(retrieved.hits)};
        {
            std::function<void()> hook;
            {
                std::lock_guard lock(core->hook_mutex);
                hook = core->hook;
            }
            if (hook) hook();
        }
        result.report = decide(input, *core->backends.coach, config.coach_options());
    } catch (const std::exception& e) {
        result.report = DecideReport{};
        result.report.backend_failure = true;
        result.warnings.push_back(std::string("coach pipeline failed: ") + e.what());
        return result;
    }
    result.warnings.insert(result.warnings.end(), result.report.log.begin(),
                           result.report.log.end());
    return result;
}

StepResponse SidecarService::submit_step(const std::string& session_id, std::string_view raw) {
    auto session = find_session(session_id);
    std::lock_guard lock(session->mutex);
    if (session->state == SessionState::finalized) {
        throw Error(ErrorKind::conflict, "session already finalized: " + session_id);
    }
    StepResponse response;
    response.session_id = session_id;

    auto candidate = append_bytes(session->buffer, raw);
    auto log = parse_locked(*session, candidate, &response.warnings);
    session->buffer = std::move(candidate);
    session->step_count = log.steps.size();
    session->last_activity = Clock::now();
    response.step_count = session->step_count;

    if (log.status == TrajectoryStatus::complete) {
        if (!log.terminal_marker) {
            auto finalized = finalize_locked(*session, log);
            response.finalized = true;
            response.episode_id = finalized.episode_id;
            response.warnings.push_back("step cap reached; session finalized");
        } else {
            response.warnings.push_back("terminal marker received; awaiting finalize");
        }
        response.advice = channel_.poll(session_id);
        return response;
    }

    if (session->step_count == 0 || session->step_count % config_.coach_stride != 0) {
        response.advice = channel_.poll(session_id);
        return response;
    }

    std::optional<PipelineResult> result;
    const auto task_id = session->request.task_id;
    if (config_.coach_deadline_s <= 0) {
        result = run_pipeline(core_, log, task_id);
    } else {
        auto promise = std::make_shared<std::promise<PipelineResult>>();
        auto future = promise->get_future();
        std::thread([core = core_, log, task_id, promise] {
            promise->set_value(run_pipeline(core, log, task_id));
        }).detach();
        auto budget = std::chrono::duration<double>(config_.coach_deadline_s);
        if (future.wait_for(budget) == std::future_status::ready) {
            result = future.get();
        } else {
            ++deadline_misses_;
            response.warnings.push_back("coach deadline exceeded; no advice this step");
        }
    }

    if (result) {
        const auto& report = result->report;
        response.warnings.insert(response.warnings.end(), result->warnings.begin(),
                                 result->warnings.end());
        if (report.backend_failure) ++backend_failures_;
        if (report.parse_failure) ++parse_failures_;
        if (!report.backend_failure) {
            response.coached = true;
            ++decisions_;
            if (report.decision.intervene) {
                ++interventions_;
                channel_.inject(report.decision, session_id, session->step_count);
            }
        }
    }
    response.advice = channel_.poll(session_id);
    return response;
}

FinalizeResponse SidecarService::finalize_locked(Session& session, const TrajectoryLog& log) {
    auto record = condense(log, *core_->backends.summarizer, *core_->backends.embedder,
                           CondenseOptions{config_.hard_cap, "ep-" + session.id});
    if (route(record) != Route::persist_and_stream) {
        throw Error(ErrorKind::routing_violation, "finalize produced a partial record");
    }
    FinalizeResponse response;
    response.session_id = session.id;
    response.episode_id = record.source.episode_id;
    response.final_success = record.final_success;
    response.total_steps = record.source.total_steps;
    if (config_.memory_mode == MemoryMode::dynamic) {
        core_->store->insert(to_memory_record(record));
        response.persisted = true;
        ++persisted_;
    }
    session.state = SessionState::finalized;
    channel_.close(session.id);
    return response;
}

FinalizeResponse SidecarService::finalize_session(const std::string& session_id,
                                                  std::string_view raw) {
    auto session = find_session(session_id);
    std::lock_guard lock(session->mutex);
    if (session->state == SessionState::finalized) {
        throw Error(ErrorKind::conflict, "session already finalized: " + session_id);
    }
    auto candidate = append_bytes(session->buffer, raw);
    auto log = parse_locked(*session, candidate, nullptr);
    if (log.status != TrajectoryStatus::complete) {
        throw Error(ErrorKind::routing_violation,
                    "cannot finalize a running trajectory: no terminal marker and " +
                        std::to_string(log.steps.size()) + " of " +
                        std::to_string(config_.hard_cap) + " steps");
    }
    session->buffer = std::move(candidate);
    session->step_count = log.steps.size();
    session->last_activity = Clock::now();
    return finalize_locked(*session, log);
}

std::vector<SystemMessage> SidecarService::poll_advice(const std::string& session_id) {
    find_session(session_id);
    return channel_.poll(session_id);
}

std::vector<SearchHit> SidecarService::search(std::string_view query_text, std::size_t k,
                                              const std::string& exclude_task) {
    auto query = embed_text(query_text, *core_->backends.embedder);
    RetrievalFilter filter;
    if (!exclude_task.empty()) filter.exclude_task_ids.insert(exclude_task);
    auto result = config_.use_ann ? core_->store->search_ann(query, k, filter)
                                  : core_->store->search_exact(query, k, filter);
    std::vector<SearchHit> out;
    for (const auto& hit : result.hits) {
        const auto& meta = hit.record->meta;
        out.push_back({meta.episode_id, meta.task_id, hit.score, meta.final_success,
                       hit.record->summary_text});
    }
    return out;
}

std::string SidecarService::register_adapter(const AdapterSpec& spec) {
    return adapters_.register_adapter(spec);
}

void SidecarService::set_memory_mode(MemoryMode mode) {
    throw Error(ErrorKind::config, "memory mode is fixed at startup (running " +
                                       std::string(to_string(config_.memory_mode)) +
                                       ", requested " + std::string(to_string(mode)) + ")");
}

std::vector<std::string> SidecarService::collect_idle(Clock::time_point now) {
    std::vector<std::shared_ptr<Session>> all;
    {
        std::shared_lock lock(sessions_mutex_);
        for (const auto& [id, session] : sessions_) all.push_back(session);
    }
    const auto limit = std::chrono::duration<double>(config_.idle_timeout_s);
    std::vector<std::string> collected;
    for (const auto& session : all) {
        std::lock_guard lock(session->mutex);
        if (session->state != SessionState::open) continue;
        if (now - session->last_activity <= limit) continue;
        session->state = SessionState::finalized;
        channel_.close(session->id);
        collected.push_back(session->id);
    }
    std::sort(collected.begin(), collected.end());
    return collected;
}

ServiceStats SidecarService::stats() const {
    ServiceStats out;
    out.store_size = core_->store->size();
    {
        std::shared_lock lock(sessions_mutex_);
        for (const auto& [id, session] : sessions_) {
            std::lock_guard session_lock(session->mutex);
            if (session->state == SessionState::open) {
                ++out.sessions_open;
            } else {
                ++out.sessions_finalized;
            }
        }
    }
    out.decisions = decisions_;
    out.interventions = interventions_;
    out.parse_failures = parse_failures_;
    out.backend_failures = backend_failures_;
    out.deadline_misses = deadline_misses_;
    out.episodes_persisted = persisted_;
    return out;
}

SessionState SidecarService::session_state(const std::string& session_id) const {
    auto session = find_session(session_id);
    std::lock_guard lock(session->mutex);
    return session->state;
}

std::size_t SidecarService::session_step_count(const std::string& session_id) const {
    auto session = find_session(session_id);
    std::lock_guard lock(session->mutex);
    return session->step_count;
}

std::string SidecarService::session_digest(const std::string& session_id) const {
    auto session = find_session(session_id);
    std::lock_guard lock(session->mutex);
    std::string material = session->id + '\x1f' + session->buffer + '\x1f' +
                           std::to_string(session->step_count) + '\x1f' +
                           (session->state == SessionState::open ? "open" : "finalized") + '\x1f' +
                           std::to_string(channel_.pending(session_id));
    for (const auto& receipt : channel_.receipts(session_id)) material += receipt.advice_hash;
    return hex64(fnv1a64(material));
}

void SidecarService::save_snapshot() const {
    if (config_.snapshot_path.empty()) return;
    core_->store->snapshot(config_.snapshot_path);
}

void SidecarService::set_pipeline_hook(std::function<void()> hook) {
    std::lock_guard lock(core_->hook_mutex);
    core_->hook = std::move(hook);
}

}  // namespace coachd
