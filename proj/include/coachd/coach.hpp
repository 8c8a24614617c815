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

#include <cstdint>
#include <deque>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "coachd/condenser.hpp"
#include "coachd/memory_store.hpp"

namespace coachd {

inline constexpr std::size_t kDefaultTopK = 5;

struct CoachInput {
    CondensedRecord current_summary;  // partial
    std::vector<ScoredRecord> retrieved;  // score descending, at most K
};

/// Throws validation error when the input breaks its invariants.
void validate(const CoachInput& input);

struct CoachDecision {
    bool intervene = false;
    std::optional<std::string> advice;
    std::vector<std::string> cited_episode_ids;
    std::optional<std::string> rationale;  // logged, never injected

    bool operator==(const CoachDecision&) const = default;
};

/// {"intervene":false,"cited_episode_ids":[]} or with "advice" (and
/// "rationale" when set). Keys are emitted in that fixed order.
OrderedJson to_json(const CoachDecision& decision);

/// nullopt when the wire form is a valid decision, otherwise the first problem.
std::optional<std::string> validate_decision_json(const Json& json,
                                                  std::size_t max_sentences = 2);

struct CoachOptions {
    std::size_t top_k = kDefaultTopK;
    double failure_threshold = 0.80;
    double success_threshold = 0.85;
    std::size_t max_advice_sentences = 2;
};

class CoachBackend {
public:
    virtual ~CoachBackend() = default;
    virtual std::string name() const = 0;
    virtual bool deterministic() const = 0;
    /// Model backends read the prompt; the stub reads the structured input.
    virtual std::string decide_raw(const std::string& prompt, const CoachInput& input) = 0;
};

/// Rule table:
///  (a) a hazard pattern in the current trace;
///  (b) a retrieved failure at or above failure_threshold sharing a fail mode
///      name with the current patterns;
///  (c) a retrieved success at or above success_threshold that needed fewer
///      steps than the current trace has taken.
/// Otherwise silent.
class StubCoach final : public CoachBackend {
public:
    explicit StubCoach(CoachOptions options = {}) : options_(options) {}
    std::string name() const override { return "stub-coach"; }
    bool deterministic() const override { return true; }
    std::string decide_raw(const std::string& prompt, const CoachInput& input) override;

private:
    CoachOptions options_;
};

std::string build_coach_prompt(const CoachInput& input);

inline constexpr std::string_view kNoExperiencesMarker = "No relevant experiences were retrieved.";

/// Parses raw backend output. Advice is truncated to max_sentences and
/// citations not present in `known_ids` are dropped. Returns the problem on failure.
std::variant<CoachDecision, std::string> parse_decision(std::string_view raw,
                                                        const std::vector<std::string>& known_ids,
                                                        std::size_t max_sentences = 2);

struct DecideReport {
    CoachDecision decision;
    std::size_t backend_calls = 0;
    bool parse_failure = false;    // still malformed after the repair retry
    bool backend_failure = false;  // backend threw
    std::vector<std::string> log;
};

/// Never throws for backend problems; they degrade to a silent decision.
DecideReport decide(const CoachInput& input, CoachBackend& backend,
                    const CoachOptions& options = {});

struct SystemMessage {
    std::string role = "system";
    std::string content;
    std::size_t step_index = 0;

    bool operator==(const SystemMessage&) const = default;
};

struct InjectionReceipt {
    std::string session_id;
    std::size_t step_index = 0;
    std::string advice_hash;
    std::uint64_t sequence = 0;
};

Json to_json(const SystemMessage& message);
Json to_json(const InjectionReceipt& receipt);

/// Per-session ordered advice queues; single consumer per session.
class AdviceChannel {
public:
    void open(const std::string& session_id);
    /// Further injections fail with stale_session; queued advice stays pollable.
    void close(const std::string& session_id);
    void erase(const std::string& session_id);

    /// Throws precondition when the decision is silent, stale_session when
    /// the session is closed or unknown.
    InjectionReceipt inject(const CoachDecision& decision, const std::string& session_id,
                            std::size_t step_index);

    /// Drains pending messages in injection order. Unknown session: lookup error.
    std::vector<SystemMessage> poll(const std::string& session_id);
    std::size_t pending(const std::string& session_id) const;
    std::vector<InjectionReceipt> receipts(const std::string& session_id) const;

private:
    struct Queue {
        bool open = true;
        std::deque<SystemMessage> pending;
        std::vector<InjectionReceipt> receipts;
    };
    mutable std::mutex mutex_;
    std::map<std::string, Queue> queues_;
    std::uint64_t sequence_ = 0;
};

}  // namespace coachd
