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
#include <map>
#include <optional>
#include <shared_mutex>
#include <string>
#include <string_view>
#include <unordered_map>
#include <variant>
#include <vector>

#include "coachd/common.hpp"

namespace coachd {

struct Observation {
    std::string text;
    std::optional<std::string> screenshot_ref;  // opaque path or URI, never decoded

    bool operator==(const Observation&) const = default;
};

struct Action {
    std::string name;
    std::map<std::string, std::string> args;

    /// The element the action addressed: target, element, label, url, index or text.
    std::string target() const;

    bool operator==(const Action&) const = default;
};

struct StepRecord {
    std::size_t step_index = 0;
    Observation observation;
    Action action;
    std::string self_eval;  // the actor's own status assessment, free text
    std::int64_t timestamp_ms = 0;

    bool operator==(const StepRecord&) const = default;
};

enum class TrajectoryStatus { running, complete };

std::string_view to_string(TrajectoryStatus status);

struct TrajectoryLog {
    std::string task_id;
    std::string goal;
    std::string domain_root;
    std::string model_name;
    std::vector<StepRecord> steps;
    TrajectoryStatus status = TrajectoryStatus::running;
    TriState declared_success = TriState::unknown;
    bool terminal_marker = false;  // the source log carried a done flag

    bool operator==(const TrajectoryLog&) const = default;
};

/// Complete iff the log carries a terminal marker or has reached the cap.
TrajectoryStatus detect_completeness(const TrajectoryLog& log,
                                     std::size_t hard_cap = kDefaultHardCap);

/// Canonical serialization, `schema_version: 1`.
Json to_json(const TrajectoryLog& log);
TrajectoryLog trajectory_from_json(const Json& json);

/// Minimal JSONPath subset: `$`, `.key`, `['key']`, `[n]`.
class JsonPath {
public:
    static JsonPath parse(std::string_view expression);

    /// nullptr when any segment is missing.
    const Json* resolve(const Json& root) const;

    const std::string& expression() const { return expression_; }

private:
    std::string expression_;
    std::vector<std::variant<std::string, std::size_t>> segments_;
};

/// Maps fields of a framework's per-step record onto canonical fields.
///
/// Required mappings: observation, action, done. Optional: success,
/// self_eval, screenshot, timestamp, task_id, goal, domain_root, model_name.
struct AdapterSpec {
    std::string name;
    std::map<std::string, std::string> mappings;

    static AdapterSpec from_json(const Json& json);
    Json to_json() const;
};

struct Adapter {
    std::string id;
    AdapterSpec spec;
    std::map<std::string, JsonPath> paths;
};

/// Throws validation error "missing mapping: <field>" or a parse error for bad paths.
Adapter compile_adapter(const AdapterSpec& spec);

/// Content-addressed identifier of a spec.
std::string adapter_id_for(const AdapterSpec& spec);

struct IngestOptions {
    std::size_t hard_cap = kDefaultHardCap;
};

struct ParsedLog {
    TrajectoryLog log;
    std::vector<std::string> warnings;
};

/// Parses line-delimited JSON step records. Records after a terminal marker
/// or beyond the cap are dropped with a warning.
ParsedLog parse_step_log(std::string_view raw, const Adapter& adapter,
                         const IngestOptions& options = {});

/// Adapters keyed by content hash. Concurrent lookups, exclusive registration.
class AdapterRegistry {
public:
    AdapterRegistry();

    std::string register_adapter(const AdapterSpec& spec);
    Adapter get(const std::string& adapter_id) const;
    bool contains(const std::string& adapter_id) const;

    ParsedLog parse(std::string_view raw, const std::string& adapter_id,
                    const IngestOptions& options = {}) const;

    /// Id of the built-in canonical layout.
    static const std::string& canonical_id();

private:
    mutable std::shared_mutex mutex_;
    std::unordered_map<std::string, Adapter> adapters_;
};

/// Built-in layouts: "canonical" (what the simulator writes) and "browser-use".
AdapterSpec canonical_adapter_spec();
AdapterSpec browser_use_adapter_spec();

/// One canonical-layout step line, the inverse of the canonical adapter.
Json canonical_step_line(const TrajectoryLog& meta, const StepRecord& step, bool done,
                         TriState success);

}  // namespace coachd
