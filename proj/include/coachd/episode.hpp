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
#include <string>
#include <string_view>
#include <vector>

#include "coachd/common.hpp"

namespace coachd {

enum class Completeness { partial, complete };

std::string_view to_string(Completeness completeness);

/// fail_modes and success_workflows belong to complete episodes; a partial
/// trace carries current_patterns instead.
enum class EvidenceKind { fail_mode, success_workflow, current_pattern };

/// Wire key: "fail_modes", "success_workflows" or "current_patterns".
std::string_view evidence_key(EvidenceKind kind);

struct Evidence {
    std::string name;
    std::string description;

    bool operator==(const Evidence&) const = default;
};

struct EpisodeMeta {
    std::string episode_id;
    std::string domain_root;
    std::string user_goal;
    std::string model_name;
    std::size_t total_steps = 0;
    std::int64_t timestamp_ms = 0;
    std::string task_id;  // leakage-control key
    TriState final_success = TriState::unknown;
    Completeness completeness = Completeness::partial;
    bool success_ambiguous = false;  // complete but the actor never declared an outcome

    bool operator==(const EpisodeMeta&) const = default;
};

Json to_json(const EpisodeMeta& meta);
EpisodeMeta episode_meta_from_json(const Json& json);

/// Persisted memory entry: embedding, summary_text, meta, plus the evidence
/// list the coach quotes from.
struct MemoryRecord {
    std::vector<float> embedding;
    std::string summary_text;
    EpisodeMeta meta;
    EvidenceKind evidence_kind = EvidenceKind::fail_mode;
    std::vector<Evidence> evidence;

    bool operator==(const MemoryRecord&) const = default;
};

/// Everything except the embedding; used inside snapshots.
Json record_body_to_json(const MemoryRecord& record);
MemoryRecord record_body_from_json(const Json& json);

/// Full line form used by seed files.
Json to_json(const MemoryRecord& record);
MemoryRecord memory_record_from_json(const Json& json);

Json evidence_to_json(const std::vector<Evidence>& evidence);
std::vector<Evidence> evidence_from_json(const Json& json);

}  // namespace coachd
