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

#include "coachd/episode.hpp"

namespace coachd {

std::string_view to_string(Completeness completeness) {
    return completeness == Completeness::complete ? "complete" : "partial";
}

std::string_view evidence_key(EvidenceKind kind) {
    switch (kind) {
        case EvidenceKind::fail_mode: return "fail_modes";
        case EvidenceKind::success_workflow: return "success_workflows";
        case EvidenceKind::current_pattern: break;
    }
    return "current_patterns";
}

Json to_json(const EpisodeMeta& meta) {
    return Json{{"episode_id", meta.episode_id},
                {"domain_root", meta.domain_root},
                {"user_goal", meta.user_goal},
                {"model_name", meta.model_name},
                {"total_steps", meta.total_steps},
                {"timestamp", meta.timestamp_ms},
                {"task_id", meta.task_id},
                {"final_success", tristate_to_json(meta.final_success)},
                {"completeness", to_string(meta.completeness)},
                {"success_ambiguous", meta.success_ambiguous}};
}

EpisodeMeta episode_meta_from_json(const Json& json) {
    try {
        EpisodeMeta meta;
        meta.episode_id = json.at("episode_id").get<std::string>();
        meta.domain_root = json.at("domain_root").get<std::string>();
        meta.user_goal = json.at("user_goal").get<std::string>();
        meta.model_name = json.at("model_name").get<std::string>();
        meta.total_steps = json.at("total_steps").get<std::size_t>();
        meta.timestamp_ms = json.at("timestamp").get<std::int64_t>();
        meta.task_id = json.at("task_id").get<std::string>();
        meta.final_success = tristate_from_json(json.at("final_success"));
        auto completeness = json.value("completeness", std::string("complete"));
        if (completeness != "complete" && completeness != "partial") {
            throw Error(ErrorKind::schema, "completeness must be partial or complete");
        }
        meta.completeness =
            completeness == "complete" ? Completeness::complete : Completeness::partial;
        meta.success_ambiguous = json.value("success_ambiguous", false);
        return meta;
    } catch (const Json::exception& e) {
        throw Error(ErrorKind::schema, std::string("invalid episode meta: ") + e.what());
    }
}

Json evidence_to_json(const std::vector<Evidence>& evidence) {
    Json out = Json::array();
    for (const auto& item : evidence) {
        out.push_back(Json{{"name", item.name}, {"description", item.description}});
    }
    return out;
}

std::vector<Evidence> evidence_from_json(const Json& json) {
    if (!json.is_array()) throw Error(ErrorKind::schema, "evidence must be an array");
    std::vector<Evidence> out;
    for (const auto& item : json) {
        if (!item.is_object() || !item.contains("name") || !item["name"].is_string() ||
            !item.contains("description") || !item["description"].is_string()) {
            throw Error(ErrorKind::schema, "evidence items need string name and description");
        }
        auto name = trim(item["name"].get<std::string>());
        if (name.empty()) throw Error(ErrorKind::schema, "evidence name is empty");
        out.push_back({std::move(name), item["description"].get<std::string>()});
    }
    return out;
}

namespace {

EvidenceKind evidence_kind_from(const Json& json, const Json** items) {
    for (auto kind : {EvidenceKind::fail_mode, EvidenceKind::success_workflow,
                      EvidenceKind::current_pattern}) {
        auto key = std::string(evidence_key(kind));
        if (json.contains(key)) {
            *items = &json.at(key);
            return kind;
        }
    }
    throw Error(ErrorKind::schema, "record carries no evidence list");
}

}  // namespace

Json record_body_to_json(const MemoryRecord& record) {
    Json body{{"summary_text", record.summary_text}, {"meta", to_json(record.meta)}};
    body[std::string(evidence_key(record.evidence_kind))] = evidence_to_json(record.evidence);
    return body;
}

MemoryRecord record_body_from_json(const Json& json) {
    try {
        MemoryRecord record;
        record.summary_text = json.at("summary_text").get<std::string>();
        record.meta = episode_meta_from_json(json.at("meta"));
        const Json* items = nullptr;
        record.evidence_kind = evidence_kind_from(json, &items);
        record.evidence = evidence_from_json(*items);
        return record;
    } catch (const Json::exception& e) {
        throw Error(ErrorKind::schema, std::string("invalid memory record: ") + e.what());
    }
}

Json to_json(const MemoryRecord& record) {
    Json line = record_body_to_json(record);
    line["embedding"] = record.embedding;
    return line;
}

MemoryRecord memory_record_from_json(const Json& json) {
    MemoryRecord record = record_body_from_json(json);
    try {
        record.embedding = json.at("embedding").get<std::vector<float>>();
    } catch (const Json::exception& e) {
        throw Error(ErrorKind::schema, std::string("invalid embedding: ") + e.what());
    }
    return record;
}

}  // namespace coachd
