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

#include "coachd/coach.hpp"

#include <algorithm>
#include <cstdio>
#include <set>

#include "coachd/hazards.hpp"
#include "coachd/prompts.hpp"

namespace coachd {

namespace {

constexpr std::size_t kMaxAdviceLabels = 6;

std::string format_score(double score) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.6f", score);
    return buf;
}

std::string outcome_label(const EpisodeMeta& meta) {
    switch (meta.final_success) {
        case TriState::yes: return "success";
        case TriState::no: return "failure";
        case TriState::unknown: break;
    }
    return "unknown";
}

std::string evidence_heading(EvidenceKind kind) {
    switch (kind) {
        case EvidenceKind::fail_mode: return "Fail modes";
        case EvidenceKind::success_workflow: return "Success workflows";
        case EvidenceKind::current_pattern: return "Patterns";
    }
    return "Evidence";
}

std::string render_evidence(const std::vector<Evidence>& evidence) {
    if (evidence.empty()) return "- none detected\n";
    std::string out;
    for (const auto& item : evidence) out += "- " + item.name + ": " + item.description + "\n";
    return out;
}

std::string join_labels(const std::vector<std::string>& labels, std::string_view last_sep) {
    std::string out;
    for (std::size_t i = 0; i < labels.size(); ++i) {
        if (i > 0) out += i + 1 == labels.size() ? std::string(last_sep) : std::string(", ");
        out += "'" + labels[i] + "'";
    }
    return out;
}

void add_labels(std::vector<std::string>& out, std::string_view text) {
    for (auto& raw : quoted_labels(text)) {
        auto label = sanitize_fragment(raw, 60);
        if (label.empty() || std::find(out.begin(), out.end(), label) != out.end()) continue;
        out.push_back(std::move(label));
    }
}

}  // namespace

void validate(const CoachInput& input) {
    if (input.current_summary.completeness != Completeness::partial) {
        throw Error(ErrorKind::validation, "coach input must summarize a partial trace");
    }
    for (std::size_t i = 0; i < input.retrieved.size(); ++i) {
        if (!input.retrieved[i].record) {
            throw Error(ErrorKind::validation, "retrieved entry " + std::to_string(i) + " is null");
        }
        if (i > 0 && input.retrieved[i].score > input.retrieved[i - 1].score) {
            throw Error(ErrorKind::validation, "retrieved records are not sorted by score");
        }
    }
}

OrderedJson to_json(const CoachDecision& decision) {
    OrderedJson out;
    out["intervene"] = decision.intervene;
    if (decision.intervene && decision.advice) out["advice"] = *decision.advice;
    out["cited_episode_ids"] = decision.cited_episode_ids;
    if (decision.rationale) out["rationale"] = *decision.rationale;
    return out;
}

std::optional<std::string> validate_decision_json(const Json& json, std::size_t max_sentences) {
    if (!json.is_object()) return "decision is not an object";
    for (const auto& [key, value] : json.items()) {
        if (key != "intervene" && key != "advice" && key != "cited_episode_ids" &&
            key != "rationale") {
            return "unexpected key: " + key;
        }
    }
    if (!json.contains("intervene") || !json["intervene"].is_boolean()) {
        return std::string("intervene must be a boolean");
    }
    if (json.contains("cited_episode_ids")) {
        const auto& ids = json["cited_episode_ids"];
        if (!ids.is_array()) return std::string("cited_episode_ids must be an array");
        for (const auto& id : ids) {
            if (!id.is_string() || id.get<std::string>().empty()) {
                return std::string("cited_episode_ids must hold non-empty strings");
            }
        }
    }
    if (json.contains("rationale") && !json["rationale"].is_string()) {
        return std::string("rationale must be a string");
    }
    const bool intervene = json["intervene"].get<bool>();
    if (!intervene) {
        if (json.contains("advice")) return std::string("advice present without intervention");
        return std::nullopt;
    }
    if (!json.contains("advice") || !json["advice"].is_string()) {
        return std::string("advice is required when intervening");
    }
    auto advice = json["advice"].get<std::string>();
    if (trim(advice).empty()) return std::string("advice is empty");
    if (count_sentences(advice) > max_sentences) {
        return "advice has more than " + std::to_string(max_sentences) + " sentences";
    }
    return std::nullopt;
}

std::string build_coach_prompt(const CoachInput& input) {
    const auto& current = input.current_summary;
    std::string experiences;
    if (input.retrieved.empty()) {
        experiences = std::string(kNoExperiencesMarker) + "\n";
    }
    for (std::size_t i = 0; i < input.retrieved.size(); ++i) {
        const auto& hit = input.retrieved[i];
        const auto& record = *hit.record;
        if (i > 0) experiences += "\n";
        experiences += "### Experience " + std::to_string(i + 1) + " (score " +
                       format_score(hit.score) + ", outcome: " + outcome_label(record.meta) +
                       ", episode_id: " + record.meta.episode_id +
                       ", steps: " + std::to_string(record.meta.total_steps) + ")\n";
        experiences += "Summary: " + record.summary_text + "\n";
        experiences += evidence_heading(record.evidence_kind) + ":\n";
        experiences += render_evidence(record.evidence);
    }
    return render_template(coach_template(),
                           {{"current_steps", std::to_string(current.source.total_steps)},
                            {"current_summary", current.summary_text},
                            {"current_patterns", render_evidence(current.evidence)},
                            {"experiences", experiences}});
}

std::string StubCoach::decide_raw(const std::string& /*prompt*/, const CoachInput& input) {
    const auto& current = input.current_summary;

    std::vector<Hazard> hazards;
    std::set<std::string> current_names;
    std::vector<std::string> labels;
    for (const auto& item : current.evidence) {
        auto hazard = hazard_from_pattern_name(item.name);
        if (!hazard) continue;
        if (std::find(hazards.begin(), hazards.end(), *hazard) == hazards.end()) {
            hazards.push_back(*hazard);
        }
        current_names.insert(item.name);
        add_labels(labels, item.description);
    }

    CoachDecision decision;
    if (!hazards.empty()) {
        // Rules (a) and (b).
        std::vector<std::string> shared;
        for (const auto& hit : input.retrieved) {
            const auto& record = *hit.record;
            if (hit.score < options_.failure_threshold) continue;
            if (record.meta.final_success != TriState::no) continue;
            if (record.evidence_kind != EvidenceKind::fail_mode) continue;
            bool shares = false;
            for (const auto& item : record.evidence) {
                if (current_names.count(item.name) > 0) shares = true;
            }
            if (!shares) continue;
            decision.cited_episode_ids.push_back(record.meta.episode_id);
            for (const auto& item : record.evidence) {
                if (hazard_from_pattern_name(item.name)) add_labels(labels, item.description);
            }
        }
        if (labels.size() > kMaxAdviceLabels) labels.resize(kMaxAdviceLabels);

        std::vector<std::string> names;
        for (auto hazard : hazards) {
            names.push_back(to_lower(hazard_info(hazard).pattern_name));
        }
        std::string problem;
        for (std::size_t i = 0; i < names.size(); ++i) {
            if (i > 0) problem += i + 1 == names.size() ? " and " : ", ";
            problem += names[i];
        }
        std::string advice = "Warning: the current trace shows a " + problem;
        advice += decision.cited_episode_ids.empty() ? "." : ", which ended similar past attempts in failure.";
        if (labels.empty()) {
            advice += " Go back and take a different route.";
        } else {
            advice += " Avoid " + join_labels(labels, " and ") + " and take a different route.";
        }
        decision.intervene = true;
        decision.advice = advice;
        decision.rationale = decision.cited_episode_ids.empty() ? "hazard in current trace"
                                                                : "hazard shared with retrieved failure";
        return to_json(decision).dump();
    }

    // Rule (c).
    for (const auto& hit : input.retrieved) {
        const auto& record = *hit.record;
        if (hit.score < options_.success_threshold) continue;
        if (record.meta.final_success != TriState::yes) continue;
        if (record.meta.total_steps >= current.source.total_steps) continue;
        std::vector<std::string> route;
        for (const auto& item : record.evidence) add_labels(route, item.description);
        if (route.size() > kMaxAdviceLabels) route.resize(kMaxAdviceLabels);
        std::string advice = "A similar task was completed in " +
                             std::to_string(record.meta.total_steps) + " steps";
        advice += route.empty() ? "." : " via " + join_labels(route, " then ") + ".";
        advice += " Consider following that workflow.";
        decision.intervene = true;
        decision.advice = advice;
        decision.cited_episode_ids.push_back(record.meta.episode_id);
        decision.rationale = "shorter retrieved success";
        return to_json(decision).dump();
    }

    return to_json(decision).dump();
}

std::variant<CoachDecision, std::string> parse_decision(std::string_view raw,
                                                        const std::vector<std::string>& known_ids,
                                                        std::size_t max_sentences) {
    auto object = extract_json_object(raw);
    if (!object) return std::string("no JSON object in coach output");
    Json json = Json::parse(*object, nullptr, false);
    if (json.is_discarded() || !json.is_object()) {
        return std::string("coach output is not a JSON object");
    }
    if (!json.contains("intervene") || !json["intervene"].is_boolean()) {
        return std::string("intervene must be a boolean");
    }
    CoachDecision decision;
    decision.intervene = json["intervene"].get<bool>();
    if (json.contains("rationale") && json["rationale"].is_string()) {
        decision.rationale = json["rationale"].get<std::string>();
    }
    if (!decision.intervene) return decision;

    if (!json.contains("advice") || !json["advice"].is_string()) {
        return std::string("advice is required when intervening");
    }
    auto advice = truncate_sentences(json["advice"].get<std::string>(), max_sentences);
    if (advice.empty()) return std::string("advice is empty");
    decision.advice = advice;

    if (json.contains("cited_episode_ids")) {
        const auto& ids = json["cited_episode_ids"];
        if (!ids.is_array()) return std::string("cited_episode_ids must be an array");
        for (const auto& id : ids) {
            if (!id.is_string()) return std::string("cited_episode_ids must hold strings");
            auto value = id.get<std::string>();
            bool known = std::find(known_ids.begin(), known_ids.end(), value) != known_ids.end();
            bool seen = std::find(decision.cited_episode_ids.begin(),
                                  decision.cited_episode_ids.end(),
                                  value) != decision.cited_episode_ids.end();
            if (known && !seen) decision.cited_episode_ids.push_back(std::move(value));
        }
    }
    return decision;
}

DecideReport decide(const CoachInput& input, CoachBackend& backend, const CoachOptions& options) {
    validate(input);
    DecideReport report;
    std::vector<std::string> known_ids;
    for (const auto& hit : input.retrieved) known_ids.push_back(hit.record->meta.episode_id);

    auto prompt = build_coach_prompt(input);
    for (int attempt = 0; attempt < 2; ++attempt) {
        std::string raw;
        try {
            ++report.backend_calls;
            raw = backend.decide_raw(prompt, input);
        } catch (const std::exception& e) {
            report.backend_failure = true;
            report.log.push_back("coach backend " + backend.name() + " failed: " + e.what());
            return report;
        }
        auto parsed = parse_decision(raw, known_ids, options.max_advice_sentences);
        if (auto* decision = std::get_if<CoachDecision>(&parsed)) {
            report.decision = std::move(*decision);
            return report;
        }
        const auto& problem = std::get<std::string>(parsed);
        report.log.push_back("coach output rejected (attempt " + std::to_string(attempt + 1) +
                             "): " + problem);
        prompt += "\n\nYour previous reply was invalid (" + problem +
                  "). Reply with exactly one JSON object in the decision format.";
    }
    report.parse_failure = true;
    report.log.push_back("coach parse failure; staying silent");
    return report;
}

Json to_json(const SystemMessage& message) {
    return Json{{"role", message.role}, {"content", message.content},
                {"step_index", message.step_index}};
}

Json to_json(const InjectionReceipt& receipt) {
    return Json{{"session_id", receipt.session_id},
                {"step_index", receipt.step_index},
                {"advice_hash", receipt.advice_hash},
                {"sequence", receipt.sequence}};
}

void AdviceChannel::open(const std::string& session_id) {
    std::lock_guard lock(mutex_);
    queues_[session_id].open = true;
}

void AdviceChannel::close(const std::string& session_id) {
    std::lock_guard lock(mutex_);
    auto it = queues_.find(session_id);
    if (it != queues_.end()) it->second.open = false;
}

void AdviceChannel::erase(const std::string& session_id) {
    std::lock_guard lock(mutex_);
    queues_.erase(session_id);
}

InjectionReceipt AdviceChannel::inject(const CoachDecision& decision,
                                       const std::string& session_id, std::size_t step_index) {
    if (!decision.intervene || !decision.advice || decision.advice->empty()) {
        throw Error(ErrorKind::precondition, "only intervening decisions can be injected");
    }
    std::lock_guard lock(mutex_);
    auto it = queues_.find(session_id);
    if (it == queues_.end() || !it->second.open) {
        throw Error(ErrorKind::stale_session, "session is not live: " + session_id);
    }
    InjectionReceipt receipt{session_id, step_index, hex64(fnv1a64(*decision.advice)), ++sequence_};
    it->second.pending.push_back(SystemMessage{"system", *decision.advice, step_index});
    it->second.receipts.push_back(receipt);
    return receipt;
}

std::vector<SystemMessage> AdviceChannel::poll(const std::string& session_id) {
    std::lock_guard lock(mutex_);
    auto it = queues_.find(session_id);
    if (it == queues_.end()) throw Error(ErrorKind::lookup, "unknown session: " + session_id);
    std::vector<SystemMessage> out(it->second.pending.begin(), it->second.pending.end());
    it->second.pending.clear();
    return out;
}

std::size_t AdviceChannel::pending(const std::string& session_id) const {
    std::lock_guard lock(mutex_);
    auto it = queues_.find(session_id);
    return it == queues_.end() ? 0 : it->second.pending.size();
}

std::vector<InjectionReceipt> AdviceChannel::receipts(const std::string& session_id) const {
    std::lock_guard lock(mutex_);
    auto it = queues_.find(session_id);
    if (it == queues_.end()) return {};
    return it->second.receipts;
}

}  // namespace coachd
