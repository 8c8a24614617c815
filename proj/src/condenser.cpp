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

#include "coachd/condenser.hpp"

#include <cmath>
#include <map>
#include <regex>
#include <set>

#include "coachd/hazards.hpp"
#include "coachd/prompts.hpp"

namespace coachd {

namespace {

std::string page_title(const std::string& observation) {
    std::string_view text = observation;
    constexpr std::string_view kPrefix = "Page: ";
    if (text.substr(0, kPrefix.size()) == kPrefix) {
        text.remove_prefix(kPrefix.size());
        auto bar = text.find(" | ");
        if (bar != std::string_view::npos) text = text.substr(0, bar);
    }
    auto newline = text.find('\n');
    if (newline != std::string_view::npos) text = text.substr(0, newline);
    return sanitize_fragment(text, 60);
}

std::string describe(const Action& action) {
    auto name = sanitize_fragment(action.name, 40);
    if (name.empty()) name = "an unnamed action";
    auto target = sanitize_fragment(action.target(), 60);
    return target.empty() ? name : name + " '" + target + "'";
}

std::string label_of(const Action& action) {
    auto target = sanitize_fragment(action.target(), 60);
    return target.empty() ? sanitize_fragment(action.name, 40) : target;
}

bool is_navigation(const Action& action) {
    auto name = to_lower(action.name);
    return name != "go_back" && name != "done" && name != "wait" && !name.empty();
}

struct Finding {
    Hazard hazard;
    std::string description;
};

std::vector<Finding> detect_hazards(const TrajectoryLog& log) {
    std::vector<Finding> findings;
    const auto& steps = log.steps;

    // Repeated (action, target) pairs.
    std::map<std::pair<std::string, std::string>, std::size_t> counts;
    std::map<std::pair<std::string, std::string>, std::size_t> first_seen;
    for (std::size_t i = 0; i < steps.size(); ++i) {
        auto key = std::pair{steps[i].action.name, steps[i].action.target()};
        if (counts[key]++ == 0) first_seen[key] = i;
    }
    std::optional<std::pair<std::string, std::string>> looped;
    for (const auto& [key, count] : counts) {
        if (count < kLoopRepeatThreshold || !is_navigation(Action{key.first, {}})) continue;
        if (!looped || first_seen[key] < first_seen[*looped]) looped = key;
    }
    if (looped) {
        auto first = first_seen[*looped];
        Action repeated{looped->first, {{"target", looped->second}}};
        std::string description = "Repeated " + describe(repeated) + " " +
                                  std::to_string(counts[*looped]) + " times";
        // Backing out between repeats means the repeated click is itself the way in.
        bool backed_out = false;
        std::size_t last = first;
        for (std::size_t i = first; i < steps.size(); ++i) {
            if (steps[i].action.name == looped->first && steps[i].action.target() == looped->second) {
                last = i;
            }
        }
        for (std::size_t i = first; i < last; ++i) {
            if (to_lower(steps[i].action.name) == "go_back") backed_out = true;
        }
        if (!backed_out && first > 0 && is_navigation(steps[first - 1].action) &&
            steps[first - 1].action.target() != looped->second) {
            description += " after entering via '" + label_of(steps[first - 1].action) + "'";
        }
        findings.push_back({Hazard::loop, description + "."});
    }

    static const std::regex http_4xx(R"((http|status|error)[^0-9a-z]{0,3}4[0-9][0-9])");
    bool seen_captcha = false, seen_dead_end = false, seen_http = false;
    for (std::size_t i = 0; i < steps.size(); ++i) {
        auto lowered = to_lower(steps[i].observation.text);
        auto entry = [&](const char* what) {
            if (i == 0) return std::string("The first page showed ") + what + ".";
            return "Using '" + label_of(steps[i - 1].action) + "' at step " + std::to_string(i) +
                   " led to " + what + ".";
        };
        if (!seen_captcha && lowered.find(kCaptchaMarker) != std::string::npos) {
            seen_captcha = true;
            findings.push_back({Hazard::captcha, entry("a CAPTCHA page")});
        }
        if (!seen_dead_end && lowered.find(kDeadEndMarker) != std::string::npos) {
            seen_dead_end = true;
            findings.push_back({Hazard::dead_end, entry("a dead end")});
        }
        if (!seen_http && std::regex_search(lowered, http_4xx)) {
            seen_http = true;
            findings.push_back({Hazard::http_4xx, entry("an HTTP 4xx error page")});
        }
    }
    return findings;
}

TriState judge_success(const TrajectoryLog& log) {
    if (log.declared_success != TriState::unknown) return log.declared_success;
    if (log.steps.empty()) return TriState::no;
    auto eval = to_lower(log.steps.back().self_eval);
    bool negative = eval.find("fail") != std::string::npos ||
                    eval.find("unsuccess") != std::string::npos ||
                    eval.find("not ") != std::string::npos;
    bool positive = eval.find("success") != std::string::npos ||
                    eval.find("completed") != std::string::npos;
    return positive && !negative ? TriState::yes : TriState::no;
}

std::string render_steps(const TrajectoryLog& log) {
    std::string out;
    for (const auto& step : log.steps) {
        out += "Step " + std::to_string(step.step_index) + " | action: " + describe(step.action);
        if (!step.self_eval.empty()) out += " | self-eval: " + step.self_eval;
        auto obs = step.observation.text.substr(0, 240);
        out += " | observation: " + obs + "\n";
    }
    if (out.empty()) out = "(no steps yet)\n";
    return out;
}

bool all_finite(const Vector& v) {
    for (double x : v) {
        if (!std::isfinite(x)) return false;
    }
    return true;
}

}  // namespace

std::string StubSummarizer::generate(const std::string& /*prompt*/, const TrajectoryLog& log) {
    // The log may have been parsed under a smaller cap than this summarizer's.
    const bool complete = log.status == TrajectoryStatus::complete ||
                          detect_completeness(log, hard_cap_) == TrajectoryStatus::complete;
    const auto& steps = log.steps;
    auto findings = detect_hazards(log);

    std::string summary;
    auto goal = sanitize_fragment(log.goal, 120);
    auto domain = sanitize_fragment(log.domain_root, 60);
    summary += "The agent is pursuing the goal " + (goal.empty() ? "(unspecified)" : goal) +
               " on " + (domain.empty() ? "an unknown site" : domain) + ".";

    if (steps.empty()) {
        summary += " No actions have been taken yet.";
        summary += " No pages have been observed yet.";
    } else {
        summary += " It began with " + describe(steps.front().action) + " and after " +
                   std::to_string(steps.size()) + (steps.size() == 1 ? " step" : " steps") +
                   " the latest action was " + describe(steps.back().action) + ".";
        std::vector<std::string> titles;
        for (const auto& step : steps) {
            auto title = page_title(step.observation.text);
            if (title.empty()) continue;
            if (std::find(titles.begin(), titles.end(), title) == titles.end()) {
                titles.push_back(title);
            }
            if (titles.size() == 6) break;
        }
        if (titles.empty()) {
            summary += " No page titles were observed.";
        } else {
            summary += " Pages visited include ";
            for (std::size_t i = 0; i < titles.size(); ++i) {
                if (i > 0) summary += ", ";
                summary += titles[i];
            }
            summary += ".";
        }
    }

    if (!findings.empty()) {
        summary += " Detected problems:";
        for (std::size_t i = 0; i < findings.size(); ++i) {
            summary += i == 0 ? " " : ", ";
            summary += to_lower(hazard_info(findings[i].hazard).pattern_name);
        }
        summary += ".";
    }

    TriState success = TriState::unknown;
    const bool capped = complete && !log.terminal_marker;
    if (!complete) {
        summary += " The task is still running.";
    } else {
        success = judge_success(log);
        if (success == TriState::yes) {
            summary += " The task was completed successfully.";
        } else if (capped) {
            summary += " The task ended without success after reaching the step cap.";
        } else {
            summary += " The task ended without success.";
        }
    }

    std::vector<Evidence> evidence;
    EvidenceKind kind = EvidenceKind::current_pattern;
    if (!complete || success == TriState::no) {
        kind = complete ? EvidenceKind::fail_mode : EvidenceKind::current_pattern;
        for (const auto& finding : findings) {
            evidence.push_back(
                {std::string(hazard_info(finding.hazard).pattern_name), finding.description});
        }
        if (complete && capped) {
            evidence.push_back({"Step Cap Exhausted", "The agent used all " +
                                                          std::to_string(steps.size()) +
                                                          " steps without finishing."});
        }
        if (complete && evidence.empty()) {
            auto last = steps.empty() ? std::string("the start page")
                                      : page_title(steps.back().observation.text);
            evidence.push_back({"Unresolved Goal", "The episode stopped on " +
                                                       (last.empty() ? "an unknown page" : last) +
                                                       " without meeting the goal."});
        }
    } else {
        kind = EvidenceKind::success_workflow;
        std::vector<std::string> path;
        for (const auto& step : steps) {
            if (!is_navigation(step.action)) continue;
            auto label = label_of(step.action);
            if (!label.empty() && std::find(path.begin(), path.end(), label) == path.end()) {
                path.push_back(label);
            }
        }
        std::string final_page =
            steps.empty() ? std::string() : page_title(steps.back().observation.text);
        std::string route_text;
        for (std::size_t i = 0; i < path.size() && i < 8; ++i) {
            route_text += (i == 0 ? "'" : " -> '") + path[i] + "'";
        }
        evidence.push_back({"Navigation to " + (final_page.empty() ? "Goal Page" : final_page),
                            route_text.empty() ? "Reached the goal without navigating."
                                               : "Reached the goal via " + route_text + "."});
        evidence.push_back({"Goal Completion", "Finished with " +
                                                   (steps.empty() ? std::string("no action")
                                                                  : describe(steps.back().action)) +
                                                   " after " + std::to_string(steps.size()) +
                                                   " steps."});
    }

    Json out{{"summary_text", summary}, {"final_success", tristate_to_json(success)}};
    out[std::string(evidence_key(kind))] = evidence_to_json(evidence);
    return out.dump();
}

StubEmbedder::StubEmbedder(std::size_t dimension, std::uint64_t seed)
    : dimension_(dimension), seed_(seed) {
    if (dimension == 0) throw Error(ErrorKind::validation, "embedding dimension must be positive");
}

Vector StubEmbedder::embed(std::string_view text) {
    Vector v(dimension_, 0.0);
    auto add = [&](std::string_view feature, double weight) {
        auto h = fnv1a64(feature, seed_);
        auto index = static_cast<std::size_t>(h % dimension_);
        v[index] += (h >> 63) ? -weight : weight;
    };
    auto tokens = tokenize(text);
    for (std::size_t i = 0; i < tokens.size(); ++i) {
        add(tokens[i], 1.0);
        if (i + 1 < tokens.size()) add(tokens[i] + " " + tokens[i + 1], 0.5);
    }
    double norm = 0.0;
    for (double x : v) norm += x * x;
    if (norm == 0.0) {
        add(text, 1.0);
        norm = 1.0;
    }
    norm = std::sqrt(norm);
    for (double& x : v) x /= norm;
    return v;
}

std::shared_ptr<SummarizerBackend> share_safely(std::shared_ptr<SummarizerBackend> backend) {
    if (backend->shareable()) return backend;
    return std::make_shared<SerializedSummarizer>(std::move(backend));
}

std::shared_ptr<EmbedderBackend> share_safely(std::shared_ptr<EmbedderBackend> backend) {
    if (backend->shareable()) return backend;
    return std::make_shared<SerializedEmbedder>(std::move(backend));
}

std::string build_condenser_prompt(const TrajectoryLog& log, std::size_t hard_cap) {
    auto status = detect_completeness(log, hard_cap);
    return render_template(
        condenser_template(),
        {{"goal", log.goal},
         {"domain_root", log.domain_root},
         {"status", status == TrajectoryStatus::complete ? "complete" : "running (partial)"},
         {"step_count", std::to_string(log.steps.size())},
         {"hard_cap", std::to_string(hard_cap)},
         {"declared_success", std::string(to_string(log.declared_success))},
         {"steps", render_steps(log)}});
}

std::variant<SummaryFields, std::string> parse_summary_output(std::string_view raw,
                                                              Completeness completeness) {
    auto object = extract_json_object(raw);
    if (!object) return std::string("output contains no JSON object");
    Json json = Json::parse(*object, nullptr, false);
    if (json.is_discarded() || !json.is_object()) return std::string("output is not valid JSON");

    SummaryFields fields;
    if (!json.contains("summary_text") || !json["summary_text"].is_string()) {
        return std::string("summary_text missing or not a string");
    }
    fields.summary_text = trim(json["summary_text"].get<std::string>());
    if (fields.summary_text.empty()) return std::string("summary_text is empty");
    auto sentences = count_sentences(fields.summary_text);
    if (sentences < 3 || sentences > 5) {
        return "summary_text has " + std::to_string(sentences) + " sentences, expected 3-5";
    }

    const Json final_success = json.value("final_success", Json(nullptr));
    if (!final_success.is_null() && !final_success.is_boolean()) {
        return std::string("final_success must be true, false or null");
    }

    std::vector<EvidenceKind> present;
    for (auto kind : {EvidenceKind::fail_mode, EvidenceKind::success_workflow,
                      EvidenceKind::current_pattern}) {
        if (json.contains(std::string(evidence_key(kind)))) present.push_back(kind);
    }
    if (present.size() > 1) return std::string("more than one evidence list present");

    if (completeness == Completeness::partial) {
        if (!final_success.is_null()) return std::string("final_success must be null while running");
        if (!present.empty() && present.front() != EvidenceKind::current_pattern) {
            return std::string("a running trace may only carry current_patterns");
        }
        fields.final_success = TriState::unknown;
        fields.evidence_kind = EvidenceKind::current_pattern;
    } else {
        if (!final_success.is_boolean()) {
            return std::string("final_success must be true or false for a complete trace");
        }
        fields.final_success = final_success.get<bool>() ? TriState::yes : TriState::no;
        fields.evidence_kind = fields.final_success == TriState::yes
                                   ? EvidenceKind::success_workflow
                                   : EvidenceKind::fail_mode;
        if (present.empty() || present.front() != fields.evidence_kind) {
            return "a complete trace with final_success " +
                   std::string(to_string(fields.final_success)) + " needs " +
                   std::string(evidence_key(fields.evidence_kind));
        }
    }
    if (!present.empty()) {
        try {
            fields.evidence = evidence_from_json(json[std::string(evidence_key(present.front()))]);
        } catch (const Error& e) {
            return std::string(e.what());
        }
    }
    if (completeness == Completeness::complete && fields.evidence.empty()) {
        return "evidence list " + std::string(evidence_key(fields.evidence_kind)) + " is empty";
    }
    return fields;
}

Vector embed_text(std::string_view text, EmbedderBackend& embedder) {
    if (trim(text).empty()) throw Error(ErrorKind::validation, "cannot embed empty text");
    Vector v;
    try {
        v = embedder.embed(text);
    } catch (const std::exception& e) {
        throw Error(ErrorKind::backend,
                    "embedder '" + embedder.name() + "' failed: " + e.what());
    }
    if (v.size() != embedder.dimension()) {
        throw Error(ErrorKind::backend, "embedder '" + embedder.name() + "' returned " +
                                            std::to_string(v.size()) + " values, expected " +
                                            std::to_string(embedder.dimension()));
    }
    if (!all_finite(v)) {
        throw Error(ErrorKind::backend, "embedder '" + embedder.name() + "' returned non-finite values");
    }
    return v;
}

CondensedRecord condense(const TrajectoryLog& log, SummarizerBackend& summarizer,
                         EmbedderBackend& embedder, const CondenseOptions& options) {
    const auto status = detect_completeness(log, options.hard_cap);
    const auto completeness =
        status == TrajectoryStatus::complete ? Completeness::complete : Completeness::partial;

    auto prompt = build_condenser_prompt(log, options.hard_cap);
    auto call = [&](const std::string& p) {
        try {
            return summarizer.generate(p, log);
        } catch (const std::exception& e) {
            throw Error(ErrorKind::condense,
                        "summarizer '" + summarizer.name() + "' failed: " + e.what());
        }
    };

    std::string raw = call(prompt);
    auto parsed = parse_summary_output(raw, completeness);
    if (auto* problem = std::get_if<std::string>(&parsed)) {
        auto repair = prompt + "\n\nYour previous output was invalid: " + *problem +
                      ". Return only the JSON object described above.";
        raw = call(repair);
        parsed = parse_summary_output(raw, completeness);
        if (auto* again = std::get_if<std::string>(&parsed)) {
            throw Error(ErrorKind::condense, "summarizer '" + summarizer.name() +
                                                 "' produced invalid output after retry (" +
                                                 *again + "); raw output: " + raw);
        }
    }
    auto fields = std::get<SummaryFields>(std::move(parsed));

    CondensedRecord record;
    record.summary_text = std::move(fields.summary_text);
    record.final_success = fields.final_success;
    record.evidence_kind = fields.evidence_kind;
    record.evidence = std::move(fields.evidence);
    record.completeness = completeness;
    try {
        record.embedding = embed_text(record.summary_text, embedder);
    } catch (const Error& e) {
        throw Error(ErrorKind::condense, e.what());
    }

    auto& meta = record.source;
    meta.domain_root = log.domain_root;
    meta.user_goal = log.goal;
    meta.model_name = log.model_name;
    meta.task_id = log.task_id;
    meta.total_steps = log.steps.size();
    meta.timestamp_ms = log.steps.empty() ? 0 : log.steps.back().timestamp_ms;
    meta.final_success = record.final_success;
    meta.completeness = completeness;
    meta.success_ambiguous =
        completeness == Completeness::complete && log.declared_success == TriState::unknown;
    meta.episode_id = options.episode_id;
    if (meta.episode_id.empty()) {
        std::string key = log.task_id + '\x1f' + log.model_name + '\x1f' + log.goal + '\x1f' +
                          std::to_string(log.steps.size());
        if (!log.steps.empty()) {
            key += '\x1f' + std::to_string(log.steps.front().timestamp_ms) + '\x1f' +
                   std::to_string(log.steps.back().timestamp_ms);
        }
        meta.episode_id = "ep-" + hex64(fnv1a64(key));
    }
    return record;
}

Route route(const CondensedRecord& record) {
    return record.completeness == Completeness::complete ? Route::persist_and_stream
                                                         : Route::stream_only;
}

std::string_view to_string(Route route) {
    return route == Route::persist_and_stream ? "persist_and_stream" : "stream_only";
}

Json to_json(const CondensedRecord& record) {
    Json out{{"schema_version", kSchemaVersion},
             {"summary_text", record.summary_text},
             {"embedding", record.embedding},
             {"final_success", tristate_to_json(record.final_success)},
             {"completeness", to_string(record.completeness)},
             {"source", to_json(record.source)}};
    out[std::string(evidence_key(record.evidence_kind))] = evidence_to_json(record.evidence);
    return out;
}

CondensedRecord condensed_from_json(const Json& json) {
    if (auto problem = validate_condensed_json(json, json.value("embedding", Json::array()).size())) {
        throw Error(ErrorKind::schema, "invalid condensed record: " + *problem);
    }
    CondensedRecord record;
    record.summary_text = json["summary_text"].get<std::string>();
    record.embedding = json["embedding"].get<Vector>();
    record.final_success = tristate_from_json(json["final_success"]);
    record.completeness = json["completeness"].get<std::string>() == "complete"
                              ? Completeness::complete
                              : Completeness::partial;
    for (auto kind : {EvidenceKind::fail_mode, EvidenceKind::success_workflow,
                      EvidenceKind::current_pattern}) {
        auto key = std::string(evidence_key(kind));
        if (json.contains(key)) {
            record.evidence_kind = kind;
            record.evidence = evidence_from_json(json[key]);
        }
    }
    record.source = episode_meta_from_json(json["source"]);
    return record;
}

std::optional<std::string> validate_condensed_json(const Json& json, std::size_t dimension) {
    if (!json.is_object()) return "record is not an object";
    if (json.value("schema_version", 0) != kSchemaVersion) return "schema_version must be 1";
    if (!json.contains("summary_text") || !json["summary_text"].is_string() ||
        trim(json["summary_text"].get<std::string>()).empty()) {
        return "summary_text must be a non-empty string";
    }
    if (!json.contains("embedding") || !json["embedding"].is_array()) {
        return "embedding must be an array";
    }
    if (json["embedding"].size() != dimension) return "embedding has the wrong dimension";
    for (const auto& x : json["embedding"]) {
        if (!x.is_number() || !std::isfinite(x.get<double>())) {
            return "embedding must be finite numbers";
        }
    }
    if (!json.contains("completeness") || !json["completeness"].is_string()) {
        return "completeness missing";
    }
    auto completeness = json["completeness"].get<std::string>();
    if (completeness != "partial" && completeness != "complete") {
        return "completeness must be partial or complete";
    }
    if (!json.contains("final_success")) return "final_success missing";
    const auto& fs = json["final_success"];
    if (completeness == "partial" && !fs.is_null()) return "partial records need null final_success";
    if (completeness == "complete" && !fs.is_boolean()) {
        return "complete records need boolean final_success";
    }
    std::vector<EvidenceKind> present;
    for (auto kind : {EvidenceKind::fail_mode, EvidenceKind::success_workflow,
                      EvidenceKind::current_pattern}) {
        if (json.contains(std::string(evidence_key(kind)))) present.push_back(kind);
    }
    if (present.size() != 1) return "exactly one evidence list is required";
    EvidenceKind expected = EvidenceKind::current_pattern;
    if (completeness == "complete") {
        expected = fs.get<bool>() ? EvidenceKind::success_workflow : EvidenceKind::fail_mode;
    }
    if (present.front() != expected) {
        return "evidence list must be " + std::string(evidence_key(expected));
    }
    try {
        evidence_from_json(json[std::string(evidence_key(expected))]);
        if (!json.contains("source")) return "source missing";
        auto meta = episode_meta_from_json(json["source"]);
        if (to_string(meta.completeness) != completeness) return "source completeness differs";
    } catch (const Error& e) {
        return std::string(e.what());
    }
    return std::nullopt;
}

std::optional<std::string> validate(const CondensedRecord& record, std::size_t dimension) {
    return validate_condensed_json(to_json(record), dimension);
}

MemoryRecord to_memory_record(const CondensedRecord& record) {
    MemoryRecord out;
    out.embedding.assign(record.embedding.begin(), record.embedding.end());
    out.summary_text = record.summary_text;
    out.meta = record.source;
    out.evidence_kind = record.evidence_kind;
    out.evidence = record.evidence;
    return out;
}

}  // namespace coachd
