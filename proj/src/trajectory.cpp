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

#include "coachd/trajectory.hpp"

#include <algorithm>
#include <array>
#include <mutex>

namespace coachd {

namespace {

constexpr std::array<std::string_view, 3> kRequiredFields{"observation", "action", "done"};
constexpr std::array<std::string_view, 11> kKnownFields{
    "observation", "action",    "done",   "success",     "self_eval",  "screenshot",
    "timestamp",   "task_id",   "goal",   "domain_root", "model_name",
};

std::string canonical_field(const std::string& key) {
    if (key == "obs") return "observation";
    if (key == "act") return "action";
    if (key == "is_done") return "done";
    return key;
}

std::string scalar_text(const Json& value) {
    if (value.is_string()) return value.get<std::string>();
    if (value.is_null()) return {};
    return value.dump();
}

bool truthy(const Json& value) {
    if (value.is_boolean()) return value.get<bool>();
    if (value.is_number()) return value.get<double>() != 0.0;
    if (value.is_string()) {
        auto lowered = to_lower(value.get<std::string>());
        return lowered == "true" || lowered == "yes" || lowered == "1";
    }
    return false;
}

TriState success_value(const Json& value) {
    if (value.is_null()) return TriState::unknown;
    return truthy(value) ? TriState::yes : TriState::no;
}

Action action_from(const Json& value) {
    Action action;
    auto fill_args = [&](const Json& args) {
        if (!args.is_object()) return;
        for (auto it = args.begin(); it != args.end(); ++it) {
            action.args[it.key()] = scalar_text(it.value());
        }
    };
    if (value.is_string()) {
        action.name = value.get<std::string>();
    } else if (value.is_object() && value.contains("name")) {
        action.name = scalar_text(value["name"]);
        for (const char* key : {"args", "arguments", "params"}) {
            if (value.contains(key)) fill_args(value[key]);
        }
    } else if (value.is_object() && value.size() == 1) {
        // browser-use style: {"click_element": {"index": 5}}
        action.name = value.begin().key();
        fill_args(value.begin().value());
    } else if (value.is_array() && !value.empty()) {
        return action_from(value.front());
    } else {
        action.name = scalar_text(value);
    }
    return action;
}

Json step_to_json(const StepRecord& step) {
    Json obs{{"text", step.observation.text}};
    obs["screenshot"] = step.observation.screenshot_ref ? Json(*step.observation.screenshot_ref)
                                                        : Json(nullptr);
    return Json{{"step_index", step.step_index},
                {"observation", obs},
                {"action", Json{{"name", step.action.name}, {"args", step.action.args}}},
                {"self_eval", step.self_eval},
                {"timestamp", step.timestamp_ms}};
}

}  // namespace

std::string Action::target() const {
    for (const char* key : {"target", "element", "label", "url", "index", "text"}) {
        if (auto it = args.find(key); it != args.end()) return it->second;
    }
    return {};
}

std::string_view to_string(TrajectoryStatus status) {
    return status == TrajectoryStatus::complete ? "complete" : "running";
}

TrajectoryStatus detect_completeness(const TrajectoryLog& log, std::size_t hard_cap) {
    if (log.terminal_marker || log.steps.size() >= hard_cap) return TrajectoryStatus::complete;
    return TrajectoryStatus::running;
}

Json to_json(const TrajectoryLog& log) {
    Json steps = Json::array();
    for (const auto& step : log.steps) steps.push_back(step_to_json(step));
    return Json{{"schema_version", kSchemaVersion},
                {"task_id", log.task_id},
                {"goal", log.goal},
                {"domain_root", log.domain_root},
                {"model_name", log.model_name},
                {"status", to_string(log.status)},
                {"declared_success", tristate_to_json(log.declared_success)},
                {"terminal_marker", log.terminal_marker},
                {"steps", steps}};
}

TrajectoryLog trajectory_from_json(const Json& json) {
    try {
        if (json.at("schema_version").get<int>() != kSchemaVersion) {
            throw Error(ErrorKind::migration, "unsupported trajectory schema_version");
        }
        TrajectoryLog log;
        log.task_id = json.at("task_id").get<std::string>();
        log.goal = json.at("goal").get<std::string>();
        log.domain_root = json.at("domain_root").get<std::string>();
        log.model_name = json.at("model_name").get<std::string>();
        log.status = json.at("status").get<std::string>() == "complete"
                         ? TrajectoryStatus::complete
                         : TrajectoryStatus::running;
        log.declared_success = tristate_from_json(json.at("declared_success"));
        log.terminal_marker = json.at("terminal_marker").get<bool>();
        for (const auto& s : json.at("steps")) {
            StepRecord step;
            step.step_index = s.at("step_index").get<std::size_t>();
            step.observation.text = s.at("observation").at("text").get<std::string>();
            const auto& shot = s.at("observation").at("screenshot");
            if (!shot.is_null()) step.observation.screenshot_ref = shot.get<std::string>();
            step.action.name = s.at("action").at("name").get<std::string>();
            step.action.args =
                s.at("action").at("args").get<std::map<std::string, std::string>>();
            step.self_eval = s.at("self_eval").get<std::string>();
            step.timestamp_ms = s.at("timestamp").get<std::int64_t>();
            log.steps.push_back(std::move(step));
        }
        return log;
    } catch (const Json::exception& e) {
        throw Error(ErrorKind::schema, std::string("invalid trajectory: ") + e.what());
    }
}

JsonPath JsonPath::parse(std::string_view expression) {
    JsonPath path;
    path.expression_ = std::string(expression);
    auto fail = [&](const char* why) {
        throw Error(ErrorKind::parse,
                    "bad path expression '" + std::string(expression) + "': " + why);
    };
    if (expression.empty() || expression.front() != '$') fail("must start with $");
    std::size_t i = 1;
    while (i < expression.size()) {
        char c = expression[i];
        if (c == '.') {
            std::size_t j = i + 1;
            while (j < expression.size() && expression[j] != '.' && expression[j] != '[') ++j;
            if (j == i + 1) fail("empty key");
            path.segments_.emplace_back(std::string(expression.substr(i + 1, j - i - 1)));
            i = j;
        } else if (c == '[') {
            auto close = expression.find(']', i);
            if (close == std::string_view::npos) fail("unclosed [");
            auto inner = expression.substr(i + 1, close - i - 1);
            if (inner.size() >= 2 && (inner.front() == '\'' || inner.front() == '"') &&
                inner.back() == inner.front()) {
                path.segments_.emplace_back(std::string(inner.substr(1, inner.size() - 2)));
            } else {
                if (inner.empty()) fail("empty index");
                std::size_t index = 0;
                for (char d : inner) {
                    if (d < '0' || d > '9') fail("non-numeric index");
                    index = index * 10 + static_cast<std::size_t>(d - '0');
                }
                path.segments_.emplace_back(index);
            }
            i = close + 1;
        } else {
            fail("unexpected character");
        }
    }
    return path;
}

const Json* JsonPath::resolve(const Json& root) const {
    const Json* node = &root;
    for (const auto& segment : segments_) {
        if (const auto* key = std::get_if<std::string>(&segment)) {
            if (!node->is_object()) return nullptr;
            auto it = node->find(*key);
            if (it == node->end()) return nullptr;
            node = &*it;
        } else {
            auto index = std::get<std::size_t>(segment);
            if (!node->is_array() || index >= node->size()) return nullptr;
            node = &(*node)[index];
        }
    }
    return node;
}

AdapterSpec AdapterSpec::from_json(const Json& json) {
    if (!json.is_object()) throw Error(ErrorKind::validation, "adapter descriptor must be an object");
    AdapterSpec spec;
    spec.name = json.value("name", std::string{});
    const Json& mappings = json.contains("mappings") ? json.at("mappings") : json;
    for (auto it = mappings.begin(); it != mappings.end(); ++it) {
        if (it.key() == "name" || !it.value().is_string()) continue;
        spec.mappings[canonical_field(it.key())] = it.value().get<std::string>();
    }
    return spec;
}

Json AdapterSpec::to_json() const { return Json{{"name", name}, {"mappings", mappings}}; }

std::string adapter_id_for(const AdapterSpec& spec) {
    return "a-" + hex64(fnv1a64(spec.to_json().dump()));
}

Adapter compile_adapter(const AdapterSpec& spec) {
    for (auto field : kRequiredFields) {
        auto it = spec.mappings.find(std::string(field));
        if (it == spec.mappings.end() || it->second.empty()) {
            throw Error(ErrorKind::validation, "missing mapping: " + std::string(field));
        }
    }
    Adapter adapter{adapter_id_for(spec), spec, {}};
    for (const auto& [field, expression] : spec.mappings) {
        if (std::find(kKnownFields.begin(), kKnownFields.end(), field) == kKnownFields.end()) {
            throw Error(ErrorKind::validation, "unknown canonical field: " + field);
        }
        adapter.paths.emplace(field, JsonPath::parse(expression));
    }
    return adapter;
}

ParsedLog parse_step_log(std::string_view raw, const Adapter& adapter,
                         const IngestOptions& options) {
    ParsedLog out;
    TrajectoryLog& log = out.log;
    auto lookup = [&](const Json& record, const char* field) -> const Json* {
        auto it = adapter.paths.find(field);
        return it == adapter.paths.end() ? nullptr : it->second.resolve(record);
    };

    std::size_t offset = 0;
    std::size_t dropped_after_terminal = 0;
    std::size_t dropped_over_cap = 0;
    std::int64_t last_timestamp = 0;
    while (offset < raw.size()) {
        auto newline = raw.find('\n', offset);
        auto end = newline == std::string_view::npos ? raw.size() : newline;
        auto line = raw.substr(offset, end - offset);
        auto line_start = offset;
        offset = end + 1;
        if (trim(line).empty()) continue;

        Json record;
        try {
            record = Json::parse(line);
        } catch (const Json::parse_error& e) {
            auto at = line_start + (e.byte > 0 ? e.byte - 1 : 0);
            throw Error(ErrorKind::parse,
                        "parse error at byte " + std::to_string(at) + ": " + e.what());
        }
        if (!record.is_object()) {
            throw Error(ErrorKind::parse,
                        "parse error at byte " + std::to_string(line_start) +
                            ": step record must be an object");
        }

        if (log.terminal_marker) {
            ++dropped_after_terminal;
            continue;
        }
        if (log.steps.size() >= options.hard_cap) {
            ++dropped_over_cap;
            continue;
        }

        for (auto [field, target] : {std::pair{"task_id", &log.task_id},
                                     std::pair{"goal", &log.goal},
                                     std::pair{"domain_root", &log.domain_root},
                                     std::pair{"model_name", &log.model_name}}) {
            if (!target->empty()) continue;
            if (const Json* v = lookup(record, field); v && !v->is_null()) *target = scalar_text(*v);
        }

        StepRecord step;
        step.step_index = log.steps.size();
        if (const Json* v = lookup(record, "observation")) step.observation.text = scalar_text(*v);
        if (const Json* v = lookup(record, "screenshot"); v && !v->is_null()) {
            step.observation.screenshot_ref = scalar_text(*v);
        }
        if (const Json* v = lookup(record, "action")) step.action = action_from(*v);
        if (const Json* v = lookup(record, "self_eval")) step.self_eval = scalar_text(*v);

        step.timestamp_ms = last_timestamp;
        if (const Json* v = lookup(record, "timestamp"); v && v->is_number()) {
            auto ts = v->get<std::int64_t>();
            if (ts < last_timestamp) {
                out.warnings.push_back("timestamp decreased at step " +
                                       std::to_string(step.step_index) + "; clamped");
            } else {
                step.timestamp_ms = ts;
            }
        }
        last_timestamp = step.timestamp_ms;
        log.steps.push_back(std::move(step));

        if (const Json* v = lookup(record, "done"); v && truthy(*v)) {
            log.terminal_marker = true;
            if (const Json* s = lookup(record, "success")) log.declared_success = success_value(*s);
        }
    }

    if (dropped_after_terminal > 0) {
        out.warnings.push_back("ignored " + std::to_string(dropped_after_terminal) +
                               " record(s) after terminal marker");
    }
    if (dropped_over_cap > 0) {
        out.warnings.push_back("truncated at hard cap of " + std::to_string(options.hard_cap) +
                               " steps; dropped " + std::to_string(dropped_over_cap) +
                               " record(s)");
    }
    log.status = detect_completeness(log, options.hard_cap);
    if (log.status == TrajectoryStatus::running) log.declared_success = TriState::unknown;
    return out;
}

AdapterRegistry::AdapterRegistry() {
    register_adapter(canonical_adapter_spec());
    register_adapter(browser_use_adapter_spec());
}

std::string AdapterRegistry::register_adapter(const AdapterSpec& spec) {
    Adapter adapter = compile_adapter(spec);
    std::unique_lock lock(mutex_);
    auto id = adapter.id;
    adapters_.try_emplace(id, std::move(adapter));
    return id;
}

Adapter AdapterRegistry::get(const std::string& adapter_id) const {
    std::shared_lock lock(mutex_);
    auto it = adapters_.find(adapter_id);
    if (it == adapters_.end()) throw Error(ErrorKind::lookup, "unknown adapter: " + adapter_id);
    return it->second;
}

bool AdapterRegistry::contains(const std::string& adapter_id) const {
    std::shared_lock lock(mutex_);
    return adapters_.count(adapter_id) > 0;
}

ParsedLog AdapterRegistry::parse(std::string_view raw, const std::string& adapter_id,
                                 const IngestOptions& options) const {
    return parse_step_log(raw, get(adapter_id), options);
}

const std::string& AdapterRegistry::canonical_id() {
    static const std::string id = adapter_id_for(canonical_adapter_spec());
    return id;
}

AdapterSpec canonical_adapter_spec() {
    return AdapterSpec{"canonical",
                       {{"observation", "$.observation"},
                        {"action", "$.action"},
                        {"done", "$.done"},
                        {"success", "$.success"},
                        {"self_eval", "$.self_eval"},
                        {"screenshot", "$.screenshot"},
                        {"timestamp", "$.timestamp"},
                        {"task_id", "$.task_id"},
                        {"goal", "$.goal"},
                        {"domain_root", "$.domain_root"},
                        {"model_name", "$.model_name"}}};
}

AdapterSpec browser_use_adapter_spec() {
    return AdapterSpec{"browser-use",
                       {{"observation", "$.state"},
                        {"action", "$.action"},
                        {"done", "$.is_done"},
                        {"success", "$.success"},
                        {"self_eval", "$.evaluation_previous_goal"},
                        {"screenshot", "$.screenshot"},
                        {"timestamp", "$.timestamp"},
                        {"task_id", "$.task_id"},
                        {"goal", "$.task"},
                        {"domain_root", "$.url_root"},
                        {"model_name", "$.model"}}};
}

Json canonical_step_line(const TrajectoryLog& meta, const StepRecord& step, bool done,
                         TriState success) {
    Json line{{"task_id", meta.task_id},
              {"goal", meta.goal},
              {"domain_root", meta.domain_root},
              {"model_name", meta.model_name},
              {"observation", step.observation.text},
              {"action", Json{{"name", step.action.name}, {"args", step.action.args}}},
              {"self_eval", step.self_eval},
              {"timestamp", step.timestamp_ms},
              {"done", done}};
    if (step.observation.screenshot_ref) line["screenshot"] = *step.observation.screenshot_ref;
    line["success"] = tristate_to_json(success);
    return line;
}

}  // namespace coachd
