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

#include "coachd/common.hpp"

#include <algorithm>
#include <cctype>
#include <cstdio>

namespace coachd {

std::string_view to_string(ErrorKind kind) {
    switch (kind) {
        case ErrorKind::validation: return "validation";
        case ErrorKind::parse: return "parse";
        case ErrorKind::lookup: return "lookup";
        case ErrorKind::schema: return "schema";
        case ErrorKind::conflict: return "conflict";
        case ErrorKind::routing_violation: return "routing_violation";
        case ErrorKind::domain: return "domain";
        case ErrorKind::integrity: return "integrity";
        case ErrorKind::migration: return "migration";
        case ErrorKind::backend: return "backend";
        case ErrorKind::condense: return "condense";
        case ErrorKind::precondition: return "precondition";
        case ErrorKind::stale_session: return "stale_session";
        case ErrorKind::size: return "size";
        case ErrorKind::io: return "io";
        case ErrorKind::config: return "config";
    }
    return "unknown";
}

Json tristate_to_json(TriState value) {
    switch (value) {
        case TriState::yes: return true;
        case TriState::no: return false;
        case TriState::unknown: break;
    }
    return nullptr;
}

TriState tristate_from_json(const Json& value) {
    if (value.is_null()) return TriState::unknown;
    if (value.is_boolean()) return value.get<bool>() ? TriState::yes : TriState::no;
    throw Error(ErrorKind::schema, "expected true, false or null");
}

std::string_view to_string(TriState value) {
    switch (value) {
        case TriState::yes: return "true";
        case TriState::no: return "false";
        case TriState::unknown: break;
    }
    return "null";
}

std::uint64_t fnv1a64(std::string_view bytes, std::uint64_t seed) {
    std::uint64_t hash = seed;
    for (unsigned char c : bytes) {
        hash ^= c;
        hash *= 0x100000001b3ULL;
    }
    return hash;
}

std::string hex64(std::uint64_t value) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(value));
    return buf;
}

std::string to_lower(std::string_view text) {
    std::string out(text);
    std::transform(out.begin(), out.end(), out.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return out;
}

std::string trim(std::string_view text) {
    auto first = text.find_first_not_of(" \t\r\n");
    if (first == std::string_view::npos) return {};
    auto last = text.find_last_not_of(" \t\r\n");
    return std::string(text.substr(first, last - first + 1));
}

std::vector<std::string> tokenize(std::string_view text) {
    std::vector<std::string> tokens;
    std::string current;
    for (unsigned char c : text) {
        if (std::isalnum(c)) {
            current.push_back(static_cast<char>(std::tolower(c)));
        } else if (!current.empty()) {
            tokens.push_back(std::move(current));
            current.clear();
        }
    }
    if (!current.empty()) tokens.push_back(std::move(current));
    return tokens;
}

namespace {

bool is_terminator(char c) { return c == '.' || c == '!' || c == '?'; }
bool is_space(char c) { return c == ' ' || c == '\t' || c == '\n' || c == '\r'; }

// Offsets one past each sentence end.
std::vector<std::size_t> sentence_ends(std::string_view text) {
    std::vector<std::size_t> ends;
    std::size_t i = 0;
    bool has_content = false;
    while (i < text.size()) {
        if (is_terminator(text[i])) {
            std::size_t j = i;
            while (j < text.size() && is_terminator(text[j])) ++j;
            if ((j == text.size() || is_space(text[j])) && has_content) {
                ends.push_back(j);
                has_content = false;
            }
            i = j;
            continue;
        }
        if (!is_space(text[i])) has_content = true;
        ++i;
    }
    if (has_content) ends.push_back(text.size());
    return ends;
}

}  // namespace

std::size_t count_sentences(std::string_view text) { return sentence_ends(text).size(); }

std::string truncate_sentences(std::string_view text, std::size_t max_sentences) {
    auto ends = sentence_ends(text);
    if (ends.size() <= max_sentences) return trim(text);
    if (max_sentences == 0) return {};
    return trim(text.substr(0, ends[max_sentences - 1]));
}

std::string sanitize_fragment(std::string_view text, std::size_t max_length) {
    std::string out;
    bool pending_space = false;
    for (char c : text) {
        if (is_terminator(c) || c == '\'' || c == '"' || c == '`') c = ' ';
        if (is_space(c)) {
            pending_space = !out.empty();
            continue;
        }
        if (pending_space) out.push_back(' ');
        pending_space = false;
        out.push_back(c);
        if (out.size() >= max_length) break;
    }
    return trim(out);
}

std::vector<std::string> quoted_labels(std::string_view text) {
    std::vector<std::string> labels;
    std::size_t pos = 0;
    while (true) {
        auto open = text.find('\'', pos);
        if (open == std::string_view::npos) break;
        auto close = text.find('\'', open + 1);
        if (close == std::string_view::npos) break;
        std::string label(text.substr(open + 1, close - open - 1));
        if (!label.empty() && std::find(labels.begin(), labels.end(), label) == labels.end()) {
            labels.push_back(std::move(label));
        }
        pos = close + 1;
    }
    return labels;
}

std::optional<std::string> extract_json_object(std::string_view text) {
    auto open = text.find('{');
    auto close = text.rfind('}');
    if (open == std::string_view::npos || close == std::string_view::npos || close < open) {
        return std::nullopt;
    }
    return std::string(text.substr(open, close - open + 1));
}

}  // namespace coachd
