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
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

namespace coachd {

using Json = nlohmann::json;
using OrderedJson = nlohmann::ordered_json;

/// Embedding produced by an embedder backend. Stores hold float32 copies.
using Vector = std::vector<double>;

inline constexpr std::size_t kDefaultHardCap = 50;
inline constexpr std::size_t kDefaultDimension = 1536;
inline constexpr int kSchemaVersion = 1;

enum class ErrorKind {
    validation,
    parse,
    lookup,
    schema,
    conflict,
    routing_violation,
    domain,
    integrity,
    migration,
    backend,
    condense,
    precondition,
    stale_session,
    size,
    io,
    config,
};

std::string_view to_string(ErrorKind kind);

/// Single exception type for the library; callers branch on kind().
class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& message)
        : std::runtime_error(message), kind_(kind) {}

    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

/// true / false / unknown, serialized as JSON true / false / null.
enum class TriState : std::uint8_t { no, yes, unknown };

Json tristate_to_json(TriState value);
TriState tristate_from_json(const Json& value);
std::string_view to_string(TriState value);

inline constexpr std::uint64_t kFnvOffset = 0xcbf29ce484222325ULL;

std::uint64_t fnv1a64(std::string_view bytes, std::uint64_t seed = kFnvOffset);
std::string hex64(std::uint64_t value);

// Text helpers shared by the condenser and coach.

std::string to_lower(std::string_view text);
std::string trim(std::string_view text);

/// Lowercase alphanumeric tokens.
std::vector<std::string> tokenize(std::string_view text);

/// A sentence ends at a run of '.', '!' or '?' followed by whitespace or end of text.
std::size_t count_sentences(std::string_view text);

/// Keeps at most max_sentences leading sentences.
std::string truncate_sentences(std::string_view text, std::size_t max_sentences);

/// Strips sentence terminators and quotes and collapses whitespace so the
/// fragment can be interpolated into generated prose without changing its
/// sentence count.
std::string sanitize_fragment(std::string_view text, std::size_t max_length = 80);

/// Every 'single-quoted' label in text, in order of appearance, deduplicated.
std::vector<std::string> quoted_labels(std::string_view text);

/// Extracts the outermost {...} block, tolerating code fences around model output.
std::optional<std::string> extract_json_object(std::string_view text);

}  // namespace coachd
