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

#include <memory>
#include <mutex>
#include <optional>
#include <variant>
#include <string>
#include <vector>

#include "coachd/common.hpp"
#include "coachd/episode.hpp"
#include "coachd/trajectory.hpp"

namespace coachd {

/// Standardized episode summary.
///
/// partial  => final_success unknown, evidence is current_patterns.
/// complete => final_success yes/no, evidence is success_workflows for yes
///             and fail_modes for no.
struct CondensedRecord {
    std::string summary_text;
    Vector embedding;
    TriState final_success = TriState::unknown;
    EvidenceKind evidence_kind = EvidenceKind::current_pattern;
    std::vector<Evidence> evidence;
    Completeness completeness = Completeness::partial;
    EpisodeMeta source;

    bool operator==(const CondensedRecord&) const = default;
};

/// Wire form with `schema_version: 1`.
Json to_json(const CondensedRecord& record);
CondensedRecord condensed_from_json(const Json& json);

/// Schema check of the wire form; nullopt when valid, else the first problem.
std::optional<std::string> validate_condensed_json(const Json& json,
                                                   std::size_t dimension = kDefaultDimension);

/// Invariant check of an in-memory record.
std::optional<std::string> validate(const CondensedRecord& record, std::size_t dimension);

MemoryRecord to_memory_record(const CondensedRecord& record);

class SummarizerBackend {
public:
    virtual ~SummarizerBackend() = default;
    virtual std::string name() const = 0;
    virtual bool deterministic() const = 0;
    /// False when calls from different sessions must be serialized.
    virtual bool shareable() const { return true; }
    /// Model backends read the rendered prompt; the stub reads the log directly.
    virtual std::string generate(const std::string& prompt, const TrajectoryLog& log) = 0;
};

class EmbedderBackend {
public:
    virtual ~EmbedderBackend() = default;
    virtual std::string name() const = 0;
    virtual std::size_t dimension() const = 0;
    virtual bool shareable() const { return true; }
    virtual Vector embed(std::string_view text) = 0;
};

/// Rule-based summarizer: goal restatement, first/last action, visited pages,
/// hazard detection (repeated action/target pairs, CAPTCHA, dead end, HTTP 4xx).
class StubSummarizer final : public SummarizerBackend {
public:
    explicit StubSummarizer(std::size_t hard_cap = kDefaultHardCap) : hard_cap_(hard_cap) {}
    std::string name() const override { return "stub-summarizer"; }
    bool deterministic() const override { return true; }
    std::string generate(const std::string& prompt, const TrajectoryLog& log) override;

private:
    std::size_t hard_cap_;
};

/// Signed feature hashing of unigrams and bigrams, L2-normalized.
class StubEmbedder final : public EmbedderBackend {
public:
    explicit StubEmbedder(std::size_t dimension = kDefaultDimension,
                          std::uint64_t seed = 0x9e3779b97f4a7c15ULL);
    std::string name() const override { return "stub-embedder"; }
    std::size_t dimension() const override { return dimension_; }
    Vector embed(std::string_view text) override;

private:
    std::size_t dimension_;
    std::uint64_t seed_;
};

/// Serializes calls into a backend that is not shareable across sessions.
class SerializedSummarizer final : public SummarizerBackend {
public:
    explicit SerializedSummarizer(std::shared_ptr<SummarizerBackend> inner)
        : inner_(std::move(inner)) {}
    std::string name() const override { return inner_->name(); }
    bool deterministic() const override { return inner_->deterministic(); }
    std::string generate(const std::string& prompt, const TrajectoryLog& log) override {
        std::lock_guard lock(mutex_);
        return inner_->generate(prompt, log);
    }

private:
    std::shared_ptr<SummarizerBackend> inner_;
    std::mutex mutex_;
};

class SerializedEmbedder final : public EmbedderBackend {
public:
    explicit SerializedEmbedder(std::shared_ptr<EmbedderBackend> inner)
        : inner_(std::move(inner)) {}
    std::string name() const override { return inner_->name(); }
    std::size_t dimension() const override { return inner_->dimension(); }
    Vector embed(std::string_view text) override {
        std::lock_guard lock(mutex_);
        return inner_->embed(text);
    }

private:
    std::shared_ptr<EmbedderBackend> inner_;
    std::mutex mutex_;
};

std::shared_ptr<SummarizerBackend> share_safely(std::shared_ptr<SummarizerBackend> backend);
std::shared_ptr<EmbedderBackend> share_safely(std::shared_ptr<EmbedderBackend> backend);

/// Renders the versioned condenser template for a log.
std::string build_condenser_prompt(const TrajectoryLog& log, std::size_t hard_cap);

struct CondenseOptions {
    std::size_t hard_cap = kDefaultHardCap;
    /// Derived from the log content when empty.
    std::string episode_id;
};

/// Throws ErrorKind::condense naming the backend on backend failure, or with
/// the raw output attached when the output is still invalid after one repair retry.
CondensedRecord condense(const TrajectoryLog& log, SummarizerBackend& summarizer,
                         EmbedderBackend& embedder, const CondenseOptions& options = {});

/// Throws validation error on empty text, backend error when the embedder
/// fails or returns the wrong length or non-finite values.
Vector embed_text(std::string_view text, EmbedderBackend& embedder);

enum class Route { stream_only, persist_and_stream };

std::string_view to_string(Route route);

Route route(const CondensedRecord& record);

/// Parses summarizer output against the expected completeness. Returns the
/// problem description on failure. Exposed for fuzzing.
struct SummaryFields {
    std::string summary_text;
    TriState final_success = TriState::unknown;
    EvidenceKind evidence_kind = EvidenceKind::current_pattern;
    std::vector<Evidence> evidence;
};
std::variant<SummaryFields, std::string> parse_summary_output(std::string_view raw,
                                                              Completeness completeness);

}  // namespace coachd
