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

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <memory>
#include <optional>
#include <set>
#include <shared_mutex>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "coachd/common.hpp"
#include "coachd/episode.hpp"
#include "coachd/hnsw_index.hpp"

namespace coachd {

/// Normalized dot product of two same-length vectors, accumulated in double.
///
/// Throws ErrorKind::schema on a length mismatch and ErrorKind::domain when
/// either vector is all zeros or not finite.
template <class A, class B>
double cosine_score(std::span<const A> a, std::span<const B> b) {
    if (a.size() != b.size()) {
        throw Error(ErrorKind::schema, "cosine_score: dimension mismatch (" +
                                           std::to_string(a.size()) + " vs " +
                                           std::to_string(b.size()) + ")");
    }
    double dot = 0.0, na = 0.0, nb = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double x = static_cast<double>(a[i]);
        const double y = static_cast<double>(b[i]);
        dot += x * y;
        na += x * x;
        nb += y * y;
    }
    if (!(na > 0.0) || !(nb > 0.0) || !std::isfinite(na) || !std::isfinite(nb)) {
        throw Error(ErrorKind::domain, "cosine_score: zero or non-finite vector");
    }
    const double score = dot / (std::sqrt(na) * std::sqrt(nb));
    return std::clamp(score, -1.0, 1.0);
}

inline double cosine_score(const std::vector<double>& a, const std::vector<double>& b) {
    return cosine_score(std::span<const double>(a), std::span<const double>(b));
}

/// Conjunctive filter over episode metadata.
struct RetrievalFilter {
    std::set<std::string> exclude_task_ids;
    std::optional<std::string> require_domain_root;
    std::optional<TriState> require_outcome;

    bool accepts(const EpisodeMeta& meta) const;
};

struct ScoredRecord {
    std::shared_ptr<const MemoryRecord> record;
    double score = 0.0;
};

/// Ranked by (score desc, timestamp desc, episode_id asc). Records are
/// shared immutable snapshots and stay valid after later inserts.
struct RetrievalResult {
    std::vector<ScoredRecord> hits;
    Vector query;
};

struct StoreConfig {
    std::size_t dimension = kDefaultDimension;
    std::size_t hard_cap = kDefaultHardCap;
    HnswParams hnsw;
    std::size_t overfetch = 4;
    /// Blend of recency into the ranking score. 0 keeps scoring pure cosine.
    double recency_weight = 0.0;
    double recency_half_life_ms = 7.0 * 24 * 3600 * 1000;
};

struct SeedReport {
    std::size_t inserted = 0;
    std::size_t skipped_duplicates = 0;
    std::vector<std::string> errors;  // "record <i>: <message>"
};

/// Episodic memory: completed episodes with exact and HNSW retrieval.
/// Many readers, one writer.
class MemoryStore {
public:
    explicit MemoryStore(StoreConfig config = {});

    MemoryStore(const MemoryStore&) = delete;
    MemoryStore& operator=(const MemoryStore&) = delete;

    /// Errors: schema (dimension or non-finite embedding), validation,
    /// routing_violation (partial record), conflict (duplicate episode_id).
    std::string insert(MemoryRecord record);

    /// Bulk insert; duplicates are skipped and counted, other failures reported.
    SeedReport seed(std::vector<MemoryRecord> records);

    RetrievalResult search_exact(std::span<const double> query, std::size_t k,
                                 const RetrievalFilter& filter = {}) const;
    RetrievalResult search_ann(std::span<const double> query, std::size_t k,
                               const RetrievalFilter& filter = {}) const;

    /// Binary container: "EMS1", dimension, count, checksum, then
    /// length-prefixed records (float32 LE embedding + JSON body).
    void snapshot(const std::filesystem::path& path) const;
    static std::unique_ptr<MemoryStore> load(const std::filesystem::path& path,
                                             StoreConfig config = {});

    std::size_t size() const;
    std::size_t dimension() const { return config_.dimension; }
    const StoreConfig& config() const { return config_; }
    bool contains(const std::string& episode_id) const;
    std::shared_ptr<const MemoryRecord> find(const std::string& episode_id) const;
    /// Insertion order.
    std::vector<std::shared_ptr<const MemoryRecord>> records() const;

private:
    void validate_locked(const MemoryRecord& record) const;
    double rank_score(double cosine, const MemoryRecord& record, std::int64_t newest) const;
    RetrievalResult finish(std::span<const double> query, std::vector<ScoredRecord> hits,
                           std::size_t k) const;

    StoreConfig config_;
    mutable std::shared_mutex mutex_;
    std::vector<std::shared_ptr<const MemoryRecord>> records_;
    std::vector<double> norms_;
    std::unordered_map<std::string, std::size_t> by_id_;
    HnswIndex index_;
    std::int64_t newest_timestamp_ = 0;
};

/// Line-delimited MemoryRecord JSON. Unparseable lines are reported, not fatal.
struct SeedFile {
    std::vector<MemoryRecord> records;
    std::vector<std::string> errors;
};
SeedFile read_seed_file(const std::filesystem::path& path);
void write_seed_file(const std::filesystem::path& path, const std::vector<MemoryRecord>& records);

}  // namespace coachd
