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

#include "coachd/memory_store.hpp"

#include <algorithm>
#include <bit>
#include <fstream>
#include <iterator>
#include <mutex>

namespace coachd {

namespace {

constexpr std::string_view kMagic = "EMS1";
constexpr std::size_t kHeaderSize = 4 + 4 + 8 + 8;

void put_u32(std::string& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

void put_u64(std::string& out, std::uint64_t v) {
    for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

std::uint64_t get_le(std::string_view in, std::size_t offset, int bytes) {
    std::uint64_t v = 0;
    for (int i = 0; i < bytes; ++i) {
        v |= static_cast<std::uint64_t>(static_cast<unsigned char>(in[offset + i])) << (8 * i);
    }
    return v;
}

bool ranks_before(const ScoredRecord& a, const ScoredRecord& b) {
    if (a.score != b.score) return a.score > b.score;
    if (a.record->meta.timestamp_ms != b.record->meta.timestamp_ms) {
        return a.record->meta.timestamp_ms > b.record->meta.timestamp_ms;
    }
    return a.record->meta.episode_id < b.record->meta.episode_id;
}

double query_norm(std::span<const double> query, std::size_t dimension) {
    if (query.size() != dimension) {
        throw Error(ErrorKind::schema, "query has dimension " + std::to_string(query.size()) +
                                           ", store has " + std::to_string(dimension));
    }
    double n = 0.0;
    for (double x : query) n += x * x;
    if (!(n > 0.0) || !std::isfinite(n)) {
        throw Error(ErrorKind::domain, "query vector is zero or not finite");
    }
    return std::sqrt(n);
}

double dot_mixed(std::span<const double> q, const std::vector<float>& v) {
    double dot = 0.0;
    for (std::size_t i = 0; i < q.size(); ++i) dot += q[i] * static_cast<double>(v[i]);
    return dot;
}

}  // namespace

bool RetrievalFilter::accepts(const EpisodeMeta& meta) const {
    if (exclude_task_ids.count(meta.task_id) > 0) return false;
    if (require_domain_root && meta.domain_root != *require_domain_root) return false;
    if (require_outcome && meta.final_success != *require_outcome) return false;
    return true;
}

MemoryStore::MemoryStore(StoreConfig config)
    : config_(config), index_(config.dimension, config.hnsw) {
    if (config_.overfetch == 0) config_.overfetch = 1;
}

void MemoryStore::validate_locked(const MemoryRecord& record) const {
    if (record.embedding.size() != config_.dimension) {
        throw Error(ErrorKind::schema, "embedding has dimension " +
                                           std::to_string(record.embedding.size()) +
                                           ", store expects " + std::to_string(config_.dimension));
    }
    double norm = 0.0;
    for (float x : record.embedding) {
        if (!std::isfinite(x)) throw Error(ErrorKind::schema, "embedding is not finite");
        norm += static_cast<double>(x) * x;
    }
    if (norm == 0.0) throw Error(ErrorKind::schema, "embedding is all zeros");
    if (record.meta.completeness != Completeness::complete ||
        record.meta.final_success == TriState::unknown) {
        throw Error(ErrorKind::routing_violation,
                    "only complete episodes are persisted: " + record.meta.episode_id);
    }
    if (trim(record.summary_text).empty()) {
        throw Error(ErrorKind::validation, "summary_text is empty");
    }
    if (record.meta.episode_id.empty()) throw Error(ErrorKind::validation, "episode_id is empty");
    if (record.meta.total_steps > config_.hard_cap) {
        throw Error(ErrorKind::validation, "total_steps exceeds the hard cap");
    }
    if (by_id_.count(record.meta.episode_id) > 0) {
        throw Error(ErrorKind::conflict, "duplicate episode_id: " + record.meta.episode_id);
    }
}

std::string MemoryStore::insert(MemoryRecord record) {
    std::unique_lock lock(mutex_);
    validate_locked(record);
    double norm = 0.0;
    for (float x : record.embedding) norm += static_cast<double>(x) * x;
    auto shared = std::make_shared<const MemoryRecord>(std::move(record));
    index_.add(shared->embedding);
    by_id_.emplace(shared->meta.episode_id, records_.size());
    norms_.push_back(std::sqrt(norm));
    newest_timestamp_ = std::max(newest_timestamp_, shared->meta.timestamp_ms);
    records_.push_back(shared);
    return shared->meta.episode_id;
}

SeedReport MemoryStore::seed(std::vector<MemoryRecord> records) {
    SeedReport report;
    for (std::size_t i = 0; i < records.size(); ++i) {
        try {
            insert(std::move(records[i]));
            ++report.inserted;
        } catch (const Error& e) {
            if (e.kind() == ErrorKind::conflict) {
                ++report.skipped_duplicates;
            } else {
                report.errors.push_back("record " + std::to_string(i) + ": " + e.what());
            }
        }
    }
    return report;
}

double MemoryStore::rank_score(double cosine, const MemoryRecord& record,
                               std::int64_t newest) const {
    if (config_.recency_weight <= 0.0) return cosine;
    const double age = static_cast<double>(newest - record.meta.timestamp_ms);
    const double recency = std::exp2(-std::max(age, 0.0) / config_.recency_half_life_ms);
    return (1.0 - config_.recency_weight) * cosine + config_.recency_weight * recency;
}

RetrievalResult MemoryStore::finish(std::span<const double> query, std::vector<ScoredRecord> hits,
                                    std::size_t k) const {
    const auto keep = std::min(k, hits.size());
    std::partial_sort(hits.begin(), hits.begin() + static_cast<std::ptrdiff_t>(keep), hits.end(),
                      ranks_before);
    hits.resize(keep);
    return RetrievalResult{std::move(hits), Vector(query.begin(), query.end())};
}

RetrievalResult MemoryStore::search_exact(std::span<const double> query, std::size_t k,
                                          const RetrievalFilter& filter) const {
    const double qn = query_norm(query, config_.dimension);
    std::shared_lock lock(mutex_);
    std::vector<ScoredRecord> hits;
    hits.reserve(records_.size());
    for (std::size_t i = 0; i < records_.size(); ++i) {
        const auto& record = records_[i];
        if (!filter.accepts(record->meta)) continue;
        double cosine = std::clamp(dot_mixed(query, record->embedding) / (qn * norms_[i]), -1.0, 1.0);
        hits.push_back({record, rank_score(cosine, *record, newest_timestamp_)});
    }
    return finish(query, std::move(hits), k);
}

RetrievalResult MemoryStore::search_ann(std::span<const double> query, std::size_t k,
                                        const RetrievalFilter& filter) const {
    const double qn = query_norm(query, config_.dimension);
    std::shared_lock lock(mutex_);
    if (records_.empty() || k == 0) return RetrievalResult{{}, Vector(query.begin(), query.end())};

    std::vector<float> q32(query.begin(), query.end());
    const std::size_t fetch = k * config_.overfetch;
    const std::size_t ef = std::max(config_.hnsw.ef_search, fetch);
    HnswIndex::Predicate accept = [&](HnswIndex::Id id) {
        return filter.accepts(records_[id]->meta);
    };
    auto found = index_.search(q32, fetch, ef, accept);

    std::vector<ScoredRecord> hits;
    hits.reserve(found.size());
    for (const auto& [distance, id] : found) {
        const auto& record = records_[id];
        if (!filter.accepts(record->meta)) continue;
        double cosine = std::clamp(dot_mixed(query, record->embedding) / (qn * norms_[id]), -1.0, 1.0);
        hits.push_back({record, rank_score(cosine, *record, newest_timestamp_)});
    }
    return finish(query, std::move(hits), k);
}

std::size_t MemoryStore::size() const {
    std::shared_lock lock(mutex_);
    return records_.size();
}

bool MemoryStore::contains(const std::string& episode_id) const {
    std::shared_lock lock(mutex_);
    return by_id_.count(episode_id) > 0;
}

std::shared_ptr<const MemoryRecord> MemoryStore::find(const std::string& episode_id) const {
    std::shared_lock lock(mutex_);
    auto it = by_id_.find(episode_id);
    return it == by_id_.end() ? nullptr : records_[it->second];
}

std::vector<std::shared_ptr<const MemoryRecord>> MemoryStore::records() const {
    std::shared_lock lock(mutex_);
    return records_;
}

void MemoryStore::snapshot(const std::filesystem::path& path) const {
    std::string body;
    std::size_t count = 0;
    {
        std::shared_lock lock(mutex_);
        count = records_.size();
        for (const auto& record : records_) {
            auto text = record_body_to_json(*record).dump();
            put_u32(body, static_cast<std::uint32_t>(4 * record->embedding.size() + text.size()));
            for (float x : record->embedding) put_u32(body, std::bit_cast<std::uint32_t>(x));
            body += text;
        }
    }
    std::string header(kMagic);
    put_u32(header, static_cast<std::uint32_t>(config_.dimension));
    put_u64(header, count);
    put_u64(header, fnv1a64(body));

    auto tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw Error(ErrorKind::io, "cannot write snapshot: " + tmp.string());
        out.write(header.data(), static_cast<std::streamsize>(header.size()));
        out.write(body.data(), static_cast<std::streamsize>(body.size()));
        if (!out) throw Error(ErrorKind::io, "short write: " + tmp.string());
    }
    std::filesystem::rename(tmp, path);
}

std::unique_ptr<MemoryStore> MemoryStore::load(const std::filesystem::path& path,
                                               StoreConfig config) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorKind::io, "cannot read snapshot: " + path.string());
    std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    std::string_view view(bytes);

    if (view.size() < kHeaderSize) throw Error(ErrorKind::integrity, "snapshot header truncated");
    auto magic = view.substr(0, 4);
    if (magic != kMagic) {
        if (magic.substr(0, 3) == "EMS") {
            throw Error(ErrorKind::migration,
                        "snapshot version '" + std::string(magic) + "' needs migration to EMS1");
        }
        throw Error(ErrorKind::integrity, "not a memory snapshot");
    }
    const auto dimension = static_cast<std::size_t>(get_le(view, 4, 4));
    const auto count = get_le(view, 8, 8);
    const auto checksum = get_le(view, 16, 8);
    auto body = view.substr(kHeaderSize);
    if (fnv1a64(body) != checksum) throw Error(ErrorKind::integrity, "snapshot checksum mismatch");

    config.dimension = dimension;
    auto store = std::make_unique<MemoryStore>(config);
    std::size_t offset = 0;
    for (std::uint64_t i = 0; i < count; ++i) {
        if (offset + 4 > body.size()) throw Error(ErrorKind::integrity, "record length truncated");
        const auto length = static_cast<std::size_t>(get_le(body, offset, 4));
        offset += 4;
        if (length < 4 * dimension || offset + length > body.size()) {
            throw Error(ErrorKind::integrity, "record " + std::to_string(i) + " truncated");
        }
        std::vector<float> embedding(dimension);
        for (std::size_t d = 0; d < dimension; ++d) {
            embedding[d] =
                std::bit_cast<float>(static_cast<std::uint32_t>(get_le(body, offset + 4 * d, 4)));
        }
        auto text = body.substr(offset + 4 * dimension, length - 4 * dimension);
        offset += length;
        Json json = Json::parse(text, nullptr, false);
        if (json.is_discarded()) {
            throw Error(ErrorKind::integrity, "record " + std::to_string(i) + " body is not JSON");
        }
        try {
            MemoryRecord record = record_body_from_json(json);
            record.embedding = std::move(embedding);
            store->insert(std::move(record));
        } catch (const Error& e) {
            throw Error(ErrorKind::integrity,
                        "record " + std::to_string(i) + " rejected: " + e.what());
        }
    }
    if (offset != body.size()) throw Error(ErrorKind::integrity, "trailing bytes in snapshot");
    return store;
}

SeedFile read_seed_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorKind::io, "cannot read seed file: " + path.string());
    SeedFile out;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty()) continue;
        try {
            Json json = Json::parse(line);
            out.records.push_back(memory_record_from_json(json));
        } catch (const std::exception& e) {
            out.errors.push_back("line " + std::to_string(line_no) + ": " + e.what());
        }
    }
    return out;
}

void write_seed_file(const std::filesystem::path& path, const std::vector<MemoryRecord>& records) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw Error(ErrorKind::io, "cannot write seed file: " + path.string());
    for (const auto& record : records) out << to_json(record).dump() << '\n';
}

}  // namespace coachd
