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

#include "coachd/hnsw_index.hpp"

#include <algorithm>
#include <cmath>
#include <queue>

#include "coachd/common.hpp"

namespace coachd {

namespace {

float dot(const float* a, const float* b, std::size_t n) {
    float acc[8] = {0, 0, 0, 0, 0, 0, 0, 0};
    std::size_t i = 0;
    for (; i + 8 <= n; i += 8) {
        for (std::size_t j = 0; j < 8; ++j) acc[j] += a[i + j] * b[i + j];
    }
    float sum = ((acc[0] + acc[1]) + (acc[2] + acc[3])) + ((acc[4] + acc[5]) + (acc[6] + acc[7]));
    for (; i < n; ++i) sum += a[i] * b[i];
    return sum;
}

std::vector<float> normalized(std::span<const float> v) {
    double norm = 0.0;
    for (float x : v) norm += static_cast<double>(x) * x;
    std::vector<float> out(v.begin(), v.end());
    if (norm > 0.0) {
        auto inv = 1.0 / std::sqrt(norm);
        for (float& x : out) x = static_cast<float>(x * inv);
    }
    return out;
}

using Entry = std::pair<float, HnswIndex::Id>;
using MinHeap = std::priority_queue<Entry, std::vector<Entry>, std::greater<>>;
using MaxHeap = std::priority_queue<Entry>;

}  // namespace

HnswIndex::HnswIndex(std::size_t dimension, HnswParams params)
    : dimension_(dimension), params_(params), rng_(params.seed) {
    if (dimension == 0) throw Error(ErrorKind::validation, "index dimension must be positive");
    if (params_.M < 2) throw Error(ErrorKind::config, "HNSW M must be at least 2");
    level_mult_ = 1.0 / std::log(static_cast<double>(params_.M));
}

void HnswIndex::clear() {
    data_.clear();
    levels_.clear();
    links_.clear();
    entry_ = 0;
    max_level_ = -1;
    rng_.seed(params_.seed);
}

float HnswIndex::distance(const float* a, const float* b) const {
    return 1.0f - dot(a, b, dimension_);
}

int HnswIndex::random_level() {
    std::uniform_real_distribution<double> uniform(0.0, 1.0);
    double u = 1.0 - uniform(rng_);  // (0, 1]
    return static_cast<int>(std::floor(-std::log(u) * level_mult_));
}

HnswIndex::Id HnswIndex::add(std::span<const float> vector) {
    if (vector.size() != dimension_) {
        throw Error(ErrorKind::schema, "vector dimension does not match the index");
    }
    const Id id = static_cast<Id>(levels_.size());
    auto unit = normalized(vector);
    data_.insert(data_.end(), unit.begin(), unit.end());
    const int level = random_level();
    levels_.push_back(level);
    links_.emplace_back(static_cast<std::size_t>(level) + 1);

    if (max_level_ < 0) {
        entry_ = id;
        max_level_ = level;
        return id;
    }

    const float* q = vec(id);
    Id current = entry_;
    float current_dist = distance(q, vec(current));
    for (int l = max_level_; l > level; --l) {
        bool changed = true;
        while (changed) {
            changed = false;
            for (Id n : links_[current][static_cast<std::size_t>(l)]) {
                float d = distance(q, vec(n));
                if (d < current_dist) {
                    current_dist = d;
                    current = n;
                    changed = true;
                }
            }
        }
    }

    for (int l = std::min(level, max_level_); l >= 0; --l) {
        auto found = search_layer(q, current, params_.ef_construction, l, nullptr);
        auto chosen = select_neighbors(found, params_.M);
        auto& own = links_[id][static_cast<std::size_t>(l)];
        own = chosen;
        for (Id n : chosen) {
            auto& theirs = links_[n][static_cast<std::size_t>(l)];
            theirs.push_back(id);
            if (theirs.size() > max_degree(l)) {
                const float* base = vec(n);
                Neighbors scored;
                scored.reserve(theirs.size());
                for (Id m : theirs) scored.emplace_back(distance(base, vec(m)), m);
                std::sort(scored.begin(), scored.end());
                theirs = select_neighbors(scored, max_degree(l));
            }
        }
        if (!found.empty()) current = found.front().second;
    }

    if (level > max_level_) {
        entry_ = id;
        max_level_ = level;
    }
    return id;
}

std::vector<HnswIndex::Id> HnswIndex::select_neighbors(const Neighbors& candidates,
                                                       std::size_t max_count) const {
    // candidates are sorted by distance to the base node. Keep one only if it
    // is closer to the base than to every neighbor already kept.
    std::vector<Id> kept;
    kept.reserve(max_count);
    for (const auto& [dist, id] : candidates) {
        if (kept.size() >= max_count) break;
        bool diverse = true;
        for (Id k : kept) {
            if (distance(vec(id), vec(k)) < dist) {
                diverse = false;
                break;
            }
        }
        if (diverse) kept.push_back(id);
    }
    return kept;
}

HnswIndex::Neighbors HnswIndex::search_layer(const float* query, Id entry, std::size_t ef,
                                             int level, const Predicate* accept) const {
    std::vector<char> visited(levels_.size(), 0);
    MinHeap candidates;
    MaxHeap results;
    auto accepted = [&](Id id) { return accept == nullptr || !*accept || (*accept)(id); };

    float d0 = distance(query, vec(entry));
    visited[entry] = 1;
    candidates.emplace(d0, entry);
    if (accepted(entry)) results.emplace(d0, entry);

    while (!candidates.empty()) {
        auto [dist, id] = candidates.top();
        if (results.size() >= ef && dist > results.top().first) break;
        candidates.pop();
        const auto& node_links = links_[id];
        if (static_cast<std::size_t>(level) >= node_links.size()) continue;
        for (Id n : node_links[static_cast<std::size_t>(level)]) {
            if (visited[n]) continue;
            visited[n] = 1;
            float d = distance(query, vec(n));
            if (results.size() < ef || d < results.top().first) {
                candidates.emplace(d, n);
                if (accepted(n)) {
                    results.emplace(d, n);
                    if (results.size() > ef) results.pop();
                }
            }
        }
    }

    Neighbors out;
    out.reserve(results.size());
    while (!results.empty()) {
        out.push_back(results.top());
        results.pop();
    }
    std::reverse(out.begin(), out.end());
    return out;
}

HnswIndex::Neighbors HnswIndex::search(std::span<const float> query, std::size_t k,
                                       std::size_t ef, const Predicate& accept) const {
    if (levels_.empty() || k == 0) return {};
    if (query.size() != dimension_) {
        throw Error(ErrorKind::schema, "query dimension does not match the index");
    }
    auto unit = normalized(query);
    const float* q = unit.data();

    Id current = entry_;
    float current_dist = distance(q, vec(current));
    for (int l = max_level_; l > 0; --l) {
        bool changed = true;
        while (changed) {
            changed = false;
            for (Id n : links_[current][static_cast<std::size_t>(l)]) {
                float d = distance(q, vec(n));
                if (d < current_dist) {
                    current_dist = d;
                    current = n;
                    changed = true;
                }
            }
        }
    }
    auto found = search_layer(q, current, std::max(ef, k), 0, accept ? &accept : nullptr);
    if (found.size() > k) found.resize(k);
    return found;
}

}  // namespace coachd
