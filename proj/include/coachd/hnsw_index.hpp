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
#include <functional>
#include <random>
#include <span>
#include <utility>
#include <vector>

namespace coachd {

struct HnswParams {
    std::size_t M = 32;  ///< Graph degree on upper layers; layer 0 keeps 2*M.
    std::size_t ef_construction = 128;
    std::size_t ef_search = 512;  // tuned for recall@5 >= 0.95 at 10k x 1536 uniform vectors
    std::uint64_t seed = 0x5eed;
};

/// Hierarchical navigable small-world graph over cosine similarity.
///
/// Vectors are normalized on insertion; node ids are dense insertion indices.
/// Construction is deterministic for a given seed and insertion order.
/// Not internally synchronized: callers hold a shared lock for search and an
/// exclusive lock for add.
class HnswIndex {
public:
    using Id = std::uint32_t;
    /// (distance = 1 - cosine, id), ascending distance.
    using Neighbors = std::vector<std::pair<float, Id>>;
    using Predicate = std::function<bool(Id)>;

    HnswIndex(std::size_t dimension, HnswParams params = {});

    Id add(std::span<const float> vector);

    /// Up to k nearest nodes accepted by the predicate. Traversal visits
    /// rejected nodes but only accepted nodes enter the result set.
    Neighbors search(std::span<const float> query, std::size_t k, std::size_t ef,
                     const Predicate& accept = {}) const;

    std::size_t size() const { return levels_.size(); }
    std::size_t dimension() const { return dimension_; }
    const HnswParams& params() const { return params_; }
    int max_level() const { return max_level_; }

    void clear();

private:
    const float* vec(Id id) const { return data_.data() + static_cast<std::size_t>(id) * dimension_; }
    float distance(const float* a, const float* b) const;
    int random_level();

    Neighbors search_layer(const float* query, Id entry, std::size_t ef, int level,
                           const Predicate* accept) const;
    std::vector<Id> select_neighbors(const Neighbors& candidates, std::size_t max_count) const;
    std::size_t max_degree(int level) const { return level == 0 ? 2 * params_.M : params_.M; }

    std::size_t dimension_;
    HnswParams params_;
    double level_mult_;
    std::mt19937_64 rng_;

    std::vector<float> data_;
    std::vector<int> levels_;
    std::vector<std::vector<std::vector<Id>>> links_;  // node -> level -> neighbors
    Id entry_ = 0;
    int max_level_ = -1;
};

}  // namespace coachd
