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

#include <gtest/gtest.h>

#include <algorithm>
#include <random>
#include <set>

#include "coachd/hnsw_index.hpp"
#include "coachd/synthetic.hpp"

using namespace coachd;

namespace {

// Brute-force top-k by cosine over unnormalized inputs.
std::vector<HnswIndex::Id> brute_top(const std::vector<std::vector<float>>& data,
                                     const std::vector<float>& q, std::size_t k,
                                     const std::function<bool(HnswIndex::Id)>& accept = {}) {
    std::vector<std::pair<double, HnswIndex::Id>> scored;
    for (std::size_t i = 0; i < data.size(); ++i) {
        if (accept && !accept(static_cast<HnswIndex::Id>(i))) continue;
        double dot = 0, na = 0, nb = 0;
        for (std::size_t d = 0; d < q.size(); ++d) {
            dot += double(data[i][d]) * q[d];
            na += double(data[i][d]) * data[i][d];
            nb += double(q[d]) * q[d];
        }
        scored.emplace_back(-dot / std::sqrt(na * nb), static_cast<HnswIndex::Id>(i));
    }
    std::sort(scored.begin(), scored.end());
    std::vector<HnswIndex::Id> out;
    for (std::size_t i = 0; i < k && i < scored.size(); ++i) out.push_back(scored[i].second);
    return out;
}

}  // namespace

TEST(Hnsw, EmptyIndex) {
    HnswIndex index(8);
    std::vector<float> q(8, 1.0f);
    EXPECT_TRUE(index.search(q, 3, 16).empty());
}

TEST(Hnsw, SingleAndDuplicateVectors) {
    HnswIndex index(4);
    std::vector<float> v{1, 0, 0, 0};
    for (int i = 0; i < 5; ++i) index.add(v);
    auto found = index.search(v, 10, 16);
    EXPECT_EQ(found.size(), 5u);
    for (const auto& [dist, id] : found) EXPECT_NEAR(dist, 0.0f, 1e-6f);
}

TEST(Hnsw, RecallOnClusteredData) {
    std::mt19937_64 rng(11);
    const std::size_t dim = 48;
    auto data = clustered_vectors(rng, 2000, dim, 20, 0.3);
    HnswIndex index(dim);
    for (const auto& v : data) index.add(v);
    std::size_t hit = 0, total = 0;
    for (int q = 0; q < 50; ++q) {
        auto query = random_unit_vector(rng, dim);
        auto truth = brute_top(data, query, 10);
        auto found = index.search(query, 10, 128);
        std::set<HnswIndex::Id> got;
        for (const auto& n : found) got.insert(n.second);
        for (auto id : truth) hit += got.count(id);
        total += truth.size();
    }
    EXPECT_GE(static_cast<double>(hit) / total, 0.95);
}

TEST(Hnsw, PredicateRestrictsResults) {
    std::mt19937_64 rng(12);
    const std::size_t dim = 16;
    std::vector<std::vector<float>> data;
    HnswIndex index(dim);
    for (int i = 0; i < 500; ++i) {
        data.push_back(random_unit_vector(rng, dim));
        index.add(data.back());
    }
    auto accept = [](HnswIndex::Id id) { return id % 7 == 3; };
    std::size_t hit = 0, total = 0;
    for (int q = 0; q < 20; ++q) {
        auto query = random_unit_vector(rng, dim);
        auto found = index.search(query, 5, 200, accept);
        ASSERT_EQ(found.size(), 5u);
        for (const auto& n : found) EXPECT_TRUE(accept(n.second));
        auto truth = brute_top(data, query, 5, accept);
        for (auto id : truth) {
            for (const auto& n : found) hit += n.second == id;
        }
        total += truth.size();
    }
    EXPECT_GE(static_cast<double>(hit) / total, 0.9);
}

TEST(Hnsw, DeterministicForSeed) {
    std::mt19937_64 rng(13);
    std::vector<std::vector<float>> data;
    for (int i = 0; i < 400; ++i) data.push_back(random_unit_vector(rng, 12));
    HnswIndex a(12), b(12);
    for (const auto& v : data) {
        a.add(v);
        b.add(v);
    }
    EXPECT_EQ(a.max_level(), b.max_level());
    auto q = random_unit_vector(rng, 12);
    EXPECT_EQ(a.search(q, 10, 64), b.search(q, 10, 64));
}

TEST(Hnsw, ResultsAscendByDistance) {
    std::mt19937_64 rng(14);
    HnswIndex index(8);
    for (int i = 0; i < 300; ++i) index.add(random_unit_vector(rng, 8));
    auto found = index.search(random_unit_vector(rng, 8), 20, 64);
    ASSERT_EQ(found.size(), 20u);
    for (std::size_t i = 1; i < found.size(); ++i) EXPECT_LE(found[i - 1].first, found[i].first);
}
