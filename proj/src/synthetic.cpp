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

#include "coachd/synthetic.hpp"

#include <cmath>
#include <cstdio>

namespace coachd {

std::vector<float> random_unit_vector(std::mt19937_64& rng, std::size_t dimension) {
    std::normal_distribution<double> normal(0.0, 1.0);
    std::vector<double> v(dimension);
    double norm = 0.0;
    for (auto& x : v) {
        x = normal(rng);
        norm += x * x;
    }
    norm = std::sqrt(norm);
    std::vector<float> out(dimension);
    for (std::size_t i = 0; i < dimension; ++i) out[i] = static_cast<float>(v[i] / norm);
    return out;
}

std::vector<std::vector<float>> clustered_vectors(std::mt19937_64& rng, std::size_t count,
                                                  std::size_t dimension, std::size_t clusters,
                                                  double spread) {
    std::vector<std::vector<float>> centers;
    for (std::size_t c = 0; c < std::max<std::size_t>(clusters, 1); ++c) {
        centers.push_back(random_unit_vector(rng, dimension));
    }
    std::normal_distribution<double> noise(0.0, spread);
    std::uniform_int_distribution<std::size_t> pick(0, centers.size() - 1);
    std::vector<std::vector<float>> out;
    out.reserve(count);
    for (std::size_t i = 0; i < count; ++i) {
        const auto& center = centers[pick(rng)];
        std::vector<float> v(dimension);
        for (std::size_t d = 0; d < dimension; ++d) {
            v[d] = static_cast<float>(center[d] + noise(rng));
        }
        out.push_back(std::move(v));
    }
    return out;
}

MemoryRecord synthetic_record(std::size_t index, std::vector<float> embedding,
                              const std::string& task_id, bool success) {
    char id[32];
    std::snprintf(id, sizeof id, "ep-syn-%06zu", index);
    MemoryRecord record;
    record.embedding = std::move(embedding);
    record.summary_text = "Synthetic episode " + std::to_string(index) + " for " + task_id + ".";
    record.meta.episode_id = id;
    record.meta.domain_root = "synthetic.example";
    record.meta.user_goal = "synthetic goal " + task_id;
    record.meta.model_name = "synthetic";
    record.meta.total_steps = 1 + index % kDefaultHardCap;
    record.meta.timestamp_ms = 1'700'000'000'000 + static_cast<std::int64_t>(index) * 1000;
    record.meta.task_id = task_id;
    record.meta.final_success = success ? TriState::yes : TriState::no;
    record.meta.completeness = Completeness::complete;
    record.evidence_kind = success ? EvidenceKind::success_workflow : EvidenceKind::fail_mode;
    record.evidence = {{success ? "Goal Completion" : "Unresolved Goal", "Synthetic evidence."}};
    return record;
}

}  // namespace coachd
