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
#include <random>
#include <string>
#include <vector>

#include "coachd/episode.hpp"

namespace coachd {

/// Standard normal components, normalized.
std::vector<float> random_unit_vector(std::mt19937_64& rng, std::size_t dimension);

/// `count` vectors around `clusters` random centers with per-component noise `spread`.
std::vector<std::vector<float>> clustered_vectors(std::mt19937_64& rng, std::size_t count,
                                                  std::size_t dimension, std::size_t clusters,
                                                  double spread);

/// A complete, storable record around a given embedding.
MemoryRecord synthetic_record(std::size_t index, std::vector<float> embedding,
                              const std::string& task_id, bool success = false);

}  // namespace coachd
