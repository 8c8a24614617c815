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

#include <array>
#include <optional>
#include <string_view>

namespace coachd {

// Shared by the condenser stub (detection), the coach stub (trigger) and the
// simulator (trap classes), so the loop closes end to end without a model.

enum class Hazard { loop, captcha, dead_end, http_4xx };

struct HazardInfo {
    Hazard hazard;
    std::string_view token;         // lowercase token the coach stub matches
    std::string_view pattern_name;  // evidence name used for patterns and fail modes
};

inline constexpr std::array<HazardInfo, 4> kHazards{{
    {Hazard::loop, "loop", "Navigation Loop"},
    {Hazard::captcha, "captcha", "CAPTCHA Gate"},
    {Hazard::dead_end, "dead end", "Dead End"},
    {Hazard::http_4xx, "http 4xx", "HTTP 4xx Error"},
}};

inline constexpr const HazardInfo& hazard_info(Hazard hazard) {
    return kHazards[static_cast<std::size_t>(hazard)];
}

inline std::optional<Hazard> hazard_from_pattern_name(std::string_view name) {
    for (const auto& info : kHazards) {
        if (info.pattern_name == name) return info.hazard;
    }
    return std::nullopt;
}

// Markers the simulator writes into observations and the stub detects.
inline constexpr std::string_view kCaptchaMarker = "captcha";
inline constexpr std::string_view kDeadEndMarker = "dead end";

/// Number of occurrences of one (action, target) pair that counts as a loop.
inline constexpr std::size_t kLoopRepeatThreshold = 3;

}  // namespace coachd
