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

#include <map>
#include <string>
#include <string_view>

namespace coachd {

/// Versioned prompt templates shipped in templates/ and compiled in.
std::string_view condenser_template();
std::string_view coach_template();

inline constexpr std::string_view kCondenserTemplateVersion = "condenser_prompt_v1";
inline constexpr std::string_view kCoachTemplateVersion = "coach_prompt_v1";

/// Pin recorded in run configs so a run can refuse a drifted template.
std::string template_hash(std::string_view text);

/// Replaces every {{name}} with values[name]. Unknown placeholders stay as-is.
std::string render_template(std::string_view text,
                            const std::map<std::string, std::string>& values);

}  // namespace coachd
