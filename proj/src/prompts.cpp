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

#include "coachd/prompts.hpp"

#include "coachd/common.hpp"
#include "prompt_templates.hpp"

namespace coachd {

std::string_view condenser_template() { return generated::kCondenserTemplate; }
std::string_view coach_template() { return generated::kCoachTemplate; }

std::string template_hash(std::string_view text) { return "t-" + hex64(fnv1a64(text)); }

std::string render_template(std::string_view text,
                            const std::map<std::string, std::string>& values) {
    std::string out;
    out.reserve(text.size());
    std::size_t pos = 0;
    while (pos < text.size()) {
        auto open = text.find("{{", pos);
        if (open == std::string_view::npos) break;
        auto close = text.find("}}", open + 2);
        if (close == std::string_view::npos) break;
        out.append(text.substr(pos, open - pos));
        auto key = std::string(text.substr(open + 2, close - open - 2));
        if (auto it = values.find(key); it != values.end()) {
            out += it->second;
        } else {
            out.append(text.substr(open, close + 2 - open));
        }
        pos = close + 2;
    }
    out.append(text.substr(pos));
    return out;
}

}  // namespace coachd
