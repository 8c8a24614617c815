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

#include <memory>

#include "coachd/coach.hpp"
#include "coachd/condenser.hpp"
#include "coachd/config.hpp"

namespace coachd {

/// POST {base_url}/v1/chat/completions and return choices[0].message.content.
/// Throws ErrorKind::backend on transport or format problems.
std::string chat_completion(const BackendConfig& config, const std::string& prompt);

class ChatSummarizer final : public SummarizerBackend {
public:
    explicit ChatSummarizer(BackendConfig config) : config_(std::move(config)) {}
    std::string name() const override { return "chat:" + config_.model; }
    bool deterministic() const override { return false; }
    std::string generate(const std::string& prompt, const TrajectoryLog&) override {
        return chat_completion(config_, prompt);
    }

private:
    BackendConfig config_;
};

class ChatCoach final : public CoachBackend {
public:
    explicit ChatCoach(BackendConfig config) : config_(std::move(config)) {}
    std::string name() const override { return "chat:" + config_.model; }
    bool deterministic() const override { return false; }
    std::string decide_raw(const std::string& prompt, const CoachInput&) override {
        return chat_completion(config_, prompt);
    }

private:
    BackendConfig config_;
};

/// POST {base_url}/v1/embeddings, reading data[0].embedding.
class HttpEmbedder final : public EmbedderBackend {
public:
    HttpEmbedder(BackendConfig config, std::size_t dimension)
        : config_(std::move(config)), dimension_(dimension) {}
    std::string name() const override { return "embeddings:" + config_.model; }
    std::size_t dimension() const override { return dimension_; }
    Vector embed(std::string_view text) override;

private:
    BackendConfig config_;
    std::size_t dimension_;
};

std::shared_ptr<SummarizerBackend> make_summarizer(const BackendConfig& config,
                                                   std::size_t hard_cap);
std::shared_ptr<EmbedderBackend> make_embedder(const BackendConfig& config, std::size_t dimension);
std::shared_ptr<CoachBackend> make_coach(const BackendConfig& config, const CoachOptions& options);

}  // namespace coachd
