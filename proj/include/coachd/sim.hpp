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

#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "coachd/client.hpp"
#include "coachd/common.hpp"
#include "coachd/condenser.hpp"
#include "coachd/trajectory.hpp"

namespace coachd {

enum class TrapClass { none, loop_cycle, captcha_gate, dead_end };

std::string_view to_string(TrapClass trap);
TrapClass trap_from_string(std::string_view text);

struct Page {
    std::string id;
    std::string title;
    std::string text;
    TrapClass trap = TrapClass::none;  // page belongs to a trap region
};

struct Edge {
    std::string from;
    std::string to;
    std::string label;
    TrapClass trap = TrapClass::none;  // the lure into a trap region
};

struct SyntheticSite {
    std::string site_id;
    std::string domain_root;
    std::string goal_text;
    std::string start;
    std::string goal;
    std::vector<Page> pages;
    std::vector<Edge> edges;

    const Page& page(const std::string& id) const;
    std::vector<const Edge*> out_edges(const std::string& id) const;
};

/// Throws validation error unless the goal is reachable from the start
/// through untrapped edges and pages, ids are unique and edges resolve.
void validate(const SyntheticSite& site);

Json to_json(const SyntheticSite& site);
SyntheticSite site_from_json(const Json& json);
SyntheticSite read_site(const std::filesystem::path& path);

/// "Page: <title> | <text> | links: a; b"
std::string render_observation(const SyntheticSite& site, const std::string& page_id);

struct AgentProfile {
    std::string agent_id;
    std::string model_name;
    /// Probability of taking a trap edge of that class when one is offered.
    /// Once inside a trap region the agent is stuck until advised.
    std::map<TrapClass, double> susceptibility;
};

Json to_json(const AgentProfile& profile);
AgentProfile agent_from_json(const Json& json);

/// Goal-directed walker. Prefers the edge closest to the goal through safe,
/// unpruned edges; trap edges lure it with the per-class probability using
/// counter-based draws keyed by (seed, step, label). Advice containing
/// "avoid" prunes every quoted label and backs the agent out of trap pages.
class ScriptedAgent {
public:
    ScriptedAgent(const SyntheticSite& site, AgentProfile profile, std::uint64_t seed);

    struct Decision {
        Action action;
        std::string observation;
        std::string self_eval;
        bool done = false;
        bool success = false;
    };

    /// Chooses and performs the next action.
    Decision step();
    void on_advice(const std::string& advice);

    const std::string& current_page() const { return current_; }
    const std::set<std::string>& pruned() const { return pruned_; }
    std::size_t steps_taken() const { return steps_; }

private:
    double draw(std::string_view key) const;
    std::map<std::string, std::size_t> safe_distances() const;
    bool edge_usable(const Edge& edge) const;

    const SyntheticSite& site_;
    AgentProfile profile_;
    std::uint64_t seed_;
    std::string current_;
    struct Visit {
        std::string page;
        std::string via;  // label used to arrive; empty for the start page
    };
    std::vector<Visit> history_;
    std::set<std::string> pruned_;
    std::string last_advice_;
    bool escaping_ = false;
    std::size_t steps_ = 0;
};

struct EpisodeOptions {
    std::size_t hard_cap = kDefaultHardCap;
    std::int64_t timestamp_base_ms = 1'700'000'000'000;
};

struct EpisodeResult {
    std::string task_id;
    std::string site_id;
    std::string agent_id;
    std::uint64_t seed = 0;
    bool coached = false;
    bool success = false;
    std::size_t steps = 0;
    std::size_t advice_messages = 0;
    std::optional<std::string> episode_id;
    std::vector<std::string> warnings;
    TrajectoryLog log;
};

Json to_json(const EpisodeResult& result, bool include_log = false);

/// Without a link the episode runs uncoached. A link failure mid-episode
/// drops the link with a warning and the episode continues uncoached.
EpisodeResult run_episode(const SyntheticSite& site, const AgentProfile& agent, std::uint64_t seed,
                          const std::string& task_id, CoachLink* link,
                          const EpisodeOptions& options = {});

struct SuiteConfig {
    std::vector<SyntheticSite> sites;
    std::vector<AgentProfile> agents;
    std::vector<std::uint64_t> seeds;
    std::size_t hard_cap = kDefaultHardCap;
};

struct BenchmarkReport {
    std::size_t episodes = 0;
    std::size_t successes = 0;
    double success_rate = 0.0;
    double mean_steps = 0.0;
    std::vector<EpisodeResult> results;
};

Json to_json(const BenchmarkReport& report, bool include_episodes = true);
std::string render(const BenchmarkReport& report, const std::string& label);

/// Task id shared by every agent attempting (site, seed).
std::string task_id_for(const SyntheticSite& site, std::uint64_t seed,
                        std::string_view prefix = {});

/// Sequential, in (site, agent, seed) order, so dynamic memory grows deterministically.
BenchmarkReport run_benchmark(const SuiteConfig& suite, CoachLink* link,
                              std::string_view task_prefix = {});

struct SiteGenParams {
    std::size_t depth = 5;          // clicks from start to goal
    std::size_t branching = 2;      // safe alternatives per page
    double trap_probability = 0.6;  // chance a path page offers a trap edge
};

/// Deterministic layered site with a themed vocabulary per index.
SyntheticSite generate_site(std::size_t index, const SiteGenParams& params, std::uint64_t seed);

/// A trap-free chain of `length` pages.
SyntheticSite linear_site(std::size_t length, const std::string& site_id = "linear");

struct CalibrationParams {
    std::size_t sites = 8;
    SiteGenParams site;
    std::vector<AgentProfile> agents;
    std::vector<std::uint64_t> seeds{1, 2, 3};
    std::vector<std::uint64_t> memory_seeds{101, 102, 103};
    std::uint64_t generator_seed = 7;
    std::size_t hard_cap = kDefaultHardCap;
};

Json to_json(const CalibrationParams& params);
CalibrationParams calibration_from_json(const Json& json);

SuiteConfig calibration_suite(const CalibrationParams& params);
/// Same sites and agents, the memory seeds instead of the evaluation seeds.
SuiteConfig memory_suite(const CalibrationParams& params);

/// Runs the memory suite uncoached under task ids prefixed "seed:" and
/// condenses every failed episode into a storable record.
std::vector<MemoryRecord> seeded_failure_memory(const CalibrationParams& params,
                                                SummarizerBackend& summarizer,
                                                EmbedderBackend& embedder);

}  // namespace coachd
