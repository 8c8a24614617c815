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

#include "coachd/sim.hpp"

#include <algorithm>
#include <cstdio>
#include <deque>
#include <fstream>
#include <random>
#include <sstream>

namespace coachd {

namespace {

constexpr std::string_view kTrapNames[] = {"none", "loop_cycle", "captcha_gate", "dead_end"};

struct Theme {
    std::string_view name;
    std::string_view title;
    std::array<std::string_view, 8> nouns;
};

// Each site index gets its own vocabulary so stub embeddings separate domains.
constexpr std::array<Theme, 8> kThemes{{
    {"shop", "Gadget Shop", {"Electronics", "Laptops", "Ultrabooks", "Accessories", "Chargers", "Batteries", "Warranty", "Checkout"}},
    {"travel", "Trip Planner", {"Destinations", "Europe", "Lisbon", "Hotels", "Riverside", "Rooms", "Rates", "Booking"}},
    {"recipes", "Kitchen Notes", {"Cuisines", "Italian", "Pasta", "Baked", "Lasagna", "Ingredients", "Steps", "Servings"}},
    {"news", "Daily Ledger", {"Sections", "Science", "Space", "Missions", "Orbiters", "Telescope", "Images", "Gallery"}},
    {"jobs", "Career Board", {"Industries", "Software", "Backend", "Remote", "Senior", "Listings", "Salary", "Apply"}},
    {"homes", "Home Finder", {"Regions", "Coastal", "Harbor", "Apartments", "Two Bedroom", "Floorplans", "Pricing", "Tours"}},
    {"library", "City Library", {"Catalog", "Fiction", "Mystery", "Authors", "Series", "Volumes", "Availability", "Holds"}},
    {"weather", "Sky Watch", {"Forecasts", "Regional", "Mountains", "Alpine", "Summit", "Hourly", "Wind", "Alerts"}},
}};

constexpr std::array<std::string_view, 4> kLoopLures{"Trending now", "You may also like", "Popular picks", "Recently viewed"};
constexpr std::array<std::string_view, 4> kCaptchaLures{"Members prices", "Exclusive deals", "Check availability fast", "Sign in for offers"};
constexpr std::array<std::string_view, 4> kDeadEndLures{"Archive", "Old catalog", "Legacy pages", "Clearance corner"};

std::uint64_t mix(std::uint64_t a, std::uint64_t b) {
    std::uint64_t x = a ^ (b + 0x9e3779b97f4a7c15ULL + (a << 6) + (a >> 2));
    x ^= x >> 33;
    x *= 0xff51afd7ed558ccdULL;
    x ^= x >> 33;
    x *= 0xc4ceb9fe1a85ec53ULL;
    x ^= x >> 33;
    return x;
}

}  // namespace

std::string_view to_string(TrapClass trap) { return kTrapNames[static_cast<std::size_t>(trap)]; }

TrapClass trap_from_string(std::string_view text) {
    for (std::size_t i = 0; i < std::size(kTrapNames); ++i) {
        if (kTrapNames[i] == text) return static_cast<TrapClass>(i);
    }
    throw Error(ErrorKind::validation, "unknown trap class: " + std::string(text));
}

const Page& SyntheticSite::page(const std::string& id) const {
    for (const auto& p : pages) {
        if (p.id == id) return p;
    }
    throw Error(ErrorKind::lookup, "unknown page: " + id);
}

std::vector<const Edge*> SyntheticSite::out_edges(const std::string& id) const {
    std::vector<const Edge*> out;
    for (const auto& edge : edges) {
        if (edge.from == id) out.push_back(&edge);
    }
    return out;
}

void validate(const SyntheticSite& site) {
    std::set<std::string> ids;
    for (const auto& page : site.pages) {
        if (page.id.empty()) throw Error(ErrorKind::validation, "page with empty id");
        if (!ids.insert(page.id).second) {
            throw Error(ErrorKind::validation, "duplicate page id: " + page.id);
        }
    }
    for (const auto& edge : site.edges) {
        if (ids.count(edge.from) == 0 || ids.count(edge.to) == 0) {
            throw Error(ErrorKind::validation, "edge references an unknown page: " + edge.label);
        }
        if (trim(edge.label).empty()) throw Error(ErrorKind::validation, "edge with empty label");
    }
    if (ids.count(site.start) == 0 || ids.count(site.goal) == 0) {
        throw Error(ErrorKind::validation, "start or goal page missing");
    }
    if (site.page(site.start).trap != TrapClass::none || site.page(site.goal).trap != TrapClass::none) {
        throw Error(ErrorKind::validation, "start and goal must not be trap pages");
    }
    for (const auto& page : site.pages) {
        if (page.trap == TrapClass::loop_cycle && site.out_edges(page.id).empty()) {
            throw Error(ErrorKind::validation, "loop page without a cycle edge: " + page.id);
        }
    }
    std::set<std::string> seen{site.start};
    std::deque<std::string> queue{site.start};
    while (!queue.empty()) {
        auto id = queue.front();
        queue.pop_front();
        for (const auto* edge : site.out_edges(id)) {
            if (edge->trap != TrapClass::none || site.page(edge->to).trap != TrapClass::none) continue;
            if (seen.insert(edge->to).second) queue.push_back(edge->to);
        }
    }
    if (seen.count(site.goal) == 0) {
        throw Error(ErrorKind::validation, "goal is unreachable through untrapped pages");
    }
}

Json to_json(const SyntheticSite& site) {
    Json pages = Json::array();
    for (const auto& page : site.pages) {
        Json p{{"id", page.id}, {"title", page.title}, {"text", page.text}};
        if (page.trap != TrapClass::none) p["trap"] = std::string(to_string(page.trap));
        pages.push_back(p);
    }
    Json edges = Json::array();
    for (const auto& edge : site.edges) {
        Json e{{"from", edge.from}, {"to", edge.to}, {"label", edge.label}};
        if (edge.trap != TrapClass::none) e["trap"] = std::string(to_string(edge.trap));
        edges.push_back(e);
    }
    return Json{{"site_id", site.site_id}, {"domain_root", site.domain_root},
                {"goal_text", site.goal_text}, {"start", site.start},
                {"goal", site.goal},       {"pages", pages},
                {"edges", edges}};
}

SyntheticSite site_from_json(const Json& json) {
    SyntheticSite site;
    try {
        site.site_id = json.at("site_id").get<std::string>();
        site.domain_root = json.at("domain_root").get<std::string>();
        site.goal_text = json.at("goal_text").get<std::string>();
        site.start = json.at("start").get<std::string>();
        site.goal = json.at("goal").get<std::string>();
        for (const auto& p : json.at("pages")) {
            site.pages.push_back({p.at("id").get<std::string>(), p.value("title", std::string()),
                                  p.value("text", std::string()),
                                  trap_from_string(p.value("trap", std::string("none")))});
        }
        for (const auto& e : json.at("edges")) {
            site.edges.push_back({e.at("from").get<std::string>(), e.at("to").get<std::string>(),
                                  e.at("label").get<std::string>(),
                                  trap_from_string(e.value("trap", std::string("none")))});
        }
    } catch (const Json::exception& e) {
        throw Error(ErrorKind::validation, std::string("bad site definition: ") + e.what());
    }
    validate(site);
    return site;
}

SyntheticSite read_site(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorKind::io, "cannot read site file: " + path.string());
    Json json = Json::parse(in, nullptr, false);
    if (json.is_discarded()) throw Error(ErrorKind::parse, "site file is not JSON: " + path.string());
    return site_from_json(json);
}

std::string render_observation(const SyntheticSite& site, const std::string& page_id) {
    const auto& page = site.page(page_id);
    std::string out = "Page: " + page.title + " | " + page.text + " | links: ";
    auto edges = site.out_edges(page_id);
    if (edges.empty()) out += "(none)";
    for (std::size_t i = 0; i < edges.size(); ++i) {
        if (i > 0) out += "; ";
        out += edges[i]->label;
    }
    return out;
}

Json to_json(const AgentProfile& profile) {
    Json susceptibility = Json::object();
    for (const auto& [trap, p] : profile.susceptibility) {
        susceptibility[std::string(to_string(trap))] = p;
    }
    return Json{{"agent_id", profile.agent_id},
                {"model_name", profile.model_name},
                {"susceptibility", susceptibility}};
}

AgentProfile agent_from_json(const Json& json) {
    AgentProfile profile;
    profile.agent_id = json.at("agent_id").get<std::string>();
    profile.model_name = json.value("model_name", profile.agent_id);
    if (json.contains("susceptibility")) {
        for (const auto& [key, value] : json["susceptibility"].items()) {
            double p = value.get<double>();
            if (!(p >= 0.0 && p <= 1.0)) {
                throw Error(ErrorKind::validation, "susceptibility must be in [0, 1]");
            }
            profile.susceptibility[trap_from_string(key)] = p;
        }
    }
    return profile;
}

ScriptedAgent::ScriptedAgent(const SyntheticSite& site, AgentProfile profile, std::uint64_t seed)
    : site_(site), profile_(std::move(profile)), seed_(seed), current_(site.start) {
    history_.push_back({site.start, {}});
}

double ScriptedAgent::draw(std::string_view key) const {
    auto h = fnv1a64(site_.site_id + '\x1f' + profile_.agent_id + '\x1f' + std::string(key));
    h = mix(h, seed_);
    return static_cast<double>(h >> 11) * 0x1.0p-53;
}

bool ScriptedAgent::edge_usable(const Edge& edge) const {
    return edge.trap == TrapClass::none && site_.page(edge.to).trap == TrapClass::none &&
           site_.page(edge.from).trap == TrapClass::none && pruned_.count(edge.label) == 0;
}

std::map<std::string, std::size_t> ScriptedAgent::safe_distances() const {
    std::map<std::string, std::size_t> dist{{site_.goal, 0}};
    std::deque<std::string> queue{site_.goal};
    while (!queue.empty()) {
        auto id = queue.front();
        queue.pop_front();
        for (const auto& edge : site_.edges) {
            if (edge.to != id || !edge_usable(edge) || dist.count(edge.from) > 0) continue;
            dist[edge.from] = dist[id] + 1;
            queue.push_back(edge.from);
        }
    }
    return dist;
}

void ScriptedAgent::on_advice(const std::string& advice) {
    if (to_lower(advice).find("avoid") == std::string::npos) return;
    // A repeated warning was already acted on.
    if (advice == last_advice_) return;
    last_advice_ = advice;
    auto labels = quoted_labels(advice);
    if (labels.empty()) {
        escaping_ = true;
        return;
    }
    for (auto& label : labels) pruned_.insert(label);
    escaping_ = true;
}

ScriptedAgent::Decision ScriptedAgent::step() {
    Decision decision;
    decision.observation = render_observation(site_, current_);
    const auto key_prefix = std::to_string(steps_) + '\x1f';
    ++steps_;

    auto move = [&](const Edge& edge) {
        decision.action = Action{"click", {{"target", edge.label}}};
        history_.push_back({edge.to, edge.label});
        current_ = edge.to;
    };

    const auto& page = site_.page(current_);
    if (escaping_) {
        const bool bad = page.trap != TrapClass::none || pruned_.count(history_.back().via) > 0;
        if (bad && history_.size() > 1) {
            history_.pop_back();
            current_ = history_.back().page;
            decision.action = Action{"go_back", {}};
            decision.self_eval = "Backing out of a route flagged as a trap";
            return decision;
        }
        escaping_ = false;
    }

    if (current_ == site_.goal) {
        decision.action = Action{"done", {}};
        decision.done = true;
        decision.success = true;
        decision.self_eval = "Task completed successfully";
        return decision;
    }

    if (page.trap != TrapClass::none) {
        decision.self_eval = "Still working on this page";
        switch (page.trap) {
            case TrapClass::loop_cycle: move(*site_.out_edges(current_).front()); break;
            case TrapClass::captcha_gate:
                decision.action = Action{"click", {{"target", "I am not a robot"}}};
                break;
            default: decision.action = Action{"scroll", {{"target", "results"}}}; break;
        }
        return decision;
    }

    decision.self_eval = "Progressing toward the goal";
    auto edges = site_.out_edges(current_);
    std::vector<const Edge*> lures;
    for (const auto* edge : edges) {
        bool trap = edge->trap != TrapClass::none || site_.page(edge->to).trap != TrapClass::none;
        if (trap && pruned_.count(edge->label) == 0) lures.push_back(edge);
    }
    std::sort(lures.begin(), lures.end(),
              [](const Edge* a, const Edge* b) { return a->label < b->label; });
    for (const auto* edge : lures) {
        auto trap = edge->trap != TrapClass::none ? edge->trap : site_.page(edge->to).trap;
        auto it = profile_.susceptibility.find(trap);
        double p = it == profile_.susceptibility.end() ? 0.0 : it->second;
        if (draw(key_prefix + "lure" + '\x1f' + edge->label) < p) {
            move(*edge);
            return decision;
        }
    }

    auto dist = safe_distances();
    const Edge* best = nullptr;
    std::size_t best_dist = 0;
    double best_noise = 0.0;
    for (const auto* edge : edges) {
        if (!edge_usable(*edge)) continue;
        auto it = dist.find(edge->to);
        if (it == dist.end()) continue;
        double noise = draw(key_prefix + "tie" + '\x1f' + edge->label);
        if (best == nullptr || it->second < best_dist ||
            (it->second == best_dist && noise < best_noise)) {
            best = edge;
            best_dist = it->second;
            best_noise = noise;
        }
    }
    if (best == nullptr) {
        decision.action = Action{"done", {}};
        decision.done = true;
        decision.success = false;
        decision.self_eval = "Task failed: no remaining route to the goal";
        return decision;
    }
    move(*best);
    return decision;
}

Json to_json(const EpisodeResult& result, bool include_log) {
    Json out{{"task_id", result.task_id},
             {"site_id", result.site_id},
             {"agent_id", result.agent_id},
             {"seed", result.seed},
             {"coached", result.coached},
             {"success", result.success},
             {"steps", result.steps},
             {"advice_messages", result.advice_messages},
             {"warnings", result.warnings}};
    out["episode_id"] = result.episode_id ? Json(*result.episode_id) : Json(nullptr);
    if (include_log) out["log"] = to_json(result.log);
    return out;
}

EpisodeResult run_episode(const SyntheticSite& site, const AgentProfile& agent, std::uint64_t seed,
                          const std::string& task_id, CoachLink* link,
                          const EpisodeOptions& options) {
    EpisodeResult result;
    result.task_id = task_id;
    result.site_id = site.site_id;
    result.agent_id = agent.agent_id;
    result.seed = seed;

    auto& log = result.log;
    log.task_id = task_id;
    log.goal = site.goal_text;
    log.domain_root = site.domain_root;
    log.model_name = agent.model_name;

    std::string session;
    auto drop_link = [&](const std::exception& e) {
        result.warnings.push_back(std::string("sidecar unavailable, continuing uncoached: ") +
                                  e.what());
        link = nullptr;
    };
    if (link != nullptr) {
        try {
            session = link->open({task_id, site.goal_text, site.domain_root, agent.model_name, {}});
        } catch (const std::exception& e) {
            drop_link(e);
        }
    }
    result.coached = link != nullptr;

    ScriptedAgent walker(site, agent, seed);
    bool done = false;
    while (log.steps.size() < options.hard_cap && !done) {
        auto decision = walker.step();
        StepRecord record;
        record.step_index = log.steps.size();
        record.observation.text = decision.observation;
        record.action = decision.action;
        record.self_eval = decision.self_eval;
        record.timestamp_ms =
            options.timestamp_base_ms + static_cast<std::int64_t>(record.step_index) * 1000;
        log.steps.push_back(record);
        done = decision.done;
        auto outcome = done ? (decision.success ? TriState::yes : TriState::no) : TriState::unknown;
        auto line = canonical_step_line(log, record, done, outcome).dump() + "\n";
        if (done) {
            log.terminal_marker = true;
            log.declared_success = outcome;
            result.success = decision.success;
        }
        if (link == nullptr) continue;
        try {
            if (done) {
                result.episode_id = link->finalize(session, line).episode_id;
            } else {
                auto response = link->submit(session, line);
                for (const auto& message : response.advice) {
                    ++result.advice_messages;
                    walker.on_advice(message.content);
                }
                if (response.finalized) result.episode_id = response.episode_id;
            }
        } catch (const std::exception& e) {
            drop_link(e);
        }
    }
    log.status = TrajectoryStatus::complete;
    result.steps = log.steps.size();
    return result;
}

std::string task_id_for(const SyntheticSite& site, std::uint64_t seed, std::string_view prefix) {
    return std::string(prefix) + site.site_id + "#" + std::to_string(seed);
}

BenchmarkReport run_benchmark(const SuiteConfig& suite, CoachLink* link,
                              std::string_view task_prefix) {
    if (suite.sites.empty() || suite.agents.empty() || suite.seeds.empty()) {
        throw Error(ErrorKind::validation, "suite needs at least one site, agent and seed");
    }
    BenchmarkReport report;
    std::size_t total_steps = 0;
    std::int64_t clock = 1'700'000'000'000;
    for (const auto& site : suite.sites) {
        for (const auto& agent : suite.agents) {
            for (auto seed : suite.seeds) {
                EpisodeOptions options{suite.hard_cap, clock};
                auto result = run_episode(site, agent, seed, task_id_for(site, seed, task_prefix),
                                          link, options);
                clock += 3'600'000;
                ++report.episodes;
                if (result.success) ++report.successes;
                total_steps += result.steps;
                report.results.push_back(std::move(result));
            }
        }
    }
    report.success_rate = static_cast<double>(report.successes) / report.episodes;
    report.mean_steps = static_cast<double>(total_steps) / report.episodes;
    return report;
}

Json to_json(const BenchmarkReport& report, bool include_episodes) {
    Json out{{"episodes", report.episodes},
             {"successes", report.successes},
             {"success_rate", report.success_rate},
             {"mean_steps", report.mean_steps}};
    if (include_episodes) {
        Json episodes = Json::array();
        for (const auto& result : report.results) episodes.push_back(to_json(result));
        out["results"] = episodes;
    }
    return out;
}

std::string render(const BenchmarkReport& report, const std::string& label) {
    char line[200];
    std::snprintf(line, sizeof line, "%-22s episodes %4zu  success_rate %.3f  mean_steps %6.2f\n",
                  label.c_str(), report.episodes, report.success_rate, report.mean_steps);
    return line;
}

SyntheticSite generate_site(std::size_t index, const SiteGenParams& params, std::uint64_t seed) {
    if (params.depth == 0 || params.depth + 1 > kThemes[0].nouns.size()) {
        throw Error(ErrorKind::validation, "depth must be between 1 and 7");
    }
    const auto& theme = kThemes[index % kThemes.size()];
    std::mt19937_64 rng(mix(seed, index));
    std::uniform_real_distribution<double> uniform(0.0, 1.0);

    SyntheticSite site;
    site.site_id = std::string(theme.name) + "-" + std::to_string(index);
    site.domain_root = std::string(theme.name) + std::to_string(index) + ".example";
    const std::string goal_noun(theme.nouns[params.depth]);
    site.goal_text = "Open the " + goal_noun + " page of " + std::string(theme.title);
    site.start = "p0";
    site.goal = "p" + std::to_string(params.depth);

    std::set<std::string> labels;
    auto unique = [&](std::string label) {
        auto base = label;
        for (int n = 2; labels.count(label) > 0; ++n) label = base + " " + std::to_string(n);
        labels.insert(label);
        return label;
    };

    for (std::size_t k = 0; k <= params.depth; ++k) {
        std::string title = k == 0 ? std::string(theme.title) + " Home"
                                   : std::string(theme.title) + " " + std::string(theme.nouns[k]);
        std::string text = k == 0 ? "Welcome to " + std::string(theme.title)
                                  : "Browse " + to_lower(theme.nouns[k]) + " on " +
                                        std::string(theme.title);
        if (k == params.depth) text = std::string(theme.nouns[k]) + " details for " + std::string(theme.title);
        site.pages.push_back({"p" + std::to_string(k), title, text, TrapClass::none});
    }
    for (std::size_t k = 0; k < params.depth; ++k) {
        site.edges.push_back({"p" + std::to_string(k), "p" + std::to_string(k + 1),
                              unique(std::string(theme.nouns[k + 1])), TrapClass::none});
        // Safe side branches lead back home.
        for (std::size_t b = 1; b < params.branching; ++b) {
            auto id = "s" + std::to_string(k) + "_" + std::to_string(b);
            std::string noun(theme.nouns[(k + b + 3) % theme.nouns.size()]);
            site.pages.push_back({id, std::string(theme.title) + " " + noun + " overview",
                                  "Overview of " + to_lower(noun), TrapClass::none});
            site.edges.push_back({"p" + std::to_string(k), id, unique(noun + " overview"),
                                  TrapClass::none});
            site.edges.push_back({id, "p0", unique("Home from " + noun), TrapClass::none});
        }
    }

    const std::array<TrapClass, 3> classes{TrapClass::loop_cycle, TrapClass::captcha_gate,
                                           TrapClass::dead_end};
    for (std::size_t k = 0; k < params.depth; ++k) {
        if (uniform(rng) >= params.trap_probability) continue;
        auto trap = classes[static_cast<std::size_t>(uniform(rng) * 3.0) % 3];
        auto pick = static_cast<std::size_t>(uniform(rng) * 4.0) % 4;
        auto from = "p" + std::to_string(k);
        auto id = "t" + std::to_string(k);
        std::string noun(theme.nouns[k + 1]);
        switch (trap) {
            case TrapClass::loop_cycle: {
                site.pages.push_back({id + "a", std::string(theme.title) + " Trending " + noun,
                                      "More items like " + to_lower(noun), TrapClass::loop_cycle});
                site.pages.push_back({id + "b", std::string(theme.title) + " Related " + noun,
                                      "Similar " + to_lower(noun) + " suggestions",
                                      TrapClass::loop_cycle});
                auto cycle = unique("More like " + noun);
                site.edges.push_back({from, id + "a", unique(std::string(kLoopLures[pick])),
                                      TrapClass::loop_cycle});
                site.edges.push_back({id + "a", id + "b", cycle, TrapClass::none});
                site.edges.push_back({id + "b", id + "a", cycle, TrapClass::none});
                break;
            }
            case TrapClass::captcha_gate:
                site.pages.push_back({id, "Security check",
                                      "Please solve the CAPTCHA to continue to " + to_lower(noun),
                                      TrapClass::captcha_gate});
                site.edges.push_back({from, id, unique(std::string(kCaptchaLures[pick])),
                                      TrapClass::captcha_gate});
                break;
            default:
                site.pages.push_back({id, std::string(theme.title) + " " + noun + " archive",
                                      "This section is a dead end with no results",
                                      TrapClass::dead_end});
                site.edges.push_back({from, id, unique(std::string(kDeadEndLures[pick])),
                                      TrapClass::dead_end});
                break;
        }
    }
    validate(site);
    return site;
}

SyntheticSite linear_site(std::size_t length, const std::string& site_id) {
    if (length == 0) throw Error(ErrorKind::validation, "length must be positive");
    SyntheticSite site;
    site.site_id = site_id;
    site.domain_root = site_id + ".example";
    site.goal_text = "Reach the last page of " + site_id;
    site.start = "p0";
    site.goal = "p" + std::to_string(length - 1);
    for (std::size_t i = 0; i < length; ++i) {
        site.pages.push_back({"p" + std::to_string(i), "Page " + std::to_string(i),
                              "Step " + std::to_string(i) + " of the chain", TrapClass::none});
        if (i + 1 < length) {
            site.edges.push_back({"p" + std::to_string(i), "p" + std::to_string(i + 1),
                                  "Next " + std::to_string(i + 1), TrapClass::none});
        }
    }
    validate(site);
    return site;
}

namespace {

std::vector<AgentProfile> default_agents() {
    auto profile = [](std::string id, double p) {
        return AgentProfile{id, "scripted-" + id,
                            {{TrapClass::loop_cycle, p},
                             {TrapClass::captcha_gate, p},
                             {TrapClass::dead_end, p}}};
    };
    return {profile("steady", 0.0), profile("curious", 0.4), profile("reckless", 0.8)};
}

}  // namespace

Json to_json(const CalibrationParams& params) {
    Json agents = Json::array();
    for (const auto& agent : params.agents) agents.push_back(to_json(agent));
    return Json{{"sites", params.sites},
                {"depth", params.site.depth},
                {"branching", params.site.branching},
                {"trap_probability", params.site.trap_probability},
                {"agents", agents},
                {"seeds", params.seeds},
                {"memory_seeds", params.memory_seeds},
                {"generator_seed", params.generator_seed},
                {"hard_cap", params.hard_cap}};
}

CalibrationParams calibration_from_json(const Json& json) {
    CalibrationParams params;
    try {
        params.sites = json.value("sites", params.sites);
        params.site.depth = json.value("depth", params.site.depth);
        params.site.branching = json.value("branching", params.site.branching);
        params.site.trap_probability = json.value("trap_probability", params.site.trap_probability);
        params.seeds = json.value("seeds", params.seeds);
        params.memory_seeds = json.value("memory_seeds", params.memory_seeds);
        params.generator_seed = json.value("generator_seed", params.generator_seed);
        params.hard_cap = json.value("hard_cap", params.hard_cap);
        if (json.contains("agents")) {
            for (const auto& agent : json["agents"]) params.agents.push_back(agent_from_json(agent));
        }
    } catch (const Json::exception& e) {
        throw Error(ErrorKind::validation, std::string("bad calibration config: ") + e.what());
    }
    return params;
}

SuiteConfig calibration_suite(const CalibrationParams& params) {
    SuiteConfig suite;
    for (std::size_t i = 0; i < params.sites; ++i) {
        suite.sites.push_back(generate_site(i, params.site, params.generator_seed));
    }
    suite.agents = params.agents.empty() ? default_agents() : params.agents;
    suite.seeds = params.seeds;
    suite.hard_cap = params.hard_cap;
    return suite;
}

SuiteConfig memory_suite(const CalibrationParams& params) {
    auto suite = calibration_suite(params);
    suite.seeds = params.memory_seeds;
    return suite;
}

std::vector<MemoryRecord> seeded_failure_memory(const CalibrationParams& params,
                                                SummarizerBackend& summarizer,
                                                EmbedderBackend& embedder) {
    auto report = run_benchmark(memory_suite(params), nullptr, "seed:");
    std::vector<MemoryRecord> records;
    std::size_t n = 0;
    for (const auto& result : report.results) {
        if (result.success) continue;
        char id[32];
        std::snprintf(id, sizeof id, "ep-seed-%04zu", n++);
        auto condensed = condense(result.log, summarizer, embedder, {params.hard_cap, id});
        records.push_back(to_memory_record(condensed));
    }
    return records;
}

}  // namespace coachd
