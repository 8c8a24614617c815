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

// Acceptance runner. Prints one PASS/FAIL line per criterion; exit status 1
// when any criterion fails. Optional arguments select criteria by name.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <mutex>
#include <random>
#include <set>
#include <sstream>

#include "coachd/coach.hpp"
#include "coachd/condenser.hpp"
#include "coachd/memory_store.hpp"
#include "coachd/scheduler.hpp"
#include "coachd/sidecar.hpp"
#include "coachd/sim.hpp"
#include "coachd/synthetic.hpp"

using namespace coachd;

namespace {

// Tolerances and sizes, pinned.
constexpr double kLatencyMaxRatio = 1.5;
constexpr double kLatencyMaxMeanMs = 50.0;
constexpr double kLatencyBudgetS = 120.0;
constexpr double kRecallFloor = 0.95;
constexpr double kAnnBudgetS = 300.0;
constexpr double kCosineTolerance = 1e-9;
constexpr double kGoldenTolerance = 1e-12;
constexpr double kCoachingMargin = 0.10;
constexpr double kSuiteBudgetS = 120.0;
constexpr std::size_t kFuzzCases = 10'000;

struct Outcome {
    bool pass = false;
    std::string detail;
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
    return std::chrono::duration<double>(Clock::now() - start).count();
}

std::string fmt(const char* format, ...) __attribute__((format(printf, 1, 2)));
std::string fmt(const char* format, ...) {
    char buf[512];
    va_list args;
    va_start(args, format);
    std::vsnprintf(buf, sizeof buf, format, args);
    va_end(args);
    return buf;
}

Vector to_vector(const std::vector<float>& v) { return Vector(v.begin(), v.end()); }

ServiceConfig small_service(std::size_t dimension = 64) {
    ServiceConfig config;
    config.dimension = dimension;
    config.coach_deadline_s = 0;
    config.use_ann = false;
    return config;
}

// ---------------------------------------------------------------------------

Outcome latency_flatness() {
    const std::size_t records = 600, dimension = 1536, repeats = 200, max_k = 10;
    auto start = Clock::now();
    StoreConfig config;
    config.dimension = dimension;
    MemoryStore store(config);
    std::mt19937_64 rng(1);
    for (std::size_t i = 0; i < records; ++i) {
        store.insert(synthetic_record(i, random_unit_vector(rng, dimension),
                                      "task-" + std::to_string(i % 50)));
    }
    std::vector<Vector> queries;
    for (int q = 0; q < 16; ++q) queries.push_back(to_vector(random_unit_vector(rng, dimension)));
    for (int w = 0; w < 50; ++w) store.search_exact(queries[w % queries.size()], 5);

    // Interleave k within each repeat so drift hits every k alike.
    std::vector<double> total_ms(max_k + 1, 0.0);
    for (std::size_t r = 0; r < repeats; ++r) {
        for (std::size_t k = 1; k <= max_k; ++k) {
            const auto& query = queries[(r + k) % queries.size()];
            auto t0 = Clock::now();
            auto result = store.search_exact(query, k);
            total_ms[k] += std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
            if (result.hits.size() != k) return {false, "wrong hit count at k=" + std::to_string(k)};
        }
    }
    double lo = INFINITY, hi = 0.0;
    std::string means;
    for (std::size_t k = 1; k <= max_k; ++k) {
        double mean = total_ms[k] / repeats;
        lo = std::min(lo, mean);
        hi = std::max(hi, mean);
        means += fmt("%s%.3f", k == 1 ? "" : " ", mean);
    }
    double elapsed = seconds_since(start);
    bool pass = hi / lo <= kLatencyMaxRatio && hi <= kLatencyMaxMeanMs && elapsed <= kLatencyBudgetS;
    return {pass, fmt("mean ms by k=1..10 [%s]; max/min %.3f (<= %.1f), max %.3f ms (<= %.0f), "
                      "bench %.1f s (<= %.0f)",
                      means.c_str(), hi / lo, kLatencyMaxRatio, hi, kLatencyMaxMeanMs, elapsed,
                      kLatencyBudgetS)};
}

Outcome ann_fidelity() {
    const std::size_t records = 10'000, dimension = 1536, queries = 100, k = 5;
    auto start = Clock::now();
    StoreConfig config;
    config.dimension = dimension;
    MemoryStore store(config);
    std::mt19937_64 rng(2);
    for (std::size_t i = 0; i < records; ++i) {
        store.insert(synthetic_record(i, random_unit_vector(rng, dimension),
                                      "task-" + std::to_string(i % 500)));
    }
    double build_s = seconds_since(start);
    std::size_t hit = 0;
    for (std::size_t q = 0; q < queries; ++q) {
        auto query = to_vector(random_unit_vector(rng, dimension));
        auto exact = store.search_exact(query, k);
        auto ann = store.search_ann(query, k);
        std::set<std::string> got;
        for (const auto& h : ann.hits) got.insert(h.record->meta.episode_id);
        for (const auto& h : exact.hits) hit += got.count(h.record->meta.episode_id);
    }
    double recall = static_cast<double>(hit) / static_cast<double>(queries * k);
    double elapsed = seconds_since(start);
    return {recall >= kRecallFloor && elapsed <= kAnnBudgetS,
            fmt("recall@5 %.4f (>= %.2f) over %zu queries, %zu records x %zu dims; build %.1f s, "
                "bench %.1f s (<= %.0f)",
                recall, kRecallFloor, queries, records, dimension, build_s, elapsed, kAnnBudgetS)};
}

Outcome cosine_oracle() {
    std::mt19937_64 rng(3);
    std::uniform_int_distribution<std::size_t> dims(1, 1536);
    std::uniform_real_distribution<double> exponent(-3.0, 3.0);
    std::normal_distribution<double> normal;
    double worst = 0.0, worst_scale = 0.0;
    const std::size_t pairs = 10'000;
    for (std::size_t n = 0; n < pairs; ++n) {
        std::size_t d = dims(rng);
        Vector a(d), b(d);
        double sa = std::pow(10.0, exponent(rng)), sb = std::pow(10.0, exponent(rng));
        for (std::size_t i = 0; i < d; ++i) a[i] = sa * normal(rng);
        switch (n % 4) {
            case 0:  // nearly parallel
                for (std::size_t i = 0; i < d; ++i) b[i] = a[i] * sb / sa + 1e-7 * sb * normal(rng);
                break;
            case 1:  // nearly opposite
                for (std::size_t i = 0; i < d; ++i) b[i] = -a[i] * sb / sa + 1e-7 * sb * normal(rng);
                break;
            default:
                for (std::size_t i = 0; i < d; ++i) b[i] = sb * normal(rng);
        }
        long double dot = 0, na = 0, nb = 0;
        for (std::size_t i = 0; i < d; ++i) {
            dot += static_cast<long double>(a[i]) * b[i];
            na += static_cast<long double>(a[i]) * a[i];
            nb += static_cast<long double>(b[i]) * b[i];
        }
        long double oracle = dot / (sqrtl(na) * sqrtl(nb));
        oracle = std::clamp<long double>(oracle, -1.0L, 1.0L);
        double score = cosine_score(a, b);
        worst = std::max(worst, static_cast<double>(fabsl(score - oracle)));
        for (double alpha : {1e-6, 1.0, 1e6}) {
            Vector scaled(a);
            for (auto& x : scaled) x *= alpha;
            worst_scale = std::max(worst_scale, std::fabs(cosine_score(scaled, b) - score));
        }
    }
    return {worst <= kCosineTolerance && worst_scale <= kCosineTolerance,
            fmt("%zu pairs: max |score - long double oracle| %.3g, max scale deviation %.3g "
                "for alpha in {1e-6, 1, 1e6} (tolerance %.0e)",
                pairs, worst, worst_scale, kCosineTolerance)};
}

Outcome leakage() {
    const std::size_t dimension = 64, tasks = 200;
    StoreConfig config;
    config.dimension = dimension;
    MemoryStore store(config);
    std::mt19937_64 rng(4);
    std::vector<std::vector<float>> embeddings;
    auto base = clustered_vectors(rng, 3000, dimension, 40, 0.2);
    for (std::size_t i = 0; i < base.size(); ++i) {
        store.insert(synthetic_record(i, base[i], "task-" + std::to_string(i % tasks), i % 3 == 0));
    }
    auto all = store.records();

    std::size_t queries = 0, leaked = 0, short_results = 0, returned = 0;
    for (; queries < 10'000; ++queries) {
        RetrievalFilter filter;
        Vector query;
        if (queries % 2 == 0) {
            // Query with a stored embedding so the excluded record would rank first.
            const auto& own = all[rng() % all.size()];
            query = to_vector(own->embedding);
            filter.exclude_task_ids.insert(own->meta.task_id);
        } else {
            query = to_vector(random_unit_vector(rng, dimension));
        }
        for (std::size_t extra = rng() % 30; extra > 0; --extra) {
            filter.exclude_task_ids.insert("task-" + std::to_string(rng() % tasks));
        }
        std::size_t k = 1 + rng() % 20;
        bool ann = queries % 4 >= 2;
        auto result = ann ? store.search_ann(query, k, filter) : store.search_exact(query, k, filter);
        for (const auto& hit : result.hits) {
            leaked += filter.exclude_task_ids.count(hit.record->meta.task_id);
        }
        returned += result.hits.size();
        if (result.hits.size() != k) ++short_results;
    }

    // Same property through the service path, which excludes by task id.
    auto service_config = small_service(dimension);
    auto shared = std::make_shared<MemoryStore>(service_config.store_config());
    auto backends = make_backends(service_config);
    for (std::size_t i = 0; i < 400; ++i) {
        auto record = synthetic_record(i, {}, "task-" + std::to_string(i % 40), i % 2 == 0);
        record.summary_text = "Visited page " + std::to_string(i % 25) + " and clicked around.";
        auto v = backends.embedder->embed(record.summary_text);
        record.embedding.assign(v.begin(), v.end());
        shared->insert(std::move(record));
    }
    SidecarService service(service_config, backends, shared);
    std::size_t service_queries = 0;
    for (; service_queries < 1000; ++service_queries) {
        auto task = "task-" + std::to_string(service_queries % 40);
        auto text = "Visited page " + std::to_string(service_queries % 25) + " and clicked around.";
        for (const auto& hit : service.search(text, 1 + service_queries % 10, task)) {
            leaked += hit.task_id == task;
            ++returned;
        }
    }
    return {leaked == 0 && short_results == 0,
            fmt("%zu store queries (exact and HNSW) + %zu service queries, %zu hits returned, "
                "%zu excluded task ids returned, %zu short results",
                queries, service_queries, returned, leaked, short_results)};
}

std::string step_line(const TrajectoryLog& meta, std::size_t index, const std::string& action,
                      const std::string& target, bool done, TriState outcome) {
    StepRecord record;
    record.step_index = index;
    record.observation.text = "Page: p" + std::to_string(index) + " | text";
    record.action.name = action;
    if (!target.empty()) record.action.args["target"] = target;
    record.self_eval = done ? "Finished" : "Progressing";
    record.timestamp_ms = 1'700'000'000'000 + static_cast<std::int64_t>(index) * 1000;
    return canonical_step_line(meta, record, done, outcome).dump() + "\n";
}

Outcome routing_soundness() {
    auto config = small_service();
    config.hard_cap = 12;
    auto store = std::make_shared<MemoryStore>(config.store_config());
    SidecarService service(config, make_backends(config), store);
    std::mt19937_64 rng(5);

    struct Stream {
        std::string session;
        TrajectoryLog meta;
        std::size_t steps = 0;
    };
    const std::size_t streams = 1200;
    std::size_t opened = 0, violations_seen = 0, parse_errors = 0, unexpected = 0, abandoned = 0;
    std::set<std::string> expected;
    std::vector<Stream> live;
    std::set<std::string> abandoned_sessions;

    auto open_one = [&] {
        Stream s;
        s.meta.task_id = "task-" + std::to_string(opened % 300);
        s.meta.goal = "Find item " + std::to_string(opened);
        s.meta.domain_root = "shop" + std::to_string(opened % 7) + ".example";
        s.meta.model_name = "scripted";
        s.session = service.open_session({s.meta.task_id, s.meta.goal, s.meta.domain_root, "scripted", ""});
        ++opened;
        live.push_back(std::move(s));
    };

    while (opened < streams || !live.empty()) {
        while (opened < streams && live.size() < 25) open_one();
        std::size_t pick = rng() % live.size();
        auto& s = live[pick];
        bool close = false;
        try {
            switch (rng() % 10) {
                case 0: case 1: case 2: case 3: {  // one or more running steps in a chunk
                    std::string chunk;
                    for (std::size_t n = 1 + rng() % 3; n > 0; --n) {
                        chunk += step_line(s.meta, s.steps++, rng() % 2 ? "click" : "scroll",
                                           "Link " + std::to_string(rng() % 4), false, TriState::unknown);
                    }
                    auto r = service.submit_step(s.session, chunk);
                    s.steps = r.step_count;
                    if (r.finalized) {
                        expected.insert(*r.episode_id);
                        close = true;
                    }
                    break;
                }
                case 4:  // finalize while still running
                    try {
                        service.finalize_session(s.session);
                        ++unexpected;
                    } catch (const Error& e) {
                        if (e.kind() == ErrorKind::routing_violation) ++violations_seen;
                        else ++unexpected;
                    }
                    break;
                case 5:  // garbage bytes
                    try {
                        service.submit_step(s.session, "{\"step_index\": ");
                        ++unexpected;
                    } catch (const Error& e) {
                        if (e.kind() == ErrorKind::parse) ++parse_errors;
                        else ++unexpected;
                    }
                    break;
                case 6:  // walk away
                    abandoned_sessions.insert(s.session);
                    ++abandoned;
                    close = true;
                    break;
                case 7: {  // terminal step via submit, then finalize
                    auto outcome = rng() % 2 ? TriState::yes : TriState::no;
                    service.submit_step(s.session, step_line(s.meta, s.steps, "done", "", true, outcome));
                    auto fin = service.finalize_session(s.session);
                    if (fin.persisted) expected.insert(fin.episode_id);
                    close = true;
                    break;
                }
                default: {  // terminal step in the finalize body
                    auto outcome = rng() % 2 ? TriState::yes : TriState::no;
                    auto fin = service.finalize_session(
                        s.session, step_line(s.meta, s.steps, "done", "", true, outcome));
                    if (fin.persisted) expected.insert(fin.episode_id);
                    close = true;
                }
            }
        } catch (const Error& e) {
            ++unexpected;
            std::cerr << "    unexpected " << to_string(e.kind()) << ": " << e.what() << "\n";
            close = true;
        }
        if (close) {
            live[pick] = std::move(live.back());
            live.pop_back();
        }
    }
    auto collected = service.collect_idle(SidecarService::Clock::now() + std::chrono::hours(24));

    std::set<std::string> stored;
    std::size_t partial = 0;
    for (const auto& record : store->records()) {
        stored.insert(record->meta.episode_id);
        if (record->meta.completeness != Completeness::complete ||
            record->meta.final_success == TriState::unknown) {
            ++partial;
        }
    }
    bool pass = stored == expected && partial == 0 && unexpected == 0 &&
                collected.size() == abandoned_sessions.size();
    return {pass, fmt("%zu streams: %zu persisted, store holds %zu (exact match: %s), %zu partial "
                      "records, %zu premature finalizes refused, %zu parse errors, %zu abandoned "
                      "and collected, %zu unexpected errors",
                      opened, expected.size(), stored.size(), stored == expected ? "yes" : "no",
                      partial, violations_seen, parse_errors, collected.size(), unexpected)};
}

Outcome scheduler_arithmetic() {
    auto report = arithmetic_report(643, 460.0, 5);
    std::istringstream rendered(render(report));
    for (std::string line; std::getline(rendered, line);) std::cout << "    " << line << "\n";
    bool pass = report.sequential_s == 295'780.0 && report.parallel_s == 59'340.0;
    return {pass, fmt("sequential %.0f s (expect 295780), 5 workers %.0f s (expect 59340), "
                      "lower bound %.0f s, claim <%.0f h = %.0f s",
                      report.sequential_s, report.parallel_s, report.lower_bound_s, report.claimed_h,
                      report.claimed_h * 3600.0)};
}

// Exhaustive assignment, independent of brute_force_opt's pruning.
double enumerate_opt(const std::vector<Job>& jobs, std::size_t workers) {
    std::size_t total = 1;
    for (std::size_t i = 0; i < jobs.size(); ++i) total *= workers;
    double best = INFINITY;
    std::vector<double> loads(workers);
    for (std::size_t code = 0; code < total; ++code) {
        std::fill(loads.begin(), loads.end(), 0.0);
        std::size_t c = code;
        for (const auto& job : jobs) {
            loads[c % workers] += job.actual_runtime_s;
            c /= workers;
        }
        best = std::min(best, *std::max_element(loads.begin(), loads.end()));
    }
    return best;
}

Outcome graham_bound() {
    std::mt19937_64 rng(6);
    std::size_t violations = 0, opt_mismatch = 0, refill_losses = 0, tight = 0;
    double worst_ratio = 0.0;
    const std::size_t instances = 1000;
    for (std::size_t n = 0; n < instances; ++n) {
        std::size_t count = 1 + rng() % 12, workers = 1 + rng() % 3;
        std::vector<Job> jobs;
        for (std::size_t i = 0; i < count; ++i) {
            double r = static_cast<double>(1 + rng() % 100);
            jobs.push_back({"j" + std::to_string(i), "d" + std::to_string(rng() % 4), r, r});
        }
        double opt = brute_force_opt(jobs, workers);
        if (count <= 10 && opt != enumerate_opt(jobs, workers)) ++opt_mismatch;
        double lpt = schedule_list(jobs, workers, Policy::lpt).makespan_s;
        double bound = graham_bound_factor(workers) * opt;
        if (lpt > bound + 1e-9) ++violations;
        if (lpt == opt) ++tight;
        worst_ratio = std::max(worst_ratio, lpt / opt);
        if (dynamic_queue_run(jobs, workers, true).makespan_s >
            dynamic_queue_run(jobs, workers, false).makespan_s + 1e-9) {
            ++refill_losses;
        }
    }
    return {violations == 0 && refill_losses == 0 && opt_mismatch == 0,
            fmt("%zu instances: %zu bound violations, worst LPT/OPT %.4f, LPT optimal on %zu, "
                "%zu refill-dominance failures, %zu OPT cross-check mismatches",
                instances, violations, worst_ratio, tight, refill_losses, opt_mismatch)};
}

struct E2eRun {
    BenchmarkReport uncoached, pass1, pass2;
    std::size_t seeded = 0;
};

E2eRun run_e2e(const CalibrationParams& params) {
    E2eRun run;
    auto suite = calibration_suite(params);
    run.uncoached = run_benchmark(suite, nullptr);
    auto config = small_service();
    auto store = std::make_shared<MemoryStore>(config.store_config());
    auto backends = make_backends(config);
    run.seeded = store->seed(seeded_failure_memory(params, *backends.summarizer, *backends.embedder))
                     .inserted;
    SidecarService service(config, backends, store);
    InProcessLink link(service);
    run.pass1 = run_benchmark(suite, &link);
    run.pass2 = run_benchmark(suite, &link);
    return run;
}

Outcome e2e_benefit() {
    auto start = Clock::now();
    CalibrationParams params;
    auto a = run_e2e(params);
    double elapsed = seconds_since(start);
    auto b = run_e2e(params);
    bool deterministic = to_json(a.uncoached) == to_json(b.uncoached) &&
                         to_json(a.pass1) == to_json(b.pass1) && to_json(a.pass2) == to_json(b.pass2);
    bool pass = a.pass1.success_rate >= a.uncoached.success_rate + kCoachingMargin &&
                a.pass1.mean_steps <= a.uncoached.mean_steps &&
                a.pass2.success_rate >= a.pass1.success_rate && deterministic &&
                elapsed <= kSuiteBudgetS;
    return {pass, fmt("%zu episodes, %zu seeded failures; uncoached %.3f (%.2f steps), coached "
                      "pass 1 %.3f (%.2f steps), pass 2 %.3f (%.2f steps); margin %.3f (>= %.2f); "
                      "deterministic %s; suite %.2f s (<= %.0f)",
                      a.uncoached.episodes, a.seeded, a.uncoached.success_rate, a.uncoached.mean_steps,
                      a.pass1.success_rate, a.pass1.mean_steps, a.pass2.success_rate,
                      a.pass2.mean_steps, a.pass1.success_rate - a.uncoached.success_rate,
                      kCoachingMargin, deterministic ? "yes" : "no", elapsed, kSuiteBudgetS)};
}

// Random damage to a valid JSON reply.
class Mutator {
public:
    explicit Mutator(std::uint64_t seed) : rng_(seed) {}

    std::string operator()(const std::string& valid) {
        Json json = Json::parse(valid);
        switch (rng_() % 12) {
            case 0: return valid;
            case 1: return "```json\n" + valid + "\n```";
            case 2: return "Here is my answer: " + valid + " Hope that helps.";
            case 3: return valid.substr(0, rng_() % (valid.size() + 1));
            case 4: return soup();
            case 5: drop_key(json); break;
            case 6: retype(json); break;
            case 7: json["unexpected_" + std::to_string(rng_() % 5)] = "x"; break;
            case 8: retype_nested(json); break;
            case 9: return "[" + valid + "]";
            case 10: return "";
            default:
                drop_key(json);
                retype(json);
        }
        return json.dump();
    }

private:
    Json random_value() {
        switch (rng_() % 8) {
            case 0: return nullptr;
            case 1: return 42;
            case 2: return "";
            case 3: return Json::array();
            case 4: return Json::object();
            case 5: return true;
            case 6: return "Go back. Try again. Then stop. And more.";
            default: return Json::array({"ep-unknown", 3});
        }
    }
    void drop_key(Json& json) {
        if (!json.is_object() || json.empty()) return;
        auto it = json.begin();
        std::advance(it, rng_() % json.size());
        json.erase(it.key());
    }
    void retype(Json& json) {
        if (!json.is_object() || json.empty()) return;
        auto it = json.begin();
        std::advance(it, rng_() % json.size());
        *it = random_value();
    }
    void retype_nested(Json& json) {
        for (auto& [key, value] : json.items()) {
            if (value.is_array() && !value.empty()) {
                auto& item = value[rng_() % value.size()];
                if (item.is_object()) retype(item);
                else item = random_value();
                return;
            }
        }
        retype(json);
    }
    std::string soup() {
        static const std::vector<std::string> pieces{
            "{", "}", "\"intervene\"", ":", "true", "false", ",", "\"advice\"", "\"Go back.\"",
            "\"cited_episode_ids\"", "[", "]", "\"ep-1\"", "null", "```", "\"summary_text\"",
            "\"final_success\"", "\"evidence\"", "42", "\\", "\"name\"", "\"description\""};
        std::string out;
        for (std::size_t n = rng_() % 16; n > 0; --n) out += pieces[rng_() % pieces.size()];
        return out;
    }

    std::mt19937_64 rng_;
};

class FuzzSummarizer final : public SummarizerBackend {
public:
    explicit FuzzSummarizer(std::uint64_t seed) : mutate_(seed) {}
    std::string name() const override { return "fuzz-summarizer"; }
    bool deterministic() const override { return true; }
    std::string generate(const std::string& prompt, const TrajectoryLog& log) override {
        ++calls;
        return mutate_(inner_.generate(prompt, log));
    }
    std::size_t calls = 0;

private:
    StubSummarizer inner_;
    Mutator mutate_;
};

class FuzzCoach final : public CoachBackend {
public:
    explicit FuzzCoach(std::uint64_t seed) : mutate_(seed) {}
    std::string name() const override { return "fuzz-coach"; }
    bool deterministic() const override { return true; }
    std::string decide_raw(const std::string& prompt, const CoachInput& input) override {
        std::lock_guard lock(mutex_);
        auto raw = mutate_(inner_.decide_raw(prompt, input));
        replies.push_back(raw);
        return raw;
    }
    std::vector<std::string> replies;

private:
    StubCoach inner_;
    Mutator mutate_;
    std::mutex mutex_;
};

std::vector<TrajectoryLog> fuzz_logs() {
    std::vector<TrajectoryLog> logs;
    CalibrationParams params;
    auto suite = calibration_suite(params);
    std::uint64_t seed = 1;
    for (const auto& site : suite.sites) {
        for (const auto& agent : suite.agents) {
            ++seed;
            auto result = run_episode(site, agent, seed, "fuzz-" + std::to_string(seed), nullptr);
            logs.push_back(result.log);
            auto prefix = result.log;
            prefix.steps.resize(std::max<std::size_t>(1, prefix.steps.size() / 2));
            prefix.terminal_marker = false;
            prefix.declared_success = TriState::unknown;
            prefix.status = TrajectoryStatus::running;
            if (prefix.steps.size() < result.log.steps.size()) logs.push_back(prefix);
        }
    }
    return logs;
}

Outcome schema_fuzz() {
    const std::size_t dimension = 64;
    auto logs = fuzz_logs();
    StubEmbedder embedder(dimension);

    // Condenser: every produced record validates; everything else is a condense error.
    FuzzSummarizer summarizer(8);
    std::size_t produced = 0, valid_records = 0, refused = 0, other_errors = 0;
    for (std::size_t n = 0; n < kFuzzCases; ++n) {
        const auto& log = logs[n % logs.size()];
        try {
            auto record = condense(log, summarizer, embedder, {kDefaultHardCap, ""});
            ++produced;
            if (!validate_condensed_json(to_json(record), dimension) && !validate(record, dimension)) {
                ++valid_records;
            }
        } catch (const Error& e) {
            if (e.kind() == ErrorKind::condense) ++refused;
            else ++other_errors;
        }
    }

    // Coach: decide never throws, output always validates, malformed twice means silence.
    FuzzCoach coach(9);
    std::size_t decisions = 0, valid_decisions = 0, double_malformed = 0, silent_when_malformed = 0,
                escaped = 0, interventions = 0;
    std::vector<CondensedRecord> partials;
    for (const auto& log : logs) {
        if (log.status == TrajectoryStatus::running) {
            partials.push_back(condense(log, *std::make_shared<StubSummarizer>(), embedder, {}));
        }
    }
    std::vector<ScoredRecord> memory;
    for (std::size_t i = 0; i < logs.size() && memory.size() < 5; ++i) {
        if (logs[i].status != TrajectoryStatus::complete) continue;
        StubSummarizer stub;
        auto record = to_memory_record(condense(logs[i], stub, embedder, {}));
        memory.push_back({std::make_shared<const MemoryRecord>(record), 0.95 - 0.01 * memory.size()});
    }
    std::vector<std::string> known;
    for (const auto& m : memory) known.push_back(m.record->meta.episode_id);
    for (std::size_t n = 0; n < kFuzzCases; ++n) {
        CoachInput input{partials[n % partials.size()], {}};
        input.retrieved.assign(memory.begin(), memory.begin() + static_cast<long>(n % (memory.size() + 1)));
        std::vector<std::string> ids;
        for (const auto& r : input.retrieved) ids.push_back(r.record->meta.episode_id);
        auto before = coach.replies.size();
        try {
            auto report = decide(input, coach);
            ++decisions;
            if (!validate_decision_json(Json::parse(to_json(report.decision).dump()))) ++valid_decisions;
            interventions += report.decision.intervene;
            bool all_malformed = true;
            for (auto i = before; i < coach.replies.size(); ++i) {
                if (std::holds_alternative<CoachDecision>(parse_decision(coach.replies[i], ids))) {
                    all_malformed = false;
                }
            }
            if (all_malformed) {
                ++double_malformed;
                silent_when_malformed += !report.decision.intervene;
            }
        } catch (const std::exception&) {
            ++escaped;
        }
    }

    // Through the service: fuzzed coach output never reaches the actor as an error.
    auto config = small_service(dimension);
    ServiceBackends backends = make_backends(config);
    backends.coach = std::make_shared<FuzzCoach>(10);
    auto store = std::make_shared<MemoryStore>(config.store_config());
    for (const auto& m : memory) store->insert(*m.record);
    SidecarService service(config, backends, store);
    std::size_t service_steps = 0, service_errors = 0;
    for (std::size_t i = 0; i < logs.size(); ++i) {
        const auto& log = logs[i];
        auto session = service.open_session({log.task_id, log.goal, log.domain_root, log.model_name, ""});
        for (const auto& step : log.steps) {
            bool done = &step == &log.steps.back() && log.terminal_marker;
            if (done) break;
            try {
                service.submit_step(session, canonical_step_line(log, step, false, TriState::unknown).dump());
                ++service_steps;
            } catch (const std::exception&) {
                ++service_errors;
            }
        }
    }

    bool pass = produced == valid_records && other_errors == 0 && decisions == kFuzzCases &&
                valid_decisions == decisions && escaped == 0 &&
                silent_when_malformed == double_malformed && service_errors == 0;
    return {pass, fmt("condenser: %zu cases, %zu records all valid=%s, %zu refused as condense "
                      "errors, %zu other errors; coach: %zu cases, %zu valid, %zu interventions, "
                      "%zu malformed after retry all silent=%s, %zu escaped; service: %zu steps, "
                      "%zu actor-visible errors",
                      kFuzzCases, produced, produced == valid_records ? "yes" : "no", refused,
                      other_errors, kFuzzCases, valid_decisions, interventions, double_malformed,
                      silent_when_malformed == double_malformed ? "yes" : "no", escaped,
                      service_steps, service_errors)};
}

Outcome golden_fixture() {
    std::ifstream in(std::string(COACHD_FIXTURE_DIR) + "/homepod_similarity_pair.json");
    if (!in) return {false, "fixture missing"};
    Json fixture = Json::parse(in);
    auto query = fixture["query_embedding"].get<Vector>();
    auto episode = fixture["episode_embedding"].get<std::vector<float>>();
    const double expected = std::stod(fixture["expected_score"].get<std::string>());

    double direct = cosine_score(std::span<const double>(query), std::span<const float>(episode));
    StoreConfig config;
    config.dimension = fixture["dimension"].get<std::size_t>();
    MemoryStore store(config);
    store.insert(synthetic_record(0, episode, "fixture", true));
    auto hits = store.search_exact(query, 1).hits;
    if (hits.size() != 1) return {false, "store returned no hit"};
    double stored = hits[0].score;
    double err = std::max(std::fabs(direct - expected), std::fabs(stored - expected));
    return {err <= kGoldenTolerance,
            fmt("expected %.16f, cosine_score %.16f, store %.16f, max error %.3g (<= %.0e)",
                expected, direct, stored, err, kGoldenTolerance)};
}

}  // namespace

int main(int argc, char** argv) {
    const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
        {"latency_flatness", latency_flatness},
        {"ann_fidelity", ann_fidelity},
        {"cosine_oracle", cosine_oracle},
        {"leakage_control", leakage},
        {"routing_soundness", routing_soundness},
        {"scheduler_arithmetic", scheduler_arithmetic},
        {"graham_bound", graham_bound},
        {"e2e_coaching_benefit", e2e_benefit},
        {"schema_fuzz", schema_fuzz},
        {"golden_fixture", golden_fixture},
    };
    std::set<std::string> selected(argv + 1, argv + argc);
    int failures = 0;
    for (const auto& [name, check] : criteria) {
        if (!selected.empty() && selected.count(name) == 0) continue;
        auto start = Clock::now();
        Outcome outcome;
        try {
            outcome = check();
        } catch (const std::exception& e) {
            outcome = {false, std::string("threw: ") + e.what()};
        }
        failures += !outcome.pass;
        std::cout << (outcome.pass ? "PASS " : "FAIL ") << name << ": " << outcome.detail
                  << fmt(" [%.1f s]", seconds_since(start)) << std::endl;
    }
    return failures == 0 ? 0 : 1;
}
