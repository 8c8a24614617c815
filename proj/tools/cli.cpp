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

#include "cli.hpp"

#include <atomic>
#include <chrono>
#include <csignal>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <thread>

#include "CLI11.hpp"
#include "coachd/backends.hpp"
#include "coachd/condenser.hpp"
#include "coachd/config.hpp"
#include "coachd/http_frontend.hpp"
#include "coachd/memory_store.hpp"
#include "coachd/prompts.hpp"
#include "coachd/scheduler.hpp"
#include "coachd/sidecar.hpp"
#include "coachd/sim.hpp"
#include "coachd/synthetic.hpp"

namespace coachd::cli {

namespace fs = std::filesystem;

namespace {

volatile std::sig_atomic_t g_stop = 0;
void on_signal(int) { g_stop = 1; }

struct Options {
    std::string config_path;
    std::string out_dir;
    std::string replay;
    std::uint64_t seed = 7;

    std::string log_path;
    std::string adapter = "canonical";
    std::size_t hard_cap = 0;

    std::string seed_file;
    std::string calibration;
    std::string snapshot;

    std::string query;
    std::size_t k = 0;
    std::string exclude_task;

    std::size_t records = 600;
    std::string k_range = "1..10";
    std::size_t repeats = 200;
    std::size_t dimension = kDefaultDimension;
    bool ann = false;

    std::string host = "127.0.0.1";
    int port = 8787;
    std::string mode;

    std::string jobs_path;
    std::string identical;
    std::size_t workers = 5;
    std::string policy = "lpt";
    std::string compare;
    bool dynamic = false;
    std::size_t width = 5;
    bool arithmetic = false;

    std::string suite_path;
    std::size_t passes = 1;
    bool uncoached = false;
    bool baseline = false;
    bool seed_memory = false;

    std::string in_dir;
};

std::string read_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorKind::io, "cannot read " + path.string());
    std::stringstream buffer;
    buffer << in.rdbuf();
    return buffer.str();
}

void write_file(const fs::path& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorKind::io, "cannot write " + path.string());
    out << content;
}

void write_jsonl(const fs::path& path, const std::vector<Json>& lines) {
    std::string content;
    for (const auto& line : lines) content += line.dump() + "\n";
    write_file(path, content);
}

AdapterSpec resolve_adapter(const std::string& name) {
    if (name == "canonical") return canonical_adapter_spec();
    if (name == "browser-use") return browser_use_adapter_spec();
    Json json = Json::parse(read_file(name), nullptr, false);
    if (json.is_discarded()) throw Error(ErrorKind::parse, "adapter file is not JSON: " + name);
    return AdapterSpec::from_json(json);
}

std::vector<std::size_t> parse_k_range(const std::string& text) {
    std::vector<std::size_t> out;
    auto dots = text.find("..");
    try {
        if (dots != std::string::npos) {
            auto lo = std::stoul(text.substr(0, dots));
            auto hi = std::stoul(text.substr(dots + 2));
            for (auto k = lo; k <= hi; ++k) out.push_back(k);
        } else {
            std::stringstream in(text);
            std::string part;
            while (std::getline(in, part, ',')) out.push_back(std::stoul(part));
        }
    } catch (const std::exception&) {
        out.clear();
    }
    if (out.empty() || out.front() == 0) {
        throw Error(ErrorKind::validation, "k must look like 1..10 or 1,5,10");
    }
    return out;
}

std::unique_ptr<MemoryStore> open_store(const ServiceConfig& config) {
    if (!config.snapshot_path.empty() && fs::exists(config.snapshot_path)) {
        return MemoryStore::load(config.snapshot_path, config.store_config());
    }
    return std::make_unique<MemoryStore>(config.store_config());
}

struct Context {
    Options opt;
    std::string subcommand;
    std::vector<std::string> args;  // for the resolved config
    ServiceConfig config;
    fs::path out;
    std::ostream& cout;
};

void write_resolved(const Context& ctx) {
    Json resolved{{"subcommand", ctx.subcommand},
                  {"args", ctx.args},
                  {"seed", ctx.opt.seed},
                  {"service_config", to_json(ctx.config)},
                  {"condenser_template", std::string(kCondenserTemplateVersion)},
                  {"coach_template", std::string(kCoachTemplateVersion)}};
    write_file(ctx.out / "resolved_config.json", resolved.dump(2) + "\n");
}

int cmd_ingest(Context& ctx) {
    AdapterRegistry registry;
    auto id = registry.register_adapter(resolve_adapter(ctx.opt.adapter));
    auto parsed = registry.parse(read_file(ctx.opt.log_path), id, IngestOptions{ctx.config.hard_cap});
    write_file(ctx.out / "trajectory.json", to_json(parsed.log).dump(2) + "\n");
    for (const auto& warning : parsed.warnings) ctx.cout << "warning: " << warning << "\n";
    ctx.cout << "steps " << parsed.log.steps.size() << ", status "
             << to_string(detect_completeness(parsed.log, ctx.config.hard_cap)) << ", adapter "
             << id << "\n";
    return 0;
}

int cmd_condense(Context& ctx) {
    AdapterRegistry registry;
    auto id = registry.register_adapter(resolve_adapter(ctx.opt.adapter));
    auto parsed = registry.parse(read_file(ctx.opt.log_path), id, IngestOptions{ctx.config.hard_cap});
    auto backends = make_backends(ctx.config);
    auto record = condense(parsed.log, *backends.summarizer, *backends.embedder,
                           CondenseOptions{ctx.config.hard_cap, {}});
    write_jsonl(ctx.out / "condensed.jsonl", {to_json(record)});
    ctx.cout << "route " << to_string(route(record)) << ", completeness "
             << to_string(record.completeness) << ", final_success "
             << to_string(record.final_success) << "\n"
             << record.summary_text << "\n";
    return 0;
}

int cmd_seed(Context& ctx) {
    auto store = open_store(ctx.config);
    std::vector<MemoryRecord> records;
    std::vector<std::string> errors;
    if (!ctx.opt.seed_file.empty()) {
        auto file = read_seed_file(ctx.opt.seed_file);
        records = std::move(file.records);
        errors = std::move(file.errors);
    }
    if (!ctx.opt.calibration.empty()) {
        auto params = calibration_from_json(Json::parse(read_file(ctx.opt.calibration)));
        auto backends = make_backends(ctx.config);
        auto more = seeded_failure_memory(params, *backends.summarizer, *backends.embedder);
        records.insert(records.end(), more.begin(), more.end());
    }
    if (records.empty() && errors.empty()) {
        throw Error(ErrorKind::validation, "nothing to seed: pass --file or --calibration");
    }
    auto report = store->seed(std::move(records));
    errors.insert(errors.end(), report.errors.begin(), report.errors.end());
    if (!ctx.config.snapshot_path.empty()) store->snapshot(ctx.config.snapshot_path);
    Json summary{{"inserted", report.inserted},
                 {"skipped_duplicates", report.skipped_duplicates},
                 {"errors", errors},
                 {"store_size", store->size()}};
    write_jsonl(ctx.out / "seed_report.jsonl", {summary});
    ctx.cout << "inserted " << report.inserted << ", duplicates " << report.skipped_duplicates
             << ", errors " << errors.size() << ", store size " << store->size() << "\n";
    for (const auto& error : errors) ctx.cout << "  " << error << "\n";
    return 0;
}

int cmd_search(Context& ctx) {
    std::shared_ptr<MemoryStore> store = open_store(ctx.config);
    SidecarService service(ctx.config, make_backends(ctx.config), store);
    auto hits = service.search(ctx.opt.query, ctx.opt.k ? ctx.opt.k : ctx.config.top_k,
                               ctx.opt.exclude_task);
    std::vector<Json> lines;
    for (const auto& hit : hits) {
        lines.push_back(to_json(hit));
        char score[32];
        std::snprintf(score, sizeof score, "%.6f", hit.score);
        ctx.cout << score << "  " << hit.episode_id << "  " << hit.task_id << "  "
                 << to_string(hit.final_success) << "\n";
    }
    write_jsonl(ctx.out / "search.jsonl", lines);
    if (hits.empty()) ctx.cout << "no results\n";
    return 0;
}

int cmd_bench_retrieval(Context& ctx) {
    const auto ks = parse_k_range(ctx.opt.k_range);
    StoreConfig store_config = ctx.config.store_config();
    store_config.dimension = ctx.opt.dimension;
    MemoryStore store(store_config);
    std::mt19937_64 rng(ctx.opt.seed);
    for (std::size_t i = 0; i < ctx.opt.records; ++i) {
        store.insert(synthetic_record(i, random_unit_vector(rng, ctx.opt.dimension),
                                      "task-" + std::to_string(i % 50)));
    }
    std::vector<Vector> queries;
    for (std::size_t q = 0; q < 16; ++q) {
        auto v = random_unit_vector(rng, ctx.opt.dimension);
        queries.emplace_back(v.begin(), v.end());
    }
    std::vector<Json> lines;
    char row[160];
    std::snprintf(row, sizeof row, "%4s %12s %12s %12s\n", "k", "mean_ms", "p50_ms", "p95_ms");
    ctx.cout << row;
    for (auto k : ks) {
        std::vector<double> samples;
        for (std::size_t r = 0; r < ctx.opt.repeats; ++r) {
            const auto& query = queries[r % queries.size()];
            auto start = std::chrono::steady_clock::now();
            auto result = ctx.opt.ann ? store.search_ann(query, k) : store.search_exact(query, k);
            auto elapsed = std::chrono::steady_clock::now() - start;
            if (result.hits.size() != std::min(k, store.size())) {
                throw Error(ErrorKind::integrity, "search returned the wrong number of hits");
            }
            samples.push_back(std::chrono::duration<double, std::milli>(elapsed).count());
        }
        double mean = 0.0;
        for (double s : samples) mean += s;
        mean /= static_cast<double>(samples.size());
        double p50 = percentile(samples, 0.5), p95 = percentile(samples, 0.95);
        lines.push_back(Json{{"k", k}, {"mean_ms", mean}, {"p50_ms", p50}, {"p95_ms", p95},
                             {"repeats", ctx.opt.repeats}, {"records", ctx.opt.records},
                             {"method", ctx.opt.ann ? "hnsw" : "exact"}});
        std::snprintf(row, sizeof row, "%4zu %12.3f %12.3f %12.3f\n", k, mean, p50, p95);
        ctx.cout << row;
    }
    write_jsonl(ctx.out / "latency.jsonl", lines);
    return 0;
}

int cmd_serve(Context& ctx) {
    SidecarService service(ctx.config, make_backends(ctx.config));
    HttpFrontend frontend(service);
    int port = frontend.bind(ctx.opt.host, ctx.opt.port);
    ctx.cout << "serving on http://" << ctx.opt.host << ":" << port << " (memory "
             << to_string(service.memory_mode()) << ", store " << service.store().size() << ")"
             << std::endl;
    std::signal(SIGINT, on_signal);
    std::signal(SIGTERM, on_signal);
    frontend.start();
    while (!g_stop) std::this_thread::sleep_for(std::chrono::milliseconds(100));
    frontend.stop();
    service.save_snapshot();
    write_jsonl(ctx.out / "stats.jsonl", {to_json(service.stats())});
    ctx.cout << "stopped" << std::endl;
    return 0;
}

int cmd_schedule(Context& ctx) {
    std::vector<Job> jobs;
    if (!ctx.opt.jobs_path.empty()) {
        jobs = read_jobs(ctx.opt.jobs_path);
    } else if (!ctx.opt.identical.empty()) {
        auto x = ctx.opt.identical.find('x');
        if (x == std::string::npos) throw Error(ErrorKind::validation, "--identical wants NxSECONDS");
        jobs = identical_jobs(std::stoul(ctx.opt.identical.substr(0, x)),
                              std::stod(ctx.opt.identical.substr(x + 1)), 15);
    } else {
        throw Error(ErrorKind::validation, "pass --jobs FILE or --identical NxSECONDS");
    }
    auto policy = policy_from_string(ctx.opt.policy);
    std::vector<ScheduleResult> results{schedule_list(jobs, ctx.opt.workers, policy)};
    if (!ctx.opt.compare.empty()) {
        results.push_back(schedule_list(jobs, ctx.opt.workers, policy_from_string(ctx.opt.compare)));
    }
    if (ctx.opt.dynamic) {
        results.push_back(dynamic_queue_run(jobs, ctx.opt.width, true, policy));
        results.push_back(dynamic_queue_run(jobs, ctx.opt.width, false, policy));
    }
    std::vector<Json> lines;
    for (const auto& result : results) {
        Json line = to_json(result);
        line["stats"] = to_json(summarize(result));
        lines.push_back(line);
    }
    ctx.cout << render_table(results);
    ctx.cout << "lower bound " << makespan_lower_bound(jobs, ctx.opt.workers) << " s\n";
    if (ctx.opt.arithmetic) {
        auto report = arithmetic_report();
        ctx.cout << "\n" << render(report);
        lines.push_back(Json{{"arithmetic", to_json(report)}});
    }
    write_jsonl(ctx.out / "schedule.jsonl", lines);
    return 0;
}

int cmd_simulate(Context& ctx) {
    CalibrationParams params;
    if (!ctx.opt.suite_path.empty()) {
        params = calibration_from_json(Json::parse(read_file(ctx.opt.suite_path)));
    }
    auto suite = calibration_suite(params);
    std::vector<Json> lines;
    std::vector<std::pair<std::string, BenchmarkReport>> reports;

    if (ctx.opt.uncoached || ctx.opt.baseline) {
        reports.emplace_back("uncoached", run_benchmark(suite, nullptr));
    }
    if (!ctx.opt.uncoached) {
        auto config = ctx.config;
        std::shared_ptr<MemoryStore> store = open_store(config);
        SidecarService service(config, make_backends(config), store);
        if (ctx.opt.seed_memory) {
            auto backends = make_backends(config);
            auto report = store->seed(
                seeded_failure_memory(params, *backends.summarizer, *backends.embedder));
            ctx.cout << "seeded " << report.inserted << " failure episodes\n";
        }
        InProcessLink link(service);
        for (std::size_t pass = 1; pass <= ctx.opt.passes; ++pass) {
            auto label = "coached " + std::string(to_string(config.memory_mode)) + " pass " +
                         std::to_string(pass);
            reports.emplace_back(label, run_benchmark(suite, &link));
        }
        Json stats = to_json(service.stats());
        lines.push_back(Json{{"service_stats", stats}});
    }
    for (const auto& [label, report] : reports) {
        ctx.cout << render(report, label);
        Json line = to_json(report, false);
        line["label"] = label;
        lines.push_back(line);
        for (const auto& result : report.results) {
            Json episode = to_json(result);
            episode["label"] = label;
            lines.push_back(episode);
        }
    }
    write_jsonl(ctx.out / "benchmark.jsonl", lines);
    return 0;
}

int cmd_report(Context& ctx) {
    fs::path dir = ctx.opt.in_dir;
    if (!fs::exists(dir / "resolved_config.json")) {
        throw Error(ErrorKind::lookup, "no resolved_config.json in " + dir.string());
    }
    auto resolved = Json::parse(read_file(dir / "resolved_config.json"));
    ctx.cout << "run: " << resolved.value("subcommand", "?") << "\n";
    std::vector<fs::path> files;
    for (const auto& entry : fs::directory_iterator(dir)) {
        if (entry.path().extension() == ".jsonl") files.push_back(entry.path());
    }
    std::sort(files.begin(), files.end());
    std::vector<Json> lines;
    for (const auto& file : files) {
        std::size_t count = 0;
        std::stringstream in(read_file(file));
        std::string line;
        while (std::getline(in, line)) {
            if (trim(line).empty()) continue;
            ++count;
            Json json = Json::parse(line, nullptr, false);
            if (json.is_object() && json.contains("success_rate")) {
                char row[200];
                std::snprintf(row, sizeof row, "  %-24s success_rate %.3f  mean_steps %.2f\n",
                              json.value("label", std::string("benchmark")).c_str(),
                              json["success_rate"].get<double>(),
                              json["mean_steps"].get<double>());
                ctx.cout << row;
            }
            if (json.is_object() && json.contains("makespan_s") && json.contains("policy")) {
                ctx.cout << "  " << json["policy"].get<std::string>() << " makespan "
                         << json["makespan_s"].get<double>() << " s\n";
            }
        }
        ctx.cout << file.filename().string() << ": " << count << " records\n";
        lines.push_back(Json{{"file", file.filename().string()}, {"records", count}});
    }
    write_jsonl(ctx.out / "report.jsonl", lines);
    return 0;
}

}  // namespace

int run(const std::vector<std::string>& input_args, std::ostream& out, std::ostream& err) {
    Options opt;
    CLI::App app{"coaching sidecar for web agents"};
    app.require_subcommand(1);
    app.add_option("--config", opt.config_path, "service config file (else WEBCOACH_CONFIG)");
    app.add_option("--out", opt.out_dir, "output directory");
    app.add_option("--seed", opt.seed, "random seed");
    app.add_option("--replay", opt.replay, "rerun from a resolved_config.json");

    auto* ingest = app.add_subcommand("ingest", "parse a step log into a canonical trajectory");
    ingest->add_option("--log", opt.log_path)->required();
    ingest->add_option("--adapter", opt.adapter, "canonical, browser-use, or a spec file");
    ingest->add_option("--hard-cap", opt.hard_cap);

    auto* condense_cmd = app.add_subcommand("condense", "summarize and embed a step log");
    condense_cmd->add_option("--log", opt.log_path)->required();
    condense_cmd->add_option("--adapter", opt.adapter);
    condense_cmd->add_option("--hard-cap", opt.hard_cap);

    auto* seed_cmd = app.add_subcommand("seed", "insert records into the memory snapshot");
    seed_cmd->add_option("--file", opt.seed_file, "line-delimited memory records");
    seed_cmd->add_option("--calibration", opt.calibration, "build failure memory from a suite");
    seed_cmd->add_option("--snapshot", opt.snapshot);

    auto* search_cmd = app.add_subcommand("search", "query the memory");
    search_cmd->add_option("--query", opt.query)->required();
    search_cmd->add_option("--k", opt.k);
    search_cmd->add_option("--exclude-task", opt.exclude_task);
    search_cmd->add_option("--snapshot", opt.snapshot);

    auto* bench = app.add_subcommand("bench-retrieval", "retrieval latency per k");
    bench->add_option("--records", opt.records);
    bench->add_option("--k", opt.k_range, "range like 1..10");
    bench->add_option("--repeats", opt.repeats);
    bench->add_option("--dim", opt.dimension);
    bench->add_flag("--ann", opt.ann, "use the HNSW index instead of the exact scan");

    auto* serve = app.add_subcommand("serve", "run the sidecar over HTTP");
    serve->add_option("--host", opt.host);
    serve->add_option("--port", opt.port);
    serve->add_option("--mode", opt.mode, "frozen or dynamic");
    serve->add_option("--snapshot", opt.snapshot);

    auto* schedule = app.add_subcommand("schedule", "simulate the evaluation queue");
    schedule->add_option("--jobs", opt.jobs_path, "line-delimited job file");
    schedule->add_option("--identical", opt.identical, "NxSECONDS identical jobs");
    schedule->add_option("--workers", opt.workers);
    schedule->add_option("--policy", opt.policy, "lpt or fifo");
    schedule->add_option("--compare", opt.compare, "second policy to compare");
    schedule->add_flag("--dynamic", opt.dynamic, "also run subdomain refill vs batch");
    schedule->add_option("--width", opt.width, "parallel width for --dynamic");
    schedule->add_flag("--arithmetic", opt.arithmetic, "print the sequential vs parallel figures");

    auto* simulate = app.add_subcommand("simulate", "run the synthetic benchmark");
    simulate->add_option("--suite", opt.suite_path, "calibration suite file");
    simulate->add_option("--mode", opt.mode, "frozen or dynamic");
    simulate->add_option("--passes", opt.passes);
    simulate->add_flag("--uncoached", opt.uncoached);
    simulate->add_flag("--baseline", opt.baseline, "also run uncoached");
    simulate->add_flag("--seed-memory", opt.seed_memory, "pre-seed failure episodes");
    simulate->add_option("--snapshot", opt.snapshot);
    simulate->add_option("--k", opt.k);

    auto* report = app.add_subcommand("report", "summarize a run directory");
    report->add_option("--in", opt.in_dir)->required();

    std::vector<std::string> args = input_args;
    Json replayed_config;
    try {
        // --replay swaps in the stored arguments, keeping --out from this call.
        for (std::size_t i = 0; i + 1 < args.size(); ++i) {
            if (args[i] != "--replay") continue;
            auto resolved = Json::parse(read_file(args[i + 1]));
            std::vector<std::string> stored = resolved.at("args").get<std::vector<std::string>>();
            std::vector<std::string> kept;
            for (std::size_t j = 0; j < args.size(); ++j) {
                if (args[j] == "--replay") {
                    ++j;
                    continue;
                }
                if (args[j] == "--out" && j + 1 < args.size()) {
                    kept.push_back(args[j]);
                    kept.push_back(args[++j]);
                }
            }
            kept.insert(kept.end(), stored.begin(), stored.end());
            args = kept;
            replayed_config = resolved.at("service_config");
            break;
        }
    } catch (const std::exception& e) {
        err << "error: cannot replay: " << e.what() << "\n";
        return 1;
    }

    try {
        std::vector<std::string> reversed(args.rbegin(), args.rend());
        app.parse(reversed);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return 0;
    } catch (const CLI::CallForAllHelp&) {
        out << app.help("", CLI::AppFormatMode::All);
        return 0;
    } catch (const CLI::ParseError& e) {
        err << "usage error: " << e.what() << "\n" << app.help();
        return 2;
    }

    auto* chosen = app.get_subcommands().front();
    Context ctx{opt, chosen->get_name(), {}, {}, {}, out};
    // Stored arguments: everything except --out and --replay.
    for (std::size_t i = 0; i < args.size(); ++i) {
        if (args[i] == "--out" || args[i] == "--replay") {
            ++i;
            continue;
        }
        ctx.args.push_back(args[i]);
    }

    try {
        if (!replayed_config.is_null()) {
            ctx.config = service_config_from_json(replayed_config);
        } else {
            ctx.config = load_service_config(opt.config_path);
        }
        if (!opt.mode.empty()) ctx.config.memory_mode = memory_mode_from_string(opt.mode);
        if (!opt.snapshot.empty()) ctx.config.snapshot_path = opt.snapshot;
        if (opt.hard_cap > 0) ctx.config.hard_cap = opt.hard_cap;
        if (opt.k > 0 && ctx.subcommand == "simulate") ctx.config.top_k = opt.k;
        if (ctx.subcommand == "simulate") ctx.config.coach_deadline_s = 0;  // deterministic
        check(ctx.config);

        ctx.out = opt.out_dir.empty() ? fs::path("coachd-out") / ctx.subcommand : fs::path(opt.out_dir);
        fs::create_directories(ctx.out);
        write_resolved(ctx);

        const auto& name = ctx.subcommand;
        if (name == "ingest") return cmd_ingest(ctx);
        if (name == "condense") return cmd_condense(ctx);
        if (name == "seed") return cmd_seed(ctx);
        if (name == "search") return cmd_search(ctx);
        if (name == "bench-retrieval") return cmd_bench_retrieval(ctx);
        if (name == "serve") return cmd_serve(ctx);
        if (name == "schedule") return cmd_schedule(ctx);
        if (name == "simulate") return cmd_simulate(ctx);
        if (name == "report") return cmd_report(ctx);
    } catch (const Error& e) {
        err << "error (" << to_string(e.kind()) << "): " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return 1;
    }
    return 1;
}

}  // namespace coachd::cli
