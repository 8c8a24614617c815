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

#include "coachd/scheduler.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <exception>
#include <fstream>
#include <functional>
#include <mutex>
#include <numeric>
#include <queue>
#include <sstream>
#include <thread>

namespace coachd {

namespace {

std::vector<std::size_t> queue_order(const std::vector<Job>& jobs, Policy policy) {
    std::vector<std::size_t> order(jobs.size());
    std::iota(order.begin(), order.end(), 0);
    if (policy == Policy::lpt) {
        std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
            if (jobs[a].est_runtime_s != jobs[b].est_runtime_s) {
                return jobs[a].est_runtime_s > jobs[b].est_runtime_s;
            }
            return jobs[a].job_id < jobs[b].job_id;
        });
    }
    return order;
}

// (free time, worker); earliest free first, lowest index on ties.
using Slot = std::pair<double, std::size_t>;
using SlotHeap = std::priority_queue<Slot, std::vector<Slot>, std::greater<>>;

SlotHeap idle_slots(std::size_t workers) {
    SlotHeap heap;
    for (std::size_t w = 0; w < workers; ++w) heap.emplace(0.0, w);
    return heap;
}

std::string fmt(const char* format, double value) {
    char buf[64];
    std::snprintf(buf, sizeof buf, format, value);
    return buf;
}

}  // namespace

std::string_view to_string(Policy policy) { return policy == Policy::lpt ? "lpt" : "fifo"; }

Policy policy_from_string(std::string_view text) {
    if (text == "lpt") return Policy::lpt;
    if (text == "fifo") return Policy::fifo;
    throw Error(ErrorKind::validation, "policy must be lpt or fifo, got '" + std::string(text) + "'");
}

void validate(const std::vector<Job>& jobs) {
    for (const auto& job : jobs) {
        for (double value : {job.est_runtime_s, job.actual_runtime_s}) {
            if (!std::isfinite(value) || value <= 0.0) {
                throw Error(ErrorKind::validation,
                            "job " + job.job_id + " has a non-positive or non-finite runtime");
            }
        }
    }
}

ScheduleResult schedule_list(const std::vector<Job>& jobs, std::size_t workers, Policy policy) {
    if (workers == 0) throw Error(ErrorKind::validation, "workers must be at least 1");
    if (jobs.empty()) throw Error(ErrorKind::validation, "no jobs to schedule");
    validate(jobs);

    ScheduleResult result;
    result.policy = std::string(to_string(policy));
    result.workers = workers;
    result.timeline.resize(workers);
    auto slots = idle_slots(workers);
    for (auto index : queue_order(jobs, policy)) {
        auto [free_at, worker] = slots.top();
        slots.pop();
        const auto& job = jobs[index];
        double end = free_at + job.actual_runtime_s;
        result.timeline[worker].push_back({job.job_id, free_at, end});
        result.makespan_s = std::max(result.makespan_s, end);
        slots.emplace(end, worker);
    }
    return result;
}

double brute_force_opt(const std::vector<Job>& jobs, std::size_t workers) {
    if (workers == 0) throw Error(ErrorKind::validation, "workers must be at least 1");
    if (jobs.size() > kBruteForceMaxJobs || workers > kBruteForceMaxWorkers) {
        throw Error(ErrorKind::size, "exhaustive search is limited to " +
                                         std::to_string(kBruteForceMaxJobs) + " jobs and " +
                                         std::to_string(kBruteForceMaxWorkers) + " workers");
    }
    validate(jobs);
    if (jobs.empty()) return 0.0;

    std::vector<double> runtimes;
    for (const auto& job : jobs) runtimes.push_back(job.actual_runtime_s);
    std::sort(runtimes.begin(), runtimes.end(), std::greater<>());

    double best = std::accumulate(runtimes.begin(), runtimes.end(), 0.0);
    std::vector<double> loads(workers, 0.0);
    std::function<void(std::size_t, double)> assign = [&](std::size_t i, double current) {
        if (current >= best) return;
        if (i == runtimes.size()) {
            best = current;
            return;
        }
        bool tried_empty = false;
        for (std::size_t w = 0; w < workers; ++w) {
            if (loads[w] == 0.0) {
                if (tried_empty) continue;  // empty workers are interchangeable
                tried_empty = true;
            }
            loads[w] += runtimes[i];
            assign(i + 1, std::max(current, loads[w]));
            loads[w] -= runtimes[i];
        }
    };
    assign(0, 0.0);
    return best;
}

double graham_bound_factor(std::size_t workers) {
    return 4.0 / 3.0 - 1.0 / (3.0 * static_cast<double>(workers));
}

double makespan_lower_bound(const std::vector<Job>& jobs, std::size_t workers) {
    double total = 0.0, longest = 0.0;
    for (const auto& job : jobs) {
        total += job.actual_runtime_s;
        longest = std::max(longest, job.actual_runtime_s);
    }
    return std::max(total / static_cast<double>(workers), longest);
}

ScheduleResult dynamic_queue_run(const std::vector<Job>& jobs, std::size_t width, bool refill,
                                 Policy order) {
    if (width == 0) throw Error(ErrorKind::validation, "width must be at least 1");
    if (jobs.empty()) throw Error(ErrorKind::validation, "no jobs to schedule");
    validate(jobs);

    struct Group {
        std::string name;
        std::vector<const Job*> jobs;
        double est = 0.0;
    };
    std::vector<Group> groups;
    std::map<std::string, std::size_t> index;
    for (const auto& job : jobs) {
        auto [it, fresh] = index.emplace(job.subdomain, groups.size());
        if (fresh) groups.push_back({job.subdomain, {}, 0.0});
        auto& group = groups[it->second];
        group.jobs.push_back(&job);
        group.est += job.est_runtime_s;
    }
    if (order == Policy::lpt) {
        std::stable_sort(groups.begin(), groups.end(), [](const Group& a, const Group& b) {
            if (a.est != b.est) return a.est > b.est;
            return a.name < b.name;
        });
    }

    ScheduleResult result;
    result.policy = std::string(to_string(order)) + (refill ? "+refill" : "+batch");
    result.workers = width;
    result.timeline.resize(width);
    auto run_group = [&](const Group& group, std::size_t worker, double start) {
        double t = start;
        for (const auto* job : group.jobs) {
            result.timeline[worker].push_back({job->job_id, t, t + job->actual_runtime_s});
            t += job->actual_runtime_s;
        }
        result.subdomain_completion_s[group.name] = t;
        result.makespan_s = std::max(result.makespan_s, t);
        return t;
    };

    if (refill) {
        auto slots = idle_slots(width);
        for (const auto& group : groups) {
            auto [free_at, worker] = slots.top();
            slots.pop();
            slots.emplace(run_group(group, worker, free_at), worker);
        }
    } else {
        double batch_start = 0.0;
        for (std::size_t first = 0; first < groups.size(); first += width) {
            double batch_end = batch_start;
            for (std::size_t w = 0; w < width && first + w < groups.size(); ++w) {
                batch_end = std::max(batch_end, run_group(groups[first + w], w, batch_start));
            }
            batch_start = batch_end;
        }
    }
    return result;
}

double percentile(std::vector<double> values, double q) {
    if (values.empty()) return 0.0;
    std::sort(values.begin(), values.end());
    auto rank = static_cast<std::size_t>(std::ceil(q * static_cast<double>(values.size())));
    rank = std::clamp<std::size_t>(rank, 1, values.size());
    return values[rank - 1];
}

ScheduleStats summarize(const ScheduleResult& result) {
    ScheduleStats stats;
    stats.makespan_s = result.makespan_s;
    std::vector<double> ends;
    double longest = 0.0;
    for (const auto& worker : result.timeline) {
        for (const auto& job : worker) {
            ends.push_back(job.end_s);
            stats.total_runtime_s += job.end_s - job.start_s;
            longest = std::max(longest, job.end_s - job.start_s);
        }
    }
    if (result.makespan_s > 0 && result.workers > 0) {
        stats.utilization =
            stats.total_runtime_s / (static_cast<double>(result.workers) * result.makespan_s);
    }
    stats.p50_completion_s = percentile(ends, 0.50);
    stats.p95_completion_s = percentile(ends, 0.95);
    if (result.workers > 0) {
        stats.lower_bound_s =
            std::max(stats.total_runtime_s / static_cast<double>(result.workers), longest);
    }
    return stats;
}

Json to_json(const ScheduleResult& result) {
    Json timeline = Json::array();
    for (const auto& worker : result.timeline) {
        Json row = Json::array();
        for (const auto& job : worker) {
            row.push_back(Json{{"job_id", job.job_id}, {"start_s", job.start_s}, {"end_s", job.end_s}});
        }
        timeline.push_back(row);
    }
    Json out{{"policy", result.policy},
             {"workers", result.workers},
             {"makespan_s", result.makespan_s},
             {"timeline", timeline}};
    if (!result.subdomain_completion_s.empty()) {
        out["subdomain_completion_s"] = result.subdomain_completion_s;
    }
    return out;
}

Json to_json(const ScheduleStats& stats) {
    return Json{{"makespan_s", stats.makespan_s},
                {"utilization", stats.utilization},
                {"p50_completion_s", stats.p50_completion_s},
                {"p95_completion_s", stats.p95_completion_s},
                {"total_runtime_s", stats.total_runtime_s},
                {"lower_bound_s", stats.lower_bound_s}};
}

ArithmeticReport arithmetic_report(std::size_t jobs, double runtime_s, std::size_t workers) {
    ArithmeticReport report;
    report.jobs = jobs;
    report.runtime_s = runtime_s;
    report.workers = workers;
    auto batch = identical_jobs(jobs, runtime_s);
    report.sequential_s = schedule_list(batch, 1, Policy::lpt).makespan_s;
    report.parallel_s = schedule_list(batch, workers, Policy::lpt).makespan_s;
    report.lower_bound_s = report.sequential_s / static_cast<double>(workers);
    return report;
}

Json to_json(const ArithmeticReport& report) {
    return Json{{"jobs", report.jobs},
                {"runtime_s", report.runtime_s},
                {"workers", report.workers},
                {"sequential_s", report.sequential_s},
                {"sequential_h", report.sequential_s / 3600.0},
                {"parallel_s", report.parallel_s},
                {"parallel_h", report.parallel_s / 3600.0},
                {"lower_bound_s", report.lower_bound_s},
                {"lower_bound_h", report.lower_bound_s / 3600.0},
                {"claimed_h", report.claimed_h},
                {"claimed_reduction", report.claimed_reduction},
                {"parallel_reduction", 1.0 - report.parallel_s / report.sequential_s},
                {"claim_below_lower_bound", report.claimed_h * 3600.0 < report.lower_bound_s}};
}

std::string render(const ArithmeticReport& report) {
    std::ostringstream out;
    out << report.jobs << " jobs x " << fmt("%.0f", report.runtime_s) << " s\n";
    out << "  sequential makespan      " << fmt("%10.0f", report.sequential_s) << " s  ("
        << fmt("%.2f", report.sequential_s / 3600.0) << " h)\n";
    out << "  " << report.workers << "-worker list schedule  " << fmt("%10.0f", report.parallel_s)
        << " s  (" << fmt("%.2f", report.parallel_s / 3600.0) << " h, reduction "
        << fmt("%.1f", 100.0 * (1.0 - report.parallel_s / report.sequential_s)) << "%)\n";
    out << "  analytic lower bound     " << fmt("%10.0f", report.lower_bound_s) << " s  ("
        << fmt("%.2f", report.lower_bound_s / 3600.0) << " h)\n";
    out << "  claimed                  " << fmt("%10.0f", report.claimed_h * 3600.0) << " s  (<"
        << fmt("%.0f", report.claimed_h) << " h, reduction "
        << fmt("%.0f", 100.0 * report.claimed_reduction) << "%)\n";
    if (report.claimed_h * 3600.0 < report.lower_bound_s) {
        out << "  note: the claim is below the lower bound for identical jobs\n";
    }
    return out.str();
}

std::string render_table(const std::vector<ScheduleResult>& results) {
    std::ostringstream out;
    char line[160];
    std::snprintf(line, sizeof line, "%-14s %7s %14s %11s %12s %12s\n", "policy", "workers",
                  "makespan_s", "utilization", "p50_s", "p95_s");
    out << line;
    for (const auto& result : results) {
        auto stats = summarize(result);
        std::snprintf(line, sizeof line, "%-14s %7zu %14.1f %11.3f %12.1f %12.1f\n",
                      result.policy.c_str(), result.workers, stats.makespan_s, stats.utilization,
                      stats.p50_completion_s, stats.p95_completion_s);
        out << line;
    }
    return out.str();
}

std::vector<Job> parse_jobs(std::string_view text) {
    std::vector<Job> jobs;
    std::size_t line_no = 0, offset = 0;
    while (offset <= text.size()) {
        auto end = text.find('\n', offset);
        if (end == std::string_view::npos) end = text.size();
        auto line = text.substr(offset, end - offset);
        offset = end + 1;
        ++line_no;
        if (trim(line).empty()) continue;
        Json json = Json::parse(line, nullptr, false);
        auto where = "job line " + std::to_string(line_no);
        if (json.is_discarded() || !json.is_object()) {
            throw Error(ErrorKind::parse, where + " is not a JSON object");
        }
        try {
            Job job;
            job.job_id = json.at("job_id").get<std::string>();
            job.subdomain = json.value("subdomain", std::string());
            job.est_runtime_s = json.at("est_runtime_s").get<double>();
            job.actual_runtime_s = json.value("actual_runtime_s", job.est_runtime_s);
            jobs.push_back(std::move(job));
        } catch (const Json::exception& e) {
            throw Error(ErrorKind::validation, where + ": " + e.what());
        }
    }
    validate(jobs);
    return jobs;
}

std::vector<Job> read_jobs(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorKind::io, "cannot read job file: " + path.string());
    std::stringstream buffer;
    buffer << in.rdbuf();
    return parse_jobs(buffer.str());
}

void write_jobs(const std::filesystem::path& path, const std::vector<Job>& jobs) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw Error(ErrorKind::io, "cannot write job file: " + path.string());
    for (const auto& job : jobs) {
        out << Json{{"job_id", job.job_id},
                    {"subdomain", job.subdomain},
                    {"est_runtime_s", job.est_runtime_s},
                    {"actual_runtime_s", job.actual_runtime_s}}
                   .dump()
            << '\n';
    }
}

std::vector<Job> identical_jobs(std::size_t count, double runtime_s, std::size_t subdomains) {
    std::vector<Job> jobs;
    jobs.reserve(count);
    char id[32];
    for (std::size_t i = 0; i < count; ++i) {
        std::snprintf(id, sizeof id, "job-%05zu", i);
        jobs.push_back({id, "sub-" + std::to_string(i % std::max<std::size_t>(subdomains, 1)),
                        runtime_s, runtime_s});
    }
    return jobs;
}

ScheduleResult dispatch(const std::vector<Job>& jobs, std::size_t width, Policy policy,
                        Executor& executor) {
    if (width == 0) throw Error(ErrorKind::validation, "width must be at least 1");
    validate(jobs);
    auto order = queue_order(jobs, policy);

    ScheduleResult result;
    result.policy = std::string(to_string(policy)) + "+live";
    result.workers = width;
    result.timeline.resize(width);

    std::mutex mutex;
    std::size_t next = 0;
    std::exception_ptr failure;
    const auto t0 = std::chrono::steady_clock::now();
    auto now = [&] {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    };
    std::vector<std::thread> threads;
    for (std::size_t w = 0; w < width; ++w) {
        threads.emplace_back([&, w] {
            while (true) {
                const Job* job = nullptr;
                {
                    std::lock_guard lock(mutex);
                    if (next == order.size() || failure) return;
                    job = &jobs[order[next++]];
                }
                double start = now();
                try {
                    executor.run(*job, w);
                } catch (...) {
                    std::lock_guard lock(mutex);
                    if (!failure) failure = std::current_exception();
                    return;
                }
                double end = now();
                std::lock_guard lock(mutex);
                result.timeline[w].push_back({job->job_id, start, end});
                result.makespan_s = std::max(result.makespan_s, end);
            }
        });
    }
    for (auto& thread : threads) thread.join();
    if (failure) std::rethrow_exception(failure);
    return result;
}

}  // namespace coachd
