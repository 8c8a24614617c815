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
#include <string>
#include <vector>

#include "coachd/common.hpp"

namespace coachd {

struct Job {
    std::string job_id;
    std::string subdomain;
    double est_runtime_s = 0.0;
    double actual_runtime_s = 0.0;  // what the simulator charges
};

enum class Policy { lpt, fifo };

std::string_view to_string(Policy policy);
Policy policy_from_string(std::string_view text);

struct ScheduledJob {
    std::string job_id;
    double start_s = 0.0;
    double end_s = 0.0;
};

struct ScheduleResult {
    std::string policy;
    std::size_t workers = 0;
    std::vector<std::vector<ScheduledJob>> timeline;  // per worker, in start order
    double makespan_s = 0.0;
    /// Filled by dynamic_queue_run: subdomain -> completion time.
    std::map<std::string, double> subdomain_completion_s;
};

/// Throws validation error when a runtime is not finite and positive.
void validate(const std::vector<Job>& jobs);

/// List scheduling on actual runtimes. The global queue is ordered by
/// est_runtime_s descending (lpt) or input order (fifo), ties by job_id; a free
/// worker (lowest index first) pulls the head of the queue.
ScheduleResult schedule_list(const std::vector<Job>& jobs, std::size_t workers, Policy policy);

inline constexpr std::size_t kBruteForceMaxJobs = 12;
inline constexpr std::size_t kBruteForceMaxWorkers = 3;

/// Exact minimum makespan over all assignments of actual runtimes.
/// Throws ErrorKind::size beyond 12 jobs or 3 workers.
double brute_force_opt(const std::vector<Job>& jobs, std::size_t workers);

/// Graham's factor 4/3 - 1/(3m).
double graham_bound_factor(std::size_t workers);

/// max(total / workers, longest job).
double makespan_lower_bound(const std::vector<Job>& jobs, std::size_t workers);

/// Subdomain-level scheduling: each subdomain's jobs run back to back on one
/// slot. With refill a finished slot immediately takes the next subdomain;
/// without it subdomains start in synchronized batches of `width`.
ScheduleResult dynamic_queue_run(const std::vector<Job>& jobs, std::size_t width = 5,
                                 bool refill = true, Policy order = Policy::lpt);

struct ScheduleStats {
    double makespan_s = 0.0;
    double utilization = 0.0;  // busy time / (workers * makespan)
    double p50_completion_s = 0.0;
    double p95_completion_s = 0.0;
    double total_runtime_s = 0.0;
    double lower_bound_s = 0.0;
};

ScheduleStats summarize(const ScheduleResult& result);

/// Nearest-rank percentile, q in (0, 1].
double percentile(std::vector<double> values, double q);

Json to_json(const ScheduleResult& result);
Json to_json(const ScheduleStats& stats);

/// Sequential and five-way figures for N identical jobs next to the claimed figure.
struct ArithmeticReport {
    std::size_t jobs = 643;
    double runtime_s = 460.0;
    std::size_t workers = 5;
    double sequential_s = 0.0;
    double parallel_s = 0.0;      // list-scheduled identical jobs
    double lower_bound_s = 0.0;   // total / workers
    double claimed_h = 14.0;
    double claimed_reduction = 0.83;
};

ArithmeticReport arithmetic_report(std::size_t jobs = 643, double runtime_s = 460.0,
                                   std::size_t workers = 5);
std::string render(const ArithmeticReport& report);
Json to_json(const ArithmeticReport& report);

/// Human-readable comparison table.
std::string render_table(const std::vector<ScheduleResult>& results);

/// Line-delimited {job_id, subdomain, est_runtime_s, actual_runtime_s}.
/// actual_runtime_s defaults to est_runtime_s when absent.
std::vector<Job> read_jobs(const std::filesystem::path& path);
std::vector<Job> parse_jobs(std::string_view text);
void write_jobs(const std::filesystem::path& path, const std::vector<Job>& jobs);

std::vector<Job> identical_jobs(std::size_t count, double runtime_s, std::size_t subdomains = 1);

/// Live execution contract: at most `width` jobs in flight, one dispatcher
/// owning the queue, a finished worker immediately pulls the next job.
class Executor {
public:
    virtual ~Executor() = default;
    /// Runs the job to completion on the calling thread; returns elapsed seconds.
    virtual double run(const Job& job, std::size_t worker) = 0;
};

ScheduleResult dispatch(const std::vector<Job>& jobs, std::size_t width, Policy policy,
                        Executor& executor);

}  // namespace coachd
