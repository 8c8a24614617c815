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

#include <gtest/gtest.h>

#include <atomic>
#include <filesystem>
#include <random>
#include <set>
#include <thread>

#include "coachd/scheduler.hpp"

using namespace coachd;

namespace {

std::vector<Job> jobs_of(std::initializer_list<double> runtimes) {
    std::vector<Job> jobs;
    for (double r : runtimes) {
        jobs.push_back({"j" + std::to_string(jobs.size()), "", r, r});
    }
    return jobs;
}

// Every assignment of jobs to workers, no pruning.
double enumerate_opt(const std::vector<Job>& jobs, std::size_t workers) {
    std::size_t total = 1;
    for (std::size_t i = 0; i < jobs.size(); ++i) total *= workers;
    double best = std::numeric_limits<double>::infinity();
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

ErrorKind kind_of(const std::function<void()>& fn) {
    try {
        fn();
    } catch (const Error& e) {
        return e.kind();
    }
    ADD_FAILURE() << "expected an error";
    return ErrorKind::io;
}

}  // namespace

TEST(Scheduler, LptOnKnownInstance) {
    auto jobs = jobs_of({8, 7, 6, 5, 4});
    auto lpt = schedule_list(jobs, 2, Policy::lpt);
    EXPECT_DOUBLE_EQ(lpt.makespan_s, 17.0);
    EXPECT_DOUBLE_EQ(brute_force_opt(jobs, 2), 15.0);
    EXPECT_EQ(lpt.timeline[0].front().job_id, "j0");
    EXPECT_EQ(lpt.timeline[1].front().job_id, "j1");
}

TEST(Scheduler, BruteForceKnownOptima) {
    EXPECT_DOUBLE_EQ(brute_force_opt(jobs_of({5, 4, 3, 3, 3}), 2), 9.0);
    EXPECT_DOUBLE_EQ(brute_force_opt(jobs_of({3, 3, 3}), 3), 3.0);
    EXPECT_DOUBLE_EQ(brute_force_opt(jobs_of({7}), 3), 7.0);
    EXPECT_DOUBLE_EQ(brute_force_opt(jobs_of({2, 2}), 1), 4.0);
}

TEST(Scheduler, BruteForceLimits) {
    std::vector<Job> many = jobs_of({1, 1, 1, 1, 1, 1, 1, 1, 1, 1, 1, 1, 1});
    EXPECT_EQ(kind_of([&] { brute_force_opt(many, 2); }), ErrorKind::size);
    EXPECT_EQ(kind_of([&] { brute_force_opt(jobs_of({1}), 4); }), ErrorKind::size);
}

TEST(Scheduler, GrahamTightInstance) {
    // m = 2: LPT gives 7, OPT is 6, ratio exactly 4/3 - 1/6.
    auto jobs = jobs_of({3, 3, 2, 2, 2});
    double lpt = schedule_list(jobs, 2, Policy::lpt).makespan_s;
    double opt = brute_force_opt(jobs, 2);
    EXPECT_DOUBLE_EQ(lpt, 7.0);
    EXPECT_DOUBLE_EQ(opt, 6.0);
    EXPECT_DOUBLE_EQ(lpt / opt, graham_bound_factor(2));
}

TEST(Scheduler, LptWithinGrahamBoundAgainstEnumeration) {
    std::mt19937_64 rng(5);
    std::uniform_int_distribution<int> count(1, 8), workers(1, 3), runtime(1, 50);
    for (int instance = 0; instance < 200; ++instance) {
        std::vector<Job> jobs;
        int n = count(rng);
        for (int i = 0; i < n; ++i) {
            double r = runtime(rng);
            jobs.push_back({"j" + std::to_string(i), "", r, r});
        }
        std::size_t m = workers(rng);
        double opt = enumerate_opt(jobs, m);
        ASSERT_DOUBLE_EQ(brute_force_opt(jobs, m), opt);
        double lpt = schedule_list(jobs, m, Policy::lpt).makespan_s;
        EXPECT_LE(lpt, graham_bound_factor(m) * opt + 1e-9);
        EXPECT_GE(lpt, makespan_lower_bound(jobs, m) - 1e-9);
    }
}

TEST(Scheduler, IdenticalJobArithmetic) {
    auto report = arithmetic_report(643, 460.0, 5);
    EXPECT_EQ(report.sequential_s, 295780.0);
    EXPECT_EQ(report.parallel_s, 59340.0);  // ceil(643 / 5) * 460
    EXPECT_DOUBLE_EQ(report.lower_bound_s, 59156.0);
    auto text = render(report);
    EXPECT_NE(text.find("295780"), std::string::npos);
    EXPECT_NE(text.find("59340"), std::string::npos);
    EXPECT_NE(text.find("59156"), std::string::npos);
    EXPECT_NE(text.find("<14 h"), std::string::npos);
}

TEST(Scheduler, EqualSubdomainsFillBatches) {
    const double length = 1000.0;
    auto jobs = identical_jobs(15, length, 15);
    auto refill = dynamic_queue_run(jobs, 5, true);
    auto batch = dynamic_queue_run(jobs, 5, false);
    EXPECT_DOUBLE_EQ(refill.makespan_s, 3 * length);
    EXPECT_DOUBLE_EQ(batch.makespan_s, 3 * length);
    EXPECT_EQ(refill.subdomain_completion_s.size(), 15u);
}

TEST(Scheduler, RefillNeverLosesToBatches) {
    std::mt19937_64 rng(9);
    std::uniform_int_distribution<int> subdomains(1, 20), per(1, 6), runtime(10, 900);
    for (int instance = 0; instance < 300; ++instance) {
        std::vector<Job> jobs;
        int s = subdomains(rng);
        for (int d = 0; d < s; ++d) {
            int k = per(rng);
            for (int i = 0; i < k; ++i) {
                double r = runtime(rng);
                jobs.push_back({"d" + std::to_string(d) + "-" + std::to_string(i),
                                "d" + std::to_string(d), r, r});
            }
        }
        std::size_t width = 1 + instance % 5;
        double refill = dynamic_queue_run(jobs, width, true).makespan_s;
        double batch = dynamic_queue_run(jobs, width, false).makespan_s;
        EXPECT_LE(refill, batch + 1e-9);
    }
}

TEST(Scheduler, SubdomainJobsRunBackToBack) {
    std::vector<Job> jobs{{"a1", "a", 5, 5}, {"b1", "b", 2, 2}, {"a2", "a", 5, 6}};
    auto result = dynamic_queue_run(jobs, 2, true);
    EXPECT_DOUBLE_EQ(result.subdomain_completion_s.at("a"), 11.0);
    EXPECT_DOUBLE_EQ(result.subdomain_completion_s.at("b"), 2.0);
    ASSERT_EQ(result.timeline[0].size(), 2u);
    EXPECT_DOUBLE_EQ(result.timeline[0][1].start_s, result.timeline[0][0].end_s);
}

TEST(Scheduler, FifoKeepsInputOrder) {
    auto jobs = jobs_of({1, 9, 1});
    auto fifo = schedule_list(jobs, 1, Policy::fifo);
    EXPECT_EQ(fifo.timeline[0][0].job_id, "j0");
    auto lpt = schedule_list(jobs, 1, Policy::lpt);
    EXPECT_EQ(lpt.timeline[0][0].job_id, "j1");
    EXPECT_EQ(policy_from_string("fifo"), Policy::fifo);
    EXPECT_EQ(kind_of([] { policy_from_string("random"); }), ErrorKind::validation);
}

TEST(Scheduler, PercentileNearestRank) {
    std::vector<double> v{10, 1, 9, 2, 8, 3, 7, 4, 6, 5};
    EXPECT_DOUBLE_EQ(percentile(v, 0.5), 5.0);
    EXPECT_DOUBLE_EQ(percentile(v, 0.95), 10.0);
    EXPECT_DOUBLE_EQ(percentile(v, 0.01), 1.0);
    EXPECT_DOUBLE_EQ(percentile({}, 0.5), 0.0);
}

TEST(Scheduler, SummaryStats) {
    auto result = schedule_list(jobs_of({4, 4, 2}), 2, Policy::lpt);
    auto stats = summarize(result);
    EXPECT_DOUBLE_EQ(stats.makespan_s, 6.0);
    EXPECT_DOUBLE_EQ(stats.total_runtime_s, 10.0);
    EXPECT_DOUBLE_EQ(stats.utilization, 10.0 / 12.0);
    EXPECT_DOUBLE_EQ(stats.lower_bound_s, 5.0);
}

TEST(Scheduler, JobFileRoundTrip) {
    auto path = std::filesystem::temp_directory_path() / "coachd-jobs.jsonl";
    std::vector<Job> jobs{{"x", "a.example", 10, 12}, {"y", "b.example", 3, 3}};
    write_jobs(path, jobs);
    auto back = read_jobs(path);
    ASSERT_EQ(back.size(), 2u);
    EXPECT_EQ(back[0].subdomain, "a.example");
    EXPECT_DOUBLE_EQ(back[0].actual_runtime_s, 12.0);

    auto parsed = parse_jobs("{\"job_id\": \"z\", \"est_runtime_s\": 4}\n\n");
    EXPECT_DOUBLE_EQ(parsed.at(0).actual_runtime_s, 4.0);
    EXPECT_EQ(kind_of([] { parse_jobs("{\"job_id\": \"z\", \"est_runtime_s\": -1}"); }),
              ErrorKind::validation);
    EXPECT_EQ(kind_of([] { parse_jobs("not json"); }), ErrorKind::parse);
    EXPECT_EQ(kind_of([] { read_jobs("/nonexistent/jobs.jsonl"); }), ErrorKind::io);
}

TEST(Scheduler, RejectsDegenerateInput) {
    EXPECT_EQ(kind_of([] { schedule_list({}, 2, Policy::lpt); }), ErrorKind::validation);
    EXPECT_EQ(kind_of([] { schedule_list(jobs_of({1}), 0, Policy::lpt); }), ErrorKind::validation);
    EXPECT_EQ(kind_of([] { schedule_list(jobs_of({std::nan("")}), 1, Policy::lpt); }),
              ErrorKind::validation);
    EXPECT_EQ(kind_of([] { dynamic_queue_run(jobs_of({1}), 0); }), ErrorKind::validation);
}

namespace {

class CountingExecutor final : public Executor {
public:
    double run(const Job& job, std::size_t) override {
        int now = ++in_flight;
        int seen = peak.load();
        while (now > seen && !peak.compare_exchange_weak(seen, now)) {
        }
        {
            std::lock_guard lock(mutex);
            ran.push_back(job.job_id);
        }
        if (job.job_id == fail_on) {
            --in_flight;
            throw Error(ErrorKind::backend, "worker crashed");
        }
        std::this_thread::sleep_for(std::chrono::milliseconds(2));
        --in_flight;
        return 0.002;
    }
    std::atomic<int> in_flight{0}, peak{0};
    std::mutex mutex;
    std::vector<std::string> ran;
    std::string fail_on;
};

}  // namespace

TEST(Scheduler, DispatchRunsEachJobOnceWithinWidth) {
    auto jobs = identical_jobs(23, 1.0, 4);
    CountingExecutor executor;
    auto result = dispatch(jobs, 3, Policy::lpt, executor);
    EXPECT_LE(executor.peak.load(), 3);
    std::set<std::string> unique(executor.ran.begin(), executor.ran.end());
    EXPECT_EQ(unique.size(), jobs.size());
    EXPECT_EQ(executor.ran.size(), jobs.size());
    std::size_t scheduled = 0;
    for (const auto& worker : result.timeline) scheduled += worker.size();
    EXPECT_EQ(scheduled, jobs.size());
    EXPECT_GT(result.makespan_s, 0.0);
}

TEST(Scheduler, DispatchPropagatesExecutorFailure) {
    auto jobs = identical_jobs(10, 1.0);
    CountingExecutor executor;
    executor.fail_on = "job-00004";
    EXPECT_EQ(kind_of([&] { dispatch(jobs, 2, Policy::fifo, executor); }), ErrorKind::backend);
    EXPECT_LT(executor.ran.size(), jobs.size() + 1);
}
