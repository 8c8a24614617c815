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

#include <cstdlib>
#include <filesystem>
#include <fstream>

#include "coachd/config.hpp"
#include "coachd/prompts.hpp"

using namespace coachd;

namespace {

ErrorKind kind_of(const std::function<void()>& fn) {
    try {
        fn();
    } catch (const Error& e) {
        return e.kind();
    }
    ADD_FAILURE() << "expected an error";
    return ErrorKind::io;
}

struct EnvGuard {
    EnvGuard() { clear(); }
    ~EnvGuard() { clear(); }
    static void clear() {
        for (const char* name : {"WEBCOACH_CONFIG", "WEBCOACH_SNAPSHOT", "WEBCOACH_MODE"}) {
            ::unsetenv(name);
        }
    }
};

std::string write_temp(const std::string& name, const std::string& content) {
    auto path = std::filesystem::temp_directory_path() / name;
    std::ofstream(path) << content;
    return path.string();
}

}  // namespace

TEST(Config, DefaultsRoundTrip) {
    ServiceConfig config;
    auto json = to_json(config);
    EXPECT_EQ(json["memory_mode"], "dynamic");
    EXPECT_EQ(json["coach_template_hash"], template_hash(coach_template()));
    auto back = service_config_from_json(json);
    EXPECT_EQ(back.top_k, config.top_k);
    EXPECT_EQ(back.hnsw.M, 32u);
    EXPECT_EQ(back.coach, config.coach);
    EXPECT_NO_THROW(check(back));
}

TEST(Config, UnknownKeysRejected) {
    EXPECT_EQ(kind_of([] { service_config_from_json(Json::parse(R"({"top_kk": 3})")); }),
              ErrorKind::config);
    EXPECT_EQ(kind_of([] { service_config_from_json(Json::parse(R"({"coach": {"modle": "x"}})")); }),
              ErrorKind::config);
    EXPECT_EQ(kind_of([] { service_config_from_json(Json::parse(R"({"memory_mode": "live"})")); }),
              ErrorKind::config);
}

TEST(Config, ChecksConsistency) {
    ServiceConfig config;
    config.top_k = 0;
    EXPECT_EQ(kind_of([&] { check(config); }), ErrorKind::config);
    config = {};
    config.coach.type = "openai";
    config.coach.base_url = "https://api.example";
    config.coach.model = "m";
    EXPECT_EQ(kind_of([&] { check(config); }), ErrorKind::config);
    config.coach.base_url = "http://127.0.0.1:9";
    EXPECT_NO_THROW(check(config));
    config.coach_template_hash = "0000000000000000";
    EXPECT_EQ(kind_of([&] { check(config); }), ErrorKind::config);
}

TEST(Config, CoachOptionsFollowConfig) {
    ServiceConfig config;
    config.top_k = 7;
    config.failure_threshold = 0.7;
    auto options = config.coach_options();
    EXPECT_EQ(options.top_k, 7u);
    EXPECT_DOUBLE_EQ(options.failure_threshold, 0.7);
    EXPECT_DOUBLE_EQ(options.success_threshold, 0.85);
}

TEST(Config, EnvironmentOverrides) {
    EnvGuard guard;
    auto path = write_temp("coachd-config.json", R"({"memory_mode": "dynamic", "top_k": 3})");
    ::setenv("WEBCOACH_CONFIG", path.c_str(), 1);
    ::setenv("WEBCOACH_MODE", "frozen", 1);
    ::setenv("WEBCOACH_SNAPSHOT", "/tmp/some.ems", 1);
    auto config = load_service_config();
    EXPECT_EQ(config.top_k, 3u);
    EXPECT_EQ(config.memory_mode, MemoryMode::frozen);
    EXPECT_EQ(config.snapshot_path, "/tmp/some.ems");

    ::setenv("WEBCOACH_MODE", "sometimes", 1);
    EXPECT_EQ(kind_of([] { load_service_config(); }), ErrorKind::config);
}

TEST(Config, UnreadableOrBrokenFile) {
    EnvGuard guard;
    EXPECT_EQ(kind_of([] { load_service_config("/nonexistent/coachd.json"); }), ErrorKind::config);
    auto path = write_temp("coachd-broken.json", "{ not json");
    EXPECT_EQ(kind_of([&] { load_service_config(path); }), ErrorKind::config);
}
