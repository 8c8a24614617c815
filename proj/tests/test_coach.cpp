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

#include <random>
#include <thread>

#include "coachd/coach.hpp"
#include "coachd/synthetic.hpp"

using namespace coachd;

namespace {

CondensedRecord current(std::vector<Evidence> patterns, std::size_t steps = 10) {
    CondensedRecord r;
    r.summary_text = "The agent is browsing. It clicked things. The task is still running.";
    r.embedding = Vector(8, 0.5);
    r.evidence_kind = EvidenceKind::current_pattern;
    r.evidence = std::move(patterns);
    r.source.total_steps = steps;
    r.source.task_id = "now";
    return r;
}

ScoredRecord past(const std::string& id, double score, bool success,
                  std::vector<Evidence> evidence, std::size_t steps = 5) {
    auto record = synthetic_record(0, std::vector<float>(8, 1.0f), "past", success);
    record.meta.episode_id = id;
    record.meta.total_steps = steps;
    record.evidence = std::move(evidence);
    return {std::make_shared<const MemoryRecord>(std::move(record)), score};
}

const Evidence kLoop{"Navigation Loop",
                     "Repeated click 'More like X' 3 times after entering via 'Trending'."};

CoachDecision run_stub(const CoachInput& input) {
    StubCoach coach;
    auto report = decide(input, coach);
    EXPECT_FALSE(report.parse_failure);
    EXPECT_FALSE(report.backend_failure);
    EXPECT_FALSE(validate_decision_json(Json::parse(to_json(report.decision).dump())));
    return report.decision;
}

class FakeCoach final : public CoachBackend {
public:
    explicit FakeCoach(std::vector<std::string> replies, bool fail = false)
        : replies_(std::move(replies)), fail_(fail) {}
    std::string name() const override { return "fake"; }
    bool deterministic() const override { return true; }
    std::string decide_raw(const std::string& prompt, const CoachInput&) override {
        prompts.push_back(prompt);
        if (fail_) throw std::runtime_error("connection refused");
        return replies_.at(std::min(prompts.size() - 1, replies_.size() - 1));
    }
    std::vector<std::string> prompts;

private:
    std::vector<std::string> replies_;
    bool fail_;
};

}  // namespace

TEST(StubCoach, HazardInCurrentTrace) {
    auto d = run_stub({current({kLoop}), {}});
    ASSERT_TRUE(d.intervene);
    EXPECT_EQ(*d.advice,
              "Warning: the current trace shows a navigation loop. Avoid 'More like X' and "
              "'Trending' and take a different route.");
    EXPECT_TRUE(d.cited_episode_ids.empty());
    EXPECT_LE(count_sentences(*d.advice), 2u);
}

TEST(StubCoach, HazardWithoutLabels) {
    auto d = run_stub({current({{"Dead End", "The page said dead end."}}), {}});
    ASSERT_TRUE(d.intervene);
    EXPECT_EQ(*d.advice,
              "Warning: the current trace shows a dead end. Go back and take a different route.");
}

TEST(StubCoach, RetrievedFailureIsCitedAtThreshold) {
    Evidence captcha{"CAPTCHA Gate", "Using 'Sign in' at step 2 led to a CAPTCHA page."};
    CoachInput input{current({kLoop}),
                     {past("ep-hit", 0.80, false, {{"Navigation Loop", "Repeated click 'Offers' 4 times."}}),
                      past("ep-low", 0.7999, false, {kLoop}),
                      past("ep-other", 0.79, false, {captcha})}};
    auto d = run_stub(input);
    ASSERT_TRUE(d.intervene);
    EXPECT_EQ(d.cited_episode_ids, std::vector<std::string>{"ep-hit"});
    EXPECT_NE(d.advice->find("which ended similar past attempts in failure"), std::string::npos);
    EXPECT_NE(d.advice->find("'Offers'"), std::string::npos);
}

TEST(StubCoach, FailureWithDifferentHazardIsNotCited) {
    Evidence captcha{"CAPTCHA Gate", "Using 'Sign in' at step 2 led to a CAPTCHA page."};
    auto d = run_stub({current({kLoop}), {past("ep-x", 0.99, false, {captcha})}});
    EXPECT_TRUE(d.intervene);
    EXPECT_TRUE(d.cited_episode_ids.empty());
}

TEST(StubCoach, ShorterSuccessSuggestsWorkflow) {
    Evidence route{"Navigation to Hours", "Reached the goal via 'Support' -> 'Hours'."};
    auto d = run_stub({current({}, 12), {past("ep-ok", 0.85, true, {route}, 4)}});
    ASSERT_TRUE(d.intervene);
    EXPECT_EQ(*d.advice,
              "A similar task was completed in 4 steps via 'Support' then 'Hours'. Consider "
              "following that workflow.");
    EXPECT_EQ(d.cited_episode_ids, std::vector<std::string>{"ep-ok"});
}

TEST(StubCoach, SilentOtherwise) {
    Evidence route{"Navigation to Hours", "Reached the goal via 'Support'."};
    EXPECT_FALSE(run_stub({current({}), {}}).intervene);
    EXPECT_FALSE(run_stub({current({}, 4), {past("ep-same", 0.95, true, {route}, 4)}}).intervene);
    EXPECT_FALSE(run_stub({current({}, 12), {past("ep-weak", 0.84, true, {route}, 2)}}).intervene);
    // A failure alone, without a hazard in the current trace.
    EXPECT_FALSE(run_stub({current({}), {past("ep-f", 0.99, false, {kLoop})}}).intervene);
}

TEST(StubCoach, LabelListIsBounded) {
    std::vector<ScoredRecord> hits;
    for (int i = 0; i < 5; ++i) {
        hits.push_back(past("ep-" + std::to_string(i), 0.9, false,
                            {{"Navigation Loop", "Repeated click 'L" + std::to_string(i) +
                                                     "a' 3 times after entering via 'L" +
                                                     std::to_string(i) + "b'."}}));
    }
    auto d = run_stub({current({kLoop}), hits});
    EXPECT_EQ(quoted_labels(*d.advice).size(), 6u);
    EXPECT_EQ(d.cited_episode_ids.size(), 5u);
}

TEST(Decision, JsonKeyOrder) {
    CoachDecision d{true, "Stop. Go back.", {"a", "b"}, "why"};
    EXPECT_EQ(to_json(d).dump(),
              R"({"intervene":true,"advice":"Stop. Go back.","cited_episode_ids":["a","b"],"rationale":"why"})");
    EXPECT_EQ(to_json(CoachDecision{}).dump(), R"({"intervene":false,"cited_episode_ids":[]})");
}

TEST(Decision, StrictValidation) {
    auto invalid = [](const char* text) { return validate_decision_json(Json::parse(text)).has_value(); };
    EXPECT_FALSE(invalid(R"({"intervene":false})"));
    EXPECT_FALSE(invalid(R"({"intervene":true,"advice":"Go back.","cited_episode_ids":[]})"));
    EXPECT_TRUE(invalid(R"({"intervene":false,"advice":"x"})"));
    EXPECT_TRUE(invalid(R"({"intervene":true})"));
    EXPECT_TRUE(invalid(R"({"intervene":true,"advice":"A. B. C."})"));
    EXPECT_TRUE(invalid(R"({"intervene":"yes"})"));
    EXPECT_TRUE(invalid(R"({"intervene":false,"extra":1})"));
    EXPECT_TRUE(invalid(R"({"intervene":false,"cited_episode_ids":[""]})"));
}

TEST(Decision, ParseIsLenientButSafe) {
    auto parsed = parse_decision(
        "```json\n{\"intervene\": true, \"advice\": \"One. Two. Three.\", "
        "\"cited_episode_ids\": [\"known\", \"made-up\", \"known\"]}\n```",
        {"known"});
    ASSERT_TRUE(std::holds_alternative<CoachDecision>(parsed));
    auto d = std::get<CoachDecision>(parsed);
    EXPECT_EQ(*d.advice, "One. Two.");
    EXPECT_EQ(d.cited_episode_ids, std::vector<std::string>{"known"});

    auto silent = std::get<CoachDecision>(parse_decision(R"({"intervene":false,"advice":"x"})", {}));
    EXPECT_FALSE(silent.advice);
    EXPECT_TRUE(std::holds_alternative<std::string>(parse_decision("nothing here", {})));
    EXPECT_TRUE(std::holds_alternative<std::string>(parse_decision(R"({"intervene":true})", {})));
}

TEST(Decide, RepairRetryThenSuccess) {
    FakeCoach coach({"garbage", R"({"intervene":true,"advice":"Go back."})"});
    auto report = decide({current({}), {}}, coach);
    EXPECT_EQ(report.backend_calls, 2u);
    EXPECT_TRUE(report.decision.intervene);
    EXPECT_NE(coach.prompts[1].find("previous reply was invalid"), std::string::npos);
}

TEST(Decide, DegradesToSilence) {
    FakeCoach garbage({"garbage"});
    auto report = decide({current({kLoop}), {}}, garbage);
    EXPECT_TRUE(report.parse_failure);
    EXPECT_EQ(report.backend_calls, 2u);
    EXPECT_FALSE(report.decision.intervene);

    FakeCoach broken({}, true);
    report = decide({current({kLoop}), {}}, broken);
    EXPECT_TRUE(report.backend_failure);
    EXPECT_EQ(report.backend_calls, 1u);
    EXPECT_FALSE(report.decision.intervene);
}

TEST(Decide, InputInvariants) {
    StubCoach coach;
    auto complete = current({});
    complete.completeness = Completeness::complete;
    EXPECT_THROW(decide({complete, {}}, coach), Error);
    CoachInput unsorted{current({}), {past("a", 0.5, true, {kLoop}), past("b", 0.9, true, {kLoop})}};
    EXPECT_THROW(decide(unsorted, coach), Error);
}

TEST(Prompt, ExperienceBlocks) {
    auto empty = build_coach_prompt({current({}), {}});
    EXPECT_NE(empty.find(kNoExperiencesMarker), std::string::npos);
    auto prompt = build_coach_prompt({current({kLoop}), {past("ep-1", 0.9, false, {kLoop}, 7)}});
    EXPECT_NE(prompt.find("### Experience 1 (score 0.900000, outcome: failure, episode_id: ep-1, steps: 7)"),
              std::string::npos);
    EXPECT_NE(prompt.find("Fail modes:"), std::string::npos);
    EXPECT_EQ(prompt.find("{{"), std::string::npos);
}

TEST(AdviceChannel, OrderAndErrors) {
    AdviceChannel channel;
    channel.open("s1");
    CoachDecision d{true, "First.", {}, std::nullopt};
    auto r1 = channel.inject(d, "s1", 1);
    d.advice = "Second.";
    auto r2 = channel.inject(d, "s1", 2);
    EXPECT_LT(r1.sequence, r2.sequence);
    EXPECT_EQ(channel.pending("s1"), 2u);
    auto messages = channel.poll("s1");
    ASSERT_EQ(messages.size(), 2u);
    EXPECT_EQ(messages[0].content, "First.");
    EXPECT_EQ(messages[1].step_index, 2u);
    EXPECT_EQ(messages[0].role, "system");
    EXPECT_TRUE(channel.poll("s1").empty());

    try {
        channel.inject(CoachDecision{}, "s1", 3);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::precondition);
    }
    channel.close("s1");
    try {
        channel.inject(d, "s1", 3);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::stale_session);
    }
    try {
        channel.poll("nope");
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::lookup);
    }
    EXPECT_EQ(channel.receipts("s1").size(), 2u);
}

TEST(AdviceChannel, PerSessionOrderUnderConcurrency) {
    AdviceChannel channel;
    const int sessions = 4, per = 200;
    for (int s = 0; s < sessions; ++s) channel.open("s" + std::to_string(s));
    std::vector<std::thread> threads;
    for (int s = 0; s < sessions; ++s) {
        threads.emplace_back([&, s] {
            for (int i = 0; i < per; ++i) {
                channel.inject({true, "m" + std::to_string(i) + ".", {}, std::nullopt},
                               "s" + std::to_string(s), static_cast<std::size_t>(i));
            }
        });
    }
    for (auto& t : threads) t.join();
    for (int s = 0; s < sessions; ++s) {
        auto messages = channel.poll("s" + std::to_string(s));
        ASSERT_EQ(messages.size(), static_cast<std::size_t>(per));
        for (int i = 0; i < per; ++i) EXPECT_EQ(messages[i].step_index, static_cast<std::size_t>(i));
    }
}

TEST(Decide, FuzzedBackendOutputNeverEscapes) {
    std::mt19937_64 rng(21);
    const std::vector<std::string> pieces{
        "{", "}", "\"intervene\"", ":", "true", "false", ",", "\"advice\"", "\"Go back. Now. Please.\"",
        "\"cited_episode_ids\"", "[", "]", "\"ep-1\"", "null", "```", "\"rationale\"", "42", "\\"};
    for (int n = 0; n < 500; ++n) {
        std::string raw;
        auto len = rng() % 12;
        for (std::size_t i = 0; i < len; ++i) raw += pieces[rng() % pieces.size()];
        FakeCoach coach({raw});
        DecideReport report;
        ASSERT_NO_THROW(report = decide({current({kLoop}), {past("ep-1", 0.9, false, {kLoop})}}, coach));
        EXPECT_FALSE(validate_decision_json(Json::parse(to_json(report.decision).dump())));
    }
}
