#include "coachsim/error.hpp"
#include "coachsim/llm.hpp"

#include "test_support.hpp"

#include <gtest/gtest.h>
#include <httplib.h>
#include <nlohmann/json.hpp>

#include <cstdlib>
#include <future>
#include <thread>

using namespace coachsim;
using namespace coachsim::llm;
using coachsim::testing::fail;
using coachsim::testing::reply;

namespace {

ChatRequest request_for(std::string content)
{
    ChatRequest r;
    r.model_id = "m";
    r.messages.push_back({ChatRole::User, std::move(content)});
    return r;
}

RetryPolicy no_wait(int attempts)
{
    RetryPolicy p;
    p.max_attempts = attempts;
    p.base_backoff = std::chrono::milliseconds(0);
    return p;
}

} // namespace

TEST(ScriptedMock, RepliesToMatchingRequest)
{
    auto mock = scripted_mock({reply("hello", "world")});
    auto const r = complete(*mock, request_for("say hello please"), no_wait(1));
    EXPECT_EQ(r.content, "world");
    EXPECT_EQ(r.model_id, "m");
    EXPECT_EQ(r.attempts, 1);
}

TEST(ScriptedMock, MatchesOnLastMessage)
{
    auto mock = scripted_mock({reply("question", "Because X.")});
    auto req = request_for("earlier question");
    req.messages.push_back({ChatRole::Assistant, "ok"});
    req.messages.push_back({ChatRole::User, "...a question?"});
    EXPECT_EQ(mock->send(req, {}).content, "Because X.");
}

TEST(ScriptedMock, ConsumeOnceThenUnscripted)
{
    auto mock = scripted_mock({reply("q", "a")});
    EXPECT_EQ(mock->send(request_for("q"), {}).content, "a");
    try {
        (void)mock->send(request_for("q"), {});
        FAIL() << "expected unscripted error";
    } catch (RequestError const & e) {
        EXPECT_NE(std::string(e.what()).find("unscripted request"), std::string::npos);
        EXPECT_EQ(e.detail(), "q");
    }
    EXPECT_EQ(mock->call_count(), 2u);
}

TEST(ScriptedMock, RepeatEntriesAnswerEveryMatch)
{
    auto mock = scripted_mock({reply("x", "y", true)});
    for (int i = 0; i < 5; ++i) {
        EXPECT_EQ(mock->send(request_for("x"), {}).content, "y");
    }
    EXPECT_EQ(mock->remaining_once_entries(), 0u);
}

TEST(ScriptedMock, RegexMatching)
{
    auto mock = scripted_mock({{R"(^turn \d+$)", MatchKind::Regex, std::string("ok"), true}});
    EXPECT_EQ(mock->send(request_for("turn 12"), {}).content, "ok");
    EXPECT_THROW((void)mock->send(request_for("turn twelve"), {}), RequestError);
}

TEST(ScriptedMock, EmptyScriptRejected)
{
    EXPECT_THROW((void)scripted_mock({}), ValidationError);
}

TEST(ScriptedMock, ParsesScriptDocument)
{
    auto const script = parse_script(R"([
        {"match": "a", "reply": "b"},
        {"match": "c.*", "regex": true, "fail": "request", "message": "bad"},
        {"match": "", "fail": "transient", "repeat": true}
    ])");
    ASSERT_EQ(script.size(), 3u);
    EXPECT_EQ(std::get<std::string>(script[0].outcome), "b");
    EXPECT_EQ(script[1].kind, MatchKind::Regex);
    EXPECT_EQ(std::get<ScriptedFailure>(script[1].outcome).kind, FailureKind::Request);
    EXPECT_TRUE(script[2].repeat);
    EXPECT_THROW((void)parse_script(R"([{"match": "a"}])"), Error);
    EXPECT_THROW((void)parse_script("not json"), Error);
}

TEST(Complete, RetriesTransientFailuresThenSucceeds)
{
    auto mock = scripted_mock({fail("go", FailureKind::Transient), fail("go", FailureKind::Transient), reply("go", "done")});
    std::vector<std::chrono::milliseconds> delays;
    RetryPolicy policy;
    policy.max_attempts = 3;
    policy.base_backoff = std::chrono::milliseconds(10);
    auto const r = complete(*mock, request_for("go"), policy, [&](auto d) { delays.push_back(d); });
    EXPECT_EQ(r.content, "done");
    EXPECT_EQ(r.attempts, 3);
    ASSERT_EQ(delays.size(), 2u);
    EXPECT_EQ(delays[0].count(), 10);
    EXPECT_EQ(delays[1].count(), 20);
}

TEST(Complete, ExhaustionRaisesTransportError)
{
    auto mock = scripted_mock({fail("go", FailureKind::Transient, true)});
    try {
        (void)complete(*mock, request_for("go"), no_wait(2));
        FAIL();
    } catch (TransportError const & e) {
        EXPECT_NE(std::string(e.what()).find("after 2 attempt"), std::string::npos);
    }
    EXPECT_EQ(mock->call_count(), 2u);
}

TEST(Complete, RequestErrorsAreNotRetried)
{
    auto mock = scripted_mock({fail("go", FailureKind::Request, true)});
    EXPECT_THROW((void)complete(*mock, request_for("go"), no_wait(5)), RequestError);
    EXPECT_EQ(mock->call_count(), 1u);
}

TEST(Complete, ValidatesRequest)
{
    auto mock = scripted_mock({reply("", "x", true)});
    ChatRequest empty;
    EXPECT_THROW((void)complete(*mock, empty, no_wait(1)), ValidationError);
    auto bad = request_for("x");
    bad.temperature = -1;
    EXPECT_THROW((void)complete(*mock, bad, no_wait(1)), ValidationError);
    EXPECT_THROW((void)complete(*mock, request_for("x"), no_wait(0)), ValidationError);
}

TEST(Complete, BackoffIsNonDecreasing)
{
    RetryPolicy p;
    p.base_backoff = std::chrono::milliseconds(7);
    for (int attempt = 1; attempt < 40; ++attempt) {
        EXPECT_LE(backoff_delay(p, attempt), backoff_delay(p, attempt + 1));
    }
    EXPECT_EQ(backoff_delay(p, 1).count(), 7);
}

namespace {

/// Counts concurrent sends and blocks each for a short while.
class SlowProvider : public ChatProvider
{
public:
    ChatResponse send(ChatRequest const & request, std::chrono::milliseconds) override
    {
        int const now = ++active_;
        int seen = peak_.load();
        while (now > seen && !peak_.compare_exchange_weak(seen, now)) { }
        std::this_thread::sleep_for(std::chrono::milliseconds(20));
        --active_;
        return {"ok", request.model_id, std::nullopt, 1};
    }

    std::atomic<int> active_{0};
    std::atomic<int> peak_{0};
};

} // namespace

TEST(BoundedProvider, CapsConcurrency)
{
    SlowProvider slow;
    BoundedProvider bounded(slow, 2);
    std::vector<std::future<ChatResponse>> futures;
    for (int i = 0; i < 8; ++i) {
        futures.push_back(std::async(std::launch::async, [&] { return bounded.send(request_for("x"), {}); }));
    }
    for (auto & f : futures) {
        EXPECT_EQ(f.get().content, "ok");
    }
    EXPECT_LE(slow.peak_.load(), 2);
}

TEST(HttpProvider, BuildsOpenAiStyleBody)
{
    auto req = request_for("hi");
    req.system_prompt = "sys";
    req.temperature = 0.0;
    req.max_tokens = 16;
    auto const body = nlohmann::json::parse(HttpProvider::build_body(req));
    EXPECT_EQ(body["model"], "m");
    ASSERT_EQ(body["messages"].size(), 2u);
    EXPECT_EQ(body["messages"][0]["role"], "system");
    EXPECT_EQ(body["messages"][0]["content"], "sys");
    EXPECT_EQ(body["messages"][1]["role"], "user");
    EXPECT_EQ(body["temperature"], 0.0);
    EXPECT_EQ(body["max_tokens"], 16);
}

TEST(HttpProvider, ParsesReplyAndUsage)
{
    auto const r = HttpProvider::parse_body(
        R"({"model":"gpt-x","choices":[{"message":{"role":"assistant","content":"yo"}}],"usage":{"prompt_tokens":3,"completion_tokens":1}})",
        "fallback");
    EXPECT_EQ(r.content, "yo");
    EXPECT_EQ(r.model_id, "gpt-x");
    ASSERT_TRUE(r.usage);
    EXPECT_EQ(r.usage->prompt_tokens, 3);
    EXPECT_EQ(r.usage->completion_tokens, 1);
    EXPECT_FALSE(HttpProvider::parse_body(R"({"choices":[{"message":{"content":"a"}}]})", "fb").usage);
    EXPECT_THROW((void)HttpProvider::parse_body("{}", "fb"), TransportError);
    EXPECT_THROW((void)HttpProvider::parse_body("<html>", "fb"), TransportError);
}

namespace {

/// Local stand-in for a chat-completions endpoint.
class FakeEndpoint
{
public:
    FakeEndpoint()
    {
        server_.Post("/v1/chat/completions", [this](httplib::Request const & req, httplib::Response & res) {
            last_auth_ = req.get_header_value("Authorization");
            res.status = status_;
            res.set_content(status_ == 200
                    ? R"({"model":"m","choices":[{"message":{"content":"pong"}}]})"
                    : R"({"error":{"message":"nope"}})",
                "application/json");
        });
        port_ = server_.bind_to_any_port("127.0.0.1");
        thread_ = std::thread([this] { server_.listen_after_bind(); });
        server_.wait_until_ready();
    }
    ~FakeEndpoint()
    {
        server_.stop();
        thread_.join();
    }

    [[nodiscard]] std::string url() const
    {
        return "http://127.0.0.1:" + std::to_string(port_) + "/v1/chat/completions";
    }

    httplib::Server server_;
    std::thread thread_;
    int port_ = 0;
    std::atomic<int> status_{200};
    std::string last_auth_;
};

} // namespace

TEST(HttpProvider, TalksToEndpointAndMapsStatusCodes)
{
    FakeEndpoint endpoint;
    ::setenv("COACHSIM_TEST_KEY", "secret-123", 1);
    HttpProvider provider({endpoint.url(), "COACHSIM_TEST_KEY"});
    auto const timeout = std::chrono::milliseconds(5000);

    EXPECT_EQ(provider.send(request_for("ping"), timeout).content, "pong");
    EXPECT_EQ(endpoint.last_auth_, "Bearer secret-123");

    endpoint.status_ = 503;
    EXPECT_THROW((void)provider.send(request_for("ping"), timeout), TransportError);
    endpoint.status_ = 429;
    EXPECT_THROW((void)provider.send(request_for("ping"), timeout), TransportError);
    endpoint.status_ = 400;
    EXPECT_THROW((void)provider.send(request_for("ping"), timeout), RequestError);
}

TEST(HttpProvider, MissingCredentialIsARequestError)
{
    ::unsetenv("COACHSIM_TEST_ABSENT_KEY");
    HttpProvider provider({"http://127.0.0.1:9/v1/chat/completions", "COACHSIM_TEST_ABSENT_KEY"});
    EXPECT_THROW((void)provider.send(request_for("x"), std::chrono::milliseconds(100)), RequestError);
}

TEST(HttpProvider, ConnectionFailureIsTransient)
{
    ::setenv("COACHSIM_TEST_KEY", "k", 1);
    HttpProvider provider({"http://127.0.0.1:9/v1/chat/completions", "COACHSIM_TEST_KEY"});
    EXPECT_THROW((void)provider.send(request_for("x"), std::chrono::milliseconds(500)), TransportError);
}

TEST(HttpProvider, RejectsBadEndpoint)
{
    EXPECT_THROW(HttpProvider({"not a url", "K"}), ConfigError);
    EXPECT_THROW(HttpProvider({"ftp://host/x", "K"}), ConfigError);
}
