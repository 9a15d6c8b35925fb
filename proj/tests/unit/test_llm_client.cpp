#include <doctest.h>

#include <chrono>
#include <cstdlib>
#include <mutex>
#include <thread>

#include <httplib.h>

#include "camp/llm_client.hpp"
#include "temp_dir.hpp"

using namespace camp;
using namespace camp::llm;

namespace {

GenerationRequest request_with(std::string content, int n = 10, std::uint64_t seed = 1) {
    GenerationRequest r;
    r.payload = {{"system", "You complete code."}, {"user", std::move(content)}};
    r.n_samples = n;
    r.seed = seed;
    r.task_id = "t1";
    return r;
}

int count_containing(const GenerationResponse& r, const std::string& needle) {
    int c = 0;
    for (const auto& s : r.samples) c += s.find(needle) != std::string::npos;
    return c;
}

struct StubServer {
    using Handler = std::function<void(const httplib::Request&, httplib::Response&, int attempt)>;

    explicit StubServer(Handler h) : handler(std::move(h)) {
        server.Post("/v1/chat/completions", [this](const httplib::Request& req, httplib::Response& res) {
            int attempt;
            {
                std::lock_guard lock(mu);
                attempt = ++hits;
                bodies.push_back(req.body);
                auth.push_back(req.get_header_value("Authorization"));
                max_in_flight = std::max(max_in_flight, ++in_flight);
            }
            handler(req, res, attempt);
            std::lock_guard lock(mu);
            --in_flight;
        });
        port = server.bind_to_any_port("127.0.0.1");
        thread = std::thread([this] { server.listen_after_bind(); });
        server.wait_until_ready();
    }
    ~StubServer() {
        server.stop();
        thread.join();
    }

    HttpConfig config() const {
        HttpConfig c;
        c.endpoint = "http://127.0.0.1:" + std::to_string(port) + "/v1/chat/completions";
        c.model = "stub-model";
        c.api_key_env = "CAMP_TEST_STUB_KEY";
        c.timeout_s = 5;
        c.backoff_initial_s = 0.01;
        return c;
    }

    Handler handler;
    httplib::Server server;
    std::thread thread;
    int port = 0;
    std::mutex mu;
    int hits = 0;
    int in_flight = 0;
    int max_in_flight = 0;
    std::vector<std::string> bodies;
    std::vector<std::string> auth;
};

std::string choices_body(int n, bool reversed = false) {
    nlohmann::json choices = nlohmann::json::array();
    for (int i = 0; i < n; ++i) {
        const int idx = reversed ? n - 1 - i : i;
        choices.push_back({{"index", idx}, {"message", {{"role", "assistant"}, {"content", "sample " + std::to_string(idx)}}}});
    }
    return nlohmann::json{{"id", "cmpl-1"}, {"choices", choices}}.dump();
}

}  // namespace

TEST_CASE("request validation") {
    auto r = request_with("x");
    CHECK_NOTHROW(validate(r));
    r.n_samples = 0;
    CHECK_THROWS_AS(validate(r), std::invalid_argument);
    r = request_with("x");
    r.max_tokens = 0;
    CHECK_THROWS_AS(validate(r), std::invalid_argument);
    r = request_with("x");
    r.temperature = -0.1;
    CHECK_THROWS_AS(validate(r), std::invalid_argument);
}

TEST_CASE("mock backend is deterministic") {
    MockRules rules;
    rules.base_rate = 0.5;
    rules.needles["t1"] = "kzeta_1234";
    MockBackend a(rules), b(rules);
    const auto req = request_with("nothing useful here");
    const auto r1 = a.generate(req);
    const auto r2 = a.generate(req);
    const auto r3 = b.generate(req);
    CHECK(r1.samples.size() == 10);
    CHECK(r1.samples == r2.samples);
    CHECK(r1.samples == r3.samples);
    CHECK(r1.backend_id == "mock");
    CHECK(r1.request_id != r2.request_id);

    bool differs = false;
    for (std::uint64_t seed = 2; seed < 10 && !differs; ++seed)
        differs = a.generate(request_with("nothing useful here", 10, seed)).samples != r1.samples;
    CHECK(differs);
}

TEST_CASE("mock needle oracle") {
    MockRules rules;
    rules.base_rate = 0.0;
    rules.needles["t1"] = "kzeta_1234";
    MockBackend mock(rules);
    CHECK(count_containing(mock.generate(request_with("int helper() { return kzeta_1234; }")), "kzeta_1234") == 10);
    CHECK(count_containing(mock.generate(request_with("int helper() { return 0; }")), "kzeta_1234") == 0);

    auto other = request_with("kzeta_1234");
    other.task_id = "unknown";
    CHECK(count_containing(mock.generate(other), "kzeta_1234") == 0);

    rules.base_rate = 1.0;
    CHECK(count_containing(MockBackend(rules).generate(request_with("no needle")), "kzeta_1234") == 10);
}

TEST_CASE("mock base rate is honored") {
    MockRules rules;
    rules.base_rate = 0.05;
    rules.needles["t1"] = "kzeta_1234";
    MockBackend mock(rules);
    int correct = 0, total = 0;
    for (std::uint64_t seed = 0; seed < 2000; ++seed) {
        const auto r = mock.generate(request_with("plain", 10, seed));
        correct += count_containing(r, "kzeta_1234");
        total += 10;
    }
    const double rate = static_cast<double>(correct) / total;
    CHECK(rate > 0.04);
    CHECK(rate < 0.06);
}

TEST_CASE("mock attention window") {
    MockRules rules;
    rules.base_rate = 0.0;
    rules.needles["t1"] = "kzeta_1234";
    rules.attention_window_tokens = 8;
    MockBackend mock(rules);
    std::string tail;
    for (int i = 0; i < 20; ++i) tail += " word";
    GenerationRequest early = request_with("kzeta_1234" + tail);
    CHECK(count_containing(mock.generate(early), "kzeta_1234") == 0);
    GenerationRequest late = request_with(tail + " kzeta_1234");
    CHECK(count_containing(mock.generate(late), "kzeta_1234") == 10);
    const auto visible = mock.visible_text(late.payload);
    CHECK(prompt::TokenCounter{}.count(visible) <= 8);
    CHECK(visible.ends_with("kzeta_1234"));
}

TEST_CASE("mock rules json") {
    MockRules rules;
    rules.base_rate = 0.25;
    rules.seed = 99;
    rules.needles = {{"a", "x1"}, {"b", "y2"}};
    rules.attention_window_tokens = 64;
    const auto back = mock_rules_from_json(mock_rules_to_json(rules));
    CHECK(back.base_rate == 0.25);
    CHECK(back.seed == 99);
    CHECK(back.needles == rules.needles);
    CHECK(back.attention_window_tokens == std::optional<std::size_t>(64));

    CHECK(mock_rules_from_json(nlohmann::json::object()).base_rate == 0.05);
    CHECK_THROWS_AS(mock_rules_from_json({{"base_rate", 1.5}}), std::invalid_argument);

    testing::TempDir dir;
    testing::write_file(dir / "rules.json", mock_rules_to_json(rules).dump());
    CHECK(load_mock_rules(dir / "rules.json").needles == rules.needles);
    testing::write_file(dir / "bad.json", "{nope");
    CHECK_THROWS_AS(load_mock_rules(dir / "bad.json"), std::invalid_argument);
    CHECK_THROWS(load_mock_rules(dir / "missing.json"));

    BackendConfig bc;
    bc.mock_rules_path = dir / "rules.json";
    const auto backend = make_backend(bc);
    CHECK(backend->id() == "mock");
    CHECK(dynamic_cast<MockBackend&>(*backend).rules().seed == 99);
    bc.kind = "carrier-pigeon";
    CHECK_THROWS_AS(make_backend(bc), std::invalid_argument);
}

TEST_CASE("http request body") {
    HttpConfig c;
    c.model = "m";
    auto req = request_with("hello", 4, 7);
    req.temperature = 0.2;
    const auto body = HttpBackend::request_body(c, req);
    CHECK(body["model"] == "m");
    CHECK(body["n"] == 4);
    CHECK(body["temperature"] == 0.2);
    CHECK(body["max_tokens"] == 256);
    CHECK(body["seed"] == 7);
    REQUIRE(body["messages"].size() == 2);
    CHECK(body["messages"][1]["role"] == "user");
    CHECK(body["messages"][1]["content"] == "hello");
    CHECK_FALSE(body.contains("task_id"));
}

TEST_CASE("http response parsing") {
    const auto samples = HttpBackend::parse_samples(choices_body(3, true), 3);
    CHECK(samples == std::vector<std::string>{"sample 0", "sample 1", "sample 2"});
    CHECK_THROWS_AS(HttpBackend::parse_samples("not json", 1), ProtocolError);
    CHECK_THROWS_AS(HttpBackend::parse_samples("{}", 1), ProtocolError);
    CHECK_THROWS_AS(HttpBackend::parse_samples(choices_body(2), 3), ProtocolError);
    CHECK_THROWS_AS(HttpBackend::parse_samples(R"({"choices":[{"index":0,"message":{"content":5}}]})", 1), ProtocolError);
    CHECK_THROWS_AS(HttpBackend::parse_samples(R"({"choices":[{"index":0}]})", 1), ProtocolError);
}

TEST_CASE("http backend against a stub server") {
    StubServer stub([](const httplib::Request&, httplib::Response& res, int) {
        std::this_thread::sleep_for(std::chrono::milliseconds(20));
        res.set_content(choices_body(10, true), "application/json");
    });

    SUBCASE("ten samples in order with the bearer token") {
        ::setenv("CAMP_TEST_STUB_KEY", "sk-test-secret", 1);
        HttpBackend backend(stub.config());
        const auto r = backend.generate(request_with("complete me", 10, 3));
        ::unsetenv("CAMP_TEST_STUB_KEY");
        REQUIRE(r.samples.size() == 10);
        for (int i = 0; i < 10; ++i) CHECK(r.samples[static_cast<std::size_t>(i)] == "sample " + std::to_string(i));
        CHECK(r.latency_ms >= 20);
        CHECK(r.backend_id == "http:stub-model");
        REQUIRE(stub.auth.size() == 1);
        CHECK(stub.auth[0] == "Bearer sk-test-secret");
        const auto sent = nlohmann::json::parse(stub.bodies[0]);
        CHECK(sent["n"] == 10);
        CHECK(sent["model"] == "stub-model");
        CHECK(sent["messages"][1]["content"] == "complete me");
    }
    SUBCASE("no key in the environment means no header") {
        ::unsetenv("CAMP_TEST_STUB_KEY");
        HttpBackend backend(stub.config());
        backend.generate(request_with("x"));
        REQUIRE(stub.auth.size() == 1);
        CHECK(stub.auth[0].empty());
    }
}

TEST_CASE("http retries transient statuses") {
    StubServer stub([](const httplib::Request&, httplib::Response& res, int attempt) {
        if (attempt == 1) {
            res.status = 500;
        } else if (attempt == 2) {
            res.status = 429;
        } else {
            res.set_content(choices_body(2), "application/json");
        }
    });
    HttpBackend backend(stub.config());
    const auto r = backend.generate(request_with("x", 2));
    CHECK(r.samples.size() == 2);
    CHECK(stub.hits == 3);
}

TEST_CASE("http gives up after three attempts") {
    StubServer stub([](const httplib::Request&, httplib::Response& res, int) { res.status = 503; });
    auto config = stub.config();
    config.max_attempts = 10;
    ::setenv("CAMP_TEST_STUB_KEY", "sk-never-logged", 1);
    HttpBackend backend(config);
    try {
        backend.generate(request_with("x"));
        FAIL("expected a transport error");
    } catch (const TransportError& e) {
        CHECK(std::string(e.what()).find("503") != std::string::npos);
        CHECK(std::string(e.what()).find("sk-never-logged") == std::string::npos);
    }
    ::unsetenv("CAMP_TEST_STUB_KEY");
    CHECK(stub.hits == kMaxAttempts);
}

TEST_CASE("http client errors are not retried") {
    StubServer stub([](const httplib::Request&, httplib::Response& res, int) { res.status = 400; });
    HttpBackend backend(stub.config());
    CHECK_THROWS_AS(backend.generate(request_with("x")), TransportError);
    CHECK(stub.hits == 1);
}

TEST_CASE("http malformed responses are protocol errors") {
    SUBCASE("bad json") {
        StubServer stub([](const httplib::Request&, httplib::Response& res, int) { res.set_content("<html>", "text/html"); });
        HttpBackend backend(stub.config());
        CHECK_THROWS_AS(backend.generate(request_with("x")), ProtocolError);
        CHECK(stub.hits == 1);
    }
    SUBCASE("wrong number of choices") {
        StubServer stub([](const httplib::Request&, httplib::Response& res, int) {
            res.set_content(choices_body(3), "application/json");
        });
        HttpBackend backend(stub.config());
        CHECK_THROWS_AS(backend.generate(request_with("x", 10)), ProtocolError);
    }
}

TEST_CASE("http timeout is bounded by attempts") {
    StubServer stub([](const httplib::Request&, httplib::Response& res, int) {
        std::this_thread::sleep_for(std::chrono::milliseconds(800));
        res.set_content(choices_body(1), "application/json");
    });
    auto config = stub.config();
    config.timeout_s = 0.15;
    config.max_attempts = 2;
    HttpBackend backend(config);
    const auto start = std::chrono::steady_clock::now();
    CHECK_THROWS_AS(backend.generate(request_with("x", 1)), TransportError);
    const double elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    CHECK(elapsed < 0.15 * 2 + 0.5);
    CHECK(stub.hits == 2);
}

TEST_CASE("http concurrency limit and correlation") {
    StubServer stub([](const httplib::Request& req, httplib::Response& res, int) {
        std::this_thread::sleep_for(std::chrono::milliseconds(30));
        const auto body = nlohmann::json::parse(req.body);
        const std::string echo = body["messages"][1]["content"];
        nlohmann::json reply = {{"choices", {{{"index", 0}, {"message", {{"role", "assistant"}, {"content", echo}}}}}}};
        res.set_content(reply.dump(), "application/json");
    });
    auto config = stub.config();
    config.max_concurrent = 2;
    HttpBackend backend(config);
    std::vector<std::string> got(6);
    {
        std::vector<std::jthread> threads;
        for (int i = 0; i < 6; ++i)
            threads.emplace_back([&, i] { got[static_cast<std::size_t>(i)] = backend.generate(request_with("q" + std::to_string(i), 1)).samples.at(0); });
    }
    for (int i = 0; i < 6; ++i) CHECK(got[static_cast<std::size_t>(i)] == "q" + std::to_string(i));
    CHECK(stub.max_in_flight <= 2);
}

TEST_CASE("http connection failures and bad endpoints") {
    int port;
    {
        httplib::Server probe;
        port = probe.bind_to_any_port("127.0.0.1");
    }
    HttpConfig c;
    c.endpoint = "http://127.0.0.1:" + std::to_string(port) + "/v1";
    c.timeout_s = 1;
    c.backoff_initial_s = 0.01;
    HttpBackend backend(c);
    CHECK_THROWS_AS(backend.generate(request_with("x")), TransportError);

    c.endpoint = "ftp://example";
    CHECK_THROWS_AS(HttpBackend{c}, std::invalid_argument);
    c.endpoint = "http://127.0.0.1:1/v1";
    c.timeout_s = 0;
    CHECK_THROWS_AS(HttpBackend{c}, std::invalid_argument);
}
