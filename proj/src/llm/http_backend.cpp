#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <random>
#include <regex>
#include <thread>

#include <httplib.h>

#include "camp/llm_client.hpp"

namespace camp::llm {

namespace {

struct SlotGuard {
    std::counting_semaphore<1024>& s;
    explicit SlotGuard(std::counting_semaphore<1024>& sem) : s(sem) { s.acquire(); }
    ~SlotGuard() { s.release(); }
};

bool retryable_status(int status) { return status == 429 || status >= 500; }

}  // namespace

HttpBackend::HttpBackend(HttpConfig config)
    : config_(std::move(config)),
      slots_(static_cast<std::ptrdiff_t>(std::clamp<std::size_t>(config_.max_concurrent, 1, 1024))) {
    static const std::regex url(R"(^(https?://[^/]+)(/.*)?$)");
    std::smatch m;
    if (!std::regex_match(config_.endpoint, m, url)) throw std::invalid_argument("invalid endpoint URL: " + config_.endpoint);
    scheme_host_port_ = m[1].str();
    path_ = m[2].matched ? m[2].str() : "/";
    if (!(config_.timeout_s > 0.0)) throw std::invalid_argument("timeout must be positive");
    config_.max_attempts = std::clamp(config_.max_attempts, 1, kMaxAttempts);
}

nlohmann::json HttpBackend::request_body(const HttpConfig& config, const GenerationRequest& request) {
    nlohmann::json body = {{"model", config.model},
                           {"messages", prompt::chat_to_json(request.payload)},
                           {"n", request.n_samples},
                           {"temperature", request.temperature},
                           {"max_tokens", request.max_tokens}};
    if (request.seed) body["seed"] = *request.seed;
    return body;
}

std::vector<std::string> HttpBackend::parse_samples(const std::string& body, int n_samples) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(body);
    } catch (const nlohmann::json::parse_error& e) {
        throw ProtocolError(std::string("response is not JSON: ") + e.what());
    }
    if (!j.is_object() || !j.contains("choices") || !j["choices"].is_array())
        throw ProtocolError("response has no choices array");
    std::vector<std::pair<std::int64_t, std::string>> indexed;
    std::int64_t position = 0;
    for (const auto& c : j["choices"]) {
        const auto* content = c.is_object() && c.contains("message") && c["message"].is_object()
                                  ? &c["message"]["content"]
                                  : nullptr;
        if (content == nullptr || !content->is_string()) throw ProtocolError("choice without message content");
        indexed.emplace_back(c.value("index", position), content->get<std::string>());
        ++position;
    }
    std::stable_sort(indexed.begin(), indexed.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
    if (static_cast<int>(indexed.size()) != n_samples)
        throw ProtocolError("expected " + std::to_string(n_samples) + " choices, got " + std::to_string(indexed.size()));
    std::vector<std::string> samples;
    for (auto& [i, s] : indexed) samples.push_back(std::move(s));
    return samples;
}

GenerationResponse HttpBackend::generate(const GenerationRequest& request) {
    validate(request);
    SlotGuard slot(slots_);
    const auto start = std::chrono::steady_clock::now();
    const std::string body = request_body(config_, request).dump();

    httplib::Headers headers;
    if (const char* key = std::getenv(config_.api_key_env.c_str()); key != nullptr && *key != '\0')
        headers.emplace("Authorization", std::string("Bearer ") + key);

    std::mt19937_64 jitter_rng(request.seed.value_or(std::random_device{}()));
    std::uniform_real_distribution<double> jitter(0.5, 1.5);
    const auto timeout = std::chrono::duration<double>(config_.timeout_s);
    const auto timeout_us = std::chrono::duration_cast<std::chrono::microseconds>(timeout);

    std::string last_error;
    for (int attempt = 1; attempt <= config_.max_attempts; ++attempt) {
        httplib::Client client(scheme_host_port_);
        client.set_connection_timeout(timeout_us);
        client.set_read_timeout(timeout_us);
        client.set_write_timeout(timeout_us);
        auto res = client.Post(path_, headers, body, "application/json");
        if (res && res->status >= 200 && res->status < 300) {
            GenerationResponse out;
            out.samples = parse_samples(res->body, request.n_samples);
            out.backend_id = id();
            out.request_id = "http-" + std::to_string(next_id_++);
            out.latency_ms =
                std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::steady_clock::now() - start).count();
            return out;
        }
        if (res) {
            last_error = "HTTP status " + std::to_string(res->status);
            if (!retryable_status(res->status)) break;
        } else {
            last_error = "transport failure: " + httplib::to_string(res.error());
        }
        if (attempt < config_.max_attempts) {
            const double delay = config_.backoff_initial_s * std::pow(2.0, attempt - 1) * jitter(jitter_rng);
            std::this_thread::sleep_for(std::chrono::duration<double>(delay));
        }
    }
    throw TransportError(last_error);
}

}  // namespace camp::llm
