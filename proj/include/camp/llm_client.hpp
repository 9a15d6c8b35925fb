#pragma once

#include <atomic>
#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <semaphore>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "camp/prompt_constructor.hpp"

namespace camp::llm {

struct GenerationRequest {
    std::vector<prompt::ChatMessage> payload;
    int n_samples = 1;
    double temperature = 0.0;
    int max_tokens = 256;
    std::optional<std::uint64_t> seed;
    std::string task_id;  // lets the mock look up its rule; ignored over HTTP
};

struct GenerationResponse {
    std::vector<std::string> samples;
    std::string backend_id;
    std::int64_t latency_ms = 0;
    std::string request_id;
};

/// Network failure, timeout or HTTP error status after all retries.
struct TransportError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
/// The server answered but the body is not a usable completion.
struct ProtocolError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

class LlmBackend {
public:
    virtual ~LlmBackend() = default;
    virtual GenerationResponse generate(const GenerationRequest& request) = 0;
    virtual std::string id() const = 0;
};

void validate(const GenerationRequest& request);

struct HttpConfig {
    std::string endpoint = "https://api.openai.com/v1/chat/completions";
    std::string model = "gpt-3.5-turbo";
    std::string api_key_env = "CAMP_API_KEY";
    double timeout_s = 30.0;
    int max_attempts = 3;
    double backoff_initial_s = 0.5;
    std::size_t max_concurrent = 4;
};

inline constexpr int kMaxAttempts = 3;

/// Chat-completions client over cpp-httplib.
class HttpBackend final : public LlmBackend {
public:
    explicit HttpBackend(HttpConfig config);
    GenerationResponse generate(const GenerationRequest& request) override;
    std::string id() const override { return "http:" + config_.model; }

    static nlohmann::json request_body(const HttpConfig& config, const GenerationRequest& request);
    static std::vector<std::string> parse_samples(const std::string& body, int n_samples);

private:
    HttpConfig config_;
    std::string scheme_host_port_;
    std::string path_;
    std::counting_semaphore<1024> slots_;
    std::atomic<std::uint64_t> next_id_{0};
};

struct MockRules {
    double base_rate = 0.05;
    std::uint64_t seed = 0;
    std::map<std::string, std::string> needles;  // task id -> required symbol
    /// When set, only the last N tokens of the payload are "read".
    std::optional<std::size_t> attention_window_tokens;
};

MockRules mock_rules_from_json(const nlohmann::json& j);
nlohmann::json mock_rules_to_json(const MockRules& rules);
MockRules load_mock_rules(const std::filesystem::path& path);

/// Needle oracle: a sample is correct for sure when the task's needle is in
/// the (visible) payload, otherwise with probability base_rate.
class MockBackend final : public LlmBackend {
public:
    explicit MockBackend(MockRules rules);
    GenerationResponse generate(const GenerationRequest& request) override;
    std::string id() const override { return "mock"; }

    /// Text of the payload the mock "reads".
    std::string visible_text(const std::vector<prompt::ChatMessage>& payload) const;
    const MockRules& rules() const noexcept { return rules_; }

private:
    MockRules rules_;
    std::atomic<std::uint64_t> next_id_{0};
};

struct BackendConfig {
    std::string kind = "mock";  // mock | http
    HttpConfig http;
    std::optional<std::filesystem::path> mock_rules_path;
    std::optional<MockRules> mock_rules;
};

std::unique_ptr<LlmBackend> make_backend(const BackendConfig& config);

}  // namespace camp::llm
