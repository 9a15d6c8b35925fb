#include <chrono>
#include <fstream>
#include <random>

#include "camp/hashing.hpp"
#include "camp/llm_client.hpp"

namespace camp::llm {

void validate(const GenerationRequest& request) {
    if (request.n_samples < 1) throw std::invalid_argument("n_samples must be at least 1");
    if (request.max_tokens <= 0) throw std::invalid_argument("max_tokens must be positive");
    if (!(request.temperature >= 0.0)) throw std::invalid_argument("temperature must be >= 0");
}

MockRules mock_rules_from_json(const nlohmann::json& j) {
    MockRules r;
    r.base_rate = j.value("base_rate", r.base_rate);
    if (!(r.base_rate >= 0.0 && r.base_rate <= 1.0)) throw std::invalid_argument("mock base_rate must be in [0, 1]");
    r.seed = j.value("seed", r.seed);
    if (auto it = j.find("tasks"); it != j.end())
        for (const auto& [task, needle] : it->items()) r.needles[task] = needle.get<std::string>();
    if (auto it = j.find("attention_window_tokens"); it != j.end() && !it->is_null())
        r.attention_window_tokens = it->get<std::size_t>();
    return r;
}

nlohmann::json mock_rules_to_json(const MockRules& rules) {
    nlohmann::json j = {{"base_rate", rules.base_rate}, {"seed", rules.seed}, {"tasks", rules.needles}};
    if (rules.attention_window_tokens) j["attention_window_tokens"] = *rules.attention_window_tokens;
    return j;
}

MockRules load_mock_rules(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open mock rules " + path.string());
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::parse_error& e) {
        throw std::invalid_argument("mock rules are not valid JSON: " + std::string(e.what()));
    }
    return mock_rules_from_json(j);
}

MockBackend::MockBackend(MockRules rules) : rules_(std::move(rules)) {}

std::string MockBackend::visible_text(const std::vector<prompt::ChatMessage>& payload) const {
    std::string all;
    for (const auto& m : payload) {
        if (!all.empty()) all += '\n';
        all += m.content;
    }
    if (!rules_.attention_window_tokens) return all;
    const prompt::TokenCounter counter;
    const std::string_view text(all);
    std::size_t lo = 0, hi = text.size();
    while (lo < hi) {
        const std::size_t mid = lo + (hi - lo) / 2;
        if (counter.count(text.substr(mid)) <= *rules_.attention_window_tokens)
            hi = mid;
        else
            lo = mid + 1;
    }
    return std::string(text.substr(lo));
}

GenerationResponse MockBackend::generate(const GenerationRequest& request) {
    validate(request);
    const auto start = std::chrono::steady_clock::now();
    const std::string payload = prompt::chat_to_json(request.payload).dump();
    std::string needle;
    if (auto it = rules_.needles.find(request.task_id); it != rules_.needles.end()) needle = it->second;
    const bool seen = !needle.empty() && visible_text(request.payload).find(needle) != std::string::npos;

    GenerationResponse out;
    out.backend_id = id();
    out.request_id = "mock-" + std::to_string(next_id_++);
    const std::uint64_t base = mix64(fnv1a64(payload) ^ mix64(rules_.seed ^ mix64(request.seed.value_or(0))));
    for (int i = 0; i < request.n_samples; ++i) {
        std::mt19937_64 rng(mix64(base + static_cast<std::uint64_t>(i)));
        const bool correct = seen || std::uniform_real_distribution<double>(0.0, 1.0)(rng) < rules_.base_rate;
        if (correct && !needle.empty())
            out.samples.push_back("// completion\nreturn " + needle + ";\n");
        else
            out.samples.push_back("// completion " + std::to_string(i) + "\nreturn 0;\n");
    }
    out.latency_ms = std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::steady_clock::now() - start)
                         .count();
    return out;
}

std::unique_ptr<LlmBackend> make_backend(const BackendConfig& config) {
    if (config.kind == "mock") {
        if (config.mock_rules) return std::make_unique<MockBackend>(*config.mock_rules);
        if (config.mock_rules_path) return std::make_unique<MockBackend>(load_mock_rules(*config.mock_rules_path));
        return std::make_unique<MockBackend>(MockRules{});
    }
    if (config.kind == "http") return std::make_unique<HttpBackend>(config.http);
    throw std::invalid_argument("unknown backend kind: " + config.kind);
}

}  // namespace camp::llm
