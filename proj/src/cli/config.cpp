#include <fstream>

#include "camp/cli.hpp"

namespace camp::cli {

namespace fs = std::filesystem;

namespace {

fs::path resolve(const std::string& p, const fs::path& base) {
    fs::path path(p);
    if (path.is_absolute() || base.empty()) return path.lexically_normal();
    return (base / path).lexically_normal();
}

template <typename T>
void read(const nlohmann::json& obj, const char* key, T& into) {
    if (auto it = obj.find(key); it != obj.end() && !it->is_null()) into = it->get<T>();
}

void require(bool ok, const std::string& message) {
    if (!ok) throw UsageError("config: " + message);
}

void reject_unknown(const nlohmann::json& obj, std::initializer_list<const char*> known, const std::string& where) {
    for (const auto& [key, value] : obj.items()) {
        bool found = false;
        for (const char* k : known) found = found || key == k;
        require(found, "unknown key '" + key + "' in " + where);
    }
}

}  // namespace

EngineConfig config_from_json(const nlohmann::json& j, const fs::path& base_dir) {
    require(j.is_object(), "top level must be an object");
    reject_unknown(j, {"index", "retrieval", "prompt", "training", "backend", "eval", "paths"}, "config");
    EngineConfig c;
    try {
        if (auto it = j.find("index"); it != j.end()) {
            reject_unknown(*it, {"d_emb", "extensions", "profiles"}, "index");
            read(*it, "d_emb", c.index.d_emb);
            read(*it, "extensions", c.index.extensions);
            read(*it, "profiles", c.index.profiles);
        }
        if (auto it = j.find("retrieval"); it != j.end()) {
            reject_unknown(*it, {"k", "fusion", "tau_c"}, "retrieval");
            read(*it, "k", c.k);
            read(*it, "tau_c", c.tau_c);
            if (auto f = it->find("fusion"); f != it->end()) {
                read(*f, "input", c.fusion.input);
                read(*f, "context", c.fusion.context);
                read(*f, "user_query", c.fusion.user_query);
            }
        }
        if (auto it = j.find("prompt"); it != j.end()) {
            reject_unknown(*it, {"budget", "dialect", "chars_per_token"}, "prompt");
            read(*it, "budget", c.budget);
            read(*it, "chars_per_token", c.chars_per_token);
            if (auto d = it->find("dialect"); d != it->end()) c.dialect = prompt::dialect_from_string(d->get<std::string>());
        }
        if (auto it = j.find("training"); it != j.end()) {
            reject_unknown(*it,
                           {"max_iters", "tol", "nuclear_weight", "alpha", "beta", "initial_step_H",
                            "initial_step_eta", "max_backtracks", "learn_eta", "threads"},
                           "training");
            auto& t = c.training;
            read(*it, "max_iters", t.max_iters);
            read(*it, "tol", t.tol);
            read(*it, "nuclear_weight", t.nuclear_weight);
            read(*it, "alpha", t.alpha);
            read(*it, "beta", t.beta);
            read(*it, "initial_step_H", t.initial_step_H);
            read(*it, "initial_step_eta", t.initial_step_eta);
            read(*it, "max_backtracks", t.max_backtracks);
            read(*it, "learn_eta", t.learn_eta);
            read(*it, "threads", t.threads);
        }
        if (auto it = j.find("backend"); it != j.end()) {
            require(!it->contains("api_key"), "secrets are read from the environment; use api_key_env");
            reject_unknown(*it,
                           {"kind", "mock_rules", "endpoint", "model", "api_key_env", "timeout_s", "max_attempts",
                            "backoff_initial_s", "max_concurrent"},
                           "backend");
            read(*it, "kind", c.backend.kind);
            if (auto r = it->find("mock_rules"); r != it->end()) c.backend.mock_rules_path = resolve(r->get<std::string>(), base_dir);
            auto& h = c.backend.http;
            read(*it, "endpoint", h.endpoint);
            read(*it, "model", h.model);
            read(*it, "api_key_env", h.api_key_env);
            read(*it, "timeout_s", h.timeout_s);
            read(*it, "max_attempts", h.max_attempts);
            read(*it, "backoff_initial_s", h.backoff_initial_s);
            read(*it, "max_concurrent", h.max_concurrent);
        }
        if (auto it = j.find("eval"); it != j.end()) {
            reject_unknown(*it, {"n", "ks", "workers"}, "eval");
            read(*it, "n", c.n);
            read(*it, "ks", c.ks);
            read(*it, "workers", c.workers);
        }
        if (auto it = j.find("paths"); it != j.end()) {
            reject_unknown(*it, {"index_cache", "params_file"}, "paths");
            if (auto p = it->find("index_cache"); p != it->end()) c.index_cache = resolve(p->get<std::string>(), base_dir);
            if (auto p = it->find("params_file"); p != it->end()) c.params_file = resolve(p->get<std::string>(), base_dir);
        }
    } catch (const nlohmann::json::exception& e) {
        throw UsageError(std::string("config: ") + e.what());
    } catch (const std::invalid_argument& e) {
        throw UsageError(std::string("config: ") + e.what());
    }

    require(c.index.d_emb >= 1 && c.index.d_emb <= 65536, "index.d_emb must be in [1, 65536]");
    require(c.k >= 1, "retrieval.k must be at least 1");
    require(c.tau_c >= 1, "retrieval.tau_c must be at least 1");
    require(c.fusion.input >= 0 && c.fusion.context >= 0 && c.fusion.user_query >= 0 &&
                c.fusion.input + c.fusion.context + c.fusion.user_query > 0,
            "fusion weights must be non-negative with a positive sum");
    require(c.budget >= 1, "prompt.budget must be at least 1");
    require(c.chars_per_token >= 1, "prompt.chars_per_token must be at least 1");
    require(c.training.tol >= 0 && c.training.nuclear_weight >= 0, "training tolerances must be non-negative");
    require(c.training.alpha > 0 && c.training.alpha <= 1 && c.training.beta > 0 && c.training.beta <= 1,
            "training.alpha and training.beta must be in (0, 1]");
    require(c.training.initial_step_H > 0 && c.training.initial_step_eta > 0, "training steps must be positive");
    require(c.backend.kind == "mock" || c.backend.kind == "http", "backend.kind must be mock or http");
    require(c.backend.http.timeout_s > 0, "backend.timeout_s must be positive");
    require(c.backend.http.max_attempts >= 1 && c.backend.http.max_attempts <= llm::kMaxAttempts,
            "backend.max_attempts must be in [1, 3]");
    require(c.backend.http.max_concurrent >= 1, "backend.max_concurrent must be at least 1");
    require(c.n >= 1, "eval.n must be at least 1");
    for (int k : c.ks) require(k >= 1 && k <= c.n, "eval.ks must lie in [1, n]");
    require(c.workers >= 1, "eval.workers must be at least 1");
    return c;
}

nlohmann::json config_to_json(const EngineConfig& c) {
    nlohmann::json j = {
        {"index", {{"d_emb", c.index.d_emb}, {"extensions", c.index.extensions}, {"profiles", c.index.profiles}}},
        {"retrieval",
         {{"k", c.k},
          {"tau_c", c.tau_c},
          {"fusion", {{"input", c.fusion.input}, {"context", c.fusion.context}, {"user_query", c.fusion.user_query}}}}},
        {"prompt",
         {{"budget", c.budget},
          {"chars_per_token", c.chars_per_token},
          {"dialect", c.dialect == prompt::Dialect::chat_messages ? "chat_messages" : "flat_text"}}},
        {"training",
         {{"max_iters", c.training.max_iters},
          {"tol", c.training.tol},
          {"nuclear_weight", c.training.nuclear_weight},
          {"alpha", c.training.alpha},
          {"beta", c.training.beta},
          {"initial_step_H", c.training.initial_step_H},
          {"initial_step_eta", c.training.initial_step_eta},
          {"max_backtracks", c.training.max_backtracks},
          {"learn_eta", c.training.learn_eta},
          {"threads", c.training.threads}}},
        {"backend",
         {{"kind", c.backend.kind},
          {"endpoint", c.backend.http.endpoint},
          {"model", c.backend.http.model},
          {"api_key_env", c.backend.http.api_key_env},
          {"timeout_s", c.backend.http.timeout_s},
          {"max_attempts", c.backend.http.max_attempts},
          {"backoff_initial_s", c.backend.http.backoff_initial_s},
          {"max_concurrent", c.backend.http.max_concurrent}}},
        {"eval", {{"n", c.n}, {"ks", c.ks}, {"workers", c.workers}}},
    };
    if (c.backend.mock_rules_path) j["backend"]["mock_rules"] = c.backend.mock_rules_path->generic_string();
    nlohmann::json paths = nlohmann::json::object();
    if (c.index_cache) paths["index_cache"] = c.index_cache->generic_string();
    if (c.params_file) paths["params_file"] = c.params_file->generic_string();
    j["paths"] = paths;
    return j;
}

EngineConfig load_config(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw UsageError("cannot open config file " + path.string());
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::parse_error& e) {
        throw UsageError("config is not valid JSON: " + std::string(e.what()));
    }
    return config_from_json(j, path.parent_path());
}

}  // namespace camp::cli
