#include "camp/environment.hpp"

#include <fstream>
#include <stdexcept>

namespace camp {

namespace {

std::filesystem::path resolve(const std::filesystem::path& p, const std::filesystem::path& base) {
    if (p.is_absolute() || base.empty()) return p.lexically_normal();
    return (base / p).lexically_normal();
}

}  // namespace

EnvironmentState environment_from_json(const nlohmann::json& j, const std::filesystem::path& base_dir) {
    if (!j.is_object() || !j.contains("repo_root") || !j["repo_root"].is_string())
        throw std::invalid_argument("environment: missing string field 'repo_root'");
    EnvironmentState env;
    env.repo_root = resolve(j["repo_root"].get<std::string>(), base_dir);
    if (auto it = j.find("cursor"); it != j.end() && !it->is_null()) {
        CursorLocation c;
        c.file = it->at("file").get<std::string>();
        c.line = it->value("line", 0u);
        c.col = it->value("col", 0u);
        env.cursor = std::move(c);
    }
    if (auto it = j.find("artifacts"); it != j.end() && !it->is_null()) {
        for (const auto& a : *it) env.artifacts.push_back(resolve(a.get<std::string>(), base_dir));
    }
    return env;
}

nlohmann::json environment_to_json(const EnvironmentState& env) {
    nlohmann::json j;
    j["repo_root"] = env.repo_root.generic_string();
    if (env.cursor) {
        j["cursor"] = {{"file", env.cursor->file}, {"line", env.cursor->line}, {"col", env.cursor->col}};
    }
    if (!env.artifacts.empty()) {
        auto arr = nlohmann::json::array();
        for (const auto& a : env.artifacts) arr.push_back(a.generic_string());
        j["artifacts"] = std::move(arr);
    }
    return j;
}

EnvironmentState load_environment_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open environment file: " + path.string());
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::parse_error& e) {
        throw std::invalid_argument("environment file is not valid JSON: " + std::string(e.what()));
    }
    return environment_from_json(j, path.parent_path());
}

}  // namespace camp
