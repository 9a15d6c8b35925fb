#include <algorithm>
#include <fstream>
#include <set>

#include "camp/evaluation.hpp"

namespace camp::eval {

namespace fs = std::filesystem;

namespace {

std::string lower_alnum(std::string_view s) {
    std::string out;
    for (char c : s)
        if (std::isalnum(static_cast<unsigned char>(c))) out += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return out;
}

fs::path resolve(const fs::path& p, const fs::path& base) {
    if (p.is_absolute() || base.empty()) return p.lexically_normal();
    return (base / p).lexically_normal();
}

std::string relative_to(const fs::path& p, const fs::path& base) {
    if (base.empty()) return p.generic_string();
    const auto rel = p.lexically_relative(base);
    return rel.empty() ? p.generic_string() : rel.generic_string();
}

}  // namespace

std::string_view to_string(Level level) noexcept {
    switch (level) {
        case Level::class_runnable: return "class_runnable";
        case Level::file_runnable: return "file_runnable";
        case Level::project_runnable: return "project_runnable";
    }
    return "?";
}

std::string_view to_string(ModelConfig model) noexcept {
    switch (model) {
        case ModelConfig::cloud_only: return "cloudonly";
        case ModelConfig::base_rag: return "baserag";
        case ModelConfig::file_context: return "filecontext";
        case ModelConfig::camp: return "camp";
    }
    return "?";
}

std::string_view display_name(ModelConfig model) noexcept {
    switch (model) {
        case ModelConfig::cloud_only: return "CloudOnly";
        case ModelConfig::base_rag: return "BaseRAG";
        case ModelConfig::file_context: return "FileContext";
        case ModelConfig::camp: return "CAMP";
    }
    return "?";
}

Level level_from_string(std::string_view s) {
    const std::string key = lower_alnum(s);
    if (key == "classrunnable" || key == "class") return Level::class_runnable;
    if (key == "filerunnable" || key == "file") return Level::file_runnable;
    if (key == "projectrunnable" || key == "project") return Level::project_runnable;
    throw EvalError("unknown level: " + std::string(s));
}

ModelConfig model_from_string(std::string_view s) {
    const std::string key = lower_alnum(s);
    for (ModelConfig m : kModels)
        if (key == to_string(m)) return m;
    throw EvalError("unknown model configuration: " + std::string(s));
}

EvalCase case_from_json(const nlohmann::json& j, const fs::path& base_dir) {
    if (!j.is_object()) throw EvalError("case must be a JSON object");
    EvalCase c;
    try {
        c.task_id = j.at("task_id").get<std::string>();
        if (c.task_id.empty()) throw EvalError("empty task_id");
        c.level = level_from_string(j.at("level").get<std::string>());
        c.repo_fixture = resolve(j.at("repo_fixture").get<std::string>(), base_dir);
        c.query = j.value("query", std::string());

        nlohmann::json env = j.value("environment", nlohmann::json::object());
        if (!env.contains("repo_root")) env["repo_root"] = c.repo_fixture.string();
        c.environment = environment_from_json(env, base_dir);

        const auto& v = j.at("verifier");
        const std::string kind = v.value("kind", std::string("needle_match"));
        if (kind == "needle_match") {
            c.verifier.kind = Verifier::Kind::needle_match;
            c.verifier.needle = v.at("needle").get<std::string>();
            c.verifier.regex = v.value("regex", false);
        } else if (kind == "command_exec") {
            c.verifier.kind = Verifier::Kind::command_exec;
            c.verifier.command.command = v.at("command").get<std::string>();
            c.verifier.command.file = v.at("file").get<std::string>();
            c.verifier.command.marker = v.at("marker").get<std::string>();
            c.verifier.command.timeout_s = v.value("timeout_s", 10.0);
            c.verifier.needle = v.value("needle", std::string());
        } else {
            throw EvalError("unknown verifier kind: " + kind);
        }
    } catch (const nlohmann::json::exception& e) {
        throw EvalError("malformed case: " + std::string(e.what()));
    } catch (const std::invalid_argument& e) {
        throw EvalError("malformed case: " + std::string(e.what()));
    }
    return c;
}

nlohmann::json case_to_json(const EvalCase& c, const fs::path& base_dir) {
    nlohmann::json env = environment_to_json(c.environment);
    env["repo_root"] = relative_to(c.environment.repo_root, base_dir);
    if (env.contains("artifacts"))
        for (auto& a : env["artifacts"]) a = relative_to(a.get<std::string>(), base_dir);
    nlohmann::json v;
    if (c.verifier.kind == Verifier::Kind::needle_match) {
        v = {{"kind", "needle_match"}, {"needle", c.verifier.needle}};
        if (c.verifier.regex) v["regex"] = true;
    } else {
        v = {{"kind", "command_exec"},
             {"command", c.verifier.command.command},
             {"file", c.verifier.command.file},
             {"marker", c.verifier.command.marker},
             {"timeout_s", c.verifier.command.timeout_s}};
        if (!c.verifier.needle.empty()) v["needle"] = c.verifier.needle;
    }
    return {{"task_id", c.task_id},
            {"level", to_string(c.level)},
            {"repo_fixture", relative_to(c.repo_fixture, base_dir)},
            {"environment", env},
            {"query", c.query},
            {"verifier", v}};
}

std::vector<EvalCase> load_manifest(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw EvalError("cannot open manifest " + path.string());
    const fs::path base = path.parent_path();
    std::vector<EvalCase> cases;
    std::set<std::string> seen;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (std::all_of(line.begin(), line.end(), [](unsigned char ch) { return std::isspace(ch); })) continue;
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(line);
        } catch (const nlohmann::json::parse_error& e) {
            throw EvalError(path.string() + ":" + std::to_string(lineno) + ": " + e.what());
        }
        EvalCase c;
        try {
            c = case_from_json(j, base);
        } catch (const EvalError& e) {
            throw EvalError(path.string() + ":" + std::to_string(lineno) + ": " + e.what());
        }
        if (!seen.insert(c.task_id).second)
            throw EvalError(path.string() + ":" + std::to_string(lineno) + ": duplicate task_id " + c.task_id);
        cases.push_back(std::move(c));
    }
    return cases;
}

void write_manifest(const std::vector<EvalCase>& cases, const fs::path& path) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw EvalError("cannot write manifest " + path.string());
    const fs::path base = fs::absolute(path).parent_path();
    for (const auto& c : cases) out << case_to_json(c, base).dump() << '\n';
}

}  // namespace camp::eval
