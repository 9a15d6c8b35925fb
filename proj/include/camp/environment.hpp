#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

namespace camp {

/// Cursor location inside the repository, 0-based line and column.
struct CursorLocation {
    std::string file;  // repo-relative
    std::uint32_t line = 0;
    std::uint32_t col = 0;

    bool operator==(const CursorLocation&) const = default;
};

/// Declarative snapshot of the local development environment.
///
/// Stands in for live IDE hooks: a repository root, an optional cursor and an
/// optional list of cached build artifacts.
struct EnvironmentState {
    std::filesystem::path repo_root;
    std::optional<CursorLocation> cursor;
    std::vector<std::filesystem::path> artifacts;

    bool operator==(const EnvironmentState&) const = default;
};

/// Parses `{repo_root, cursor: {file, line, col}?, artifacts: [paths]?}`.
/// Relative `repo_root` and artifact paths are resolved against `base_dir`.
EnvironmentState environment_from_json(const nlohmann::json& j,
                                       const std::filesystem::path& base_dir = {});
nlohmann::json environment_to_json(const EnvironmentState& env);

EnvironmentState load_environment_file(const std::filesystem::path& path);

}  // namespace camp
