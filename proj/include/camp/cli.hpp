#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "camp/dcsi_index.hpp"
#include "camp/llm_client.hpp"
#include "camp/prompt_constructor.hpp"
#include "camp/training.hpp"

namespace camp::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;
inline constexpr int kExitUsage = 2;

/// Bad flags, missing inputs or an invalid config; maps to exit status 2.
struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct EngineConfig {
    dcsi::IndexConfig index;
    std::size_t k = 5;
    retrieval::FusionWeights fusion;
    std::size_t tau_c = 4;
    std::size_t budget = 2048;
    std::size_t chars_per_token = 4;
    prompt::Dialect dialect = prompt::Dialect::chat_messages;
    training::TrainConfig training;
    llm::BackendConfig backend;
    int n = 10;
    std::vector<int> ks = {1, 5, 10};
    std::size_t workers = 1;
    std::optional<std::filesystem::path> index_cache;  // default <repo>/.camp/index.bin
    std::optional<std::filesystem::path> params_file;
};

/// Parses the JSON config; relative paths resolve against `base_dir`.
EngineConfig config_from_json(const nlohmann::json& j, const std::filesystem::path& base_dir = {});
nlohmann::json config_to_json(const EngineConfig& config);
EngineConfig load_config(const std::filesystem::path& path);

/// Runs one command line (without the program name). Returns the exit status.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace camp::cli
