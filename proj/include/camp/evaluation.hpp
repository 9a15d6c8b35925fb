#pragma once

#include <cstdint>
#include <filesystem>
#include <array>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "camp/content_retriever.hpp"
#include "camp/dcsi_index.hpp"
#include "camp/environment.hpp"
#include "camp/learned_params.hpp"
#include "camp/llm_client.hpp"
#include "camp/prompt_constructor.hpp"
#include "camp/training.hpp"

namespace camp::eval {

struct EvalError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Unbiased estimator 1 - C(n-c, k) / C(n, k), in product form.
double pass_at_k(int n, int c, int k);

enum class Level : std::uint8_t { class_runnable, file_runnable, project_runnable };
enum class ModelConfig : std::uint8_t { cloud_only, base_rag, file_context, camp };

inline constexpr std::array<Level, 3> kLevels = {Level::class_runnable, Level::file_runnable,
                                                 Level::project_runnable};
inline constexpr std::array<ModelConfig, 4> kModels = {ModelConfig::cloud_only, ModelConfig::base_rag,
                                                       ModelConfig::file_context, ModelConfig::camp};

std::string_view to_string(Level level) noexcept;
std::string_view to_string(ModelConfig model) noexcept;     // cloudonly, baserag, ...
std::string_view display_name(ModelConfig model) noexcept;  // CloudOnly, BaseRAG, ...
Level level_from_string(std::string_view s);
ModelConfig model_from_string(std::string_view s);

// ---------------------------------------------------------------------------
// Verifiers

struct CommandSpec {
    std::string command;  // run with /bin/sh -c in the copied repository
    std::string file;     // repo-relative file holding the marker
    std::string marker;
    double timeout_s = 10.0;
};

struct Verifier {
    enum class Kind : std::uint8_t { needle_match, command_exec };
    Kind kind = Kind::needle_match;
    std::string needle;
    bool regex = false;
    CommandSpec command;
};

/// The verifier could not be set up (missing fixture, marker, ...).
struct VerifierSetupError : EvalError {
    using EvalError::EvalError;
};

struct VerifyOutcome {
    bool passed = false;
    bool timed_out = false;
    int exit_code = -1;
};

VerifyOutcome run_verifier(const std::string& sample, const Verifier& verifier,
                           const std::filesystem::path& repo_fixture);
bool verify(const std::string& sample, const Verifier& verifier, const std::filesystem::path& repo_fixture = {});

// ---------------------------------------------------------------------------
// Cases and manifests

struct EvalCase {
    std::string task_id;
    Level level = Level::project_runnable;
    std::filesystem::path repo_fixture;
    EnvironmentState environment;
    std::string query;
    Verifier verifier;
};

EvalCase case_from_json(const nlohmann::json& j, const std::filesystem::path& base_dir);
nlohmann::json case_to_json(const EvalCase& c, const std::filesystem::path& base_dir);
/// JSONL, one case per line; paths are relative to the manifest's directory.
std::vector<EvalCase> load_manifest(const std::filesystem::path& path);
void write_manifest(const std::vector<EvalCase>& cases, const std::filesystem::path& path);

// ---------------------------------------------------------------------------
// Prompt pipeline per model configuration

struct PipelineSettings {
    retrieval::LearnedParams params = retrieval::LearnedParams::initial(256);
    dcsi::IndexConfig index;
    std::size_t k = 5;
    retrieval::FusionWeights fusion;
    std::size_t tau_c = context::kDefaultTauC;
    std::size_t budget = 2048;
    std::size_t chars_per_token = 4;
    std::string system_prompt = "You are a coding assistant. Complete the code at the cursor.";
};

struct PipelineOutput {
    prompt::PromptPlan plan;
    std::vector<prompt::ChatMessage> messages;
    std::vector<std::string> retrieved;  // unit ids, best first
    std::optional<retrieval::RetrievalResult> retrieval;
    std::vector<std::string> diagnostics;
};

/// Text of the unit enclosing the cursor, or empty.
std::string enclosing_unit_text(const dcsi::IndexSnapshot& snapshot, const EnvironmentState& env);

PipelineOutput build_prompt(ModelConfig model, const dcsi::IndexSnapshot& snapshot, const EnvironmentState& env,
                            const std::string& query, const PipelineSettings& settings,
                            const std::vector<prompt::HistoryMessage>& history = {},
                            const std::optional<std::vector<prompt::ComponentKind>>& ordering = std::nullopt);

// ---------------------------------------------------------------------------
// Harness and reports

struct RunOptions {
    int n = 10;
    std::vector<int> ks = {1, 5, 10};
    std::uint64_t seed = 0;
    std::size_t workers = 1;
    int max_tokens = 256;
    double temperature = 0.2;
    std::optional<std::vector<prompt::ComponentKind>> ordering;  // overrides the learned one
};

struct TaskResult {
    ModelConfig model = ModelConfig::camp;
    std::string task_id;
    Level level = Level::project_runnable;
    int n = 0;
    int c = 0;
    int failed_samples = 0;
    std::vector<std::string> retrieved;
    double seconds = 0.0;
};

struct CellResult {
    ModelConfig model = ModelConfig::camp;
    Level level = Level::project_runnable;
    int k = 1;
    double pass_at_k = 0.0;
    std::size_t tasks = 0;
};

struct EvalReport {
    int n = 0;
    std::vector<int> ks;
    std::uint64_t seed = 0;
    std::vector<CellResult> cells;  // sorted by (model, level, k)
    std::vector<TaskResult> tasks;  // sorted by (model, task id)
    std::vector<std::string> diagnostics;
    double wall_seconds = 0.0;

    const CellResult* cell(ModelConfig model, Level level, int k) const;
};

/// Snapshots keyed by fixture directory, built on first use.
class FixtureCache {
public:
    explicit FixtureCache(dcsi::IndexConfig config = {}) : config_(std::move(config)) {}
    std::shared_ptr<const dcsi::IndexSnapshot> get(const std::filesystem::path& repo);

private:
    dcsi::IndexConfig config_;
    std::mutex mu_;
    std::map<std::string, std::shared_ptr<const dcsi::IndexSnapshot>> cache_;
};

EvalReport run_configs(const std::vector<ModelConfig>& models, const std::vector<EvalCase>& cases,
                       llm::LlmBackend& backend, const PipelineSettings& settings, const RunOptions& options,
                       FixtureCache* cache = nullptr);
EvalReport run_config(ModelConfig model, const std::vector<EvalCase>& cases, llm::LlmBackend& backend,
                      const PipelineSettings& settings, const RunOptions& options, FixtureCache* cache = nullptr);

nlohmann::json report_to_json(const EvalReport& report, bool include_timing = false);
std::string report_to_csv(const EvalReport& report);
/// Aligned text table with rows per model and columns per level and K,
/// followed by the published reference figures.
std::string render_table(const EvalReport& report);

/// Published reference Pass@K (percent) for (model, level, k in {1,5,10}).
std::optional<double> reference_pass_at_k(ModelConfig model, Level level, int k);

// ---------------------------------------------------------------------------
// Synthetic suite

struct SuiteOptions {
    std::uint64_t seed = 1;
    std::size_t tasks_per_level = 30;
    std::size_t min_distractors = 1;
    std::size_t max_distractors = 9;
    std::size_t filler_files = 3;
};

struct GeneratedSuite {
    std::filesystem::path manifest;
    std::filesystem::path mock_rules;
    std::vector<EvalCase> cases;
    llm::MockRules rules;
};

/// Writes one small repository per task plus manifest.jsonl and mock_rules.json under `out_dir`.
GeneratedSuite generate_suite(const std::filesystem::path& out_dir, const SuiteOptions& options);

/// Training examples from needle cases: the positive is the unit holding the needle.
std::vector<training::TrainingExample> training_examples_for(const EvalCase& c, const dcsi::IndexSnapshot& snapshot);

/// Trains H and eta on the needle cases of a manifest.
training::TrainResult train_on_cases(const std::vector<EvalCase>& cases, const PipelineSettings& settings,
                                     const training::TrainConfig& config, FixtureCache* cache = nullptr);

}  // namespace camp::eval
