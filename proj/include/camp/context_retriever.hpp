#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>
#include <json.hpp>

#include "camp/dcsi_index.hpp"
#include "camp/environment.hpp"

namespace camp::context {

/// The four context sources, in tie-breaking order.
enum class ContextSource : std::uint8_t { cursor_position, repo_path, build_artifacts, index_information };

inline constexpr std::size_t kSourceCount = 4;
inline constexpr std::size_t kDefaultTauC = 4;
inline constexpr std::size_t kIndexInformationSymbols = 8;

std::string_view to_string(ContextSource source) noexcept;
ContextSource context_source_from_string(std::string_view s);

struct ContextSignal {
    ContextSource source = ContextSource::cursor_position;
    nlohmann::json payload;
    dcsi::EmbeddingVector feature;
};

struct ContextError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Weighted aggregate of context signals. Entries keep their input order.
struct ContextVector {
    struct Entry {
        ContextSignal signal;
        double weight = 0.0;
    };
    std::vector<Entry> entries;
    Eigen::VectorXd aggregate;
    std::size_t tau_c = kDefaultTauC;
    std::optional<std::string> cursor_unit;  // doc unit enclosing the cursor, if signalled

    /// No signals: zero aggregate of dimension `d_emb`.
    static ContextVector none(std::size_t d_emb);
    bool empty() const noexcept;
    std::size_t active_count() const noexcept;
};

/// One signal per available source. Problems reading optional sources go to
/// `diagnostics` (when given) and the signal is left out.
std::vector<ContextSignal> collect_signals(const EnvironmentState& env, const dcsi::IndexSnapshot& snapshot,
                                           std::vector<std::string>* diagnostics = nullptr);

/// Positional aggregation: `weights[i]` belongs to `signals[i]`; extra weights
/// are null entries. Masks, caps to `tau_c` and renormalizes.
ContextVector aggregate(std::span<const ContextSignal> signals, std::span<const double> weights,
                        std::size_t tau_c = kDefaultTauC);

/// Aggregation with one weight per source (the learned eta').
ContextVector aggregate_by_source(std::span<const ContextSignal> signals,
                                  const std::array<double, kSourceCount>& eta, std::size_t tau_c = kDefaultTauC);

// Feature builders shared with training and tests.
std::vector<std::string> repo_path_features(const std::filesystem::path& repo_root);
std::vector<std::string> artifact_features(const std::vector<std::string>& artifact_names);
/// Names of the highest-degree symbols in `file` (dependency in + out degree).
std::vector<std::string> top_degree_symbols(const dcsi::IndexSnapshot& snapshot, std::string_view file,
                                            std::size_t limit = kIndexInformationSymbols);

}  // namespace camp::context
