#pragma once

#include <compare>
#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>

#include "camp/hashing.hpp"

namespace camp::dcsi {

enum class SymbolKind : std::uint8_t { function, type, variable, import, comment, other };

std::string_view to_string(SymbolKind kind) noexcept;
SymbolKind symbol_kind_from_string(std::string_view s);

/// Opaque symbol identity, `<repo-relative path>#<ordinal in file>`.
struct SymbolId {
    std::string value;

    auto operator<=>(const SymbolId&) const = default;
    bool operator==(const SymbolId&) const = default;

    std::string_view file() const;
    std::size_t ordinal() const;
};

/// 0-based positions; end column is exclusive.
struct Span {
    std::uint32_t start_line = 0;
    std::uint32_t start_col = 0;
    std::uint32_t end_line = 0;
    std::uint32_t end_col = 0;

    bool operator==(const Span&) const = default;
    bool well_formed() const noexcept {
        return start_line < end_line || (start_line == end_line && start_col <= end_col);
    }
};

struct SymbolRecord {
    SymbolId id;
    std::string name;
    SymbolKind kind = SymbolKind::other;
    std::string file;
    Span span;
    std::vector<SymbolId> neighbors;     // adjacent symbols in source order
    std::vector<SymbolId> dependencies;  // reference -> definition edges

    bool operator==(const SymbolRecord&) const = default;
};

/// Unit-norm vector of the index-wide dimension.
class EmbeddingVector {
public:
    EmbeddingVector() = default;

    /// L2-normalizes `raw`. A zero vector maps to the reserved basis vector e0.
    static EmbeddingVector normalized(std::vector<double> raw);
    /// Wraps values that are already unit norm (deserialization); validated.
    static EmbeddingVector from_unit(std::vector<double> values);

    std::size_t size() const noexcept { return values_.size(); }
    std::span<const double> values() const noexcept { return values_; }
    double operator[](std::size_t i) const { return values_[i]; }
    Eigen::Map<const Eigen::VectorXd> as_eigen() const {
        return {values_.data(), static_cast<Eigen::Index>(values_.size())};
    }
    double dot(const EmbeddingVector& other) const;

    bool operator==(const EmbeddingVector&) const = default;

private:
    std::vector<double> values_;
};

/// A retrieval document: one top-level declaration plus whatever trails it
/// up to the next one. Units of a file partition its lines.
struct DocUnit {
    std::string id;  // `<path>@<ordinal>`
    std::string file;
    std::string declaration;  // name of the leading declaration, empty for whole-file units
    std::uint32_t start_line = 0;
    std::uint32_t end_line = 0;  // exclusive
    std::size_t begin_byte = 0;
    std::size_t end_byte = 0;
    std::vector<SymbolId> symbols;
    EmbeddingVector embedding;

    bool operator==(const DocUnit&) const = default;
};

/// Everything the index knows about one file.
struct FileIndex {
    std::string path;
    std::string text;
    std::string profile;
    bool parsed = false;
    std::string diagnostic;  // set when the file was skipped
    std::vector<SymbolRecord> records;
    std::vector<DocUnit> units;
    std::string canonical;  // canonical serialized form, hashed into content_hash
};

struct IndexConfig {
    std::vector<std::string> extensions;  // empty = union of the profiles' extensions
    std::size_t d_emb = 256;
    std::vector<std::string> profiles = {"brace", "indent"};

    bool operator==(const IndexConfig&) const = default;
};

struct FileEdit {
    enum class Kind : std::uint8_t { replace, create, remove };
    Kind kind = Kind::replace;
    std::string path;
    std::size_t byte_begin = 0;  // replace only, [begin, end)
    std::size_t byte_end = 0;
    std::string text;  // replacement text, or full contents for create
};

struct Diagnostic {
    std::string file;
    std::string message;
    bool operator==(const Diagnostic&) const = default;
};

struct IndexError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Raised by apply_edit for invalid edits; the input snapshot is untouched.
struct EditRejected : IndexError {
    using IndexError::IndexError;
};

class IndexSnapshot;

IndexSnapshot build_index(const std::filesystem::path& repo_root, const IndexConfig& config);
IndexSnapshot build_index_from_sources(const std::map<std::string, std::string>& sources,
                                       const IndexConfig& config);
IndexSnapshot apply_edit(const IndexSnapshot& snapshot, const FileEdit& edit);

/// Embeds free-standing code or query text. Throws IndexError("empty fragment")
/// when the text yields no features.
EmbeddingVector embed(const IndexSnapshot& snapshot, std::string_view fragment,
                      std::string_view profile = "brace");
const EmbeddingVector& embed(const IndexSnapshot& snapshot, const DocUnit& unit);

/// Immutable view of an indexed repository. Copies share per-file state.
class IndexSnapshot {
public:
    using FileMap = std::map<std::string, std::shared_ptr<const FileIndex>>;
    using NameTable = std::map<std::string, std::vector<SymbolId>, std::less<>>;

    const IndexConfig& config() const noexcept { return config_; }
    std::uint64_t revision() const noexcept { return revision_; }
    const std::string& content_hash() const noexcept { return content_hash_; }

    const FileMap& files() const noexcept { return files_; }
    const FileIndex* file(std::string_view path) const;
    const SymbolRecord* find(const SymbolId& id) const;

    std::vector<const DocUnit*> doc_units() const;
    const DocUnit* find_unit(std::string_view unit_id) const;
    /// Unit of `file` whose line range contains `line`, if any.
    const DocUnit* unit_at(std::string_view file, std::uint32_t line) const;
    std::string_view unit_text(const DocUnit& unit) const;

    std::vector<Diagnostic> diagnostics() const;
    std::size_t symbol_count() const;
    std::size_t unit_count() const;

    /// Cross-file definitions (function and type kinds) by name.
    const NameTable& global_definitions() const noexcept { return *global_defs_; }
    /// Number of dependency edges pointing at each symbol.
    std::map<SymbolId, std::size_t> in_degrees() const;

private:
    friend struct SnapshotAccess;

    IndexConfig config_;
    std::uint64_t revision_ = 0;
    std::string content_hash_;
    FileMap files_;
    std::shared_ptr<const NameTable> global_defs_ = std::make_shared<NameTable>();
    // name -> files holding a reference (other/import symbol) with that name
    std::shared_ptr<const std::map<std::string, std::set<std::string>, std::less<>>> ref_files_ =
        std::make_shared<std::map<std::string, std::set<std::string>, std::less<>>>();
};

/// Feature strings of a unit (in canonical order).
std::vector<std::string> unit_features(const IndexSnapshot& snapshot, const FileIndex& file,
                                       const DocUnit& unit);
/// Feature strings of a free-standing fragment.
std::vector<std::string> fragment_features(const IndexSnapshot& snapshot, std::string_view fragment,
                                           std::string_view profile = "brace");

struct FeatureSlot {
    std::size_t bucket;
    double sign;
};
FeatureSlot feature_slot(std::string_view feature, std::size_t d_emb) noexcept;
/// Signed feature hashing followed by L2 normalization.
EmbeddingVector hash_features(const std::vector<std::string>& features, std::size_t d_emb);

/// Default extension list for a config (explicit list or profile union).
std::vector<std::string> effective_extensions(const IndexConfig& config);
/// Profile name for a path, or nullopt if the extension is not indexed.
std::optional<std::string> profile_for_path(const IndexConfig& config, std::string_view path);

// On-disk cache: versioned header followed by the canonical serialization.
void save_index_cache(const IndexSnapshot& snapshot, const std::filesystem::path& path);
IndexSnapshot load_index_cache(const std::filesystem::path& path);

}  // namespace camp::dcsi
