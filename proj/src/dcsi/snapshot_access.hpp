#pragma once

#include "camp/dcsi_index.hpp"

namespace camp::dcsi {

// Internal mutation access for the translation units that construct snapshots.
struct SnapshotAccess {
    using RefFiles = std::map<std::string, std::set<std::string>, std::less<>>;

    static IndexConfig& config(IndexSnapshot& s) { return s.config_; }
    static std::uint64_t& revision(IndexSnapshot& s) { return s.revision_; }
    static std::string& content_hash(IndexSnapshot& s) { return s.content_hash_; }
    static IndexSnapshot::FileMap& files(IndexSnapshot& s) { return s.files_; }
    static std::shared_ptr<const IndexSnapshot::NameTable>& global_defs(IndexSnapshot& s) { return s.global_defs_; }
    static std::shared_ptr<const RefFiles>& ref_files(IndexSnapshot& s) { return s.ref_files_; }
    static const RefFiles& ref_files(const IndexSnapshot& s) { return *s.ref_files_; }

    /// Rebuilds the name tables from the per-file records.
    static void rebuild_tables(IndexSnapshot& s);
    /// Recomputes content_hash from the per-file canonical forms.
    static void rehash(IndexSnapshot& s);
};

namespace detail {

/// Writes the canonical byte form of a file into `file.canonical`.
void canonicalize(FileIndex& file);
/// Parses canonical bytes back into a FileIndex (cache loading).
FileIndex decanonicalize(std::string_view bytes);
/// Canonical header shared by the hash and the on-disk cache.
std::string canonical_header(const IndexConfig& config, std::size_t file_count);

}  // namespace detail

}  // namespace camp::dcsi
