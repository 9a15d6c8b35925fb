#include <algorithm>
#include <fstream>
#include <sstream>

#include "camp/binary_io.hpp"
#include "camp/dcsi_index.hpp"
#include "file_parser.hpp"
#include "snapshot_access.hpp"

namespace camp::dcsi {

namespace fs = std::filesystem;

namespace {

constexpr std::uint32_t kCanonicalVersion = 1;

SymbolId make_id(std::string_view path, std::size_t ordinal) {
    return SymbolId{std::string(path) + "#" + std::to_string(ordinal)};
}

bool cross_file_definition(SymbolKind k) { return k == SymbolKind::function || k == SymbolKind::type; }

// Lexes and classifies one file; dependencies and embeddings are filled later.
FileIndex parse_file(std::string path, std::string text, const std::string& profile_name) {
    FileIndex f;
    f.path = std::move(path);
    f.text = std::move(text);
    f.profile = profile_name;
    detail::ParsedFile parsed;
    try {
        parsed = detail::parse_source(f.text, lex::profile_by_name(profile_name));
    } catch (const lex::LexError& e) {
        f.parsed = false;
        f.diagnostic = e.what();
        return f;
    }
    f.parsed = true;
    f.records.reserve(parsed.symbols.size());
    for (std::size_t i = 0; i < parsed.symbols.size(); ++i) {
        auto& s = parsed.symbols[i];
        SymbolRecord r;
        r.id = make_id(f.path, i);
        r.name = std::move(s.name);
        r.kind = s.kind;
        r.file = f.path;
        r.span = s.span;
        if (i > 0) r.neighbors.push_back(make_id(f.path, i - 1));
        if (i + 1 < parsed.symbols.size()) r.neighbors.push_back(make_id(f.path, i + 1));
        f.records.push_back(std::move(r));
    }
    std::size_t next_symbol = 0;
    for (const auto& range : parsed.units) {
        DocUnit u;
        u.file = f.path;
        u.declaration = range.declaration;
        u.start_line = range.start_line;
        u.end_line = range.end_line;
        u.begin_byte = range.begin_byte;
        u.end_byte = range.end_byte;
        while (next_symbol < parsed.symbols.size() && parsed.symbols[next_symbol].begin_byte < range.end_byte) {
            u.symbols.push_back(make_id(f.path, next_symbol));
            ++next_symbol;
        }
        if (u.symbols.empty()) continue;
        u.id = f.path + "@" + std::to_string(f.units.size());
        f.units.push_back(std::move(u));
    }
    return f;
}

// Reference -> definition edges: same-file definitions win; otherwise every
// function/type definition of that name elsewhere in the repository.
void resolve(FileIndex& f, const IndexSnapshot::NameTable& global) {
    std::map<std::string_view, std::vector<SymbolId>> local;
    for (const auto& r : f.records)
        if (detail::is_definition(r.kind)) local[r.name].push_back(r.id);
    for (auto& r : f.records) {
        r.dependencies.clear();
        if (!detail::is_reference(r.kind)) continue;
        if (auto it = local.find(r.name); it != local.end()) {
            r.dependencies = it->second;
        } else if (auto g = global.find(r.name); g != global.end()) {
            r.dependencies = g->second;
        }
        std::sort(r.dependencies.begin(), r.dependencies.end());
    }
}

void embed_units(FileIndex& f, const IndexSnapshot& snapshot) {
    for (auto& u : f.units) u.embedding = hash_features(unit_features(snapshot, f, u), snapshot.config().d_emb);
}

void finalize(FileIndex& f, const IndexSnapshot& snapshot) {
    if (f.parsed) {
        resolve(f, snapshot.global_definitions());
        embed_units(f, snapshot);
    }
    detail::canonicalize(f);
}

void write_id_list(BinaryWriter& w, const std::vector<SymbolId>& ids) {
    w.u64(ids.size());
    for (const auto& id : ids) w.str(id.value);
}

std::vector<SymbolId> read_id_list(BinaryReader& r) {
    std::vector<SymbolId> ids(r.count(8));
    for (auto& id : ids) id.value = r.str();
    return ids;
}

bool safe_relative_path(std::string_view p) {
    if (p.empty()) return false;
    fs::path path{std::string(p)};
    if (path.is_absolute()) return false;
    for (const auto& part : path)
        if (part == ".." || part == ".") return false;
    return path.generic_string() == p;
}

}  // namespace

// ---------------------------------------------------------------------------

std::string_view to_string(SymbolKind kind) noexcept {
    switch (kind) {
        case SymbolKind::function: return "function";
        case SymbolKind::type: return "type";
        case SymbolKind::variable: return "variable";
        case SymbolKind::import: return "import";
        case SymbolKind::comment: return "comment";
        case SymbolKind::other: return "other";
    }
    return "other";
}

SymbolKind symbol_kind_from_string(std::string_view s) {
    for (auto k : {SymbolKind::function, SymbolKind::type, SymbolKind::variable, SymbolKind::import,
                   SymbolKind::comment, SymbolKind::other})
        if (to_string(k) == s) return k;
    throw std::invalid_argument("unknown symbol kind: " + std::string(s));
}

std::string_view SymbolId::file() const {
    auto pos = value.rfind('#');
    return pos == std::string::npos ? std::string_view{} : std::string_view(value).substr(0, pos);
}

std::size_t SymbolId::ordinal() const {
    auto pos = value.rfind('#');
    if (pos == std::string::npos) throw std::invalid_argument("malformed symbol id: " + value);
    return static_cast<std::size_t>(std::stoull(value.substr(pos + 1)));
}

std::vector<std::string> effective_extensions(const IndexConfig& config) {
    if (!config.extensions.empty()) return config.extensions;
    std::vector<std::string> out;
    for (const auto& name : config.profiles)
        for (const auto& e : lex::profile_by_name(name).extensions) out.push_back(e);
    return out;
}

std::optional<std::string> profile_for_path(const IndexConfig& config, std::string_view path) {
    const std::string ext = fs::path(std::string(path)).extension().string();
    if (ext.empty()) return std::nullopt;
    const auto allowed = effective_extensions(config);
    if (std::find(allowed.begin(), allowed.end(), ext) == allowed.end()) return std::nullopt;
    for (const auto& name : config.profiles) {
        const auto& exts = lex::profile_by_name(name).extensions;
        if (std::find(exts.begin(), exts.end(), ext) != exts.end()) return name;
    }
    return std::nullopt;
}

// ---------------------------------------------------------------------------
// Snapshot queries

const FileIndex* IndexSnapshot::file(std::string_view path) const {
    auto it = files_.find(std::string(path));
    return it == files_.end() ? nullptr : it->second.get();
}

const SymbolRecord* IndexSnapshot::find(const SymbolId& id) const {
    const FileIndex* f = file(id.file());
    if (f == nullptr) return nullptr;
    std::size_t ord = 0;
    try {
        ord = id.ordinal();
    } catch (const std::exception&) {
        return nullptr;
    }
    return ord < f->records.size() ? &f->records[ord] : nullptr;
}

std::vector<const DocUnit*> IndexSnapshot::doc_units() const {
    std::vector<const DocUnit*> out;
    for (const auto& [path, f] : files_)
        for (const auto& u : f->units) out.push_back(&u);
    return out;
}

const DocUnit* IndexSnapshot::find_unit(std::string_view unit_id) const {
    auto pos = unit_id.rfind('@');
    if (pos == std::string_view::npos) return nullptr;
    const FileIndex* f = file(unit_id.substr(0, pos));
    if (f == nullptr) return nullptr;
    for (const auto& u : f->units)
        if (u.id == unit_id) return &u;
    return nullptr;
}

const DocUnit* IndexSnapshot::unit_at(std::string_view path, std::uint32_t line) const {
    const FileIndex* f = file(path);
    if (f == nullptr) return nullptr;
    for (const auto& u : f->units)
        if (line >= u.start_line && line < u.end_line) return &u;
    return nullptr;
}

std::string_view IndexSnapshot::unit_text(const DocUnit& unit) const {
    const FileIndex* f = file(unit.file);
    if (f == nullptr) throw IndexError("unit belongs to an unknown file: " + unit.file);
    return std::string_view(f->text).substr(unit.begin_byte, unit.end_byte - unit.begin_byte);
}

std::vector<Diagnostic> IndexSnapshot::diagnostics() const {
    std::vector<Diagnostic> out;
    for (const auto& [path, f] : files_)
        if (!f->parsed) out.push_back({path, f->diagnostic});
    return out;
}

std::size_t IndexSnapshot::symbol_count() const {
    std::size_t n = 0;
    for (const auto& [path, f] : files_) n += f->records.size();
    return n;
}

std::size_t IndexSnapshot::unit_count() const {
    std::size_t n = 0;
    for (const auto& [path, f] : files_) n += f->units.size();
    return n;
}

std::map<SymbolId, std::size_t> IndexSnapshot::in_degrees() const {
    std::map<SymbolId, std::size_t> out;
    for (const auto& [path, f] : files_)
        for (const auto& r : f->records)
            for (const auto& d : r.dependencies) ++out[d];
    return out;
}

// ---------------------------------------------------------------------------
// Canonical form

namespace detail {

std::string canonical_header(const IndexConfig& config, std::size_t file_count) {
    BinaryWriter w;
    w.raw(std::string_view("CAMPIDX\0", 8));
    w.u32(kCanonicalVersion);
    w.u64(config.d_emb);
    w.u64(config.extensions.size());
    for (const auto& e : config.extensions) w.str(e);
    w.u64(config.profiles.size());
    for (const auto& p : config.profiles) w.str(p);
    w.u64(file_count);
    return w.take();
}

void canonicalize(FileIndex& f) {
    BinaryWriter w;
    w.str(f.path);
    w.str(f.profile);
    w.u8(f.parsed ? 1 : 0);
    w.str(f.diagnostic);
    w.str(f.text);
    w.u64(f.records.size());
    for (const auto& r : f.records) {
        w.str(r.id.value);
        w.str(r.name);
        w.u8(static_cast<std::uint8_t>(r.kind));
        w.str(r.file);
        w.u32(r.span.start_line);
        w.u32(r.span.start_col);
        w.u32(r.span.end_line);
        w.u32(r.span.end_col);
        write_id_list(w, r.neighbors);
        write_id_list(w, r.dependencies);
    }
    w.u64(f.units.size());
    for (const auto& u : f.units) {
        w.str(u.id);
        w.str(u.file);
        w.str(u.declaration);
        w.u32(u.start_line);
        w.u32(u.end_line);
        w.u64(u.begin_byte);
        w.u64(u.end_byte);
        write_id_list(w, u.symbols);
        w.u64(u.embedding.size());
        for (double v : u.embedding.values()) w.f64(v);
    }
    f.canonical = w.take();
}

FileIndex decanonicalize(std::string_view bytes) {
    BinaryReader r(bytes);
    FileIndex f;
    f.path = r.str();
    f.profile = r.str();
    f.parsed = r.u8() != 0;
    f.diagnostic = r.str();
    f.text = r.str();
    f.records.resize(r.count(8));
    for (auto& rec : f.records) {
        rec.id.value = r.str();
        rec.name = r.str();
        auto kind = r.u8();
        if (kind > static_cast<std::uint8_t>(SymbolKind::other)) throw IndexError("corrupt symbol kind");
        rec.kind = static_cast<SymbolKind>(kind);
        rec.file = r.str();
        rec.span.start_line = r.u32();
        rec.span.start_col = r.u32();
        rec.span.end_line = r.u32();
        rec.span.end_col = r.u32();
        rec.neighbors = read_id_list(r);
        rec.dependencies = read_id_list(r);
    }
    f.units.resize(r.count(8));
    for (auto& u : f.units) {
        u.id = r.str();
        u.file = r.str();
        u.declaration = r.str();
        u.start_line = r.u32();
        u.end_line = r.u32();
        u.begin_byte = r.u64();
        u.end_byte = r.u64();
        u.symbols = read_id_list(r);
        std::vector<double> v(r.count(8));
        for (auto& x : v) x = r.f64();
        u.embedding = EmbeddingVector::from_unit(std::move(v));
    }
    if (!r.done()) throw IndexError("trailing bytes in file record");
    f.canonical = std::string(bytes);
    return f;
}

}  // namespace detail

void SnapshotAccess::rebuild_tables(IndexSnapshot& s) {
    auto defs = std::make_shared<IndexSnapshot::NameTable>();
    auto refs = std::make_shared<RefFiles>();
    for (const auto& [path, f] : s.files_) {
        for (const auto& r : f->records) {
            if (cross_file_definition(r.kind)) (*defs)[r.name].push_back(r.id);
            if (detail::is_reference(r.kind)) (*refs)[r.name].insert(path);
        }
    }
    for (auto& [name, ids] : *defs) std::sort(ids.begin(), ids.end());
    s.global_defs_ = std::move(defs);
    s.ref_files_ = std::move(refs);
}

void SnapshotAccess::rehash(IndexSnapshot& s) {
    Sha256 h;
    h.update(detail::canonical_header(s.config_, s.files_.size()));
    for (const auto& [path, f] : s.files_) {
        BinaryWriter w;
        w.u64(f->canonical.size());
        h.update(w.bytes());
        h.update(f->canonical);
    }
    s.content_hash_ = to_hex(h.finish());
}

// ---------------------------------------------------------------------------
// Building

IndexSnapshot build_index_from_sources(const std::map<std::string, std::string>& sources, const IndexConfig& config) {
    if (config.d_emb == 0) throw IndexError("d_emb must be positive");
    IndexSnapshot snap;
    SnapshotAccess::config(snap) = config;
    std::map<std::string, FileIndex> staged;
    for (const auto& [path, text] : sources) {
        auto profile = profile_for_path(config, path);
        if (!profile) continue;
        staged.emplace(path, parse_file(path, text, *profile));
    }
    if (staged.empty()) throw IndexError("no indexable files");

    auto& files = SnapshotAccess::files(snap);
    for (auto& [path, f] : staged) files.emplace(path, std::make_shared<FileIndex>(f));
    SnapshotAccess::rebuild_tables(snap);

    for (auto& [path, f] : staged) {
        finalize(f, snap);
        files[path] = std::make_shared<const FileIndex>(std::move(f));
    }
    SnapshotAccess::rehash(snap);
    return snap;
}

IndexSnapshot build_index(const fs::path& repo_root, const IndexConfig& config) {
    std::error_code ec;
    if (!fs::is_directory(repo_root, ec)) throw IndexError("cannot read repository root: " + repo_root.string());
    std::map<std::string, std::string> sources;
    fs::recursive_directory_iterator it(repo_root, fs::directory_options::skip_permission_denied, ec);
    if (ec) throw IndexError("cannot read repository root: " + repo_root.string() + ": " + ec.message());
    for (; it != fs::recursive_directory_iterator(); it.increment(ec)) {
        if (ec) break;
        const auto& entry = *it;
        const std::string name = entry.path().filename().string();
        if (entry.is_directory(ec)) {
            if (!name.empty() && name[0] == '.') it.disable_recursion_pending();
            continue;
        }
        if (!entry.is_regular_file(ec) || (!name.empty() && name[0] == '.')) continue;
        const std::string rel = entry.path().lexically_relative(repo_root).generic_string();
        if (!profile_for_path(config, rel)) continue;
        std::ifstream in(entry.path(), std::ios::binary);
        std::ostringstream ss;
        if (in) ss << in.rdbuf();
        // An unreadable file is indexed as empty text; the lexer never fails on that.
        sources.emplace(rel, ss.str());
    }
    return build_index_from_sources(sources, config);
}

IndexSnapshot apply_edit(const IndexSnapshot& snapshot, const FileEdit& edit) {
    const FileIndex* old = snapshot.file(edit.path);
    std::string new_text;
    switch (edit.kind) {
        case FileEdit::Kind::replace:
            if (old == nullptr) throw EditRejected("edit targets an untracked file: " + edit.path);
            if (edit.byte_begin > edit.byte_end || edit.byte_end > old->text.size())
                throw EditRejected("edit out of range for " + edit.path);
            new_text = old->text;
            new_text.replace(edit.byte_begin, edit.byte_end - edit.byte_begin, edit.text);
            break;
        case FileEdit::Kind::create:
            if (old != nullptr) throw EditRejected("file already exists: " + edit.path);
            if (!safe_relative_path(edit.path)) throw EditRejected("invalid path: " + edit.path);
            if (!profile_for_path(snapshot.config(), edit.path))
                throw EditRejected("extension is not indexed: " + edit.path);
            new_text = edit.text;
            break;
        case FileEdit::Kind::remove:
            if (old == nullptr) throw EditRejected("edit targets an untracked file: " + edit.path);
            if (snapshot.files().size() == 1) throw EditRejected("cannot remove the last indexed file");
            break;
    }

    IndexSnapshot next = snapshot;
    SnapshotAccess::revision(next) = snapshot.revision() + 1;

    std::optional<FileIndex> fresh;
    if (edit.kind != FileEdit::Kind::remove)
        fresh = parse_file(edit.path, std::move(new_text), *profile_for_path(snapshot.config(), edit.path));

    // Names whose cross-file definition lists involve this file, before and after.
    std::set<std::string, std::less<>> touched;
    auto defs = std::make_shared<IndexSnapshot::NameTable>(snapshot.global_definitions());
    auto refs = std::make_shared<SnapshotAccess::RefFiles>(SnapshotAccess::ref_files(snapshot));
    if (old != nullptr) {
        for (const auto& r : old->records) {
            if (cross_file_definition(r.kind)) {
                touched.insert(r.name);
                auto& ids = (*defs)[r.name];
                std::erase_if(ids, [&](const SymbolId& id) { return id.file() == edit.path; });
                if (ids.empty()) defs->erase(r.name);
            }
            if (detail::is_reference(r.kind)) {
                auto it = refs->find(r.name);
                if (it != refs->end()) {
                    it->second.erase(edit.path);
                    if (it->second.empty()) refs->erase(it);
                }
            }
        }
    }
    if (fresh) {
        for (const auto& r : fresh->records) {
            if (cross_file_definition(r.kind)) {
                touched.insert(r.name);
                auto& ids = (*defs)[r.name];
                ids.push_back(r.id);
                std::sort(ids.begin(), ids.end());
            }
            if (detail::is_reference(r.kind)) (*refs)[r.name].insert(edit.path);
        }
    }
    SnapshotAccess::global_defs(next) = defs;
    SnapshotAccess::ref_files(next) = refs;

    auto& files = SnapshotAccess::files(next);
    if (fresh) {
        finalize(*fresh, next);
        files[edit.path] = std::make_shared<const FileIndex>(std::move(*fresh));
    } else {
        files.erase(edit.path);
    }

    std::set<std::string> affected;
    for (const auto& name : touched)
        if (auto it = refs->find(name); it != refs->end()) affected.insert(it->second.begin(), it->second.end());
    affected.erase(edit.path);
    for (const auto& path : affected) {
        auto it = files.find(path);
        if (it == files.end()) continue;
        FileIndex copy = *it->second;
        finalize(copy, next);
        it->second = std::make_shared<const FileIndex>(std::move(copy));
    }

    SnapshotAccess::rehash(next);
    return next;
}

}  // namespace camp::dcsi
