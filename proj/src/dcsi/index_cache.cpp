#include <fcntl.h>
#include <sys/file.h>
#include <unistd.h>

#include <fstream>
#include <sstream>

#include "camp/binary_io.hpp"
#include "camp/dcsi_index.hpp"
#include "snapshot_access.hpp"

namespace camp::dcsi {

namespace fs = std::filesystem;

namespace {

constexpr std::string_view kCacheMagic{"CAMPIDXC", 8};
constexpr std::uint32_t kCacheVersion = 1;

// Exclusive advisory lock held for the duration of a cache write.
class WriterLock {
public:
    explicit WriterLock(const fs::path& target) {
        const auto lock_path = target.string() + ".lock";
        fd_ = ::open(lock_path.c_str(), O_CREAT | O_RDWR, 0644);
        if (fd_ < 0) throw IndexError("cannot open lock file " + lock_path);
        if (::flock(fd_, LOCK_EX) != 0) {
            ::close(fd_);
            throw IndexError("cannot lock " + lock_path);
        }
    }
    ~WriterLock() {
        ::flock(fd_, LOCK_UN);
        ::close(fd_);
    }
    WriterLock(const WriterLock&) = delete;
    WriterLock& operator=(const WriterLock&) = delete;

private:
    int fd_ = -1;
};

}  // namespace

void save_index_cache(const IndexSnapshot& snapshot, const fs::path& path) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    BinaryWriter w;
    w.raw(kCacheMagic);
    w.u32(kCacheVersion);
    w.u64(snapshot.revision());
    w.str(snapshot.content_hash());
    w.str(detail::canonical_header(snapshot.config(), snapshot.files().size()));
    for (const auto& [p, f] : snapshot.files()) w.str(f->canonical);

    WriterLock lock(path);
    const fs::path tmp = path.string() + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw IndexError("cannot write index cache " + tmp.string());
        out.write(w.bytes().data(), static_cast<std::streamsize>(w.bytes().size()));
        if (!out) throw IndexError("short write to " + tmp.string());
    }
    fs::rename(tmp, path);
}

IndexSnapshot load_index_cache(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IndexError("cannot open index cache " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    const std::string data = ss.str();
    try {
        BinaryReader r(data);
        if (r.raw(kCacheMagic.size()) != kCacheMagic) throw IndexError("not an index cache");
        if (auto v = r.u32(); v != kCacheVersion) throw IndexError("unsupported index cache version " + std::to_string(v));
        const auto revision = r.u64();
        const auto stored_hash = r.str();
        const std::string header = r.str();

        BinaryReader h(header);
        h.raw(8);
        h.u32();
        IndexConfig config;
        config.d_emb = h.u64();
        config.extensions.resize(h.count(8));
        for (auto& e : config.extensions) e = h.str();
        config.profiles.resize(h.count(8));
        for (auto& p : config.profiles) p = h.str();
        const auto file_count = h.u64();

        IndexSnapshot snap;
        SnapshotAccess::config(snap) = config;
        SnapshotAccess::revision(snap) = revision;
        auto& files = SnapshotAccess::files(snap);
        for (std::uint64_t i = 0; i < file_count; ++i) {
            FileIndex f = detail::decanonicalize(r.str());
            auto key = f.path;
            files.emplace(std::move(key), std::make_shared<const FileIndex>(std::move(f)));
        }
        if (!r.done()) throw IndexError("trailing bytes in index cache");
        SnapshotAccess::rebuild_tables(snap);
        SnapshotAccess::rehash(snap);
        if (snap.content_hash() != stored_hash) throw IndexError("index cache checksum mismatch");
        return snap;
    } catch (const std::runtime_error& e) {
        if (dynamic_cast<const IndexError*>(&e) != nullptr) throw;
        throw IndexError(std::string("corrupt index cache: ") + e.what());
    }
}

}  // namespace camp::dcsi
