#include "camp/learned_params.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include "camp/binary_io.hpp"
#include "camp/hashing.hpp"

namespace camp::retrieval {

namespace {

constexpr std::string_view kMagic{"CAMPPRM1", 8};
constexpr std::uint32_t kVersion = 1;

}  // namespace

LearnedParams LearnedParams::initial(std::size_t d_emb) {
    LearnedParams p;
    p.H = HeuristicMatrix::identity(d_emb, 0.1);
    p.eta.fill(1.0 / static_cast<double>(context::kSourceCount));
    return p;
}

void save_params(const LearnedParams& params, const std::filesystem::path& path) {
    BinaryWriter w;
    w.raw(kMagic);
    w.u32(kVersion);
    const auto& H = params.H.values();
    w.u64(params.H.dim());
    for (Eigen::Index r = 0; r < H.rows(); ++r)
        for (Eigen::Index c = 0; c < H.cols(); ++c) w.f64(H(r, c));
    w.u64(params.eta.size());
    for (double e : params.eta) w.f64(e);
    w.u64(params.theta.size());
    for (const auto& t : params.theta) w.str(t);
    w.u64(params.metadata.size());
    for (const auto& [k, v] : params.metadata) {
        w.str(k);
        w.str(v);
    }
    const auto digest = sha256(w.bytes());
    w.raw(std::string_view(reinterpret_cast<const char*>(digest.data()), digest.size()));

    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    const auto tmp = std::filesystem::path(path.string() + ".tmp");
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw std::runtime_error("cannot write parameter file " + tmp.string());
        out.write(w.bytes().data(), static_cast<std::streamsize>(w.bytes().size()));
        if (!out) throw std::runtime_error("short write to " + tmp.string());
    }
    std::filesystem::rename(tmp, path);
}

LearnedParams load_params(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open parameter file " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    const std::string data = ss.str();
    if (data.size() < kMagic.size() + 32) throw std::runtime_error("parameter file too short");
    const std::string_view body(data.data(), data.size() - 32);
    const auto digest = sha256(body);
    if (std::string_view(reinterpret_cast<const char*>(digest.data()), 32) != std::string_view(data).substr(body.size()))
        throw std::runtime_error("parameter file checksum mismatch");

    BinaryReader r(body);
    if (r.raw(kMagic.size()) != kMagic) throw std::runtime_error("not a parameter file");
    if (auto v = r.u32(); v != kVersion) throw std::runtime_error("unsupported parameter file version " + std::to_string(v));
    LearnedParams p;
    const auto d = r.u64();
    if (d == 0 || d > r.remaining() / 8 / d) throw std::runtime_error("corrupt parameter file");
    const auto n = static_cast<Eigen::Index>(d);
    Eigen::MatrixXd H(n, n);
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j < n; ++j) H(i, j) = r.f64();
    p.H = HeuristicMatrix(std::move(H));
    if (r.u64() != p.eta.size()) throw std::runtime_error("parameter file has the wrong number of context weights");
    for (double& e : p.eta) {
        e = r.f64();
        if (!std::isfinite(e) || e < 0.0) throw std::runtime_error("parameter file has invalid context weights");
    }
    p.theta.resize(r.count(8));
    for (auto& t : p.theta) t = r.str();
    const auto m = r.count(16);
    for (std::size_t i = 0; i < m; ++i) {
        auto k = r.str();
        p.metadata[k] = r.str();
    }
    if (!r.done()) throw std::runtime_error("trailing bytes in parameter file");
    return p;
}

}  // namespace camp::retrieval
