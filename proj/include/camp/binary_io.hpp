#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <stdexcept>
#include <string>
#include <string_view>

namespace camp {

/// Little-endian writer into a growing byte string.
class BinaryWriter {
public:
    void u8(std::uint8_t v) { out_.push_back(static_cast<char>(v)); }
    void u32(std::uint32_t v) {
        for (int i = 0; i < 4; ++i) out_.push_back(static_cast<char>((v >> (8 * i)) & 0xffu));
    }
    void u64(std::uint64_t v) {
        for (int i = 0; i < 8; ++i) out_.push_back(static_cast<char>((v >> (8 * i)) & 0xffu));
    }
    void f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }
    void str(std::string_view s) {
        u64(s.size());
        out_.append(s);
    }
    void raw(std::string_view s) { out_.append(s); }

    const std::string& bytes() const noexcept { return out_; }
    std::string take() noexcept { return std::move(out_); }

private:
    std::string out_;
};

class BinaryReader {
public:
    explicit BinaryReader(std::string_view data) : data_(data) {}

    std::uint8_t u8() { return static_cast<std::uint8_t>(take(1)[0]); }
    std::uint32_t u32() {
        auto b = take(4);
        std::uint32_t v = 0;
        for (int i = 0; i < 4; ++i) v |= std::uint32_t(static_cast<unsigned char>(b[i])) << (8 * i);
        return v;
    }
    std::uint64_t u64() {
        auto b = take(8);
        std::uint64_t v = 0;
        for (int i = 0; i < 8; ++i) v |= std::uint64_t(static_cast<unsigned char>(b[i])) << (8 * i);
        return v;
    }
    double f64() { return std::bit_cast<double>(u64()); }
    std::string str() {
        auto n = u64();
        if (n > remaining()) throw std::runtime_error("truncated binary data");
        return std::string(take(static_cast<std::size_t>(n)));
    }
    std::string_view raw(std::size_t n) { return take(n); }
    /// Element count, bounded by the bytes left (each element is at least `min_size` bytes).
    std::size_t count(std::size_t min_size = 1) {
        auto n = u64();
        if (n > remaining() / min_size) throw std::runtime_error("truncated binary data");
        return static_cast<std::size_t>(n);
    }

    std::size_t remaining() const noexcept { return data_.size() - pos_; }
    bool done() const noexcept { return pos_ == data_.size(); }

private:
    std::string_view take(std::size_t n) {
        if (n > remaining()) throw std::runtime_error("truncated binary data");
        auto s = data_.substr(pos_, n);
        pos_ += n;
        return s;
    }

    std::string_view data_;
    std::size_t pos_ = 0;
};

}  // namespace camp
