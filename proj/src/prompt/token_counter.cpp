#include <cctype>

#include "camp/prompt_constructor.hpp"

namespace camp::prompt {

namespace {

bool word_byte(unsigned char c) { return std::isalnum(c) || c == '_' || c >= 0x80; }

}  // namespace

TokenCounter::TokenCounter(std::size_t chars_per_token) : chars_per_token_(chars_per_token) {
    if (chars_per_token == 0) throw std::invalid_argument("chars_per_token must be positive");
}

std::size_t TokenCounter::count(std::string_view text) const {
    std::size_t tokens = 0;
    std::size_t i = 0;
    while (i < text.size()) {
        const auto c = static_cast<unsigned char>(text[i]);
        if (word_byte(c)) {
            std::size_t j = i;
            while (j < text.size() && word_byte(static_cast<unsigned char>(text[j]))) ++j;
            tokens += (j - i + chars_per_token_ - 1) / chars_per_token_;
            i = j;
        } else {
            if (!std::isspace(c)) ++tokens;
            ++i;
        }
    }
    return tokens;
}

std::string_view TokenCounter::prefix_within(std::string_view text, std::size_t max_tokens) const {
    // count() is monotone in prefix length, so bisect on it.
    std::size_t lo = 0, hi = text.size();
    while (lo < hi) {
        const std::size_t mid = lo + (hi - lo + 1) / 2;
        if (count(text.substr(0, mid)) <= max_tokens)
            lo = mid;
        else
            hi = mid - 1;
    }
    while (lo > 0 && lo < text.size() && (static_cast<unsigned char>(text[lo]) & 0xC0) == 0x80) --lo;
    return text.substr(0, lo);
}

}  // namespace camp::prompt
