#include "camp/prompt_constructor.hpp"

namespace camp::prompt {

namespace {

constexpr std::string_view kHeaderOpen = "<<<camp:";
constexpr std::string_view kHeaderClose = ">>>";

std::string escape(std::string_view text) {
    std::string out;
    out.reserve(text.size());
    for (char c : text) {
        if (c == '\\' || c == '<') out += '\\';
        out += c;
    }
    return out;
}

std::string unescape(std::string_view text) {
    std::string out;
    out.reserve(text.size());
    for (std::size_t i = 0; i < text.size(); ++i) {
        if (text[i] == '\\') {
            if (i + 1 == text.size()) throw PromptError("flat text: dangling escape");
            ++i;
        }
        out += text[i];
    }
    return out;
}

}  // namespace

Dialect dialect_from_string(std::string_view s) {
    if (s == "chat_messages" || s == "chat") return Dialect::chat_messages;
    if (s == "flat_text" || s == "flat") return Dialect::flat_text;
    throw std::invalid_argument("unknown prompt dialect: " + std::string(s));
}

std::string_view role_for(ComponentKind kind) noexcept {
    switch (kind) {
        case ComponentKind::context_system_prompt:
        case ComponentKind::system_prompt: return "system";
        default: return "user";
    }
}

std::vector<ChatMessage> to_chat_messages(const PromptPlan& plan) {
    std::vector<ChatMessage> out;
    for (const auto& c : plan.ordered) out.push_back({std::string(role_for(c.kind)), c.text});
    return out;
}

nlohmann::json chat_to_json(const std::vector<ChatMessage>& messages) {
    auto arr = nlohmann::json::array();
    for (const auto& m : messages) arr.push_back({{"role", m.role}, {"content", m.content}});
    return arr;
}

std::vector<ChatMessage> chat_from_json(const nlohmann::json& j) {
    if (!j.is_array()) throw std::invalid_argument("chat payload must be an array");
    std::vector<ChatMessage> out;
    for (const auto& m : j) out.push_back({m.at("role").get<std::string>(), m.at("content").get<std::string>()});
    return out;
}

std::string to_flat_text(const PromptPlan& plan) {
    std::string out;
    for (const auto& c : plan.ordered) {
        out += kHeaderOpen;
        out += to_string(c.kind);
        out += kHeaderClose;
        out += '\n';
        out += escape(c.text);
        out += '\n';
    }
    return out;
}

std::vector<std::pair<ComponentKind, std::string>> parse_flat_text(std::string_view text) {
    std::vector<std::pair<ComponentKind, std::string>> out;
    std::size_t pos = 0;
    while (pos < text.size()) {
        if (text.substr(pos, kHeaderOpen.size()) != kHeaderOpen) throw PromptError("flat text: expected section header");
        const auto eol = text.find('\n', pos);
        if (eol == std::string_view::npos) throw PromptError("flat text: unterminated section header");
        auto header = text.substr(pos + kHeaderOpen.size(), eol - pos - kHeaderOpen.size());
        if (!header.ends_with(kHeaderClose)) throw PromptError("flat text: malformed section header");
        header.remove_suffix(kHeaderClose.size());
        const auto kind = component_kind_from_string(header);

        const std::size_t body = eol + 1;
        const auto next = text.find(kHeaderOpen, body);
        const std::size_t end = next == std::string_view::npos ? text.size() : next;
        if (end <= body || text[end - 1] != '\n') throw PromptError("flat text: unterminated section");
        out.emplace_back(kind, unescape(text.substr(body, end - 1 - body)));
        pos = end;
    }
    return out;
}

nlohmann::json serialize(const PromptPlan& plan, Dialect dialect) {
    if (dialect == Dialect::chat_messages) return chat_to_json(to_chat_messages(plan));
    return to_flat_text(plan);
}

}  // namespace camp::prompt
