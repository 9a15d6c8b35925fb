#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

namespace camp::prompt {

enum class ComponentKind : std::uint8_t {
    context_system_prompt,
    retrieved_content,
    new_message,
    message_history,
    system_prompt
};
inline constexpr std::size_t kComponentKindCount = 5;

enum class Priority : std::uint8_t { low, medium, high };

std::string_view to_string(ComponentKind kind) noexcept;
std::string_view to_string(Priority priority) noexcept;
ComponentKind component_kind_from_string(std::string_view s);

Priority default_priority(ComponentKind kind) noexcept;
/// Kinds in decreasing priority; the order used until a learned one exists.
const std::vector<ComponentKind>& default_ordering();
std::vector<ComponentKind> ordering_from_names(const std::vector<std::string>& names);
std::vector<std::string> ordering_names(const std::vector<ComponentKind>& ordering);

/// Word runs cost ceil(length / chars_per_token); every other non-space byte costs one.
class TokenCounter {
public:
    explicit TokenCounter(std::size_t chars_per_token = 4);

    std::size_t count(std::string_view text) const;
    /// Longest prefix of `text` whose count is at most `max_tokens`.
    std::string_view prefix_within(std::string_view text, std::size_t max_tokens) const;
    std::size_t chars_per_token() const noexcept { return chars_per_token_; }

private:
    std::size_t chars_per_token_;
};

struct HistoryMessage {
    std::string role;
    std::string content;
    bool operator==(const HistoryMessage&) const = default;
};

struct PromptComponent {
    ComponentKind kind = ComponentKind::new_message;
    std::string text;
    Priority priority = Priority::high;
    std::size_t token_count = 0;
    std::vector<HistoryMessage> messages;  // message_history only
    bool truncated = false;
};

PromptComponent make_component(ComponentKind kind, std::string text, const TokenCounter& counter);
PromptComponent make_history(std::vector<HistoryMessage> messages, const TokenCounter& counter);
std::string render_history(const std::vector<HistoryMessage>& messages);

struct PromptPlan {
    std::vector<PromptComponent> ordered;
    std::vector<ComponentKind> ordering;
    std::size_t budget = 0;
    std::size_t total_tokens = 0;
};

struct PromptError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Arranges components by `ordering` and fits them into `budget`, trimming the
/// lowest-priority tiers first. new_message is never cut.
PromptPlan construct(std::vector<PromptComponent> components, const std::vector<ComponentKind>& ordering,
                     std::size_t budget, const TokenCounter& counter = TokenCounter{});

enum class Dialect : std::uint8_t { chat_messages, flat_text };
Dialect dialect_from_string(std::string_view s);

struct ChatMessage {
    std::string role;
    std::string content;
    bool operator==(const ChatMessage&) const = default;
};

std::string_view role_for(ComponentKind kind) noexcept;
std::vector<ChatMessage> to_chat_messages(const PromptPlan& plan);
nlohmann::json chat_to_json(const std::vector<ChatMessage>& messages);
std::vector<ChatMessage> chat_from_json(const nlohmann::json& j);

std::string to_flat_text(const PromptPlan& plan);
std::vector<std::pair<ComponentKind, std::string>> parse_flat_text(std::string_view text);

/// Serialized payload: a JSON array for chat, a JSON string for flat text.
nlohmann::json serialize(const PromptPlan& plan, Dialect dialect);

}  // namespace camp::prompt
