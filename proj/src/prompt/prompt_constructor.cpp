#include "camp/prompt_constructor.hpp"

#include <algorithm>
#include <numeric>

namespace camp::prompt {

namespace {

constexpr std::array<std::string_view, kComponentKindCount> kKindNames = {
    "context_system_prompt", "retrieved_content", "new_message", "message_history", "system_prompt"};
constexpr std::array<std::string_view, 3> kPriorityNames = {"low", "medium", "high"};

void refresh_history(PromptComponent& c, const TokenCounter& counter) {
    c.text = render_history(c.messages);
    c.token_count = counter.count(c.text);
}

}  // namespace

std::string_view to_string(ComponentKind kind) noexcept { return kKindNames[static_cast<std::size_t>(kind)]; }
std::string_view to_string(Priority priority) noexcept { return kPriorityNames[static_cast<std::size_t>(priority)]; }

ComponentKind component_kind_from_string(std::string_view s) {
    for (std::size_t i = 0; i < kKindNames.size(); ++i)
        if (kKindNames[i] == s) return static_cast<ComponentKind>(i);
    throw std::invalid_argument("unknown prompt component: " + std::string(s));
}

Priority default_priority(ComponentKind kind) noexcept {
    switch (kind) {
        case ComponentKind::message_history: return Priority::medium;
        case ComponentKind::system_prompt: return Priority::low;
        default: return Priority::high;
    }
}

const std::vector<ComponentKind>& default_ordering() {
    static const std::vector<ComponentKind> order = {ComponentKind::context_system_prompt,
                                                     ComponentKind::retrieved_content, ComponentKind::new_message,
                                                     ComponentKind::message_history, ComponentKind::system_prompt};
    return order;
}

std::vector<ComponentKind> ordering_from_names(const std::vector<std::string>& names) {
    std::vector<ComponentKind> out;
    for (const auto& n : names) out.push_back(component_kind_from_string(n));
    return out;
}

std::vector<std::string> ordering_names(const std::vector<ComponentKind>& ordering) {
    std::vector<std::string> out;
    for (auto k : ordering) out.emplace_back(to_string(k));
    return out;
}

std::string render_history(const std::vector<HistoryMessage>& messages) {
    std::string out;
    for (const auto& m : messages) {
        if (!out.empty()) out += '\n';
        out += m.role + ": " + m.content;
    }
    return out;
}

PromptComponent make_component(ComponentKind kind, std::string text, const TokenCounter& counter) {
    if (kind == ComponentKind::message_history)
        throw std::invalid_argument("message history is built from messages, use make_history");
    PromptComponent c;
    c.kind = kind;
    c.priority = default_priority(kind);
    c.token_count = counter.count(text);
    c.text = std::move(text);
    return c;
}

PromptComponent make_history(std::vector<HistoryMessage> messages, const TokenCounter& counter) {
    PromptComponent c;
    c.kind = ComponentKind::message_history;
    c.priority = default_priority(c.kind);
    c.messages = std::move(messages);
    refresh_history(c, counter);
    return c;
}

PromptPlan construct(std::vector<PromptComponent> components, const std::vector<ComponentKind>& ordering,
                     std::size_t budget, const TokenCounter& counter) {
    if (budget == 0) throw PromptError("budget must be positive");
    std::array<int, kComponentKindCount> position;
    position.fill(-1);
    for (std::size_t i = 0; i < ordering.size(); ++i) {
        auto& slot = position[static_cast<std::size_t>(ordering[i])];
        if (slot >= 0) throw PromptError("ordering is not a permutation: " + std::string(to_string(ordering[i])) +
                                         " appears twice");
        slot = static_cast<int>(i);
    }

    std::array<bool, kComponentKindCount> seen{};
    bool has_high = false;
    std::vector<PromptComponent> present;
    for (auto& c : components) {
        const auto k = static_cast<std::size_t>(c.kind);
        if (seen[k]) throw PromptError("duplicate prompt component: " + std::string(to_string(c.kind)));
        seen[k] = true;
        if (position[k] < 0) throw PromptError("component missing from ordering: " + std::string(to_string(c.kind)));
        has_high = has_high || c.priority == Priority::high;
        if (c.kind == ComponentKind::message_history) {
            refresh_history(c, counter);
            if (c.messages.empty()) continue;
        } else {
            c.token_count = counter.count(c.text);
            if (c.text.empty()) continue;
        }
        present.push_back(std::move(c));
    }
    if (!has_high) throw PromptError("prompt needs at least one high-priority component");
    std::sort(present.begin(), present.end(), [&](const PromptComponent& a, const PromptComponent& b) {
        return position[static_cast<std::size_t>(a.kind)] < position[static_cast<std::size_t>(b.kind)];
    });

    auto total = [&] {
        return std::accumulate(present.begin(), present.end(), std::size_t{0},
                               [](std::size_t s, const PromptComponent& c) { return s + c.token_count; });
    };
    std::size_t request_tokens = 0;
    for (const auto& c : present)
        if (c.kind == ComponentKind::new_message) request_tokens += c.token_count;
    if (request_tokens > budget) throw PromptError("budget too small for request");

    std::vector<std::size_t> victims;
    for (std::size_t i = 0; i < present.size(); ++i)
        if (present[i].kind != ComponentKind::new_message) victims.push_back(i);
    std::stable_sort(victims.begin(), victims.end(), [&](std::size_t a, std::size_t b) {
        if (present[a].priority != present[b].priority) return present[a].priority < present[b].priority;
        return a > b;
    });

    std::size_t sum = total();
    for (std::size_t idx : victims) {
        if (sum <= budget) break;
        auto& c = present[idx];
        const std::size_t excess = sum - budget;
        c.truncated = true;
        if (c.kind == ComponentKind::message_history) {
            const std::size_t before = c.token_count;
            while (!c.messages.empty() && before - c.token_count < excess) {
                c.messages.erase(c.messages.begin());
                refresh_history(c, counter);
            }
        } else if (c.token_count <= excess) {
            c.text.clear();
            c.token_count = 0;
        } else {
            c.text = std::string(counter.prefix_within(c.text, c.token_count - excess));
            c.token_count = counter.count(c.text);
        }
        sum = total();
    }
    std::erase_if(present, [](const PromptComponent& c) { return c.truncated && c.token_count == 0; });

    PromptPlan plan;
    plan.total_tokens = total();
    plan.ordered = std::move(present);
    plan.ordering = ordering;
    plan.budget = budget;
    if (plan.total_tokens > budget) throw PromptError("budget too small for request");
    return plan;
}

}  // namespace camp::prompt
