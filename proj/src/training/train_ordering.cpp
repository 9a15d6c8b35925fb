#include <algorithm>
#include <cmath>
#include <functional>

#include "camp/training.hpp"

namespace camp::training {

namespace {

// Depth-first search for one cycle; returns it as a closed walk of items.
std::vector<std::size_t> find_cycle(const std::vector<std::vector<std::size_t>>& adj) {
    const std::size_t k = adj.size();
    std::vector<int> color(k, 0);
    std::vector<std::size_t> parent(k, k);
    std::vector<std::size_t> cycle;
    std::function<bool(std::size_t)> dfs = [&](std::size_t u) {
        color[u] = 1;
        for (std::size_t v : adj[u]) {
            if (color[v] == 1) {
                cycle = {v};
                for (std::size_t w = u; w != v; w = parent[w]) cycle.push_back(w);
                cycle.push_back(v);
                std::reverse(cycle.begin(), cycle.end());
                return true;
            }
            if (color[v] == 0) {
                parent[v] = u;
                if (dfs(v)) return true;
            }
        }
        color[u] = 2;
        return false;
    };
    for (std::size_t u = 0; u < k; ++u)
        if (color[u] == 0 && dfs(u)) break;
    return cycle;
}

}  // namespace

OrderingResult train_ordering(std::size_t k, const OrderingLoss& eval_loss, double epsilon, std::size_t max_k) {
    if (k < 2 || k > max_k)
        throw std::invalid_argument("ordering needs between 2 and " + std::to_string(max_k) + " components");
    if (!(epsilon >= 0.0)) throw std::invalid_argument("epsilon must be >= 0");

    OrderingResult out;
    auto loss = [&](const std::vector<std::size_t>& order) {
        ++out.loss_evaluations;
        const double v = eval_loss(order);
        if (!std::isfinite(v)) throw OrderingError("ordering loss returned a non-finite value");
        return v;
    };

    std::vector<std::size_t> base(k);
    for (std::size_t i = 0; i < k; ++i) base[i] = i;
    const double base_loss = loss(base);

    std::vector<std::vector<std::size_t>> adj(k);
    std::vector<std::size_t> indegree(k, 0);
    auto add_edge = [&](std::size_t a, std::size_t b) {
        adj[a].push_back(b);
        ++indegree[b];
        out.edges.emplace_back(a, b);
    };
    for (std::size_t i = 0; i < k; ++i) {
        for (std::size_t j = i + 1; j < k; ++j) {
            auto swapped = base;
            std::swap(swapped[i], swapped[j]);
            const double swapped_loss = loss(swapped);
            ++out.swap_evaluations;
            if (base_loss - swapped_loss > epsilon)
                add_edge(j, i);
            else if (swapped_loss - base_loss > epsilon)
                add_edge(i, j);
        }
    }

    // Kahn's algorithm, always releasing the lowest default index first.
    std::vector<std::size_t> ready;
    for (std::size_t i = 0; i < k; ++i)
        if (indegree[i] == 0) ready.push_back(i);
    auto deg = indegree;
    while (!ready.empty()) {
        auto it = std::min_element(ready.begin(), ready.end());
        const std::size_t u = *it;
        ready.erase(it);
        out.order.push_back(u);
        for (std::size_t v : adj[u])
            if (--deg[v] == 0) ready.push_back(v);
    }
    if (out.order.size() != k) {
        auto cycle = find_cycle(adj);
        std::string msg = "inconsistent pairwise preferences: cycle";
        for (std::size_t v : cycle) msg += " " + std::to_string(v);
        throw OrderingError(msg, std::move(cycle));
    }
    return out;
}

PromptOrderingResult train_prompt_ordering(
    const std::vector<prompt::ComponentKind>& default_order,
    const std::function<double(const std::vector<prompt::ComponentKind>&)>& eval_loss, double epsilon) {
    auto as_kinds = [&](const std::vector<std::size_t>& order) {
        std::vector<prompt::ComponentKind> kinds;
        for (std::size_t i : order) kinds.push_back(default_order.at(i));
        return kinds;
    };
    PromptOrderingResult out;
    try {
        out.detail = train_ordering(
            default_order.size(), [&](const std::vector<std::size_t>& order) { return eval_loss(as_kinds(order)); },
            epsilon);
    } catch (const OrderingError& e) {
        std::string msg = "inconsistent pairwise preferences: cycle";
        for (std::size_t i : e.cycle) msg += " " + std::string(prompt::to_string(default_order.at(i)));
        throw OrderingError(msg, e.cycle);
    }
    out.theta = as_kinds(out.detail.order);
    return out;
}

}  // namespace camp::training
