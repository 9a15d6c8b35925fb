#pragma once

#include <array>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <vector>

#include "camp/content_retriever.hpp"
#include "camp/context_retriever.hpp"

namespace camp::retrieval {

/// Everything the trainers produce: H, the context weights and the prompt order.
struct LearnedParams {
    HeuristicMatrix H;
    std::array<double, context::kSourceCount> eta{};
    std::vector<std::string> theta;  // component kind names; empty means the default order
    std::map<std::string, std::string> metadata;

    /// H = 0.1 * I, uniform eta, default order.
    static LearnedParams initial(std::size_t d_emb);
};

// Versioned binary file: magic, version, d_emb, H row-major, eta, theta, metadata, checksum.
void save_params(const LearnedParams& params, const std::filesystem::path& path);
LearnedParams load_params(const std::filesystem::path& path);

/// Publication point for the active parameters. Readers get a consistent
/// snapshot; a publish never tears an in-flight read.
class ParameterStore {
public:
    explicit ParameterStore(std::shared_ptr<const LearnedParams> initial = nullptr)
        : current_(std::move(initial)) {}

    std::shared_ptr<const LearnedParams> current() const {
        std::lock_guard lock(mu_);
        return current_;
    }
    void publish(std::shared_ptr<const LearnedParams> params) {
        std::lock_guard lock(mu_);
        current_ = std::move(params);
    }

private:
    mutable std::mutex mu_;
    std::shared_ptr<const LearnedParams> current_;
};

}  // namespace camp::retrieval
