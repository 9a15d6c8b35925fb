#include <algorithm>
#include <atomic>
#include <chrono>
#include <thread>

#include "camp/evaluation.hpp"
#include "camp/hashing.hpp"

namespace camp::eval {

std::shared_ptr<const dcsi::IndexSnapshot> FixtureCache::get(const std::filesystem::path& repo) {
    const std::string key = std::filesystem::absolute(repo).lexically_normal().string();
    std::lock_guard lock(mu_);
    if (auto it = cache_.find(key); it != cache_.end()) return it->second;
    auto snap = std::make_shared<const dcsi::IndexSnapshot>(dcsi::build_index(repo, config_));
    cache_.emplace(key, snap);
    return snap;
}

const CellResult* EvalReport::cell(ModelConfig model, Level level, int k) const {
    for (const auto& c : cells)
        if (c.model == model && c.level == level && c.k == k) return &c;
    return nullptr;
}

namespace {

struct Job {
    ModelConfig model;
    const EvalCase* task;
};

struct JobOutcome {
    bool skipped = false;
    TaskResult result;
    std::vector<std::string> diagnostics;
};

JobOutcome run_job(const Job& job, llm::LlmBackend& backend, const PipelineSettings& settings,
                   const RunOptions& options, FixtureCache& cache) {
    const auto start = std::chrono::steady_clock::now();
    const EvalCase& c = *job.task;
    const std::string tag = std::string(display_name(job.model)) + "/" + c.task_id + ": ";
    JobOutcome out;
    out.result.model = job.model;
    out.result.task_id = c.task_id;
    out.result.level = c.level;
    out.result.n = options.n;

    PipelineOutput pipeline;
    try {
        const auto snapshot = cache.get(c.environment.repo_root);
        pipeline = build_prompt(job.model, *snapshot, c.environment, c.query, settings, {}, options.ordering);
    } catch (const std::exception& e) {
        out.skipped = true;
        out.diagnostics.push_back(tag + "skipped: " + e.what());
        return out;
    }
    for (auto& d : pipeline.diagnostics) out.diagnostics.push_back(tag + d);
    out.result.retrieved = pipeline.retrieved;

    llm::GenerationRequest request;
    request.payload = std::move(pipeline.messages);
    request.n_samples = options.n;
    request.temperature = options.temperature;
    request.max_tokens = options.max_tokens;
    request.seed = mix64(options.seed ^ fnv1a64(c.task_id));
    request.task_id = c.task_id;

    std::vector<std::string> samples;
    try {
        samples = backend.generate(request).samples;
    } catch (const std::exception& e) {
        out.diagnostics.push_back(tag + "backend failure, samples counted incorrect: " + e.what());
    }
    if (samples.size() > static_cast<std::size_t>(options.n)) samples.resize(static_cast<std::size_t>(options.n));
    out.result.failed_samples = options.n - static_cast<int>(samples.size());

    try {
        for (const auto& s : samples)
            if (verify(s, c.verifier, c.repo_fixture)) ++out.result.c;
    } catch (const VerifierSetupError& e) {
        out.skipped = true;
        out.diagnostics.push_back(tag + "skipped: " + e.what());
    }
    out.result.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return out;
}

}  // namespace

EvalReport run_configs(const std::vector<ModelConfig>& models, const std::vector<EvalCase>& cases,
                       llm::LlmBackend& backend, const PipelineSettings& settings, const RunOptions& options,
                       FixtureCache* cache) {
    if (options.n < 1) throw EvalError("n must be at least 1");
    for (int k : options.ks)
        if (k < 1 || k > options.n) throw EvalError("K=" + std::to_string(k) + " is outside 1..n");
    const auto start = std::chrono::steady_clock::now();
    FixtureCache local(settings.index);
    FixtureCache& fixtures = cache ? *cache : local;

    std::vector<Job> jobs;
    for (ModelConfig m : models)
        for (const auto& c : cases) jobs.push_back({m, &c});
    std::vector<JobOutcome> outcomes(jobs.size());

    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t i = next++; i < jobs.size(); i = next++)
            outcomes[i] = run_job(jobs[i], backend, settings, options, fixtures);
    };
    const std::size_t n_workers = std::clamp<std::size_t>(options.workers, 1, std::max<std::size_t>(jobs.size(), 1));
    if (n_workers == 1) {
        worker();
    } else {
        std::vector<std::jthread> pool;
        for (std::size_t w = 0; w < n_workers; ++w) pool.emplace_back(worker);
    }

    EvalReport report;
    report.n = options.n;
    report.ks = options.ks;
    report.seed = options.seed;
    for (auto& o : outcomes) {
        for (auto& d : o.diagnostics) report.diagnostics.push_back(std::move(d));
        if (!o.skipped) report.tasks.push_back(std::move(o.result));
    }
    std::stable_sort(report.tasks.begin(), report.tasks.end(), [](const TaskResult& a, const TaskResult& b) {
        return std::tie(a.model, a.task_id) < std::tie(b.model, b.task_id);
    });

    std::vector<ModelConfig> sorted_models = models;
    std::sort(sorted_models.begin(), sorted_models.end());
    sorted_models.erase(std::unique(sorted_models.begin(), sorted_models.end()), sorted_models.end());
    std::vector<int> ks = options.ks;
    std::sort(ks.begin(), ks.end());
    ks.erase(std::unique(ks.begin(), ks.end()), ks.end());
    for (ModelConfig m : sorted_models)
        for (Level level : kLevels) {
            std::vector<const TaskResult*> rows;
            for (const auto& t : report.tasks)
                if (t.model == m && t.level == level) rows.push_back(&t);
            if (rows.empty()) continue;
            for (int k : ks) {
                double sum = 0.0;
                for (const auto* t : rows) sum += pass_at_k(t->n, t->c, k);
                report.cells.push_back({m, level, k, sum / static_cast<double>(rows.size()), rows.size()});
            }
        }
    report.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return report;
}

EvalReport run_config(ModelConfig model, const std::vector<EvalCase>& cases, llm::LlmBackend& backend,
                      const PipelineSettings& settings, const RunOptions& options, FixtureCache* cache) {
    return run_configs({model}, cases, backend, settings, options, cache);
}

}  // namespace camp::eval
