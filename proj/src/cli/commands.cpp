#include <CLI11.hpp>

#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>

#include "camp/cli.hpp"
#include "camp/evaluation.hpp"

namespace camp::cli {

namespace fs = std::filesystem;

namespace {

struct Globals {
    std::optional<fs::path> config_path;
    std::uint64_t seed = 0;
    bool json = false;
};

EngineConfig effective_config(const Globals& g) {
    return g.config_path ? load_config(*g.config_path) : EngineConfig{};
}

fs::path cache_path_for(const EngineConfig& config, const fs::path& repo,
                        const std::optional<fs::path>& flag) {
    if (flag) return *flag;
    if (config.index_cache) return *config.index_cache;
    return repo / ".camp" / "index.bin";
}

void require_file(const fs::path& p, const std::string& what) {
    if (!fs::is_regular_file(p)) throw UsageError(what + " not found: " + p.string());
}

std::string read_text(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    if (!in) throw UsageError("cannot read " + p.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_text(const fs::path& p, const std::string& text) {
    if (p.has_parent_path()) fs::create_directories(p.parent_path());
    std::ofstream out(p, std::ios::binary | std::ios::trunc);
    out << text;
    if (!out) throw std::runtime_error("cannot write " + p.string());
}

/// Cached snapshot when the cache exists and matches the config, else a fresh build.
dcsi::IndexSnapshot open_index(const EngineConfig& config, const fs::path& repo,
                               const std::optional<fs::path>& cache_flag = std::nullopt) {
    const fs::path cache = cache_path_for(config, repo, cache_flag);
    if (fs::exists(cache)) {
        try {
            auto snap = dcsi::load_index_cache(cache);
            if (snap.config() == config.index) return snap;
        } catch (const std::exception&) {
        }
    }
    return dcsi::build_index(repo, config.index);
}

retrieval::LearnedParams load_params_or_initial(const EngineConfig& config, const std::optional<fs::path>& flag,
                                                std::ostream& err) {
    const auto path = flag ? flag : config.params_file;
    if (path) {
        if (!fs::exists(*path)) throw UsageError("params file not found: " + path->string());
        return retrieval::load_params(*path);
    }
    err << "note: no params file given; using the initial parameters\n";
    return retrieval::LearnedParams::initial(config.index.d_emb);
}

eval::PipelineSettings pipeline_settings(const EngineConfig& config, retrieval::LearnedParams params) {
    eval::PipelineSettings s;
    s.params = std::move(params);
    s.index = config.index;
    s.k = config.k;
    s.fusion = config.fusion;
    s.tau_c = config.tau_c;
    s.budget = config.budget;
    s.chars_per_token = config.chars_per_token;
    return s;
}

std::unique_ptr<llm::LlmBackend> backend_for(const EngineConfig& config, const std::optional<fs::path>& rules) {
    llm::BackendConfig b = config.backend;
    if (rules) {
        require_file(*rules, "mock rules");
        b.kind = "mock";
        b.mock_rules_path = *rules;
    }
    return llm::make_backend(b);
}

std::vector<eval::EvalCase> manifest_or_usage(const fs::path& path) {
    require_file(path, "manifest");
    auto cases = eval::load_manifest(path);
    if (cases.empty()) throw UsageError("manifest has no cases: " + path.string());
    return cases;
}

dcsi::FileEdit edit_from_json(const nlohmann::json& j) {
    dcsi::FileEdit e;
    const std::string kind = j.value("kind", std::string("replace"));
    if (kind == "replace")
        e.kind = dcsi::FileEdit::Kind::replace;
    else if (kind == "create")
        e.kind = dcsi::FileEdit::Kind::create;
    else if (kind == "remove")
        e.kind = dcsi::FileEdit::Kind::remove;
    else
        throw UsageError("unknown edit kind: " + kind);
    e.path = j.at("path").get<std::string>();
    e.byte_begin = j.value("byte_begin", std::size_t{0});
    e.byte_end = j.value("byte_end", std::size_t{0});
    e.text = j.value("text", std::string());
    return e;
}

void apply_to_disk(const fs::path& repo, const dcsi::FileEdit& e) {
    const fs::path p = repo / e.path;
    switch (e.kind) {
        case dcsi::FileEdit::Kind::create: write_text(p, e.text); break;
        case dcsi::FileEdit::Kind::remove: fs::remove(p); break;
        case dcsi::FileEdit::Kind::replace: {
            std::string text = read_text(p);
            text.replace(e.byte_begin, e.byte_end - e.byte_begin, e.text);
            write_text(p, text);
            break;
        }
    }
}

void print_diagnostics(const dcsi::IndexSnapshot& snap, std::ostream& err) {
    for (const auto& d : snap.diagnostics()) err << "warning: " << d.file << ": " << d.message << '\n';
}

// ---------------------------------------------------------------------------

struct IndexArgs {
    fs::path repo;
    std::optional<fs::path> cache;
    bool verify = false;
    std::optional<fs::path> edits;
};

int cmd_index(const Globals& g, const IndexArgs& a, std::ostream& out, std::ostream& err) {
    const EngineConfig config = effective_config(g);
    if (!fs::is_directory(a.repo)) throw UsageError("repository not found: " + a.repo.string());
    const fs::path cache = cache_path_for(config, a.repo, a.cache);
    auto summary = [&](const dcsi::IndexSnapshot& s, const std::string& status) {
        if (g.json) {
            out << nlohmann::json{{"status", status},
                                  {"symbols", s.symbol_count()},
                                  {"units", s.unit_count()},
                                  {"content_hash", s.content_hash()},
                                  {"cache", cache.generic_string()}}
                       .dump()
                << '\n';
        } else {
            if (status == "up-to-date")
                out << "up-to-date\n";
            else
                out << s.symbol_count() << " symbols, " << s.unit_count() << " units\n";
            out << "content_hash " << s.content_hash() << '\n';
        }
    };

    if (a.verify) {
        if (!fs::exists(cache)) throw UsageError("no index cache at " + cache.string());
        const auto cached = dcsi::load_index_cache(cache);
        const auto fresh = dcsi::build_index(a.repo, cached.config());
        const bool same = cached.content_hash() == fresh.content_hash();
        if (g.json)
            out << nlohmann::json{{"verified", same}, {"cached", cached.content_hash()}, {"rebuilt", fresh.content_hash()}}
                       .dump()
                << '\n';
        else
            out << (same ? "verified " : "mismatch ") << cached.content_hash() << ' ' << fresh.content_hash() << '\n';
        return same ? kExitOk : kExitFailure;
    }

    if (a.edits) {
        require_file(*a.edits, "edit file");
        dcsi::IndexSnapshot snap = open_index(config, a.repo, a.cache);
        std::ifstream in(*a.edits);
        std::string line;
        std::size_t applied = 0;
        while (std::getline(in, line)) {
            if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
            nlohmann::json j;
            try {
                j = nlohmann::json::parse(line);
            } catch (const nlohmann::json::parse_error& e) {
                throw UsageError(std::string("edit file: ") + e.what());
            }
            const auto edit = edit_from_json(j);
            snap = dcsi::apply_edit(snap, edit);
            apply_to_disk(a.repo, edit);
            ++applied;
        }
        dcsi::save_index_cache(snap, cache);
        print_diagnostics(snap, err);
        if (!g.json) out << "applied " << applied << " edits\n";
        summary(snap, "updated");
        return kExitOk;
    }

    const auto fresh = dcsi::build_index(a.repo, config.index);
    print_diagnostics(fresh, err);
    if (fs::exists(cache)) {
        try {
            const auto cached = dcsi::load_index_cache(cache);
            if (cached.config() == config.index && cached.content_hash() == fresh.content_hash()) {
                summary(cached, "up-to-date");
                return kExitOk;
            }
        } catch (const std::exception& e) {
            err << "warning: rebuilding unreadable cache: " << e.what() << '\n';
        }
    }
    dcsi::save_index_cache(fresh, cache);
    summary(fresh, "built");
    return kExitOk;
}

// ---------------------------------------------------------------------------

struct QueryArgs {
    std::optional<fs::path> env;
    std::optional<std::string> query;
    std::optional<std::string> input;
    std::optional<std::size_t> k;
    std::optional<fs::path> params;
    std::string model = "camp";
    bool with_query = false;
    std::optional<fs::path> history;
    std::optional<std::string> dialect;
    std::optional<std::size_t> budget;
};

EnvironmentState env_or_usage(const QueryArgs& a) {
    if (!a.env) throw UsageError("--env is required");
    require_file(*a.env, "environment file");
    try {
        return load_environment_file(*a.env);
    } catch (const std::invalid_argument& e) {
        throw UsageError(e.what());
    }
}

eval::ModelConfig model_or_usage(const std::string& name) {
    try {
        return eval::model_from_string(name);
    } catch (const eval::EvalError& e) {
        throw UsageError(e.what());
    }
}

int cmd_retrieve(const Globals& g, const QueryArgs& a, std::ostream& out, std::ostream& err) {
    EngineConfig config = effective_config(g);
    const EnvironmentState env = env_or_usage(a);
    if (a.k) config.k = *a.k;
    if (config.k < 1) throw UsageError("--k must be at least 1");
    const auto model = model_or_usage(a.model);
    if (model == eval::ModelConfig::cloud_only) throw UsageError("cloudonly does not retrieve");

    const auto snap = open_index(config, env.repo_root);
    auto params = load_params_or_initial(config, a.params, err);
    const std::string input = a.input ? *a.input : eval::enclosing_unit_text(snap, env);

    retrieval::RetrieveOptions opts;
    opts.k = config.k;
    opts.fusion = config.fusion;
    context::ContextVector ctx = context::ContextVector::none(config.index.d_emb);
    retrieval::HeuristicMatrix H = params.H;
    if (model == eval::ModelConfig::base_rag) {
        H = retrieval::HeuristicMatrix::identity(config.index.d_emb);
        opts.exclude_cursor_unit = false;
    } else {
        std::vector<std::string> diags;
        const auto signals = context::collect_signals(env, snap, &diags);
        for (const auto& d : diags) err << "warning: " << d << '\n';
        if (!signals.empty()) ctx = context::aggregate_by_source(signals, params.eta, config.tau_c);
        if (model == eval::ModelConfig::file_context && env.cursor) opts.restrict_to_file = env.cursor->file;
    }
    const auto result = retrieval::retrieve(snap, ctx, input, a.query, H, opts);

    nlohmann::json items = nlohmann::json::array();
    for (const auto& it : result.items)
        items.push_back({{"unit", it.unit->id},
                         {"file", it.unit->file},
                         {"declaration", it.unit->declaration},
                         {"probability", it.probability},
                         {"score", it.score}});
    nlohmann::json j = {{"query_digest", result.query_digest},
                        {"candidate_count", result.candidate_count},
                        {"items", items}};
    if (a.with_query) j["query"] = std::vector<double>(result.query.data(), result.query.data() + result.query.size());
    out << std::setprecision(17) << j.dump(2) << '\n';
    return kExitOk;
}

int cmd_prompt(const Globals& g, const QueryArgs& a, std::ostream& out, std::ostream& err) {
    EngineConfig config = effective_config(g);
    const EnvironmentState env = env_or_usage(a);
    if (!a.query) throw UsageError("--query is required");
    if (a.k) config.k = *a.k;
    if (a.budget) config.budget = *a.budget;
    if (a.dialect) config.dialect = prompt::dialect_from_string(*a.dialect);
    std::vector<prompt::HistoryMessage> history;
    if (a.history) {
        require_file(*a.history, "history file");
        const auto j = nlohmann::json::parse(read_text(*a.history));
        for (const auto& m : j) history.push_back({m.at("role").get<std::string>(), m.at("content").get<std::string>()});
    }
    const auto snap = open_index(config, env.repo_root);
    const auto settings = pipeline_settings(config, load_params_or_initial(config, a.params, err));
    const auto built = eval::build_prompt(model_or_usage(a.model), snap, env, *a.query, settings, history);
    for (const auto& d : built.diagnostics) err << "warning: " << d << '\n';
    const auto payload = prompt::serialize(built.plan, config.dialect);
    if (g.json) {
        nlohmann::json comps = nlohmann::json::array();
        for (const auto& c : built.plan.ordered)
            comps.push_back({{"kind", prompt::to_string(c.kind)},
                             {"tokens", c.token_count},
                             {"truncated", c.truncated}});
        out << nlohmann::json{{"payload", payload},
                              {"budget", built.plan.budget},
                              {"total_tokens", built.plan.total_tokens},
                              {"components", comps},
                              {"retrieved", built.retrieved}}
                   .dump(2)
            << '\n';
    } else if (payload.is_string()) {
        out << payload.get<std::string>();
    } else {
        out << payload.dump(2) << '\n';
    }
    return kExitOk;
}

// ---------------------------------------------------------------------------

struct TrainArgs {
    std::optional<fs::path> data;
    std::optional<fs::path> manifest;
    bool planted = false;
    bool ordering = false;
    std::optional<fs::path> rules;
    std::optional<std::size_t> max_iters;
    std::optional<fs::path> out;
    std::optional<fs::path> loss_csv;
    std::optional<fs::path> params;
};

std::vector<training::TrainingExample> load_training_data(const fs::path& path) {
    require_file(path, "training data");
    std::ifstream in(path);
    std::vector<training::TrainingExample> out;
    std::string line;
    while (std::getline(in, line)) {
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        try {
            const auto j = nlohmann::json::parse(line);
            training::TrainingExample ex;
            ex.input_text = j.value("input_text", std::string());
            ex.environment = environment_from_json(j.at("environment"), path.parent_path());
            ex.positive_doc = j.at("positive_doc").get<std::string>();
            if (j.contains("user_query") && j["user_query"].is_string()) ex.user_query = j["user_query"].get<std::string>();
            out.push_back(std::move(ex));
        } catch (const std::exception& e) {
            throw UsageError("training data: " + std::string(e.what()));
        }
    }
    if (out.empty()) throw UsageError("training data has no examples");
    return out;
}

int cmd_train_ordering(const Globals& g, const TrainArgs& a, const EngineConfig& config, std::ostream& out,
                       std::ostream& err) {
    if (!a.manifest) throw UsageError("--ordering needs --manifest");
    const auto cases = manifest_or_usage(*a.manifest);
    auto params = load_params_or_initial(config, a.params, err);
    const auto settings = pipeline_settings(config, params);
    auto backend = backend_for(config, a.rules);
    eval::FixtureCache fixtures(config.index);
    eval::RunOptions opts;
    opts.n = config.n;
    opts.ks = {1};
    opts.seed = g.seed;
    opts.workers = config.workers;
    std::size_t calls = 0;
    const auto result = training::train_prompt_ordering(
        prompt::default_ordering(), [&](const std::vector<prompt::ComponentKind>& order) {
            ++calls;
            opts.ordering = order;
            const auto report = eval::run_config(eval::ModelConfig::camp, cases, *backend, settings, opts, &fixtures);
            double sum = 0.0;
            std::size_t tasks = 0;
            for (const auto& c : report.cells) {
                sum += c.pass_at_k * static_cast<double>(c.tasks);
                tasks += c.tasks;
            }
            return tasks ? 1.0 - sum / static_cast<double>(tasks) : 1.0;
        });
    params.theta = prompt::ordering_names(result.theta);
    params.metadata["ordering_swaps"] = std::to_string(result.detail.swap_evaluations);
    const fs::path dest = a.out ? *a.out : config.params_file ? *config.params_file : fs::path("camp_params.bin");
    retrieval::save_params(params, dest);
    if (g.json) {
        out << nlohmann::json{{"theta", params.theta},
                              {"swap_evaluations", result.detail.swap_evaluations},
                              {"loss_evaluations", calls},
                              {"params", dest.generic_string()}}
                   .dump()
            << '\n';
    } else {
        out << "theta:";
        for (const auto& n : params.theta) out << ' ' << n;
        out << "\nswap evaluations: " << result.detail.swap_evaluations << "\nloss evaluations: " << calls << '\n';
    }
    return kExitOk;
}

int cmd_train(const Globals& g, const TrainArgs& a, std::ostream& out, std::ostream& err) {
    EngineConfig config = effective_config(g);
    if (a.max_iters) config.training.max_iters = *a.max_iters;
    const int sources = int(a.data.has_value()) + int(a.planted) + int(a.manifest.has_value() && !a.ordering);
    if (a.ordering) {
        if (a.data || a.planted) throw UsageError("--ordering cannot be combined with --data or --planted");
        return cmd_train_ordering(g, a, config, out, err);
    }
    if (sources != 1) throw UsageError("give exactly one of --data, --manifest or --planted");

    training::TrainResult result;
    retrieval::LearnedParams params;
    std::optional<double> accuracy;
    if (a.planted) {
        const auto bench = training::make_planted_benchmark(g.seed);
        params = retrieval::LearnedParams::initial(bench.problem.dim);
        result = training::train_retrievers(bench.problem, config.training, params.H, params.eta);
        accuracy = training::top1_accuracy(result.H.values(), result.eta, bench.problem);
    } else if (a.manifest) {
        params = a.params ? retrieval::load_params(*a.params) : retrieval::LearnedParams::initial(config.index.d_emb);
        const auto cases = manifest_or_usage(*a.manifest);
        result = eval::train_on_cases(cases, pipeline_settings(config, params), config.training);
    } else {
        params = a.params ? retrieval::load_params(*a.params) : retrieval::LearnedParams::initial(config.index.d_emb);
        const auto data = load_training_data(*a.data);
        std::map<fs::path, std::vector<training::TrainingExample>> by_repo;
        for (const auto& ex : data) by_repo[ex.environment.repo_root].push_back(ex);
        training::Problem problem;
        for (const auto& [repo, examples] : by_repo) {
            const auto snap = open_index(config, repo);
            training::append_problem(problem, training::prepare_problem(snap, examples, config.fusion));
        }
        result = training::train_retrievers(problem, config.training, params.H, params.eta);
    }
    params.H = result.H;
    params.eta = result.eta;
    params.metadata["iterations"] = std::to_string(result.records.size());
    params.metadata["seed"] = std::to_string(g.seed);

    const fs::path dest = a.out ? *a.out : config.params_file ? *config.params_file : fs::path("camp_params.bin");
    retrieval::save_params(params, dest);
    if (a.loss_csv) {
        std::ostringstream csv;
        training::write_loss_csv(result, csv);
        write_text(*a.loss_csv, csv.str());
    }
    const double final_loss = result.loss_history.empty() ? result.initial_objective : result.loss_history.back();
    const bool decreased = final_loss < result.initial_objective;
    if (g.json) {
        nlohmann::json j = {{"initial_loss", result.initial_objective},
                            {"final_loss", final_loss},
                            {"iterations", result.records.size()},
                            {"converged", result.converged},
                            {"nuclear_norm", result.H.nuclear_norm()},
                            {"params", dest.generic_string()}};
        if (accuracy) j["top1_accuracy"] = *accuracy;
        out << j.dump() << '\n';
    } else {
        out << "iterations: " << result.records.size() << (result.converged ? " (converged)" : "") << '\n';
        out << std::setprecision(10) << "initial loss: " << result.initial_objective << "\nfinal loss: " << final_loss
            << '\n';
        if (accuracy) out << "top-1 accuracy: " << *accuracy << '\n';
        out << "params written to " << dest.generic_string() << '\n';
    }
    if (a.planted) {
        if (!g.json) out << "final loss < initial loss: " << (decreased ? "yes" : "no") << '\n';
        return decreased ? kExitOk : kExitFailure;
    }
    return kExitOk;
}

// ---------------------------------------------------------------------------

struct EvalArgs {
    std::optional<fs::path> manifest;
    std::vector<std::string> models;
    std::optional<int> n;
    std::optional<std::string> ks;
    std::optional<fs::path> params;
    std::optional<fs::path> rules;
    std::optional<fs::path> out;
    std::optional<fs::path> table;
    std::optional<fs::path> csv;
    std::optional<std::size_t> workers;
    bool timing = false;
};

std::vector<int> parse_ks(const std::string& s) {
    std::vector<int> ks;
    std::stringstream ss(s);
    std::string part;
    while (std::getline(ss, part, ',')) {
        try {
            ks.push_back(std::stoi(part));
        } catch (const std::exception&) {
            throw UsageError("bad --k list: " + s);
        }
    }
    if (ks.empty()) throw UsageError("empty --k list");
    return ks;
}

int cmd_eval(const Globals& g, const EvalArgs& a, std::ostream& out, std::ostream& err) {
    const EngineConfig config = effective_config(g);
    if (!a.manifest) throw UsageError("--manifest is required");
    const auto cases = manifest_or_usage(*a.manifest);
    std::vector<eval::ModelConfig> models;
    if (a.models.empty())
        models.assign(eval::kModels.begin(), eval::kModels.end());
    else
        for (const auto& m : a.models) {
            models.push_back(model_or_usage(m));
        }
    eval::RunOptions opts;
    opts.n = a.n.value_or(config.n);
    opts.ks = a.ks ? parse_ks(*a.ks) : config.ks;
    opts.seed = g.seed;
    opts.workers = a.workers.value_or(config.workers);
    if (opts.n < 1) throw UsageError("--n must be at least 1");
    for (int k : opts.ks)
        if (k < 1 || k > opts.n) throw UsageError("K values must lie in [1, n]");

    const bool cloud_only = models.size() == 1 && models.front() == eval::ModelConfig::cloud_only;
    const auto params = cloud_only ? retrieval::LearnedParams::initial(config.index.d_emb)
                                   : load_params_or_initial(config, a.params, err);
    const auto settings = pipeline_settings(config, params);
    auto backend = backend_for(config, a.rules);
    const auto report = eval::run_configs(models, cases, *backend, settings, opts);
    for (const auto& d : report.diagnostics) err << "warning: " << d << '\n';

    const std::string json = eval::report_to_json(report, a.timing).dump(2) + "\n";
    const std::string table = eval::render_table(report);
    if (a.out) write_text(*a.out, json);
    if (a.table) write_text(*a.table, table);
    if (a.csv) write_text(*a.csv, eval::report_to_csv(report));
    out << (g.json ? json : table);
    return kExitOk;
}

// ---------------------------------------------------------------------------

struct VerifyArgs {
    std::optional<fs::path> manifest;
    std::string task;
    std::optional<fs::path> sample;
};

int cmd_verify(const Globals& g, const VerifyArgs& a, std::ostream& out) {
    if (!a.manifest) throw UsageError("--manifest is required");
    if (!a.sample) throw UsageError("--sample is required");
    const auto cases = manifest_or_usage(*a.manifest);
    const auto it = std::find_if(cases.begin(), cases.end(), [&](const eval::EvalCase& c) { return c.task_id == a.task; });
    if (it == cases.end()) throw UsageError("unknown task: " + a.task);
    require_file(*a.sample, "sample");
    const auto outcome = eval::run_verifier(read_text(*a.sample), it->verifier, it->repo_fixture);
    if (g.json)
        out << nlohmann::json{{"task_id", it->task_id}, {"passed", outcome.passed}, {"timed_out", outcome.timed_out}}.dump()
            << '\n';
    else
        out << (outcome.passed ? "pass" : "fail") << (outcome.timed_out ? " (timeout)" : "") << '\n';
    return kExitOk;
}

struct SuiteArgs {
    fs::path out;
    std::size_t tasks_per_level = 30;
};

int cmd_suite(const Globals& g, const SuiteArgs& a, std::ostream& out) {
    eval::SuiteOptions opts;
    opts.seed = g.seed;
    opts.tasks_per_level = a.tasks_per_level;
    const auto suite = eval::generate_suite(a.out, opts);
    if (g.json)
        out << nlohmann::json{{"manifest", suite.manifest.generic_string()},
                              {"mock_rules", suite.mock_rules.generic_string()},
                              {"cases", suite.cases.size()}}
                   .dump()
            << '\n';
    else
        out << suite.cases.size() << " tasks\nmanifest " << suite.manifest.generic_string() << "\nmock rules "
            << suite.mock_rules.generic_string() << '\n';
    return kExitOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Context-aware retrieval and prompt construction for code completion", "camp_cli"};
    app.require_subcommand(1);
    Globals g;
    app.add_option("--config", g.config_path, "JSON config file");
    app.add_option("--seed", g.seed, "Seed for every random choice");
    app.add_flag("--json", g.json, "Machine-readable output");

    IndexArgs ia;
    auto* index = app.add_subcommand("index", "Build, verify or incrementally update the symbol index");
    index->add_option("repo", ia.repo, "Repository root")->required();
    index->add_option("--cache", ia.cache, "Cache file");
    index->add_flag("--verify", ia.verify, "Rebuild from scratch and compare with the cache");
    index->add_option("--edit", ia.edits, "JSONL edit replay");

    QueryArgs ra;
    auto* retrieve = app.add_subcommand("retrieve", "Rank code units for an environment snapshot");
    retrieve->add_option("--env", ra.env, "Environment JSON file");
    retrieve->add_option("--query", ra.query, "User query");
    retrieve->add_option("--input", ra.input, "Input code (default: unit at the cursor)");
    retrieve->add_option("--k", ra.k, "Number of results");
    retrieve->add_option("--params", ra.params, "Learned parameter file");
    retrieve->add_option("--model", ra.model, "camp, filecontext or baserag");
    retrieve->add_flag("--with-query", ra.with_query, "Include the query vector");

    QueryArgs pa;
    auto* prompt_cmd = app.add_subcommand("prompt", "Build the prompt for an environment snapshot");
    prompt_cmd->add_option("--env", pa.env, "Environment JSON file");
    prompt_cmd->add_option("--query", pa.query, "User request");
    prompt_cmd->add_option("--k", pa.k, "Retrieved units");
    prompt_cmd->add_option("--params", pa.params, "Learned parameter file");
    prompt_cmd->add_option("--model", pa.model, "cloudonly, baserag, filecontext or camp");
    prompt_cmd->add_option("--history", pa.history, "JSON array of {role, content}");
    prompt_cmd->add_option("--dialect", pa.dialect, "chat or flat");
    prompt_cmd->add_option("--budget", pa.budget, "Token budget");

    TrainArgs ta;
    auto* train = app.add_subcommand("train", "Learn H and eta, or the prompt ordering");
    train->add_option("--data", ta.data, "JSONL training examples");
    train->add_option("--manifest", ta.manifest, "Evaluation manifest used as training data");
    train->add_flag("--planted", ta.planted, "Train on the planted benchmark");
    train->add_flag("--ordering", ta.ordering, "Learn the component ordering against --manifest");
    train->add_option("--rules", ta.rules, "Mock rules for --ordering");
    train->add_option("--max-iters", ta.max_iters, "Iteration cap");
    train->add_option("--params", ta.params, "Starting parameter file");
    train->add_option("--out", ta.out, "Output parameter file");
    train->add_option("--loss-csv", ta.loss_csv, "Per-iteration loss log");

    EvalArgs ea;
    auto* evaluate = app.add_subcommand("eval", "Pass@K evaluation over a manifest");
    evaluate->add_option("--manifest", ea.manifest, "JSONL manifest");
    evaluate->add_option("--model", ea.models, "Model configuration (repeatable; default all)");
    evaluate->add_option("--n", ea.n, "Samples per task");
    evaluate->add_option("--k", ea.ks, "Comma-separated K values");
    evaluate->add_option("--params", ea.params, "Learned parameter file");
    evaluate->add_option("--rules", ea.rules, "Mock rules file (selects the mock backend)");
    evaluate->add_option("--out", ea.out, "Report JSON path");
    evaluate->add_option("--table", ea.table, "Text table path");
    evaluate->add_option("--csv", ea.csv, "CSV export path");
    evaluate->add_option("--workers", ea.workers, "Parallel tasks");
    evaluate->add_flag("--timing", ea.timing, "Include runtime statistics in the JSON report");

    VerifyArgs va;
    auto* verify = app.add_subcommand("verify", "Check one sample against a task's verifier");
    verify->add_option("--manifest", va.manifest, "JSONL manifest");
    verify->add_option("--task", va.task, "Task id")->required();
    verify->add_option("--sample", va.sample, "File holding the sample");

    SuiteArgs sa;
    auto* suite = app.add_subcommand("suite", "Write the synthetic evaluation suite");
    suite->add_option("--out", sa.out, "Output directory")->required();
    suite->add_option("--tasks-per-level", sa.tasks_per_level, "Tasks per runnable level");

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return kExitOk;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << "\n" << "run with --help for usage\n";
        return kExitUsage;
    }

    try {
        if (g.config_path) load_config(*g.config_path);
        if (*index) return cmd_index(g, ia, out, err);
        if (*retrieve) return cmd_retrieve(g, ra, out, err);
        if (*prompt_cmd) return cmd_prompt(g, pa, out, err);
        if (*train) return cmd_train(g, ta, out, err);
        if (*evaluate) return cmd_eval(g, ea, out, err);
        if (*verify) return cmd_verify(g, va, out);
        if (*suite) return cmd_suite(g, sa, out);
    } catch (const UsageError& e) {
        err << "error: " << e.what() << '\n';
        return kExitUsage;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << '\n';
        return kExitUsage;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return kExitFailure;
    }
    return kExitUsage;
}

}  // namespace camp::cli
