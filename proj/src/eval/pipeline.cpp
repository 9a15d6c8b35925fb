#include "camp/evaluation.hpp"

namespace camp::eval {

using prompt::ComponentKind;

std::string enclosing_unit_text(const dcsi::IndexSnapshot& snapshot, const EnvironmentState& env) {
    if (!env.cursor) return {};
    const dcsi::DocUnit* unit = snapshot.unit_at(env.cursor->file, env.cursor->line);
    return unit ? std::string(snapshot.unit_text(*unit)) : std::string();
}

namespace {

std::string render_retrieved(const dcsi::IndexSnapshot& snapshot, const retrieval::RetrievalResult& result) {
    std::string out;
    for (const auto& item : result.items) {
        if (!out.empty()) out += '\n';
        out += "// " + item.unit->file + "\n";
        out += snapshot.unit_text(*item.unit);
    }
    return out;
}

std::string describe_cursor(const EnvironmentState& env, const std::string& unit_text) {
    std::string out = "Current file: " + env.cursor->file + "\nCursor line: " + std::to_string(env.cursor->line + 1) + "\n";
    if (!unit_text.empty()) out += "Enclosing code:\n" + unit_text;
    return out;
}

}  // namespace

PipelineOutput build_prompt(ModelConfig model, const dcsi::IndexSnapshot& snapshot, const EnvironmentState& env,
                            const std::string& query, const PipelineSettings& settings,
                            const std::vector<prompt::HistoryMessage>& history,
                            const std::optional<std::vector<ComponentKind>>& ordering) {
    const std::size_t d = snapshot.config().d_emb;
    if (settings.params.H.dim() != d)
        throw EvalError("parameter dimension " + std::to_string(settings.params.H.dim()) +
                        " does not match index dimension " + std::to_string(d));
    const prompt::TokenCounter counter(settings.chars_per_token);
    PipelineOutput out;

    std::vector<prompt::PromptComponent> components;
    components.push_back(prompt::make_component(ComponentKind::system_prompt, settings.system_prompt, counter));
    components.push_back(prompt::make_component(ComponentKind::new_message, query, counter));
    if (!history.empty()) components.push_back(prompt::make_history(history, counter));

    if (model != ModelConfig::cloud_only) {
        const std::string unit_text = enclosing_unit_text(snapshot, env);
        retrieval::RetrieveOptions opts;
        opts.k = settings.k;
        opts.fusion = settings.fusion;
        context::ContextVector ctx = context::ContextVector::none(d);
        retrieval::HeuristicMatrix identity;
        const retrieval::HeuristicMatrix* H = &settings.params.H;

        if (model == ModelConfig::base_rag) {
            identity = retrieval::HeuristicMatrix::identity(d);
            H = &identity;
            opts.exclude_cursor_unit = false;
        } else {
            const auto signals = context::collect_signals(env, snapshot, &out.diagnostics);
            if (!signals.empty()) ctx = context::aggregate_by_source(signals, settings.params.eta, settings.tau_c);
            if (env.cursor)
                components.push_back(
                    prompt::make_component(ComponentKind::context_system_prompt, describe_cursor(env, unit_text), counter));
            if (model == ModelConfig::file_context) {
                if (env.cursor)
                    opts.restrict_to_file = env.cursor->file;
                else
                    out.diagnostics.push_back("no cursor: file-restricted retrieval skipped");
            }
        }

        const bool skip = model == ModelConfig::file_context && !opts.restrict_to_file;
        if (!skip) {
            const std::optional<std::string> uq = query.empty() ? std::nullopt : std::optional<std::string>(query);
            try {
                auto result = retrieval::retrieve(snapshot, ctx, unit_text, uq, *H, opts);
                for (const auto& item : result.items) out.retrieved.push_back(item.unit->id);
                components.push_back(prompt::make_component(ComponentKind::retrieved_content,
                                                            render_retrieved(snapshot, result), counter));
                out.retrieval = std::move(result);
            } catch (const retrieval::RetrievalError& e) {
                out.diagnostics.push_back(std::string("retrieval skipped: ") + e.what());
            }
        }
    }

    std::vector<ComponentKind> order;
    if (ordering)
        order = *ordering;
    else if (!settings.params.theta.empty())
        order = prompt::ordering_from_names(settings.params.theta);
    else
        order = prompt::default_ordering();
    out.plan = prompt::construct(std::move(components), order, settings.budget, counter);
    out.messages = prompt::to_chat_messages(out.plan);
    return out;
}

}  // namespace camp::eval
