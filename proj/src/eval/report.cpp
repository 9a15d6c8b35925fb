#include <algorithm>
#include <cstdio>
#include <sstream>

#include "camp/evaluation.hpp"

namespace camp::eval {

namespace {

// Percent values; rows CloudOnly, BaseRAG, FileContext, CAMP; columns level-major, K = 1, 5, 10.
constexpr double kReference[4][9] = {
    {8.73, 12.57, 14.55, 21.03, 29.09, 32.35, 9.37, 12.08, 13.04},
    {19.84, 35.06, 40.91, 24.98, 35.94, 39.01, 15.66, 21.89, 24.62},
    {31.23, 43.41, 47.30, 29.52, 37.80, 42.30, 11.08, 16.87, 17.92},
    {28.96, 41.72, 46.07, 35.30, 43.45, 45.80, 21.91, 25.05, 26.43},
};

std::string percent(double fraction) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2f%%", 100.0 * fraction);
    return buf;
}

std::string pad(const std::string& s, std::size_t width) {
    return s.size() >= width ? s : s + std::string(width - s.size(), ' ');
}

std::string level_title(Level level) {
    switch (level) {
        case Level::class_runnable: return "class-runnable";
        case Level::file_runnable: return "file-runnable";
        case Level::project_runnable: return "project-runnable";
    }
    return "?";
}

}  // namespace

std::optional<double> reference_pass_at_k(ModelConfig model, Level level, int k) {
    int col = 0;
    switch (k) {
        case 1: col = 0; break;
        case 5: col = 1; break;
        case 10: col = 2; break;
        default: return std::nullopt;
    }
    return kReference[static_cast<int>(model)][3 * static_cast<int>(level) + col];
}

nlohmann::json report_to_json(const EvalReport& report, bool include_timing) {
    nlohmann::json cells = nlohmann::json::array();
    for (const auto& c : report.cells)
        cells.push_back({{"model", display_name(c.model)},
                         {"level", to_string(c.level)},
                         {"k", c.k},
                         {"pass_at_k", c.pass_at_k},
                         {"tasks", c.tasks}});
    nlohmann::json tasks = nlohmann::json::array();
    for (const auto& t : report.tasks) {
        nlohmann::json row = {{"model", display_name(t.model)},
                              {"task_id", t.task_id},
                              {"level", to_string(t.level)},
                              {"n", t.n},
                              {"c", t.c},
                              {"failed_samples", t.failed_samples},
                              {"retrieved", t.retrieved}};
        if (include_timing) row["seconds"] = t.seconds;
        tasks.push_back(std::move(row));
    }
    nlohmann::json j = {{"n", report.n},
                        {"ks", report.ks},
                        {"seed", report.seed},
                        {"results", cells},
                        {"tasks", tasks},
                        {"diagnostics", report.diagnostics}};
    if (include_timing) j["wall_seconds"] = report.wall_seconds;
    return j;
}

std::string report_to_csv(const EvalReport& report) {
    std::ostringstream out;
    out << "model,level,k,pass_at_k,tasks\n";
    for (const auto& c : report.cells) {
        char buf[32];
        std::snprintf(buf, sizeof buf, "%.6f", c.pass_at_k);
        out << display_name(c.model) << ',' << to_string(c.level) << ',' << c.k << ',' << buf << ',' << c.tasks << '\n';
    }
    return out.str();
}

std::string render_table(const EvalReport& report) {
    std::vector<int> ks = report.ks;
    std::sort(ks.begin(), ks.end());
    ks.erase(std::unique(ks.begin(), ks.end()), ks.end());
    std::vector<Level> levels;
    std::vector<ModelConfig> models;
    for (Level l : kLevels)
        for (const auto& c : report.cells)
            if (c.level == l) {
                levels.push_back(l);
                break;
            }
    for (ModelConfig m : kModels)
        for (const auto& c : report.cells)
            if (c.model == m) {
                models.push_back(m);
                break;
            }

    constexpr std::size_t kName = 13, kCell = 9;
    auto render = [&](const auto& value_of) {
        std::ostringstream out;
        out << pad("Model", kName);
        for (Level l : levels) out << "| " << pad(level_title(l), kCell * ks.size());
        out << '\n' << pad("", kName);
        for (std::size_t li = 0; li < levels.size(); ++li) {
            out << "| ";
            for (int k : ks) out << pad("Pass@" + std::to_string(k), kCell);
        }
        out << '\n';
        for (ModelConfig m : models) {
            out << pad(std::string(display_name(m)), kName);
            for (Level l : levels) {
                out << "| ";
                for (int k : ks) out << pad(value_of(m, l, k), kCell);
            }
            out << '\n';
        }
        return out.str();
    };

    std::string text = render([&](ModelConfig m, Level l, int k) {
        const auto* c = report.cell(m, l, k);
        return c ? percent(c->pass_at_k) : std::string("-");
    });
    text += "\nReference (published):\n";
    text += render([&](ModelConfig m, Level l, int k) {
        const auto r = reference_pass_at_k(m, l, k);
        return r ? percent(*r / 100.0) : std::string("-");
    });
    return text;
}

}  // namespace camp::eval
