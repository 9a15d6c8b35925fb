#include <fstream>
#include <random>
#include <set>

#include "camp/evaluation.hpp"

namespace camp::eval {

namespace fs = std::filesystem;

namespace {

const std::vector<std::string> kDomainWords = {
    "ledger",  "invoice", "payment", "refund", "balance",  "account", "tax",     "discount",
    "order",   "cart",    "shipping", "customer", "report", "audit",  "currency", "rate",
    "budget",  "expense", "receipt", "vendor",  "payroll", "credit",  "debit",   "quota",
};

const std::vector<std::string> kSyllables = {"ba", "ce", "di", "fo", "gu", "ka", "le", "mi", "no",
                                             "pu", "ra", "se", "ti", "vo", "wu", "xe", "yo", "za"};

class Names {
public:
    explicit Names(std::mt19937_64& rng) : rng_(rng) {}

    std::string make(std::size_t syllables = 3) {
        for (;;) {
            std::string s;
            for (std::size_t i = 0; i < syllables; ++i) s += kSyllables[rng_() % kSyllables.size()];
            if (used_.insert(s).second) return s;
        }
    }
    std::string needle() { return "k" + make(4) + "_" + std::to_string(1000 + rng_() % 9000); }
    std::string type() {
        std::string s = make(3);
        s[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(s[0])));
        return s;
    }

private:
    std::mt19937_64& rng_;
    std::set<std::string> used_;
};

struct Source {
    std::string text;
    std::uint32_t lines = 0;
    void add(const std::string& line) {
        text += line;
        text += '\n';
        ++lines;
    }
};

std::string join(const std::vector<std::string>& words) {
    std::string out;
    for (const auto& w : words) out += (out.empty() ? "" : " ") + w;
    return out;
}

std::vector<std::string> pick_words(std::mt19937_64& rng, const std::vector<std::string>& from, std::size_t n) {
    std::vector<std::string> pool = from;
    std::shuffle(pool.begin(), pool.end(), rng);
    pool.resize(std::min(n, pool.size()));
    return pool;
}

void add_filler(Source& s, Names& names, std::mt19937_64& rng) {
    const std::string p = names.make(2);
    s.add("int " + names.make() + "(int " + p + ") {");
    s.add("    return " + p + " * " + std::to_string(2 + rng() % 7) + ";");
    s.add("}");
    s.add("");
}

void add_distractor(Source& s, Names& names, std::mt19937_64& rng, const std::vector<std::string>& query_words) {
    const auto words = pick_words(rng, query_words, 2 + rng() % 2);
    const std::string p = names.make(2), v = names.make(2);
    s.add("/// Handles " + join(words) + " updates.");
    s.add("int " + names.make() + "(int " + p + ") {");
    s.add("    int " + v + " = " + p + " + " + std::to_string(1 + rng() % 9) + ";");
    s.add("    return " + v + ";");
    s.add("}");
    s.add("");
}

void write_file(const fs::path& path, const std::string& text) {
    fs::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    out << text;
    if (!out) throw EvalError("cannot write " + path.string());
}

EvalCase make_task(const fs::path& root, const std::string& task_id, Level level, std::mt19937_64& rng,
                   const SuiteOptions& options) {
    Names names(rng);
    const auto query_words = pick_words(rng, kDomainWords, 3);
    const std::string needle = names.needle();
    const fs::path dir = root / "tasks" / task_id;
    const std::string cursor_file = "src/" + names.make(2) + ".cpp";

    Source cursor;
    cursor.add("#include <cstdio>");
    cursor.add("");
    CursorLocation at{cursor_file, 0, 8};
    std::string entry;

    switch (level) {
        case Level::class_runnable: {
            const std::string cls = names.type(), m1 = names.make(), m2 = names.make(), p = names.make(2);
            entry = m2;
            cursor.add("/// Tracks " + join(query_words) + " state.");
            cursor.add("class " + cls + " {");
            cursor.add("public:");
            cursor.add("    int " + m1 + "(int " + p + ") {");
            cursor.add("        return " + p + " + " + needle + ";");
            cursor.add("    }");
            cursor.add("    int " + m2 + "(int " + p + ") {");
            at.line = cursor.lines;
            cursor.add("        return " + m1 + "(" + p + ");");
            cursor.add("    }");
            cursor.add("private:");
            cursor.add("    int " + needle + " = 7;");
            cursor.add("};");
            cursor.add("");
            break;
        }
        case Level::file_runnable: {
            const std::string helper = names.make(), cls = names.type(), m = names.make(), p = names.make(2);
            entry = m;
            cursor.add("int " + helper + "(int " + p + ") {");
            cursor.add("    int " + needle + " = " + p + " + 5;");
            cursor.add("    return " + needle + ";");
            cursor.add("}");
            cursor.add("");
            cursor.add("/// Tracks " + join(query_words) + " state.");
            cursor.add("class " + cls + " {");
            cursor.add("public:");
            cursor.add("    int " + m + "(int " + p + ") {");
            at.line = cursor.lines;
            cursor.add("        return " + helper + "(" + p + ");");
            cursor.add("    }");
            cursor.add("};");
            cursor.add("");
            break;
        }
        case Level::project_runnable: {
            const std::string target = names.make(), fn = names.make(), p = names.make(2), v = names.make(2);
            const std::string q = names.make(2);
            entry = fn;
            Source lib;
            add_filler(lib, names, rng);
            lib.add("int " + target + "(int " + q + ") {");
            lib.add("    int " + needle + " = " + q + " * 3;");
            lib.add("    return " + needle + " - 1;");
            lib.add("}");
            lib.add("");
            write_file(dir / ("src/" + names.make(2) + ".cpp"), lib.text);

            cursor.add("/// Computes the " + join(query_words) + " result.");
            cursor.add("int " + fn + "(int " + p + ") {");
            cursor.add("    int " + v + " = " + target + "(" + p + ");");
            at.line = cursor.lines;
            cursor.add("    return " + v + ";");
            cursor.add("}");
            cursor.add("");
            break;
        }
    }
    add_filler(cursor, names, rng);
    write_file(dir / cursor_file, cursor.text);

    const std::size_t span = options.max_distractors - options.min_distractors + 1;
    const std::size_t n_distractors = options.min_distractors + rng() % span;
    const std::size_t n_files = std::max<std::size_t>(options.filler_files, 1);
    std::vector<Source> fillers(n_files);
    for (auto& f : fillers) add_filler(f, names, rng);
    for (std::size_t i = 0; i < n_distractors; ++i) add_distractor(fillers[rng() % n_files], names, rng, query_words);
    for (auto& f : fillers) add_filler(f, names, rng);
    for (const auto& f : fillers) write_file(dir / ("src/" + names.make(2) + ".cpp"), f.text);

    EvalCase c;
    c.task_id = task_id;
    c.level = level;
    c.repo_fixture = dir;
    c.environment.repo_root = dir;
    c.environment.cursor = at;
    c.query = "Complete " + entry + " using the " + join(query_words) + " rules.";
    c.verifier.kind = Verifier::Kind::needle_match;
    c.verifier.needle = needle;
    return c;
}

}  // namespace

GeneratedSuite generate_suite(const fs::path& out_dir, const SuiteOptions& options) {
    if (options.tasks_per_level == 0) throw EvalError("tasks_per_level must be positive");
    if (options.min_distractors > options.max_distractors) throw EvalError("min_distractors exceeds max_distractors");
    const fs::path root = fs::absolute(out_dir).lexically_normal();
    if (fs::exists(root / "tasks")) fs::remove_all(root / "tasks");

    GeneratedSuite suite;
    suite.rules.seed = options.seed;
    std::mt19937_64 rng(mix64(options.seed ^ 0x5eedULL));
    for (Level level : kLevels) {
        const std::string prefix = level == Level::class_runnable  ? "class"
                                   : level == Level::file_runnable ? "file"
                                                                   : "project";
        for (std::size_t i = 0; i < options.tasks_per_level; ++i) {
            char id[64];
            std::snprintf(id, sizeof id, "%s_%03zu", prefix.c_str(), i);
            auto c = make_task(root, id, level, rng, options);
            suite.rules.needles[c.task_id] = c.verifier.needle;
            suite.cases.push_back(std::move(c));
        }
    }
    suite.manifest = root / "manifest.jsonl";
    suite.mock_rules = root / "mock_rules.json";
    write_manifest(suite.cases, suite.manifest);
    write_file(suite.mock_rules, llm::mock_rules_to_json(suite.rules).dump(2) + "\n");
    return suite;
}

std::vector<training::TrainingExample> training_examples_for(const EvalCase& c, const dcsi::IndexSnapshot& snapshot) {
    if (c.verifier.needle.empty() || c.verifier.regex) return {};
    const dcsi::DocUnit* cursor_unit =
        c.environment.cursor ? snapshot.unit_at(c.environment.cursor->file, c.environment.cursor->line) : nullptr;
    for (const auto* unit : snapshot.doc_units()) {
        if (unit == cursor_unit) continue;
        if (snapshot.unit_text(*unit).find(c.verifier.needle) == std::string_view::npos) continue;
        training::TrainingExample ex;
        ex.input_text = cursor_unit ? std::string(snapshot.unit_text(*cursor_unit)) : std::string();
        ex.environment = c.environment;
        ex.positive_doc = unit->id;
        if (!c.query.empty()) ex.user_query = c.query;
        return {ex};
    }
    return {};
}

training::TrainResult train_on_cases(const std::vector<EvalCase>& cases, const PipelineSettings& settings,
                                     const training::TrainConfig& config, FixtureCache* cache) {
    FixtureCache local(settings.index);
    FixtureCache& fixtures = cache ? *cache : local;
    training::Problem problem;
    problem.fusion = settings.fusion;
    problem.dim = settings.params.H.dim();
    for (const auto& c : cases) {
        const auto snapshot = fixtures.get(c.environment.repo_root);
        const auto examples = training_examples_for(c, *snapshot);
        if (examples.empty()) continue;
        training::append_problem(problem, training::prepare_problem(*snapshot, examples, settings.fusion));
    }
    if (problem.examples.empty()) throw EvalError("no training examples in the given cases");
    return training::train_retrievers(problem, config, settings.params.H, settings.params.eta);
}

}  // namespace camp::eval
