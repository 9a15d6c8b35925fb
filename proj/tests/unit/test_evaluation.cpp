#include <doctest.h>

#include <bit>
#include <fstream>
#include <random>
#include <set>

#include "camp/evaluation.hpp"
#include "temp_dir.hpp"

using namespace camp;
using namespace camp::eval;
namespace fs = std::filesystem;

namespace {

const fs::path kFixtures = fs::path(CAMP_SOURCE_DIR) / "tests" / "fixtures";

double brute_force_pass_at_k(int n, int c, int k) {
    std::uint64_t hit = 0, total = 0;
    for (std::uint32_t mask = 0; mask < (1u << n); ++mask) {
        if (std::popcount(mask) != k) continue;
        ++total;
        hit += (mask & ((1u << c) - 1)) != 0;
    }
    return static_cast<double>(hit) / static_cast<double>(total);
}

EvalCase find_case(const std::vector<EvalCase>& cases, const std::string& id) {
    for (const auto& c : cases)
        if (c.task_id == id) return c;
    FAIL("no case " << id);
    return {};
}

llm::MockRules smoke_rules(double base_rate) {
    auto rules = llm::load_mock_rules(kFixtures / "smoke" / "mock_rules.json");
    rules.base_rate = base_rate;
    return rules;
}

class FailingBackend final : public llm::LlmBackend {
public:
    llm::GenerationResponse generate(const llm::GenerationRequest&) override {
        throw llm::TransportError("HTTP status 503");
    }
    std::string id() const override { return "failing"; }
};

}  // namespace

TEST_CASE("pass_at_k examples") {
    CHECK(pass_at_k(10, 10, 1) == 1.0);
    for (int k = 1; k <= 10; ++k) CHECK(pass_at_k(10, 0, k) == 0.0);
    CHECK(pass_at_k(5, 2, 2) == doctest::Approx(0.7).epsilon(1e-15));
    CHECK(pass_at_k(10, 1, 1) == doctest::Approx(0.1));
    CHECK_THROWS_AS(pass_at_k(5, 2, 6), EvalError);
    CHECK_THROWS_AS(pass_at_k(5, 6, 1), EvalError);
    CHECK_THROWS_AS(pass_at_k(5, -1, 1), EvalError);
    CHECK_THROWS_AS(pass_at_k(0, 0, 1), EvalError);
    CHECK_THROWS_AS(pass_at_k(5, 1, 0), EvalError);
}

TEST_CASE("pass_at_k agrees with subset enumeration") {
    for (int n = 1; n <= 12; ++n)
        for (int c = 0; c <= n; ++c) {
            double prev = 0.0;
            for (int k = 1; k <= n; ++k) {
                const double v = pass_at_k(n, c, k);
                CHECK(std::abs(v - brute_force_pass_at_k(n, c, k)) <= 1e-12);
                CHECK(v >= prev);
                prev = v;
            }
        }
}

TEST_CASE("names round trip") {
    for (auto l : kLevels) CHECK(level_from_string(to_string(l)) == l);
    for (auto m : kModels) {
        CHECK(model_from_string(to_string(m)) == m);
        CHECK(model_from_string(display_name(m)) == m);
    }
    CHECK(level_from_string("project") == Level::project_runnable);
    CHECK(model_from_string("File-Context") == ModelConfig::file_context);
    CHECK_THROWS_AS(level_from_string("module"), EvalError);
    CHECK_THROWS_AS(model_from_string("gpt"), EvalError);
}

TEST_CASE("needle verifier") {
    Verifier v;
    v.needle = "kzeta_1234";
    CHECK_FALSE(verify("", v));
    CHECK(verify("return kzeta_1234;", v));
    CHECK_FALSE(verify("return kzeta_123;", v));
    v.regex = true;
    v.needle = R"(return\s+k[a-z]+_\d{4};)";
    CHECK(verify("x\nreturn   kzeta_1234;", v));
    CHECK_FALSE(verify("return kzeta;", v));
    Verifier empty;
    CHECK_THROWS_AS(verify("x", empty), VerifierSetupError);
}

TEST_CASE("command verifier on the clamp fixture") {
    const auto cases = load_manifest(kFixtures / "clamp" / "manifest.jsonl");
    REQUIRE(cases.size() == 1);
    const auto& c = cases[0];
    CHECK(c.verifier.kind == Verifier::Kind::command_exec);
    CHECK(c.repo_fixture == (kFixtures / "clamp" / "repo").lexically_normal());

    std::ifstream ref_in(kFixtures / "clamp" / "reference.txt");
    const std::string reference((std::istreambuf_iterator<char>(ref_in)), {});
    const auto oracle = nlohmann::json::parse(std::ifstream(kFixtures / "clamp" / "mutations.json"));

    const auto ref = run_verifier(reference, c.verifier, c.repo_fixture);
    CHECK(ref.passed == oracle["reference_passes"].get<bool>());
    CHECK(ref.exit_code == 0);

    REQUIRE(oracle["mutations"].size() == 20);
    for (const auto& m : oracle["mutations"]) {
        const auto name = m["name"].get<std::string>();
        const auto outcome = run_verifier(m["sample"].get<std::string>(), c.verifier, c.repo_fixture);
        INFO(name);
        CHECK(outcome.passed == m["passes"].get<bool>());
        if (name == "infinite_loop") CHECK(outcome.timed_out);
    }

    std::ifstream untouched(c.repo_fixture / "solution.py");
    const std::string original((std::istreambuf_iterator<char>(untouched)), {});
    CHECK(original.find("# <<SOLUTION>>") != std::string::npos);
    CHECK_FALSE(fs::exists(c.repo_fixture / "__pycache__"));
}

TEST_CASE("command verifier setup failures") {
    const auto cases = load_manifest(kFixtures / "clamp" / "manifest.jsonl");
    auto v = cases[0].verifier;
    CHECK_THROWS_AS(run_verifier("x", v, kFixtures / "clamp" / "absent"), VerifierSetupError);
    v.command.marker = "# <<NOT THERE>>";
    CHECK_THROWS_AS(run_verifier("x", v, cases[0].repo_fixture), VerifierSetupError);
    v = cases[0].verifier;
    v.command.file = "missing.py";
    CHECK_THROWS_AS(run_verifier("x", v, cases[0].repo_fixture), VerifierSetupError);
}

TEST_CASE("manifest parsing") {
    testing::TempDir dir;
    const auto good = R"({"task_id":"a","level":"class_runnable","repo_fixture":"r","environment":{},"query":"q","verifier":{"kind":"needle_match","needle":"n"}})";
    testing::write_file(dir / "good.jsonl", std::string(good) + "\n\n");
    const auto cases = load_manifest(dir / "good.jsonl");
    REQUIRE(cases.size() == 1);
    CHECK(cases[0].repo_fixture == dir.path() / "r");
    CHECK(cases[0].environment.repo_root == dir.path() / "r");

    write_manifest(cases, dir / "again.jsonl");
    const auto again = load_manifest(dir / "again.jsonl");
    REQUIRE(again.size() == 1);
    CHECK(case_to_json(again[0], dir.path()) == case_to_json(cases[0], dir.path()));

    auto expect_error = [&](const std::string& body, const std::string& fragment) {
        testing::write_file(dir / "bad.jsonl", body);
        try {
            load_manifest(dir / "bad.jsonl");
            FAIL("expected a manifest error for " << body);
        } catch (const EvalError& e) {
            CHECK(std::string(e.what()).find(fragment) != std::string::npos);
        }
    };
    expect_error(std::string(good) + "\n" + good + "\n", "duplicate task_id a");
    expect_error("{not json\n", "bad.jsonl:1");
    expect_error(R"({"task_id":"a","level":"module","repo_fixture":"r","query":"q","verifier":{"kind":"needle_match","needle":"n"}})",
                 "unknown level");
    expect_error(R"({"task_id":"a","level":"class_runnable","repo_fixture":"r","query":"q","verifier":{"kind":"docker"}})",
                 "unknown verifier kind");
    expect_error(R"({"level":"class_runnable","repo_fixture":"r","query":"q","verifier":{"kind":"needle_match","needle":"n"}})",
                 "malformed case");
    CHECK_THROWS_AS(load_manifest(dir / "nope.jsonl"), EvalError);
}

TEST_CASE("project needle is reached only through retrieval") {
    const auto cases = load_manifest(kFixtures / "smoke" / "manifest.jsonl");
    const auto task = find_case(cases, "project_000");
    PipelineSettings settings;
    RunOptions options;
    options.seed = 4;
    FixtureCache cache;

    llm::MockBackend strict(smoke_rules(0.0));
    const auto camp = run_config(ModelConfig::camp, {task}, strict, settings, options, &cache);
    CHECK(camp.cell(ModelConfig::camp, Level::project_runnable, 1)->pass_at_k == 1.0);
    const auto cloud = run_config(ModelConfig::cloud_only, {task}, strict, settings, options, &cache);
    CHECK(cloud.cell(ModelConfig::cloud_only, Level::project_runnable, 1)->pass_at_k == 0.0);
    REQUIRE(cloud.tasks.size() == 1);
    CHECK(cloud.tasks[0].retrieved.empty());
    CHECK_FALSE(camp.tasks[0].retrieved.empty());

    llm::MockBackend lenient(smoke_rules(0.05));
    double sum = 0;
    const int runs = 400;
    for (int s = 0; s < runs; ++s) {
        options.seed = static_cast<std::uint64_t>(s);
        sum += run_config(ModelConfig::cloud_only, {task}, lenient, settings, options, &cache)
                   .cell(ModelConfig::cloud_only, Level::project_runnable, 1)
                   ->pass_at_k;
    }
    CHECK(std::abs(sum / runs - 0.05) < 0.015);
}

TEST_CASE("pipeline prompts per configuration") {
    const auto cases = load_manifest(kFixtures / "smoke" / "manifest.jsonl");
    const auto task = find_case(cases, "project_000");
    FixtureCache cache;
    const auto snap = cache.get(task.repo_fixture);
    PipelineSettings settings;

    const auto cloud = build_prompt(ModelConfig::cloud_only, *snap, task.environment, task.query, settings);
    CHECK(cloud.retrieved.empty());
    REQUIRE(cloud.messages.size() == 2);
    CHECK(cloud.messages[0].content == task.query);
    CHECK(cloud.messages[1].content == settings.system_prompt);

    const auto file = build_prompt(ModelConfig::file_context, *snap, task.environment, task.query, settings);
    for (const auto& id : file.retrieved) CHECK(id.starts_with(task.environment.cursor->file + "@"));

    const auto full = build_prompt(ModelConfig::camp, *snap, task.environment, task.query, settings);
    CHECK(full.retrieved.size() <= settings.k);
    CHECK(full.plan.total_tokens <= settings.budget);
    bool has_context = false;
    for (const auto& c : full.plan.ordered) has_context |= c.kind == prompt::ComponentKind::context_system_prompt;
    CHECK(has_context);

    const auto base = build_prompt(ModelConfig::base_rag, *snap, task.environment, task.query, settings);
    for (const auto& c : base.plan.ordered) CHECK(c.kind != prompt::ComponentKind::context_system_prompt);

    PipelineSettings wrong = settings;
    wrong.params = retrieval::LearnedParams::initial(16);
    CHECK_THROWS_AS(build_prompt(ModelConfig::camp, *snap, task.environment, task.query, wrong), EvalError);
}

TEST_CASE("full run: monotone, deterministic and worker independent") {
    const auto cases = load_manifest(kFixtures / "smoke" / "manifest.jsonl");
    llm::MockBackend mock(smoke_rules(0.3));
    PipelineSettings settings;
    RunOptions options;
    options.seed = 9;
    const std::vector<ModelConfig> models(kModels.begin(), kModels.end());

    const auto a = run_configs(models, cases, mock, settings, options);
    const auto b = run_configs(models, cases, mock, settings, options);
    options.workers = 4;
    const auto c = run_configs(models, cases, mock, settings, options);
    CHECK(report_to_json(a).dump() == report_to_json(b).dump());
    CHECK(report_to_json(a).dump() == report_to_json(c).dump());
    CHECK(a.cells.size() == 4 * 3 * 3);
    CHECK(a.tasks.size() == 12);

    for (auto m : kModels)
        for (auto l : kLevels) {
            const double p1 = a.cell(m, l, 1)->pass_at_k, p5 = a.cell(m, l, 5)->pass_at_k,
                         p10 = a.cell(m, l, 10)->pass_at_k;
            CHECK(p1 <= p5);
            CHECK(p5 <= p10);
            CHECK(p1 >= 0.0);
            CHECK(p10 <= 1.0);
        }

    const auto j = report_to_json(a);
    CHECK(j["n"] == 10);
    CHECK_FALSE(j.contains("wall_seconds"));
    CHECK(report_to_json(a, true).contains("wall_seconds"));

    const auto csv = report_to_csv(a);
    CHECK(csv.starts_with("model,level,k,pass_at_k,tasks\n"));
    CHECK(std::count(csv.begin(), csv.end(), '\n') == 1 + 36);

    const auto table = render_table(a);
    CHECK(table.find("CloudOnly") != std::string::npos);
    CHECK(table.find("project-runnable") != std::string::npos);
    CHECK(table.find("21.91%") != std::string::npos);
    CHECK(reference_pass_at_k(ModelConfig::camp, Level::project_runnable, 1) == 21.91);
    CHECK_FALSE(reference_pass_at_k(ModelConfig::camp, Level::project_runnable, 2).has_value());

    RunOptions bad = options;
    bad.ks = {11};
    CHECK_THROWS_AS(run_configs(models, cases, mock, settings, bad), EvalError);
}

TEST_CASE("skipped fixtures and failing backends") {
    auto cases = load_manifest(kFixtures / "smoke" / "manifest.jsonl");
    auto ghost = cases[0];
    ghost.task_id = "ghost";
    ghost.repo_fixture = kFixtures / "smoke" / "tasks" / "ghost";
    ghost.environment.repo_root = ghost.repo_fixture;
    cases.push_back(ghost);

    llm::MockBackend mock(smoke_rules(0.0));
    PipelineSettings settings;
    RunOptions options;
    const auto r = run_config(ModelConfig::camp, cases, mock, settings, options);
    CHECK(r.tasks.size() == 3);
    bool mentioned = false;
    for (const auto& d : r.diagnostics) mentioned |= d.find("ghost") != std::string::npos;
    CHECK(mentioned);
    CHECK(r.cell(ModelConfig::camp, Level::class_runnable, 1)->tasks == 1);
    CHECK(r.cell(ModelConfig::camp, Level::class_runnable, 1)->pass_at_k == 1.0);

    cases.pop_back();
    FailingBackend failing;
    const auto f = run_config(ModelConfig::camp, cases, failing, settings, options);
    REQUIRE(f.tasks.size() == 3);
    for (const auto& t : f.tasks) {
        CHECK(t.c == 0);
        CHECK(t.failed_samples == t.n);
    }
    CHECK(f.diagnostics.size() == 3);
    CHECK(f.cell(ModelConfig::camp, Level::project_runnable, 10)->pass_at_k == 0.0);
}

TEST_CASE("generated suite shapes") {
    testing::TempDir dir;
    SuiteOptions opts;
    opts.tasks_per_level = 2;
    opts.seed = 42;
    const auto suite = generate_suite(dir.path(), opts);
    CHECK(suite.cases.size() == 6);
    CHECK(fs::exists(suite.manifest));
    CHECK(fs::exists(suite.mock_rules));
    CHECK(load_manifest(suite.manifest).size() == 6);
    CHECK(llm::load_mock_rules(suite.mock_rules).needles == suite.rules.needles);

    FixtureCache cache;
    for (const auto& c : suite.cases) {
        const auto& needle = c.verifier.needle;
        const auto snap = cache.get(c.repo_fixture);
        std::set<std::string> files_with_needle;
        for (const auto& [path, file] : snap->files())
            if (file->text.find(needle) != std::string::npos) files_with_needle.insert(path);
        REQUIRE(files_with_needle.size() == 1);
        const bool same_file = *files_with_needle.begin() == c.environment.cursor->file;
        if (c.level == Level::project_runnable) {
            CHECK_FALSE(same_file);
        } else {
            CHECK(same_file);
        }
        const bool in_cursor_unit = enclosing_unit_text(*snap, c.environment).find(needle) != std::string::npos;
        CHECK(in_cursor_unit == (c.level == Level::class_runnable));
        const auto examples = training_examples_for(c, *snap);
        CHECK(examples.empty() == in_cursor_unit);
        if (!examples.empty()) CHECK(snap->find_unit(examples[0].positive_doc) != nullptr);
    }

    const auto again = generate_suite(dir.path() / "again", opts);
    CHECK(again.rules.needles == suite.rules.needles);
}
