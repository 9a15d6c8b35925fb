#include <doctest.h>

#include <cmath>
#include <random>
#include <thread>

#include "camp/content_retriever.hpp"
#include "camp/learned_params.hpp"
#include "reference_svd.hpp"
#include "synthetic_repo.hpp"
#include "temp_dir.hpp"

using namespace camp;
using namespace camp::retrieval;
using camp::testing::TempDir;

namespace {

dcsi::EmbeddingVector basis(std::size_t d, std::size_t i) {
    std::vector<double> v(d, 0.0);
    v[i] = 1.0;
    return dcsi::EmbeddingVector::from_unit(v);
}

dcsi::EmbeddingVector random_unit(std::mt19937_64& rng, std::size_t d) {
    std::normal_distribution<double> g;
    std::vector<double> v(d);
    for (double& x : v) x = g(rng);
    return dcsi::EmbeddingVector::normalized(v);
}

Eigen::MatrixXd random_matrix(std::mt19937_64& rng, Eigen::Index r, Eigen::Index c, double scale = 1.0) {
    std::normal_distribution<double> g(0.0, scale);
    Eigen::MatrixXd m(r, c);
    for (Eigen::Index i = 0; i < r; ++i)
        for (Eigen::Index j = 0; j < c; ++j) m(i, j) = g(rng);
    return m;
}

// Full score list in long double, normalized without a max shift.
std::vector<long double> oracle_softmax(const Eigen::MatrixXd& H, const Eigen::VectorXd& q,
                                        const std::vector<dcsi::EmbeddingVector>& docs) {
    std::vector<long double> e;
    long double z = 0;
    for (const auto& d : docs) {
        long double s = 0;
        for (Eigen::Index i = 0; i < H.rows(); ++i)
            for (Eigen::Index j = 0; j < H.cols(); ++j)
                s += static_cast<long double>(d[static_cast<std::size_t>(i)]) * H(i, j) * q[j];
        e.push_back(std::exp(s));
        z += e.back();
    }
    for (auto& x : e) x /= z;
    return e;
}

std::map<std::string, std::string> rare_identifier_repo() {
    return {
        {"src/a.cpp", "int alpha(int v) {\n  return v + 1;\n}\n\nint beta(int v) {\n  return v * 2;\n}\n"},
        {"src/b.cpp", "int gamma_fn(int v) {\n  int zebraquux = v;\n  return zebraquux;\n}\n\nint delta(int v) {\n  return v - 1;\n}\n"},
        {"src/c.cpp", "int epsilon(int v) {\n  return alpha(v);\n}\n"},
    };
}

std::size_t rank_of(const RetrievalResult& r, std::string_view id) {
    for (std::size_t i = 0; i < r.items.size(); ++i)
        if (r.items[i].unit->id == id) return i;
    return r.items.size();
}

}  // namespace

TEST_CASE("identity H on orthonormal candidates gives the closed-form softmax") {
    const std::vector<dcsi::EmbeddingVector> docs = {basis(4, 1), basis(4, 2)};
    const auto p = score(HeuristicMatrix::identity(4), basis(4, 1), docs);
    const double e = std::exp(1.0);
    CHECK(p[0] == doctest::Approx(e / (e + 1)).epsilon(1e-15));
    CHECK(p[1] == doctest::Approx(1 / (e + 1)).epsilon(1e-15));
    CHECK(p[0] == doctest::Approx(0.7311).epsilon(1e-4));
}

TEST_CASE("zero H gives a uniform distribution") {
    std::mt19937_64 rng(2);
    std::vector<dcsi::EmbeddingVector> docs;
    for (int i = 0; i < 7; ++i) docs.push_back(random_unit(rng, 9));
    for (double p : score(HeuristicMatrix::zero(9), random_unit(rng, 9), docs)) CHECK(p == doctest::Approx(1.0 / 7).epsilon(1e-15));
}

TEST_CASE("softmax matches an extended-precision oracle") {
    std::mt19937_64 rng(8);
    for (int trial = 0; trial < 50; ++trial) {
        const std::size_t d = 4 + rng() % 12;
        std::vector<dcsi::EmbeddingVector> docs;
        for (int i = 0; i < 10; ++i) docs.push_back(random_unit(rng, d));
        const Eigen::MatrixXd H = random_matrix(rng, static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(d), 2.0);
        const Eigen::VectorXd q = random_unit(rng, d).as_eigen();
        const auto p = score(HeuristicMatrix(H), q, docs);
        const auto o = oracle_softmax(H, q, docs);
        double sum = 0.0;
        for (std::size_t i = 0; i < p.size(); ++i) {
            CHECK(std::fabs(p[i] - static_cast<double>(o[i])) <= 1e-12);
            sum += p[i];
        }
        CHECK(sum == doctest::Approx(1.0).epsilon(1e-9));
    }
}

TEST_CASE("softmax is invariant to a common score shift and stable for large scores") {
    // Every candidate has first coordinate 0.6, so adding c * e1 q^T / |q|^2 to H
    // shifts every score by 0.6 c.
    std::vector<dcsi::EmbeddingVector> docs;
    for (int i = 0; i < 6; ++i) {
        const double t = 0.9 * i;
        docs.push_back(dcsi::EmbeddingVector::from_unit({0.6, 0.8 * std::cos(t), 0.8 * std::sin(t)}));
    }
    std::mt19937_64 rng(4);
    const Eigen::MatrixXd H = random_matrix(rng, 3, 3);
    const Eigen::VectorXd q = random_unit(rng, 3).as_eigen();
    const auto base = score(HeuristicMatrix(H), q, docs);
    for (double c : {1.0, -30.0, 2000.0}) {
        Eigen::MatrixXd shifted = H;
        shifted.row(0) += c * q.transpose() / q.squaredNorm();
        const auto p = score(HeuristicMatrix(shifted), q, docs);
        for (std::size_t i = 0; i < p.size(); ++i) {
            CHECK(std::isfinite(p[i]));
            CHECK(std::fabs(p[i] - base[i]) <= 1e-12);
        }
    }
}

TEST_CASE("scaling H preserves the ranking") {
    std::mt19937_64 rng(12);
    std::vector<dcsi::EmbeddingVector> docs;
    for (int i = 0; i < 12; ++i) docs.push_back(random_unit(rng, 6));
    const Eigen::MatrixXd H = random_matrix(rng, 6, 6);
    const auto q = random_unit(rng, 6);
    auto ranking = [&](double lambda) {
        const auto p = score(HeuristicMatrix(lambda * H), q, docs);
        std::vector<std::size_t> idx(p.size());
        std::iota(idx.begin(), idx.end(), 0);
        std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return p[a] > p[b]; });
        return idx;
    };
    const auto r1 = ranking(1.0);
    CHECK(ranking(0.25) == r1);
    CHECK(ranking(3.0) == r1);
}

TEST_CASE("dimension mismatches and empty candidate lists are errors") {
    const std::vector<dcsi::EmbeddingVector> docs = {basis(4, 0)};
    CHECK_THROWS_AS(score(HeuristicMatrix::identity(5), basis(5, 0), docs), RetrievalError);
    CHECK_THROWS_AS(score(HeuristicMatrix::identity(4), basis(5, 0), docs), RetrievalError);
    CHECK_THROWS_WITH_AS(score(HeuristicMatrix::identity(4), basis(4, 0), {}), "no candidate documents", RetrievalError);
}

TEST_CASE("heuristic matrix caches its nuclear norm") {
    std::mt19937_64 rng(21);
    for (int trial = 0; trial < 10; ++trial) {
        const Eigen::MatrixXd m = random_matrix(rng, 12, 12);
        HeuristicMatrix H(m);
        CHECK(H.nuclear_norm() == doctest::Approx(static_cast<double>(camp::testing::reference_nuclear_norm(m))).epsilon(1e-10));
        const Eigen::MatrixXd m2 = random_matrix(rng, 12, 12);
        H.set(m2);
        CHECK(H.nuclear_norm() == doctest::Approx(static_cast<double>(camp::testing::reference_nuclear_norm(m2))).epsilon(1e-10));
    }
    CHECK(HeuristicMatrix::identity(7, 2.0).nuclear_norm() == doctest::Approx(14.0));
    CHECK(HeuristicMatrix::zero(3).nuclear_norm() == 0.0);
    CHECK_THROWS(HeuristicMatrix(Eigen::MatrixXd::Ones(2, 3)));
    Eigen::MatrixXd bad = Eigen::MatrixXd::Identity(2, 2);
    bad(0, 1) = std::nan("");
    CHECK_THROWS(HeuristicMatrix(bad));
}

TEST_CASE("rare identifier ranks first under identity H") {
    const auto snap = dcsi::build_index_from_sources(rare_identifier_repo(), {});
    const auto r = retrieve(snap, context::ContextVector::none(snap.config().d_emb), "use zebraquux here",
                            std::nullopt, HeuristicMatrix::identity(snap.config().d_emb));
    REQUIRE(!r.items.empty());
    CHECK(r.items[0].unit->declaration == "gamma_fn");

    // Oracle: exact cosine ranking of the composed query.
    const Eigen::VectorXd q = r.query;
    double best = -1e300;
    std::string best_id;
    for (const auto* u : snap.doc_units()) {
        const double s = u->embedding.as_eigen().dot(q);
        if (s > best) {
            best = s;
            best_id = u->id;
        }
    }
    CHECK(r.items[0].unit->id == best_id);
}

TEST_CASE("results are sorted, complete for large K and prefix consistent") {
    const auto files = camp::testing::synthetic_repo(5, 5);
    const auto snap = dcsi::build_index_from_sources(files, {});
    const auto d = snap.config().d_emb;
    const auto ctx = context::ContextVector::none(d);
    RetrieveOptions all;
    all.k = 1000;
    const auto full = retrieve(snap, ctx, "int total = fn_1_0(value);", std::string("ledger"), HeuristicMatrix::identity(d), all);
    CHECK(full.items.size() == snap.unit_count());
    CHECK(full.candidate_count == snap.unit_count());
    double sum = 0.0;
    for (std::size_t i = 0; i < full.items.size(); ++i) {
        sum += full.items[i].probability;
        CHECK(full.items[i].probability > 0.0);
        if (i > 0) {
            const auto& a = full.items[i - 1];
            const auto& b = full.items[i];
            CHECK((a.probability > b.probability || (a.probability == b.probability && a.unit->id < b.unit->id)));
        }
    }
    CHECK(sum == doctest::Approx(1.0).epsilon(1e-9));
    for (std::size_t k : {1u, 3u, 5u}) {
        RetrieveOptions o;
        o.k = k;
        const auto part = retrieve(snap, ctx, "int total = fn_1_0(value);", std::string("ledger"), HeuristicMatrix::identity(d), o);
        REQUIRE(part.items.size() == k);
        for (std::size_t i = 0; i < k; ++i) CHECK(part.items[i].unit == full.items[i].unit);
        CHECK(part.query_digest == full.query_digest);
    }
}

TEST_CASE("context pointing at a file improves its units' rank") {
    const auto snap = dcsi::build_index_from_sources(rare_identifier_repo(), {});
    const auto d = snap.config().d_emb;
    const auto* target = snap.find_unit("src/b.cpp@1");
    REQUIRE(target != nullptr);
    const std::vector<context::ContextSignal> signals = {
        {context::ContextSource::index_information, nlohmann::json::object(), target->embedding}};
    const std::vector<double> w = {1.0};
    const auto ctx = context::aggregate(signals, w);
    RetrieveOptions o;
    o.k = 100;
    const auto H = HeuristicMatrix::identity(d);
    const auto without = retrieve(snap, context::ContextVector::none(d), "return alpha(v);", std::nullopt, H, o);
    const auto with = retrieve(snap, ctx, "return alpha(v);", std::nullopt, H, o);
    CHECK(rank_of(with, target->id) < rank_of(without, target->id));

    // Recompute both score lists by hand.
    const Eigen::VectorXd x = dcsi::embed(snap, "return alpha(v);").as_eigen();
    const Eigen::VectorXd q_with = (0.5 * x + 0.3 * target->embedding.as_eigen()) / 0.8;
    for (const auto& item : with.items) CHECK(item.score == doctest::Approx(item.unit->embedding.as_eigen().dot(q_with)).epsilon(1e-12));
    for (const auto& item : without.items) CHECK(item.score == doctest::Approx(item.unit->embedding.as_eigen().dot(x)).epsilon(1e-12));
}

TEST_CASE("cursor unit is excluded and file restriction applies") {
    const auto snap = dcsi::build_index_from_sources(rare_identifier_repo(), {});
    const auto d = snap.config().d_emb;
    context::ContextVector ctx = context::ContextVector::none(d);
    ctx.cursor_unit = "src/b.cpp@0";
    RetrieveOptions o;
    o.k = 100;
    const auto r = retrieve(snap, ctx, "zebraquux", std::nullopt, HeuristicMatrix::identity(d), o);
    for (const auto& item : r.items) CHECK(item.unit->id != "src/b.cpp@0");
    CHECK(r.candidate_count == snap.unit_count() - 1);

    o.exclude_cursor_unit = false;
    o.restrict_to_file = "src/b.cpp";
    const auto scoped = retrieve(snap, ctx, "zebraquux", std::nullopt, HeuristicMatrix::identity(d), o);
    CHECK(scoped.candidate_count == 2);
    CHECK(scoped.items[0].unit->id == "src/b.cpp@0");
}

TEST_CASE("empty query, bad K and dimension mismatch are rejected") {
    const auto snap = dcsi::build_index_from_sources(rare_identifier_repo(), {});
    const auto d = snap.config().d_emb;
    const auto none = context::ContextVector::none(d);
    CHECK_THROWS_WITH_AS(retrieve(snap, none, "", std::nullopt, HeuristicMatrix::identity(d)), "empty retrieval query",
                         RetrievalError);
    CHECK_THROWS_WITH_AS(retrieve(snap, none, "  ", std::string(""), HeuristicMatrix::identity(d)),
                         "empty retrieval query", RetrievalError);
    RetrieveOptions zero;
    zero.k = 0;
    CHECK_THROWS(retrieve(snap, none, "alpha", std::nullopt, HeuristicMatrix::identity(d), zero));
    CHECK_THROWS_AS(retrieve(snap, none, "alpha", std::nullopt, HeuristicMatrix::identity(d + 1)), RetrievalError);
    RetrieveOptions elsewhere;
    elsewhere.restrict_to_file = "src/absent.cpp";
    CHECK_THROWS_WITH_AS(retrieve(snap, none, "alpha", std::nullopt, HeuristicMatrix::identity(d), elsewhere),
                         "no candidate documents", RetrievalError);
}

TEST_CASE("query digest depends on every query part") {
    const auto snap = dcsi::build_index_from_sources(rare_identifier_repo(), {});
    const auto d = snap.config().d_emb;
    const auto none = context::ContextVector::none(d);
    const auto H = HeuristicMatrix::identity(d);
    const auto a = retrieve(snap, none, "alpha", std::nullopt, H).query_digest;
    CHECK(a.size() == 64);
    CHECK(retrieve(snap, none, "alpha", std::nullopt, H).query_digest == a);
    CHECK(retrieve(snap, none, "alpha", std::string("beta"), H).query_digest != a);
    CHECK(retrieve(snap, none, "alpha", std::string(""), H).query_digest != a);
    CHECK(retrieve(snap, none, "alphb", std::nullopt, H).query_digest != a);
}

TEST_CASE("learned parameters round trip and detect corruption") {
    TempDir dir;
    std::mt19937_64 rng(31);
    LearnedParams p = LearnedParams::initial(16);
    CHECK(p.H.values().isApprox(0.1 * Eigen::MatrixXd::Identity(16, 16)));
    for (double e : p.eta) CHECK(e == 0.25);
    p.H.set(random_matrix(rng, 16, 16));
    p.eta = {0.1, 0.2, 0.3, 0.4};
    p.theta = {"system_prompt", "context_system_prompt", "retrieved_content", "message_history", "new_message"};
    p.metadata["iterations"] = "12";
    const auto path = dir / "params.bin";
    save_params(p, path);
    const auto q = load_params(path);
    CHECK(q.H.values() == p.H.values());
    CHECK(q.eta == p.eta);
    CHECK(q.theta == p.theta);
    CHECK(q.metadata == p.metadata);
    CHECK(q.H.nuclear_norm() == doctest::Approx(p.H.nuclear_norm()));

    auto bytes = camp::testing::read_file(path);
    for (std::size_t pos : {std::size_t{3}, std::size_t{20}, bytes.size() / 2, bytes.size() - 1}) {
        auto corrupt = bytes;
        corrupt[pos] = static_cast<char>(corrupt[pos] ^ 0x5a);
        camp::testing::write_file(dir / "bad.bin", corrupt);
        CHECK_THROWS(load_params(dir / "bad.bin"));
    }
    camp::testing::write_file(dir / "short.bin", bytes.substr(0, bytes.size() / 3));
    CHECK_THROWS(load_params(dir / "short.bin"));
    CHECK_THROWS(load_params(dir / "absent.bin"));
}

TEST_CASE("parameter store readers always see a whole snapshot") {
    ParameterStore store(std::make_shared<const LearnedParams>(LearnedParams::initial(4)));
    std::atomic<bool> stop{false};
    std::atomic<int> torn{0};
    std::jthread reader([&] {
        while (!stop) {
            const auto p = store.current();
            const double h = p->H.values()(0, 0);
            for (Eigen::Index i = 0; i < 4; ++i)
                if (p->H.values()(i, i) != h) ++torn;
        }
    });
    for (int v = 1; v <= 500; ++v) {
        auto p = std::make_shared<LearnedParams>(LearnedParams::initial(4));
        p->H.set(static_cast<double>(v) * Eigen::MatrixXd::Identity(4, 4));
        store.publish(std::move(p));
    }
    stop = true;
    reader.join();
    CHECK(torn == 0);
    CHECK(store.current()->H.values()(3, 3) == 500.0);
}
