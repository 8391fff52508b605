#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>
#include <set>

#include "support.hpp"
#include "vizsig/topics.hpp"

using namespace vizsig;
using namespace vizsig::topics;

namespace {

FigureMeta caption(const std::string& id, const std::string& text, int year = 2015) {
    FigureMeta f;
    f.figure_id = id;
    f.paper_id = "p-" + id;
    f.field = FieldLabel("cs");
    f.year = year;
    if (!text.empty()) f.caption = text;
    return f;
}

}  // namespace

TEST_CASE("tf-idf by hand") {
    const std::vector<FigureMeta> figs = {caption("a", "neural net neural"), caption("b", "net plot"), caption("c", "")};
    const auto tdm = build_term_doc(figs);
    CHECK(tdm.vocabulary == std::vector<std::string>{"net", "neural", "plot"});
    CHECK(tdm.dropped_docs == std::vector<std::string>{"c"});
    REQUIRE(tdm.doc_ids == std::vector<std::string>{"a", "b"});
    // "net" occurs in both docs: idf 0. "neural": tf 2, idf ln 2. "plot": tf 1, idf ln 2.
    CHECK(tdm.weights(0, 0) == 0.0);
    CHECK(tdm.weights(0, 1) == doctest::Approx(1.0));
    CHECK(tdm.weights(1, 2) == doctest::Approx(1.0));
    for (Eigen::Index d = 0; d < tdm.weights.rows(); ++d) CHECK(tdm.weights.row(d).norm() == doctest::Approx(1.0));
}

TEST_CASE("tf-idf general values") {
    const std::vector<FigureMeta> figs = {caption("a", "xx yy yy"), caption("b", "yy zz"), caption("c", "zz")};
    const auto tdm = build_term_doc(figs);
    // doc a: x -> 1*ln3, y -> 2*ln(3/2)
    const double x = std::log(3.0), y = 2 * std::log(1.5);
    const double n = std::hypot(x, y);
    CHECK(tdm.weights(0, 0) == doctest::Approx(x / n).epsilon(1e-12));
    CHECK(tdm.weights(0, 1) == doctest::Approx(y / n).epsilon(1e-12));
}

TEST_CASE("degenerate idf") {
    const std::vector<FigureMeta> one = {caption("a", "loss curve loss")};
    CHECK_THROWS_AS(build_term_doc(one), Error);
    const auto tdm = build_term_doc(one, TermDocOptions{true});
    CHECK(tdm.raw_tf_fallback);
    CHECK(tdm.weights(0, 1) == doctest::Approx(2.0 / std::sqrt(5.0)));
    const std::vector<FigureMeta> empty = {caption("a", ""), caption("b", "!!")};
    CHECK_THROWS_AS(build_term_doc(empty), Error);
}

TEST_CASE("nmf objective is non-increasing") {
    std::mt19937 gen(3);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int trial = 0; trial < 10; ++trial) {
        Eigen::MatrixXd v(30, 20);
        for (Eigen::Index i = 0; i < v.size(); ++i) v(i) = u(gen);
        NmfOptions o;
        o.topics = 4;
        o.seed = static_cast<std::uint64_t>(trial);
        o.max_iter = 200;
        o.tol = 0;
        const auto m = nmf_fit(v, o);
        CHECK(m.objective_trace.size() == 201);
        CHECK(m.iterations == 200);
        for (std::size_t i = 1; i < m.objective_trace.size(); ++i)
            CHECK(m.objective_trace[i] <= m.objective_trace[i - 1] * (1 + 1e-12) + 1e-12);
        CHECK((m.w.array() >= 0).all());
        CHECK((m.h.array() >= 0).all());
        CHECK(m.objective_trace.back() == doctest::Approx(frobenius_objective(v, m.w, m.h)));
    }
}

TEST_CASE("nmf recovers an exact rank-one matrix") {
    Eigen::VectorXd a(5), b(4);
    a << 1, 2, 3, 0.5, 4;
    b << 0.3, 1, 2, 0.1;
    const Eigen::MatrixXd v = a * b.transpose();
    NmfOptions o;
    o.topics = 1;
    o.max_iter = 2000;
    o.tol = 1e-12;
    const auto m = nmf_fit(v, o);
    CHECK(frobenius_objective(v, m.w, m.h) / v.norm() <= 1e-3);
}

TEST_CASE("nmf is seeded") {
    Eigen::MatrixXd v = Eigen::MatrixXd::Random(10, 8).cwiseAbs();
    NmfOptions o;
    o.topics = 3;
    o.seed = 9;
    const auto a = nmf_fit(v, o);
    const auto b = nmf_fit(v, o);
    CHECK(a.w == b.w);
    CHECK(a.h == b.h);
}

TEST_CASE("nmf errors") {
    Eigen::MatrixXd v = Eigen::MatrixXd::Ones(3, 4);
    NmfOptions o;
    o.topics = 4;
    CHECK_THROWS_AS(nmf_fit(v, o), Error);
    o.topics = 0;
    CHECK_THROWS_AS(nmf_fit(v, o), Error);
    o.topics = 2;
    v(0, 0) = -1;
    CHECK_THROWS_AS(nmf_fit(v, o), Error);
    v(0, 0) = std::nan("");
    CHECK_THROWS_AS(nmf_fit(v, o), Error);
    v(0, 0) = 1;
    o.max_iter = 0;
    CHECK_THROWS_AS(nmf_fit(v, o), Error);
}

TEST_CASE("planted two-topic corpus") {
    std::vector<FigureMeta> figs;
    std::mt19937 gen(5);
    const std::vector<std::string> g1 = {"layer", "neuron", "relu", "softmax"};
    const std::vector<std::string> g2 = {"tsne", "cluster", "umap", "projection"};
    for (int i = 0; i < 60; ++i) {
        const auto& g = i % 2 ? g2 : g1;
        std::string text;
        for (int t = 0; t < 8; ++t) text += g[gen() % 4] + " ";
        figs.push_back(caption("f" + std::to_string(i), text, 2010 + i % 3));
    }
    const auto tdm = build_term_doc(figs);
    NmfOptions o;
    o.topics = 2;
    o.seed = 1;
    o.max_iter = 500;
    const auto m = nmf_fit(tdm, o);
    std::set<std::string> s1(g1.begin(), g1.end()), s2(g2.begin(), g2.end());
    for (std::size_t t = 0; t < 2; ++t) {
        const auto kw = top_keywords(m, tdm.vocabulary, t, 4);
        const std::set<std::string> got(kw.begin(), kw.end());
        CHECK((got == s1 || got == s2));
    }
    const auto dom = dominant_topics(m);
    for (std::size_t d = 2; d < dom.size(); ++d) CHECK((dom[d] == dom[d % 2]));
    CHECK(dom[0] != dom[1]);

    const auto share = topic_share_by_year(m, tdm.doc_years);
    CHECK(share.size() == 3);
    for (const auto& [year, r] : share) CHECK(r[0] + r[1] == doctest::Approx(1.0));

    const auto dir = testing::scratch("topics");
    write_topic_report(m, tdm, 3, dir / "t.csv", {"seed=1"});
    const auto text = testing::slurp(dir / "t.csv");
    CHECK(text.rfind("# seed=1\ntopic,keywords,exemplars,2010,2011,2012\n", 0) == 0);
}

TEST_CASE("top keywords ties and errors") {
    TopicModel m;
    m.w = Eigen::MatrixXd::Ones(2, 1);
    m.h.resize(1, 4);
    m.h << 1, 2, 2, 0;
    const std::vector<std::string> vocab = {"d", "c", "b", "a"};
    CHECK(top_keywords(m, vocab, 0, 3) == std::vector<std::string>{"b", "c", "d"});
    CHECK_THROWS_AS(top_keywords(m, vocab, 1, 1), Error);
    CHECK_THROWS_AS(top_keywords(m, vocab, 0, 5), Error);
    const std::vector<std::string> short_vocab = {"a"};
    CHECK_THROWS_AS(top_keywords(m, short_vocab, 0, 1), Error);
}

TEST_CASE("share by year uses hard assignment") {
    TopicModel m;
    m.w.resize(4, 2);
    m.w << 1, 0,
           0, 1,
           0.5, 0.5,
           0.2, 0.9;
    const std::vector<int> years = {2000, 2000, 2001, 2001};
    const auto s = topic_share_by_year(m, years);
    CHECK(s.at(2000) == std::vector<double>{0.5, 0.5});
    CHECK(s.at(2001) == std::vector<double>{0.5, 0.5});
    const std::vector<int> bad = {2000};
    CHECK_THROWS_AS(topic_share_by_year(m, bad), Error);
}
