#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "support.hpp"
#include "vizsig/synthetic.hpp"
#include "vizsig/textmetrics.hpp"

using namespace vizsig;
using namespace vizsig::text;

namespace {

TokenDistribution dist(const std::string& field, std::map<std::string, std::size_t> counts) {
    TokenDistribution d{FieldLabel(field), std::move(counts), 0};
    for (const auto& [_, c] : d.counts) d.total += c;
    return d;
}

}  // namespace

TEST_CASE("tokenize") {
    CHECK(tokenize("Neural networks, neural nets!") == std::vector<std::string>{"neural", "networks", "neural", "nets"});
    CHECK(tokenize("a I x").empty());
    CHECK(tokenize("state-of-the-art") == std::vector<std::string>{"state", "of", "the", "art"});
    CHECK(tokenize("").empty());
    CHECK(tokenize("Caf\xc3\xa9 \xc3\xa9 GPU2") == std::vector<std::string>{"caf\xc3\xa9", "gpu2"});
}

TEST_CASE("build distributions") {
    std::vector<PaperMeta> papers = {{"p1", FieldLabel("x"), 2000, std::string("cat cat dog")},
                                     {"p2", FieldLabel("x"), 2001, std::string("Dog bird")},
                                     {"p3", FieldLabel("y"), 2001, std::nullopt},
                                     {"p4", FieldLabel("z"), 2001, std::string("a b")}};
    const auto d = build_distribution(papers, FieldLabel("x"));
    CHECK(d.counts.at("cat") == 2);
    CHECK(d.counts.at("dog") == 2);
    CHECK(d.total == 5);
    CHECK_THROWS_AS(build_distribution(papers, FieldLabel("y")), Error);
    CHECK_THROWS_AS(build_distribution(papers, FieldLabel("z")), Error);
    const auto all = build_all_distributions(papers);
    REQUIRE(all.size() == 1);
    CHECK(all[0].field.name() == "x");
}

TEST_CASE("hand example in the small-alpha limit") {
    const auto a = dist("i", {{"a", 3000000}, {"b", 1000000}});
    const auto b = dist("j", {{"a", 2000000}, {"b", 2000000}});
    const std::vector<TokenDistribution> d = {a, b};
    const auto r = jargon_distance(d, 1e-9);
    CHECK(r.entropy(0) == doctest::Approx(0.811278).epsilon(1e-6));
    CHECK(r.cross_entropy(0, 1) == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(r.efficiency(0, 1) == doctest::Approx(0.811278).epsilon(1e-6));
}

TEST_CASE("five-token exact counts match the oracle within 1e-12") {
    std::mt19937 gen(17);
    std::uniform_int_distribution<int> cnt(0, 9);
    const std::vector<std::string> toks = {"alpha", "beta", "gamma", "delta", "eps"};
    for (int trial = 0; trial < 50; ++trial) {
        std::map<std::string, std::size_t> ci, cj;
        for (const auto& t : toks) {
            if (int c = cnt(gen)) ci[t] = static_cast<std::size_t>(c);
            if (int c = cnt(gen)) cj[t] = static_cast<std::size_t>(c);
        }
        if (ci.empty() || cj.empty()) continue;
        const std::vector<TokenDistribution> d = {dist("i", ci), dist("j", cj)};
        const auto r = jargon_distance(d, 0.5);
        const auto o = testing::jargon_oracle(ci, cj, 0.5L);
        const auto o2 = testing::jargon_oracle(cj, ci, 0.5L);
        CHECK(std::abs(r.entropy(0) - static_cast<double>(o.h_i)) <= 1e-12);
        CHECK(std::abs(r.cross_entropy(0, 1) - static_cast<double>(o.q_ij)) <= 1e-12);
        CHECK(std::abs(r.efficiency(0, 1) - static_cast<double>(o.h_i / o.q_ij)) <= 1e-12);
        CHECK(std::abs(r.efficiency(1, 0) - static_cast<double>(o2.h_i / o2.q_ij)) <= 1e-12);
        const double expect = 1.0 - static_cast<double>((o.h_i / o.q_ij + o2.h_i / o2.q_ij) / 2);
        CHECK(std::abs(r.distance.values(0, 1) - std::max(0.0, expect)) <= 1e-12);
    }
}

TEST_CASE("identity, Gibbs and smoothing") {
    const auto a = dist("a", {{"xx", 3}, {"yy", 1}});
    const auto a2 = dist("b", {{"xx", 3}, {"yy", 1}});
    const auto c = dist("c", {{"zz", 5}});
    const std::vector<TokenDistribution> d = {c, a, a2};
    const auto r = jargon_distance(d);
    CHECK(r.labels[0].name() == "a");
    CHECK(r.efficiency(0, 1) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(r.distance.values(0, 1) <= 1e-12);
    CHECK(std::isfinite(r.cross_entropy(0, 2)));
    for (Eigen::Index i = 0; i < 3; ++i) CHECK(r.efficiency(i, i) == 1.0);
    CHECK_NOTHROW(r.distance.validate());

    std::mt19937 gen(99);
    std::uniform_int_distribution<int> cnt(0, 50), len(1, 30);
    for (int trial = 0; trial < 1000; ++trial) {
        std::map<std::string, std::size_t> ci, cj;
        const int v = len(gen);
        for (int t = 0; t < v; ++t) {
            if (int x = cnt(gen)) ci["t" + std::to_string(t)] = static_cast<std::size_t>(x);
            if (int x = cnt(gen)) cj["t" + std::to_string(t)] = static_cast<std::size_t>(x);
        }
        if (ci.empty() || cj.empty()) continue;
        const std::vector<TokenDistribution> pair = {dist("i", ci), dist("j", cj)};
        const auto rr = jargon_distance(pair);
        CHECK(rr.efficiency(0, 1) <= 1 + 1e-12);
        CHECK(rr.efficiency(1, 0) <= 1 + 1e-12);
        CHECK(rr.efficiency(0, 1) > 0);
    }
}

TEST_CASE("a shared token moves every distance toward zero") {
    auto a = dist("a", {{"aa", 10}, {"bb", 2}});
    auto b = dist("b", {{"bb", 10}, {"cc", 3}});
    auto c = dist("c", {{"cc", 9}, {"aa", 4}});
    Eigen::MatrixXd prev = jargon_distance(std::vector<TokenDistribution>{a, b, c}).distance.values;
    for (int step = 1; step <= 5; ++step) {
        for (auto* d : {&a, &b, &c}) {
            d->counts["shared"] += 20;
            d->total += 20;
        }
        const Eigen::MatrixXd cur = jargon_distance(std::vector<TokenDistribution>{a, b, c}).distance.values;
        for (Eigen::Index i = 0; i < 3; ++i)
            for (Eigen::Index j = i + 1; j < 3; ++j) CHECK(cur(i, j) < prev(i, j));
        prev = cur;
    }
}

TEST_CASE("nearest-field ranking survives count scaling") {
    const auto spec = default_synthetic_spec(5, 4, 400, 4, 6);
    const auto corpus = generate_synthetic_corpus(spec, 6);
    auto dists = build_all_distributions(corpus.papers);
    const auto base = jargon_distance(dists);
    for (auto& d : dists) {
        for (auto& [_, c] : d.counts) c *= 10;
        d.total *= 10;
    }
    const auto scaled = jargon_distance(dists);
    for (Eigen::Index i = 0; i < 5; ++i) {
        auto nearest = [&](const Eigen::MatrixXd& m) {
            Eigen::Index best = i == 0 ? 1 : 0;
            for (Eigen::Index j = 0; j < 5; ++j)
                if (j != i && m(i, j) < m(i, best)) best = j;
            return best;
        };
        CHECK(nearest(base.distance.values) == nearest(scaled.distance.values));
    }
}

TEST_CASE("synthetic token frequencies within 3 sigma") {
    const auto spec = default_synthetic_spec(3, 3, 2000, 4, 2);
    const auto corpus = generate_synthetic_corpus(spec, 2);
    const auto dists = build_all_distributions(corpus.papers);
    REQUIRE(dists.size() == 3);
    for (std::size_t f = 0; f < 3; ++f) {
        const auto& d = dists[f];
        const double n = static_cast<double>(d.total);
        for (std::size_t t = 0; t < spec.vocabulary.size(); ++t) {
            const double p = spec.fields[f].token_probs[t];
            const auto it = d.counts.find(spec.vocabulary[t]);
            const double observed = it == d.counts.end() ? 0.0 : static_cast<double>(it->second);
            CHECK(std::abs(observed - n * p) <= 3 * std::sqrt(n * p * (1 - p)) + 1);
        }
    }
}

TEST_CASE("errors") {
    const std::vector<TokenDistribution> one = {dist("a", {{"xx", 1}})};
    CHECK_THROWS_AS(jargon_distance(one), Error);
    const std::vector<TokenDistribution> two = {dist("a", {{"xx", 1}}), dist("b", {{"yy", 1}})};
    CHECK_THROWS_AS(jargon_distance(two, 0.0), Error);
    CHECK_THROWS_AS(jargon_distance(two, -1.0), Error);
    const std::vector<TokenDistribution> dup = {dist("a", {{"xx", 1}}), dist("a", {{"yy", 1}})};
    CHECK_THROWS_AS(jargon_distance(dup), Error);
}

TEST_CASE("one-token vocabulary gives efficiency 1, not 0/0") {
    const std::vector<TokenDistribution> d = {dist("a", {{"xx", 3}}), dist("b", {{"xx", 1}})};
    const auto r = jargon_distance(d);
    CHECK(r.efficiency(0, 1) == 1.0);
    CHECK(r.distance.values(0, 1) == 0.0);
}
