#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <random>

#include "support.hpp"
#include "vizsig/trend.hpp"

using namespace vizsig;
using namespace vizsig::trend;

namespace {

FigureMeta fig(const std::string& id, const std::string& paper, const std::string& field, int year) {
    return FigureMeta{id, paper, FieldLabel(field), year, std::nullopt};
}

PaperMeta paper(const std::string& id, const std::string& field, int year, std::optional<std::string> abstract) {
    return PaperMeta{id, FieldLabel(field), year, std::move(abstract)};
}

const std::vector<FigureMeta> kFigures = {
    fig("f1", "p1", "cs", 2015), fig("f2", "p1", "cs", 2015), fig("f3", "p2", "cs", 2016),
    fig("f4", "p3", "bio", 2015), fig("f5", "p4", "bio", 2017),
};

}  // namespace

TEST_CASE("figure-type trend counts papers, not figures") {
    const std::unordered_map<std::string, std::string> pred = {
        {"f1", "nn"}, {"f2", "nn"}, {"f3", "nn"}, {"f4", "other"}, {"f5", "other"}};
    const std::vector<FieldLabel> fields = {FieldLabel("cs"), FieldLabel("bio")};
    const auto s = figure_type_trend(pred, kFigures, "nn", fields);
    REQUIRE(s.size() == 2);
    CHECK(s[0].label == "cs");
    CHECK(s[0].points.at(2015) == 1);
    CHECK(s[0].points.at(2016) == 1);
    CHECK(s[0].total() == 2);
    // A field with no hits still yields a zero series over its years.
    CHECK(s[1].total() == 0);
    CHECK(s[1].points.size() == 2);

    const auto dir = testing::scratch("trend");
    write_trend_csv(s, dir / "t.csv", {"type=nn"});
    CHECK(testing::slurp(dir / "t.csv") == "# type=nn\nlabel,2015,2016,2017\ncs,1,1,0\nbio,0,0,0\n");
}

TEST_CASE("figure-type trend errors and unpredicted figures") {
    const std::vector<FieldLabel> fields = {FieldLabel("cs")};
    const std::unordered_map<std::string, std::string> unknown = {{"zz", "nn"}};
    CHECK_THROWS_AS(figure_type_trend(unknown, kFigures, "nn", fields), Error);
    const std::vector<FieldLabel> bad = {FieldLabel("math")};
    CHECK_THROWS_AS(figure_type_trend({}, kFigures, "nn", bad), Error);
    const auto s = figure_type_trend({}, kFigures, "nn", fields);
    CHECK(s[0].total() == 0);
}

TEST_CASE("keyword trend") {
    const std::vector<PaperMeta> papers = {
        paper("a", "cs", 2015, "We train a Deep Learning model."),
        paper("b", "cs", 2015, "A NEURAL NETWORK and deep learning."),
        paper("c", "cs", 2016, "Nothing relevant here."),
        paper("d", "cs", 2016, std::nullopt),
        paper("e", "bio", 2016, "neural network"),
    };
    const std::vector<std::string> phrases = {"neural network", "deep learning"};
    const std::vector<FieldLabel> fields = {FieldLabel("cs"), FieldLabel("cs")};
    const auto s = keyword_trend(papers, phrases, fields);
    REQUIRE(s.size() == 1);
    CHECK(s[0].points.at(2015) == 2);
    CHECK(s[0].points.at(2016) == 0);

    // Order of the input papers does not matter.
    auto shuffled = papers;
    std::mt19937 gen(1);
    for (int t = 0; t < 5; ++t) {
        std::shuffle(shuffled.begin(), shuffled.end(), gen);
        CHECK(keyword_trend(shuffled, phrases, fields)[0].points == s[0].points);
    }

    const std::vector<std::string> none;
    CHECK_THROWS_AS(keyword_trend(papers, none, fields), Error);
    const std::vector<std::string> empty = {""};
    CHECK_THROWS_AS(keyword_trend(papers, empty, fields), Error);
}

TEST_CASE("empty series list writes a bare header") {
    const auto dir = testing::scratch("trend_empty");
    write_trend_csv({}, dir / "t.csv");
    CHECK(testing::slurp(dir / "t.csv") == "label\n");
}
