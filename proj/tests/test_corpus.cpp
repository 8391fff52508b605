#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstring>
#include <limits>
#include <random>

#include "support.hpp"
#include "vizsig/corpus.hpp"

using namespace vizsig;

namespace {

EmbeddingMatrix two_by_three() { return EmbeddingMatrix(2, 3, {1, 2, 3, 4, 5, 6}, {"a", "b"}); }

template <typename F>
Errc code_of(F&& f) {
    try {
        f();
    } catch (const Error& e) {
        return e.code();
    }
    FAIL("expected vizsig::Error");
    return Errc::io;
}

std::string message_of(const std::function<void()>& f) {
    try {
        f();
    } catch (const Error& e) {
        return e.what();
    }
    return {};
}

}  // namespace

TEST_CASE("embedding round trip and layout") {
    const auto dir = testing::scratch("corpus_roundtrip");
    const auto m = two_by_three();
    write_embeddings(m, dir / "m.vsig");
    const auto back = read_embeddings(dir / "m.vsig");
    CHECK(back == m);
    CHECK(back.at(1, 2) == 6.0f);

    const auto bytes = testing::slurp(dir / "m.vsig");
    REQUIRE(bytes.size() == kVsigHeaderBytes + 6 * 4 + (2 + 1) * 2);
    CHECK(bytes.substr(0, 4) == "VSIG");
    CHECK(static_cast<unsigned char>(bytes[4]) == 1);
    CHECK(static_cast<unsigned char>(bytes[5]) == 2);   // n, little endian
    CHECK(static_cast<unsigned char>(bytes[9]) == 3);   // d
    float first = 0;
    std::memcpy(&first, bytes.data() + kVsigHeaderBytes, 4);
    CHECK(first == 1.0f);
}

TEST_CASE("1x1 matrix is a 13-byte header plus one float and one id") {
    const auto dir = testing::scratch("corpus_tiny");
    write_embeddings(EmbeddingMatrix(1, 1, {0.0f}, {"x"}), dir / "t.vsig");
    const auto bytes = testing::slurp(dir / "t.vsig");
    CHECK(bytes.size() == 13 + 4 + 2 + 1);
    CHECK(read_embeddings(dir / "t.vsig").at(0, 0) == 0.0f);
}

TEST_CASE("large random matrix round-trips bitwise") {
    const auto dir = testing::scratch("corpus_large");
    std::mt19937 gen(11);
    std::normal_distribution<float> nd;
    std::vector<float> v(1000 * 256);
    for (auto& x : v) x = nd(gen);
    std::vector<std::string> ids;
    for (int i = 0; i < 1000; ++i) ids.push_back("fig-" + std::to_string(i) + "-\xc3\xa9");
    const EmbeddingMatrix m(1000, 256, v, ids);
    write_embeddings(m, dir / "big.vsig");
    const auto back = read_embeddings(dir / "big.vsig");
    REQUIRE(back.values().size() == v.size());
    CHECK(std::memcmp(back.values().data(), v.data(), v.size() * 4) == 0);
    CHECK(back.row_ids() == ids);
}

TEST_CASE("malformed VSIG files") {
    const auto dir = testing::scratch("corpus_bad");
    write_embeddings(two_by_three(), dir / "ok.vsig");
    const auto good = testing::slurp(dir / "ok.vsig");

    SUBCASE("truncated after one row") {
        testing::spit(dir / "t.vsig", good.substr(0, kVsigHeaderBytes + 12));
        CHECK(code_of([&] { read_embeddings(dir / "t.vsig"); }) == Errc::truncated_payload);
        CHECK(message_of([&] { read_embeddings(dir / "t.vsig"); }).find("truncated payload") != std::string::npos);
    }
    SUBCASE("missing footer") {
        testing::spit(dir / "f.vsig", good.substr(0, kVsigHeaderBytes + 24));
        CHECK(code_of([&] { read_embeddings(dir / "f.vsig"); }) == Errc::truncated_payload);
    }
    SUBCASE("bad magic") {
        auto b = good;
        b[0] = 'X';
        testing::spit(dir / "m.vsig", b);
        CHECK(code_of([&] { read_embeddings(dir / "m.vsig"); }) == Errc::malformed_header);
    }
    SUBCASE("bad version") {
        auto b = good;
        b[4] = 2;
        testing::spit(dir / "v.vsig", b);
        CHECK(code_of([&] { read_embeddings(dir / "v.vsig"); }) == Errc::malformed_header);
    }
    SUBCASE("short header") {
        testing::spit(dir / "h.vsig", "VSIG\x01");
        CHECK(code_of([&] { read_embeddings(dir / "h.vsig"); }) == Errc::malformed_header);
    }
    SUBCASE("trailing bytes") {
        testing::spit(dir / "x.vsig", good + "zz");
        CHECK(code_of([&] { read_embeddings(dir / "x.vsig"); }) == Errc::malformed_header);
    }
    SUBCASE("NaN payload") {
        auto b = good;
        const float nan = std::numeric_limits<float>::quiet_NaN();
        std::memcpy(b.data() + kVsigHeaderBytes, &nan, 4);
        testing::spit(dir / "n.vsig", b);
        CHECK(code_of([&] { read_embeddings(dir / "n.vsig"); }) == Errc::non_finite);
        CHECK(message_of([&] { read_embeddings(dir / "n.vsig"); }).find("non-finite value at row 0") != std::string::npos);
    }
    SUBCASE("missing file") {
        CHECK(code_of([&] { read_embeddings(dir / "nope.vsig"); }) == Errc::io);
    }
}

TEST_CASE("embedding matrix invariants") {
    CHECK(code_of([] { EmbeddingMatrix(2, 1, {1, 2}, {"a", "a"}); }) == Errc::duplicate_id);
    CHECK(code_of([] { EmbeddingMatrix(0, 1, {}, {}); }) == Errc::invalid_argument);
    CHECK(code_of([] { EmbeddingMatrix(2, 2, {1, 2, 3}, {"a", "b"}); }) == Errc::dimension_mismatch);
    CHECK(code_of([] { EmbeddingMatrix(1, 1, {std::numeric_limits<float>::infinity()}, {"a"}); }) == Errc::non_finite);
    CHECK_THROWS_AS(FieldLabel(""), Error);
}

TEST_CASE("figure and paper metadata") {
    const auto dir = testing::scratch("corpus_meta");

    SUBCASE("one valid line") {
        testing::spit(dir / "f.jsonl", R"({"figure_id":"f1","paper_id":"p1","field":"cs.CL","year":2015,"caption":"A plot"})" "\n");
        const auto figs = read_figure_metadata(dir / "f.jsonl");
        REQUIRE(figs.size() == 1);
        CHECK(figs[0].field.name() == "cs.CL");
        CHECK(figs[0].caption == std::optional<std::string>("A plot"));
    }
    SUBCASE("empty file") {
        testing::spit(dir / "e.jsonl", "");
        CHECK(read_figure_metadata(dir / "e.jsonl").empty());
        CHECK(read_paper_metadata(dir / "e.jsonl").empty());
    }
    SUBCASE("duplicate id names both lines") {
        std::string text;
        for (int i = 1; i <= 7; ++i) {
            const std::string id = (i == 3 || i == 7) ? "dup" : "f" + std::to_string(i);
            text += R"({"figure_id":")" + id + R"(","paper_id":"p","field":"x","year":2000})" "\n";
        }
        testing::spit(dir / "d.jsonl", text);
        const auto msg = message_of([&] { read_figure_metadata(dir / "d.jsonl"); });
        CHECK(msg.find("lines 3 and 7") != std::string::npos);
        CHECK(code_of([&] { read_figure_metadata(dir / "d.jsonl"); }) == Errc::duplicate_id);
    }
    SUBCASE("bad records name the line") {
        CHECK(code_of([] { parse_figure_line("not json", 4); }) == Errc::malformed_line);
        CHECK(message_of([] { parse_figure_line("not json", 4); }).find("line 4") != std::string::npos);
        CHECK_THROWS_AS(parse_figure_line(R"({"figure_id":"f","paper_id":"p","field":"x","year":1800})", 1), Error);
        CHECK_THROWS_AS(parse_figure_line(R"({"figure_id":"f","paper_id":"p","field":"","year":2000})", 1), Error);
        CHECK_THROWS_AS(parse_figure_line(R"({"figure_id":"f","paper_id":"p","year":2000})", 1), Error);
        CHECK_THROWS_AS(parse_paper_line(R"({"paper_id":"p","field":"x","year":"2000"})", 1), Error);
        CHECK_THROWS_AS(parse_paper_line(R"([1,2])", 1), Error);
    }
    SUBCASE("round trip with unicode and optional fields") {
        std::vector<FigureMeta> figs = {{"f\xc3\xa9", "p1", FieldLabel("math.AG"), 1999, std::nullopt},
                                        {"f2", "p1", FieldLabel("math.AG"), 1999, std::string("caption, \"quoted\"")}};
        std::vector<PaperMeta> papers = {{"p1", FieldLabel("math.AG"), 1999, std::string("An abstract")}};
        write_figure_metadata(figs, dir / "rf.jsonl");
        write_paper_metadata(papers, dir / "rp.jsonl");
        CHECK(read_figure_metadata(dir / "rf.jsonl") == figs);
        CHECK(read_paper_metadata(dir / "rp.jsonl") == papers);
    }
}

TEST_CASE("edges and labels") {
    const auto dir = testing::scratch("corpus_edges");
    testing::spit(dir / "e.csv", "a,b\r\n\nb,c\n");
    const auto edges = read_edges(dir / "e.csv");
    REQUIRE(edges.size() == 2);
    CHECK(edges[1] == CitationEdge{"b", "c"});

    testing::spit(dir / "bad.csv", "a,b,c\n");
    CHECK(code_of([&] { read_edges(dir / "bad.csv"); }) == Errc::malformed_line);

    testing::spit(dir / "l.csv", "f1,negative\nf1,negative\n");
    CHECK(code_of([&] { read_labels(dir / "l.csv"); }) == Errc::duplicate_id);
}

TEST_CASE("validate_corpus reports orphans both ways") {
    const auto m = two_by_three();
    std::vector<FigureMeta> figs = {{"a", "p1", FieldLabel("x"), 2000, {}}, {"z", "p9", FieldLabel("x"), 2000, {}}};
    std::vector<PaperMeta> papers = {{"p1", FieldLabel("x"), 2000, {}}, {"p2", FieldLabel("y"), 2001, {}}};
    const auto r = validate_corpus(m, figs, papers);
    CHECK(r.rows_without_metadata == std::vector<std::string>{"b"});
    CHECK(r.figures_without_rows == std::vector<std::string>{"z"});
    CHECK(r.figures_with_unknown_paper == std::vector<std::string>{"z"});
    CHECK(r.papers_without_figures == 1);
    CHECK_FALSE(r.ok());
}
