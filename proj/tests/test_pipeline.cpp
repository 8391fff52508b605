#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "support.hpp"
#include "vizsig/parallel.hpp"
#include "vizsig/pipeline.hpp"

using namespace vizsig;

namespace {

PipelineConfig small_config(const std::filesystem::path& in, const std::filesystem::path& out) {
    PipelineConfig c;
    c.embeddings = in / "embeddings.vsig";
    c.figures = in / "figures.jsonl";
    c.papers = in / "papers.jsonl";
    c.edges = in / "edges.csv";
    c.out_dir = out;
    c.reference = in / "planted_distance.csv";
    c.pca_dims = 8;
    c.kmeans_restarts = 3;
    c.permutations = 999;
    c.sample_size = 2000;
    return c;
}

std::filesystem::path make_corpus(const std::string& name, std::size_t fields) {
    const auto dir = testing::scratch(name);
    const auto spec = default_synthetic_spec(fields, 4, 300, 16, 1);
    testing::write_corpus(spec, generate_synthetic_corpus(spec, 1), dir / "in");
    return dir;
}

}  // namespace

TEST_CASE("end to end on a planted corpus") {
    const auto dir = make_corpus("pipe_e2e", 6);
    const auto r = run_pipeline(small_config(dir / "in", dir / "out"));
    for (const char* f : {"run_config.json", "pca_model.vsic", "assignments.csv", "signatures.csv", "visual_distance.csv",
                          "jargon_distance.csv", "citation_distance.csv", "citation_diagnostics.csv", "mantel.jsonl",
                          "dendrogram_visual.nwk", "dendrogram_citation.csv", "discrepancy_citation_minus_visual.csv"})
        CHECK_MESSAGE(std::filesystem::exists(dir / "out" / f), f);
    CHECK(r.visual.labels.size() == 6);
    REQUIRE(r.visual_reference.has_value());
    CHECK(r.visual_reference->r >= 0.9);
    CHECK(r.visual_citation.r > 0.5);
    const auto mantel = testing::slurp(dir / "out" / "mantel.jsonl");
    CHECK(std::count(mantel.begin(), mantel.end(), '\n') == 4);
}

TEST_CASE("reruns are byte identical and thread independent") {
    const auto dir = make_corpus("pipe_det", 4);
    set_threads(1);
    run_pipeline(small_config(dir / "in", dir / "a"));
    set_threads(3);
    run_pipeline(small_config(dir / "in", dir / "b"));
    set_threads(1);
    std::size_t compared = 0;
    for (const auto& e : std::filesystem::directory_iterator(dir / "a")) {
        const auto other = dir / "b" / e.path().filename();
        REQUIRE(std::filesystem::exists(other));
        if (e.path().filename() == "run_config.json") continue;  // records the output directory
        CHECK_MESSAGE(testing::slurp(e.path()) == testing::slurp(other), e.path().filename().string());
        ++compared;
    }
    CHECK(compared >= 15);
}

TEST_CASE("stage errors name the stage") {
    const auto dir = make_corpus("pipe_err", 4);
    auto c = small_config(dir / "in", dir / "out");
    c.edges = dir / "in" / "missing.csv";
    try {
        run_pipeline(c);
        FAIL("expected a stage error");
    } catch (const StageError& e) {
        CHECK(e.stage() == "dist-citation");
        CHECK(std::string(e.what()).find("stage 'dist-citation'") == 0);
    }
    c = small_config(dir / "in", dir / "out2");
    c.figures = dir / "in" / "nope.jsonl";
    CHECK_THROWS_AS(run_pipeline(c), StageError);
}

TEST_CASE("restrict_to") {
    Eigen::MatrixXd v(3, 3);
    v << 0, 1, 2,
         1, 0, 3,
         2, 3, 0;
    const auto m = testing::make_dm({"a", "b", "c"}, v);
    const auto r = restrict_to(m, {FieldLabel("c"), FieldLabel("a")});
    CHECK(r.values(0, 1) == 2.0);
    CHECK_THROWS_AS(restrict_to(m, {FieldLabel("z")}), Error);
}
