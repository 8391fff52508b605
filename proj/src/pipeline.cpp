#include "vizsig/pipeline.hpp"

#include <algorithm>
#include <fstream>
#include <functional>
#include <set>

#include <json.hpp>

#include "vizsig/corpus.hpp"
#include "vizsig/graphmetrics.hpp"
#include "vizsig/reduce.hpp"
#include "vizsig/signatures.hpp"
#include "vizsig/textmetrics.hpp"

namespace vizsig {

std::string PipelineConfig::to_json(bool include_paths) const {
    nlohmann::ordered_json j;
    if (include_paths) {
        j["embeddings"] = embeddings.string();
        j["figures"] = figures.string();
        j["papers"] = papers.string();
        j["edges"] = edges.string();
        j["out_dir"] = out_dir.string();
        j["reference"] = reference ? nlohmann::ordered_json(reference->string()) : nlohmann::ordered_json(nullptr);
    }
    j["pca_dims"] = pca_dims;
    j["pca_fit_cap"] = pca_fit_cap;
    j["clusters"] = clusters;
    j["kmeans_restarts"] = kmeans_restarts;
    j["kmeans_max_iter"] = kmeans_max_iter;
    j["alpha"] = alpha;
    j["sample_size"] = sample_size;
    j["include_intra"] = include_intra;
    j["permutations"] = permutations;
    j["pca_seed"] = pca_seed;
    j["kmeans_seed"] = kmeans_seed;
    j["path_seed"] = path_seed;
    j["mantel_seed"] = mantel_seed;
    return j.dump();
}

DistanceMatrix restrict_to(const DistanceMatrix& m, const std::vector<FieldLabel>& labels) {
    std::vector<Eigen::Index> idx;
    for (const auto& l : labels) {
        auto it = std::find(m.labels.begin(), m.labels.end(), l);
        if (it == m.labels.end()) throw Error(Errc::invalid_argument, "label '" + l.name() + "' not in matrix");
        idx.push_back(static_cast<Eigen::Index>(it - m.labels.begin()));
    }
    DistanceMatrix out{labels, Eigen::MatrixXd(static_cast<Eigen::Index>(idx.size()), static_cast<Eigen::Index>(idx.size()))};
    for (std::size_t i = 0; i < idx.size(); ++i)
        for (std::size_t j = 0; j < idx.size(); ++j) out.values(i, j) = m.values(idx[i], idx[j]);
    return out;
}

namespace {

template <typename F>
auto stage(const std::string& name, F&& body) {
    try {
        return body();
    } catch (const StageError&) {
        throw;
    } catch (const Error& e) {
        throw StageError(name, e);
    } catch (const std::exception& e) {
        throw StageError(name, Error(Errc::io, e.what()));
    }
}

std::vector<FieldLabel> common_labels(const std::vector<const DistanceMatrix*>& ms) {
    std::set<FieldLabel> common(ms.front()->labels.begin(), ms.front()->labels.end());
    for (auto* m : ms) {
        std::set<FieldLabel> next;
        for (const auto& l : m->labels)
            if (common.contains(l)) next.insert(l);
        common = std::move(next);
    }
    return {common.begin(), common.end()};
}

}  // namespace

PipelineResult run_pipeline(const PipelineConfig& config) {
    PipelineResult result;
    std::filesystem::create_directories(config.out_dir);
    const auto out = [&](const std::string& name) {
        auto p = config.out_dir / name;
        result.artifacts.push_back(p);
        return p;
    };
    const std::vector<std::string> header = {"vizsig pipeline " + config.to_json(false)};
    {
        std::ofstream f(out("run_config.json"));
        f << config.to_json() << '\n';
    }

    struct Inputs {
        EmbeddingMatrix embeddings;
        std::vector<FigureMeta> figures;
        std::vector<PaperMeta> papers;
    };
    const Inputs in = stage("validate", [&] {
        Inputs r{read_embeddings(config.embeddings), read_figure_metadata(config.figures),
                 read_paper_metadata(config.papers)};
        const auto report = validate_corpus(r.embeddings, r.figures, r.papers);
        if (!report.rows_without_metadata.empty()) {
            throw Error(Errc::missing_metadata, std::to_string(report.rows_without_metadata.size()) +
                                                    " embedding rows have no figure metadata (first: '" +
                                                    report.rows_without_metadata.front() + "')");
        }
        return r;
    });

    const auto reduced = stage("pca", [&] {
        const std::size_t p = std::min(config.pca_dims, std::min(in.embeddings.rows() - 1, in.embeddings.cols()));
        const auto model = reduce::pca_fit(in.embeddings, p, {config.pca_fit_cap, config.pca_seed});
        model.save(out("pca_model.vsic"));
        return reduce::pca_project(model, reduce::to_eigen(in.embeddings));
    });

    const auto kmeans = stage("cluster", [&] {
        signatures::KMeansOptions opts{config.clusters, config.kmeans_seed, config.kmeans_max_iter, config.kmeans_restarts};
        auto model = signatures::kmeans_fit(reduced, opts);
        signatures::write_assignments_csv(in.embeddings.row_ids(), model.assignments, out("assignments.csv"), header);
        return model;
    });

    result.visual = stage("signatures", [&] {
        const auto sigs = signatures::build_signatures(kmeans.assignments, in.embeddings.row_ids(), in.figures, config.clusters);
        signatures::write_signatures_csv(sigs, out("signatures.csv"), header);
        auto dm = signatures::visual_distance(sigs);
        write_distance_csv(dm, out("visual_distance.csv"), header);
        return dm;
    });

    result.jargon = stage("dist-jargon", [&] {
        std::vector<PaperMeta> with_abstracts;
        for (const auto& p : in.papers)
            if (p.abstract && !text::tokenize(*p.abstract).empty()) with_abstracts.push_back(p);
        const auto dists = text::build_all_distributions(with_abstracts);
        const auto jr = text::jargon_distance(dists, config.alpha);
        write_matrix_csv(jr.labels, jr.efficiency, out("jargon_efficiency.csv"), header);
        write_distance_csv(jr.distance, out("jargon_distance.csv"), header);
        text::write_vocabulary(dists, out("vocabulary.csv"));
        return jr.distance;
    });

    result.citation = stage("dist-citation", [&] {
        const auto graph = graph::load_graph(config.edges, in.papers);
        std::set<FieldLabel> fields;
        for (const auto& p : in.papers) fields.insert(p.field);
        const std::vector<FieldLabel> wanted(fields.begin(), fields.end());
        const auto fpd = graph::avg_shortest_path(graph, wanted, {config.sample_size, config.path_seed, config.include_intra});
        write_distance_csv(fpd.matrix, out("citation_distance.csv"), header);
        graph::write_path_diagnostics(fpd, out("citation_diagnostics.csv"));
        return fpd.matrix;
    });

    stage("mantel", [&] {
        const auto labels = common_labels({&result.visual, &result.jargon, &result.citation});
        const auto v = restrict_to(result.visual, labels);
        const auto j = restrict_to(result.jargon, labels);
        const auto c = restrict_to(result.citation, labels);
        result.visual_citation = inference::mantel_test(v, c, config.permutations, config.mantel_seed);
        result.visual_jargon = inference::mantel_test(v, j, config.permutations, config.mantel_seed);
        result.jargon_citation = inference::mantel_test(j, c, config.permutations, config.mantel_seed);
        std::ofstream f(out("mantel.jsonl"));
        f << R"({"a":"visual","b":"citation","report":)" << result.visual_citation.to_json() << "}\n";
        f << R"({"a":"visual","b":"jargon","report":)" << result.visual_jargon.to_json() << "}\n";
        f << R"({"a":"jargon","b":"citation","report":)" << result.jargon_citation.to_json() << "}\n";
        if (config.reference) {
            const auto ref = read_distance_csv(*config.reference);
            const auto shared = common_labels({&result.visual, &ref});
            result.visual_reference = inference::mantel_test(restrict_to(result.visual, shared), restrict_to(ref, shared),
                                                             config.permutations, config.mantel_seed);
            f << R"({"a":"visual","b":"reference","report":)" << result.visual_reference->to_json() << "}\n";
        }
        return 0;
    });

    stage("upgma", [&] {
        const std::pair<const char*, const DistanceMatrix*> named[] = {
            {"visual", &result.visual}, {"jargon", &result.jargon}, {"citation", &result.citation}};
        for (const auto& [name, dm] : named) {
            const auto tree = inference::upgma(*dm);
            std::ofstream f(out(std::string("dendrogram_") + name + ".nwk"));
            f << tree.to_newick() << '\n';
            tree.write_merge_csv(out(std::string("dendrogram_") + name + ".csv"));
        }
        return 0;
    });

    stage("discrepancy", [&] {
        const auto labels = common_labels({&result.visual, &result.citation});
        const auto v = restrict_to(result.visual, labels);
        const auto d = inference::discrepancy(v, restrict_to(result.citation, labels));
        write_matrix_csv(labels, d, out("discrepancy_citation_minus_visual.csv"), header);
        return 0;
    });
    return result;
}

}  // namespace vizsig
