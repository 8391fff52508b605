#include "vizsig/cli.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <limits>
#include <unordered_map>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <memory>
#include <set>
#include <sstream>
#include <thread>

#include <CLI11.hpp>
#include <json.hpp>

#include "vizsig/corpus.hpp"
#include "vizsig/distance_matrix.hpp"
#include "vizsig/figclass.hpp"
#include "vizsig/graphmetrics.hpp"
#include "vizsig/inference.hpp"
#include "vizsig/parallel.hpp"
#include "vizsig/pipeline.hpp"
#include "vizsig/reduce.hpp"
#include "vizsig/signatures.hpp"
#include "vizsig/synthetic.hpp"
#include "vizsig/textmetrics.hpp"
#include "vizsig/topics.hpp"
#include "vizsig/trend.hpp"

namespace vizsig::cli {

namespace {

using Path = std::filesystem::path;

// A subcommand, the options echoed into output headers, and its action.
struct Command {
    CLI::App* app = nullptr;
    std::vector<CLI::Option*> params;
    std::function<void(const std::vector<std::string>& header)> action;
};

std::string option_value(const CLI::Option* opt) {
    if (opt->count() == 0) return opt->get_default_str();
    std::string out;
    for (const auto& r : opt->results()) out += (out.empty() ? "" : ",") + r;
    return out;
}

// One "# ..." line naming the subcommand and every seed/parameter value.
std::vector<std::string> header_for(const Command& cmd) {
    std::string line = "vizsig " + cmd.app->get_name();
    for (const auto* opt : cmd.params) line += " " + opt->get_single_name() + "=" + option_value(opt);
    return {line};
}

void write_text(const Path& path, const std::string& text) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw Error(Errc::io, "cannot open '" + path.string() + "' for writing");
    out << text;
    if (!out) throw Error(Errc::io, "write failed for '" + path.string() + "'");
}

std::vector<std::size_t> parse_size_list(const std::string& text, const std::string& flag) {
    std::vector<std::size_t> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        std::size_t v = 0;
        const auto [ptr, ec] = std::from_chars(item.data(), item.data() + item.size(), v);
        if (ec != std::errc() || ptr != item.data() + item.size() || v == 0) {
            throw CLI::ValidationError(flag, "expected a comma-separated list of positive integers, got '" + text + "'");
        }
        out.push_back(v);
    }
    if (out.empty()) throw CLI::ValidationError(flag, "empty list");
    return out;
}

std::pair<std::size_t, std::size_t> parse_range(const std::string& text, const std::string& flag) {
    const auto dots = text.find("..");
    if (dots == std::string::npos) throw CLI::ValidationError(flag, "expected LO..HI, got '" + text + "'");
    const auto lo = parse_size_list(text.substr(0, dots), flag);
    const auto hi = parse_size_list(text.substr(dots + 2), flag);
    if (lo.size() != 1 || hi.size() != 1 || lo[0] > hi[0]) throw CLI::ValidationError(flag, "bad range '" + text + "'");
    return {lo[0], hi[0]};
}

std::vector<FieldLabel> to_fields(const std::vector<std::string>& names) {
    std::vector<FieldLabel> out;
    for (const auto& n : names) out.emplace_back(n);
    return out;
}

template <typename Meta>
std::vector<FieldLabel> all_fields(const std::vector<Meta>& records) {
    std::set<FieldLabel> s;
    for (const auto& r : records) s.insert(r.field);
    return {s.begin(), s.end()};
}

std::vector<FieldLabel> common_labels(const DistanceMatrix& a, const DistanceMatrix& b) {
    std::vector<FieldLabel> out;
    const std::set<FieldLabel> in_b(b.labels.begin(), b.labels.end());
    std::set<FieldLabel> sorted(a.labels.begin(), a.labels.end());
    for (const auto& l : sorted)
        if (in_b.contains(l)) out.push_back(l);
    return out;
}

void log(const std::string& msg) { std::cerr << "[vizsig] " << msg << '\n'; }

// ---------------------------------------------------------------------------

void add_validate(CLI::App& root, std::vector<Command>& cmds) {
    struct Opts { Path embeddings, figures, papers, report; };
    auto o = std::make_shared<Opts>();
    Command c;
    c.app = root.add_subcommand("validate", "Join embeddings with figure/paper metadata and report orphans");
    c.app->add_option("--embeddings", o->embeddings, "VSIG embedding file")->required();
    c.app->add_option("--figures", o->figures, "Figure metadata (JSON lines)")->required();
    c.app->add_option("--papers", o->papers, "Paper metadata (JSON lines)")->required();
    c.app->add_option("--report", o->report, "Optional path for the JSON report");
    c.action = [o](const std::vector<std::string>&) {
        const auto emb = read_embeddings(o->embeddings);
        const auto figs = read_figure_metadata(o->figures);
        const auto papers = read_paper_metadata(o->papers);
        const auto r = validate_corpus(emb, figs, papers);
        nlohmann::ordered_json j;
        j["figures"] = r.figure_count;
        j["papers"] = r.paper_count;
        j["rows_without_metadata"] = r.rows_without_metadata;
        j["figures_without_rows"] = r.figures_without_rows;
        j["figures_with_unknown_paper"] = r.figures_with_unknown_paper;
        j["papers_without_figures"] = r.papers_without_figures;
        j["ok"] = r.ok();
        if (!o->report.empty()) write_text(o->report, j.dump(2) + "\n");
        std::cout << j.dump() << '\n';
        if (!r.ok()) throw Error(Errc::missing_metadata, "corpus failed validation (see report)");
    };
    cmds.push_back(std::move(c));
}

void add_pca(CLI::App& root, std::vector<Command>& cmds) {
    struct Opts { Path embeddings, out, model, variance; std::size_t dims = reduce::kDefaultComponents;
                  std::size_t fit_cap = reduce::kDefaultFitCap; std::uint64_t seed = 0; };
    auto o = std::make_shared<Opts>();
    Command c;
    c.app = root.add_subcommand("pca", "Fit PCA and write reduced embeddings");
    c.app->add_option("--embeddings", o->embeddings, "VSIG embedding file")->required();
    c.app->add_option("--out", o->out, "Reduced VSIG output")->required();
    c.app->add_option("--model", o->model, "Optional PCA model output");
    c.app->add_option("--variance-out", o->variance, "Optional explained-variance CSV");
    c.params.push_back(c.app->add_option("--dims", o->dims, "Number of components p")->check(CLI::PositiveNumber));
    c.params.push_back(c.app->add_option("--fit-cap", o->fit_cap, "Max rows used for the fit (seeded subsample above)")
                           ->check(CLI::PositiveNumber));
    c.params.push_back(c.app->add_option("--seed", o->seed, "Seed for the fit subsample"));
    c.action = [o](const std::vector<std::string>& header) {
        const auto emb = read_embeddings(o->embeddings);
        const auto model = reduce::pca_fit(emb, o->dims, {o->fit_cap, o->seed});
        write_embeddings(reduce::pca_transform(model, emb), o->out);
        if (!o->model.empty()) model.save(o->model);
        if (!o->variance.empty()) {
            std::ofstream out(o->variance);
            for (const auto& h : header) out << "# " << h << '\n';
            out << "component,explained_variance,explained_variance_ratio,cumulative_ratio\n";
            double cum = 0.0;
            for (Eigen::Index i = 0; i < model.explained_variance.size(); ++i) {
                cum += model.explained_variance_ratio(i);
                out << i << ',' << format_double(model.explained_variance(i)) << ','
                    << format_double(model.explained_variance_ratio(i)) << ',' << format_double(cum) << '\n';
            }
        }
        log("pca: fit on " + std::to_string(model.fit_rows) + " rows, explained variance ratio " +
            format_double(model.explained_variance_ratio.sum()));
    };
    cmds.push_back(std::move(c));
}

void add_sweep_pca(CLI::App& root, std::vector<Command>& cmds) {
    struct Opts { Path embeddings, figures, citation, out; std::string dims = "16,32,64,128,256,320";
                  std::string k_range = "2..30"; std::uint64_t seed = 0; std::size_t restarts = 10;
                  std::size_t fit_cap = reduce::kDefaultFitCap; };
    auto o = std::make_shared<Opts>();
    Command c;
    c.app = root.add_subcommand("sweep-pca",
                                "Correlate visual distance with a reference distance over PCA dims and k");
    c.app->add_option("--embeddings", o->embeddings, "VSIG embedding file")->required();
    c.app->add_option("--figures", o->figures, "Figure metadata (JSON lines)")->required();
    c.app->add_option("--citation", o->citation, "Reference (citation) distance CSV")->required();
    c.app->add_option("--out", o->out, "Output table CSV")->required();
    c.params.push_back(c.app->add_option("--dims", o->dims, "Comma-separated PCA dimensions"));
    c.params.push_back(c.app->add_option("--k-range", o->k_range, "Cluster counts LO..HI"));
    c.params.push_back(c.app->add_option("--seed", o->seed, "Seed for PCA subsample and k-means"));
    c.params.push_back(c.app->add_option("--restarts", o->restarts, "k-means restarts")->check(CLI::PositiveNumber));
    c.params.push_back(c.app->add_option("--fit-cap", o->fit_cap, "Max rows used for the PCA fit")->check(CLI::PositiveNumber));
    c.action = [o](const std::vector<std::string>& header) {
        const auto dims = parse_size_list(o->dims, "--dims");
        const auto [k_lo, k_hi] = parse_range(o->k_range, "--k-range");
        const auto emb = read_embeddings(o->embeddings);
        const auto figs = read_figure_metadata(o->figures);
        const auto reference = read_distance_csv(o->citation);
        const std::size_t p_max = *std::max_element(dims.begin(), dims.end());
        const auto full = reduce::pca_fit(emb, p_max, {o->fit_cap, o->seed});
        const Eigen::MatrixXd data = reduce::to_eigen(emb);

        std::ofstream out(o->out);
        if (!out) throw Error(Errc::io, "cannot open '" + o->out.string() + "' for writing");
        for (const auto& h : header) out << "# " << h << '\n';
        out << "dimension,explained_variance_ratio,average_correlation,maximum_correlation,argmax_k\n";
        for (std::size_t p : dims) {
            const auto model = reduce::truncate(full, p);
            const Eigen::MatrixXd reduced = reduce::pca_project(model, data);
            double sum = 0.0, best = -2.0;
            std::size_t best_k = k_lo, count = 0;
            for (std::size_t k = k_lo; k <= k_hi; ++k) {
                const auto km = signatures::kmeans_fit(reduced, {k, o->seed, signatures::kDefaultMaxIter, o->restarts});
                const auto sigs = signatures::build_signatures(km.assignments, emb.row_ids(), figs, k);
                const auto visual = signatures::visual_distance(sigs);
                const auto labels = common_labels(visual, reference);
                const auto a = restrict_to(visual, labels);
                const auto b = restrict_to(reference, labels);
                const double r = inference::spearman(inference::upper_triangle(a.values), inference::upper_triangle(b.values));
                sum += r;
                ++count;
                if (r > best) {
                    best = r;
                    best_k = k;
                }
            }
            out << p << ',' << format_double(model.explained_variance_ratio.sum()) << ','
                << format_double(sum / static_cast<double>(count)) << ',' << format_double(best) << ',' << best_k << '\n';
            log("sweep-pca: p=" + std::to_string(p) + " done");
        }
    };
    cmds.push_back(std::move(c));
}

void add_cluster(CLI::App& root, std::vector<Command>& cmds) {
    struct Opts { Path embeddings, out, centroids, report; signatures::KMeansOptions km; };
    auto o = std::make_shared<Opts>();
    Command c;
    c.app = root.add_subcommand("cluster", "k-means over (reduced) embeddings");
    c.app->add_option("--embeddings", o->embeddings, "VSIG file, usually the output of pca")->required();
    c.app->add_option("--out", o->out, "Assignments CSV (figure_id,cluster)")->required();
    c.app->add_option("--centroids", o->centroids, "Optional centroid CSV");
    c.app->add_option("--report", o->report, "Optional JSON with inertia and per-iteration history");
    c.params.push_back(c.app->add_option("--k", o->km.k, "Number of clusters")->check(CLI::PositiveNumber));
    c.params.push_back(c.app->add_option("--seed", o->km.seed, "k-means++ seed"));
    c.params.push_back(c.app->add_option("--max-iter", o->km.max_iter, "Lloyd iteration cap")->check(CLI::PositiveNumber));
    c.params.push_back(c.app->add_option("--restarts", o->km.restarts, "Independent starts; lowest inertia wins")
                           ->check(CLI::PositiveNumber));
    c.action = [o](const std::vector<std::string>& header) {
        const auto emb = read_embeddings(o->embeddings);
        const auto model = signatures::kmeans_fit(emb, o->km);
        signatures::write_assignments_csv(emb.row_ids(), model.assignments, o->out, header);
        if (!o->centroids.empty()) {
            std::ofstream out(o->centroids);
            for (const auto& h : header) out << "# " << h << '\n';
            for (Eigen::Index i = 0; i < model.centroids.rows(); ++i) {
                for (Eigen::Index j = 0; j < model.centroids.cols(); ++j)
                    out << (j ? "," : "") << format_double(model.centroids(i, j));
                out << '\n';
            }
        }
        if (!o->report.empty()) {
            nlohmann::ordered_json j;
            j["k"] = model.k();
            j["seed"] = o->km.seed;
            j["inertia"] = model.inertia;
            j["iterations"] = model.iterations_run;
            j["converged"] = model.converged;
            j["inertia_history"] = model.inertia_history;
            write_text(o->report, j.dump() + "\n");
        }
        log("cluster: inertia " + format_double(model.inertia) + " after " + std::to_string(model.iterations_run) +
            " iterations" + (model.converged ? "" : " (not converged)"));
    };
    cmds.push_back(std::move(c));
}

void add_signatures(CLI::App& root, std::vector<Command>& cmds) {
    struct Opts { Path assignments, figures, out; std::size_t k = signatures::kDefaultClusters; };
    auto o = std::make_shared<Opts>();
    Command c;
    c.app = root.add_subcommand("signatures", "Per-field normalized cluster histograms");
    c.app->add_option("--assignments", o->assignments, "Assignments CSV from cluster")->required();
    c.app->add_option("--figures", o->figures, "Figure metadata (JSON lines)")->required();
    c.app->add_option("--out", o->out, "Signatures CSV")->required();
    c.params.push_back(c.app->add_option("--k", o->k, "Number of clusters used")->check(CLI::PositiveNumber));
    c.action = [o](const std::vector<std::string>& header) {
        const auto [ids, assignments] = signatures::read_assignments_csv(o->assignments);
        const auto figs = read_figure_metadata(o->figures);
        const auto sigs = signatures::build_signatures(assignments, ids, figs, o->k);
        signatures::write_signatures_csv(sigs, o->out, header);
    };
    cmds.push_back(std::move(c));
}

void add_dist_visual(CLI::App& root, std::vector<Command>& cmds) {
    struct Opts { Path signatures, out; std::string metric = "euclidean"; };
    auto o = std::make_shared<Opts>();
    Command c;
    c.app = root.add_subcommand("dist-visual", "Distance between visual signatures");
    c.app->add_option("--signatures", o->signatures, "Signatures CSV")->required();
    c.app->add_option("--out", o->out, "Distance matrix CSV")->required();
    c.params.push_back(c.app->add_option("--metric", o->metric, "Histogram distance")
                           ->check(CLI::IsMember({"euclidean", "hellinger"})));
    c.action = [o](const std::vector<std::string>& header) {
        const auto sigs = signatures::read_signatures_csv(o->signatures);
        const auto metric = o->metric == "hellinger" ? signatures::HistogramDistance::hellinger
                                                     : signatures::HistogramDistance::euclidean;
        write_distance_csv(signatures::visual_distance(sigs, metric), o->out, header);
    };
    cmds.push_back(std::move(c));
}

void add_dist_jargon(CLI::App& root, std::vector<Command>& cmds) {
    struct Opts { Path papers, out, efficiency, vocabulary; double alpha = text::kDefaultAlpha; };
    auto o = std::make_shared<Opts>();
    Command c;
    c.app = root.add_subcommand("dist-jargon", "Cross-entropy jargon distance between field abstracts");
    c.app->add_option("--papers", o->papers, "Paper metadata with abstracts (JSON lines)")->required();
    c.app->add_option("--out", o->out, "Distance matrix CSV")->required();
    c.app->add_option("--efficiency-out", o->efficiency, "Optional communication-efficiency matrix CSV");
    c.app->add_option("--vocabulary-out", o->vocabulary, "Optional per-field token counts CSV");
    c.params.push_back(c.app->add_option("--alpha", o->alpha, "Additive smoothing")->check(CLI::PositiveNumber));
    c.action = [o](const std::vector<std::string>& header) {
        const auto papers = read_paper_metadata(o->papers);
        const auto dists = text::build_all_distributions(papers);
        const auto jr = text::jargon_distance(dists, o->alpha);
        write_distance_csv(jr.distance, o->out, header);
        if (!o->efficiency.empty()) write_matrix_csv(jr.labels, jr.efficiency, o->efficiency, header);
        if (!o->vocabulary.empty()) text::write_vocabulary(dists, o->vocabulary);
        log("dist-jargon: " + std::to_string(jr.labels.size()) + " fields, vocabulary " +
            std::to_string(jr.vocabulary.size()));
    };
    cmds.push_back(std::move(c));
}

void add_dist_citation(CLI::App& root, std::vector<Command>& cmds) {
    struct Opts { Path papers, edges, out, diagnostics; graph::PathOptions path; std::vector<std::string> fields; };
    auto o = std::make_shared<Opts>();
    Command c;
    c.app = root.add_subcommand("dist-citation", "Average shortest citation path between fields");
    c.app->add_option("--papers", o->papers, "Paper metadata (JSON lines)")->required();
    c.app->add_option("--edges", o->edges, "Citation edges CSV (citing,cited)")->required();
    c.app->add_option("--out", o->out, "Distance matrix CSV")->required();
    c.app->add_option("--diagnostics-out", o->diagnostics, "Optional per-pair sampling diagnostics CSV");
    c.app->add_option("--fields", o->fields, "Fields to include (default: all)")->delimiter(',');
    c.params.push_back(c.app->add_option("--sample-size", o->path.sample_size,
                                         "Vertex pairs per field pair; exhaustive at or below")
                           ->check(CLI::PositiveNumber));
    c.params.push_back(c.app->add_option("--seed", o->path.seed, "Pair sampling seed"));
    c.params.push_back(c.app->add_flag("--include-intra", o->path.include_intra, "Also compute within-field averages"));
    c.action = [o](const std::vector<std::string>& header) {
        const auto papers = read_paper_metadata(o->papers);
        const auto g = graph::load_graph(o->edges, papers);
        const auto& rep = g.report();
        log("dist-citation: " + std::to_string(rep.edges_read) + " edges read, " + std::to_string(rep.dropped_unknown) +
            " dropped (unknown paper), " + std::to_string(rep.duplicates) + " duplicates, " +
            std::to_string(rep.self_loops) + " self loops");
        const auto fields = o->fields.empty() ? all_fields(papers) : to_fields(o->fields);
        const auto fpd = graph::avg_shortest_path(g, fields, o->path);
        auto comments = header;
        if (o->path.include_intra) {
            std::string intra = "intra";
            for (std::size_t i = 0; i < fpd.matrix.labels.size(); ++i)
                intra += " " + fpd.matrix.labels[i].name() + "=" + format_double(fpd.intra[i]);
            comments.push_back(intra);
        }
        write_distance_csv(fpd.matrix, o->out, comments);
        if (!o->diagnostics.empty()) graph::write_path_diagnostics(fpd, o->diagnostics);
        if (fpd.has_missing()) log("dist-citation: some field pairs are unreachable (written as NA)");
    };
    cmds.push_back(std::move(c));
}

void add_mantel(CLI::App& root, std::vector<Command>& cmds) {
    struct Opts { Path a, b, out; std::size_t permutations = inference::kDefaultPermutations; std::uint64_t seed = 0; };
    auto o = std::make_shared<Opts>();
    Command c;
    c.app = root.add_subcommand("mantel", "Mantel permutation test between two distance matrices");
    c.app->add_option("--a", o->a, "First distance matrix CSV")->required();
    c.app->add_option("--b", o->b, "Second distance matrix CSV")->required();
    c.app->add_option("--out", o->out, "Optional JSON report path (always printed to stdout)");
    c.params.push_back(c.app->add_option("--permutations", o->permutations, "Permutation count (>= 99)")
                           ->check(CLI::Range(std::size_t{99}, std::numeric_limits<std::size_t>::max())));
    c.params.push_back(c.app->add_option("--seed", o->seed, "Permutation seed"));
    c.action = [o](const std::vector<std::string>&) {
        const auto a = read_distance_csv(o->a);
        const auto b = read_distance_csv(o->b);
        const auto labels = common_labels(a, b);
        if (labels.size() != a.size() || labels.size() != b.size()) {
            log("mantel: using the " + std::to_string(labels.size()) + " labels common to both matrices");
        }
        const auto rep = inference::mantel_test(restrict_to(a, labels), restrict_to(b, labels), o->permutations, o->seed);
        const auto json = rep.to_json();
        if (!o->out.empty()) write_text(o->out, json + "\n");
        std::cout << json << '\n';
    };
    cmds.push_back(std::move(c));
}

void add_upgma(CLI::App& root, std::vector<Command>& cmds) {
    struct Opts { Path distances, out, merges, cophenetic; };
    auto o = std::make_shared<Opts>();
    Command c;
    c.app = root.add_subcommand("upgma", "Average-linkage dendrogram of a distance matrix");
    c.app->add_option("--distances", o->distances, "Distance matrix CSV")->required();
    c.app->add_option("--out", o->out, "Newick output")->required();
    c.app->add_option("--merges-out", o->merges, "Optional merge table CSV");
    c.app->add_option("--cophenetic-out", o->cophenetic, "Optional cophenetic matrix CSV");
    c.action = [o](const std::vector<std::string>& header) {
        const auto tree = inference::upgma(read_distance_csv(o->distances));
        write_text(o->out, tree.to_newick() + "\n");
        if (!o->merges.empty()) tree.write_merge_csv(o->merges);
        if (!o->cophenetic.empty()) write_distance_csv(inference::cophenetic(tree), o->cophenetic, header);
    };
    cmds.push_back(std::move(c));
}

void add_discrepancy(CLI::App& root, std::vector<Command>& cmds) {
    struct Opts { Path a, b, out; };
    auto o = std::make_shared<Opts>();
    Command c;
    c.app = root.add_subcommand("discrepancy", "Min-max normalized difference B - A of two distance matrices");
    c.app->add_option("--a", o->a, "Distance matrix A (e.g. visual)")->required();
    c.app->add_option("--b", o->b, "Distance matrix B (e.g. citation)")->required();
    c.app->add_option("--out", o->out, "Output matrix CSV")->required();
    c.action = [o](const std::vector<std::string>& header) {
        const auto a = read_distance_csv(o->a);
        const auto b = read_distance_csv(o->b);
        const auto labels = common_labels(a, b);
        write_matrix_csv(labels, inference::discrepancy(restrict_to(a, labels), restrict_to(b, labels)), o->out, header);
    };
    cmds.push_back(std::move(c));
}

void add_nmf_topics(CLI::App& root, std::vector<Command>& cmds) {
    struct Opts { Path figures, out; topics::NmfOptions nmf; std::size_t keywords = 10; bool raw_tf = false;
                  std::vector<std::string> fields; std::string label; Path predictions; };
    auto o = std::make_shared<Opts>();
    Command c;
    c.app = root.add_subcommand("nmf-topics", "TF-IDF + NMF topics over figure captions");
    c.app->add_option("--figures", o->figures, "Figure metadata with captions (JSON lines)")->required();
    c.app->add_option("--out", o->out, "Topic report CSV")->required();
    c.app->add_option("--fields", o->fields, "Only captions from these fields (default: all)")->delimiter(',');
    c.app->add_option("--predictions", o->predictions, "Optional predictions CSV (figure_id,label) to filter by");
    c.app->add_option("--label", o->label, "With --predictions: keep figures predicted as this label");
    c.params.push_back(c.app->add_option("--topics", o->nmf.topics, "Number of topics")->check(CLI::PositiveNumber));
    c.params.push_back(c.app->add_option("--seed", o->nmf.seed, "Initialization seed"));
    c.params.push_back(c.app->add_option("--max-iter", o->nmf.max_iter, "Iteration cap")->check(CLI::PositiveNumber));
    c.params.push_back(c.app->add_option("--tol", o->nmf.tol, "Relative objective change stopping threshold"));
    c.params.push_back(c.app->add_option("--keywords", o->keywords, "Keywords per topic")->check(CLI::PositiveNumber));
    c.params.push_back(c.app->add_flag("--fallback-raw-tf", o->raw_tf, "Use raw tf when every idf is zero"));
    c.action = [o](const std::vector<std::string>& header) {
        auto figs = read_figure_metadata(o->figures);
        if (!o->fields.empty()) {
            const std::set<std::string> keep(o->fields.begin(), o->fields.end());
            std::erase_if(figs, [&](const FigureMeta& f) { return !keep.contains(f.field.name()); });
        }
        if (!o->predictions.empty()) {
            if (o->label.empty()) throw Error(Errc::invalid_argument, "--predictions needs --label");
            std::set<std::string> keep;
            for (const auto& [id, label] : read_labels(o->predictions))
                if (label == o->label) keep.insert(id);
            std::erase_if(figs, [&](const FigureMeta& f) { return !keep.contains(f.figure_id); });
        }
        const auto tdm = topics::build_term_doc(figs, {o->raw_tf});
        if (!tdm.dropped_docs.empty()) log("nmf-topics: dropped " + std::to_string(tdm.dropped_docs.size()) + " empty captions");
        const auto model = topics::nmf_fit(tdm, o->nmf);
        topics::write_topic_report(model, tdm, o->keywords, o->out, header);
        log("nmf-topics: " + std::to_string(model.iterations) + " iterations, final objective " +
            format_double(model.objective_trace.back()));
    };
    cmds.push_back(std::move(c));
}

void add_train(CLI::App& root, std::vector<Command>& cmds) {
    struct Opts { Path embeddings, labels, model, eval, confusion, history; std::vector<std::string> classes = figclass::kDefaultClasses;
                  std::vector<std::size_t> hidden = {512, 128}; double dropout = 0.5; double lr = 0.001; double decay = 0.001;
                  std::size_t epochs = 150, batch = 256; std::uint64_t seed = 0; };
    auto o = std::make_shared<Opts>();
    Command c;
    c.app = root.add_subcommand("train-classifier", "Train the figure-type MLP on an 8:1:1 stratified split");
    c.app->add_option("--embeddings", o->embeddings, "VSIG embedding file")->required();
    c.app->add_option("--labels", o->labels, "Labels CSV (figure_id,label)")->required();
    c.app->add_option("--model", o->model, "Model output")->required();
    c.app->add_option("--eval-out", o->eval, "Optional test-split metrics JSON");
    c.app->add_option("--confusion-out", o->confusion, "Optional test-split confusion CSV");
    c.app->add_option("--history-out", o->history, "Optional per-epoch loss / validation accuracy CSV");
    c.params.push_back(c.app->add_option("--classes", o->classes, "Class names in output order")->delimiter(','));
    c.params.push_back(c.app->add_option("--hidden", o->hidden, "Hidden layer widths")->delimiter(','));
    c.params.push_back(c.app->add_option("--dropout", o->dropout, "Dropout after each hidden layer")->check(CLI::Range(0.0, 0.999)));
    c.params.push_back(c.app->add_option("--lr", o->lr, "Learning rate")->check(CLI::PositiveNumber));
    c.params.push_back(c.app->add_option("--decay", o->decay, "Learning-rate decay: lr / (1 + decay * epoch)"));
    c.params.push_back(c.app->add_option("--epochs", o->epochs, "Epochs")->check(CLI::PositiveNumber));
    c.params.push_back(c.app->add_option("--batch-size", o->batch, "Mini-batch size")->check(CLI::PositiveNumber));
    c.params.push_back(c.app->add_option("--seed", o->seed, "Seed for split, initialization, shuffling and dropout"));
    c.action = [o](const std::vector<std::string>& header) {
        const auto emb = read_embeddings(o->embeddings);
        const auto data = figclass::make_dataset(emb, read_labels(o->labels), o->classes);
        const auto split = figclass::split_dataset(data, o->classes.size(), o->seed);
        figclass::MlpConfig cfg;
        cfg.layer_sizes.push_back(emb.cols());
        for (std::size_t h : o->hidden) cfg.layer_sizes.push_back(h);
        cfg.layer_sizes.push_back(o->classes.size());
        cfg.dropout.assign(o->hidden.size(), o->dropout);
        cfg.learning_rate = o->lr;
        cfg.decay = o->decay;
        cfg.epochs = o->epochs;
        cfg.batch_size = o->batch;
        cfg.seed = o->seed;
        const auto model = figclass::train(cfg, split.train, split.val, o->classes);
        model.save(o->model);
        const auto rep = figclass::evaluate(model, split.test);
        if (!o->eval.empty()) write_text(o->eval, rep.to_json() + "\n");
        if (!o->confusion.empty()) rep.write_confusion_csv(o->confusion);
        if (!o->history.empty()) {
            std::ofstream out(o->history);
            for (const auto& h : header) out << "# " << h << '\n';
            out << "epoch,loss,validation_accuracy\n";
            for (std::size_t e = 0; e < model.history.loss.size(); ++e) {
                const double va = model.history.validation_accuracy[e];
                out << e << ',' << format_double(model.history.loss[e]) << ','
                    << (std::isnan(va) ? std::string("NA") : format_double(va)) << '\n';
            }
        }
        log("train-classifier: train/val/test = " + std::to_string(split.train.size()) + "/" +
            std::to_string(split.val.size()) + "/" + std::to_string(split.test.size()) + ", test accuracy " +
            format_double(rep.accuracy));
    };
    cmds.push_back(std::move(c));
}

void add_predict(CLI::App& root, std::vector<Command>& cmds) {
    struct Opts { Path model, embeddings, out, probabilities; };
    auto o = std::make_shared<Opts>();
    Command c;
    c.app = root.add_subcommand("predict", "Predict figure types with a trained model");
    c.app->add_option("--model", o->model, "Model from train-classifier")->required();
    c.app->add_option("--embeddings", o->embeddings, "VSIG embedding file")->required();
    c.app->add_option("--out", o->out, "Predictions CSV (figure_id,label)")->required();
    c.app->add_option("--probabilities-out", o->probabilities, "Optional per-class probability CSV");
    c.action = [o](const std::vector<std::string>&) {
        const auto model = figclass::MlpModel::load(o->model);
        const auto emb = read_embeddings(o->embeddings);
        const auto preds = figclass::predict(model, reduce::to_eigen(emb));
        std::vector<std::pair<std::string, std::string>> rows;
        for (std::size_t i = 0; i < preds.size(); ++i) rows.emplace_back(emb.row_ids()[i], model.classes[preds[i].label]);
        write_labels(rows, o->out);
        if (!o->probabilities.empty()) {
            std::ofstream out(o->probabilities);
            out << "figure_id";
            for (const auto& cls : model.classes) out << ',' << csv_escape(cls);
            out << '\n';
            for (std::size_t i = 0; i < preds.size(); ++i) {
                out << csv_escape(emb.row_ids()[i]);
                for (double p : preds[i].probabilities) out << ',' << format_double(p);
                out << '\n';
            }
        }
    };
    cmds.push_back(std::move(c));
}

void add_evaluate(CLI::App& root, std::vector<Command>& cmds) {
    struct Opts { Path model, embeddings, labels, out, confusion; };
    auto o = std::make_shared<Opts>();
    Command c;
    c.app = root.add_subcommand("evaluate", "Accuracy, per-class precision/recall and confusion matrix");
    c.app->add_option("--model", o->model, "Model from train-classifier")->required();
    c.app->add_option("--embeddings", o->embeddings, "VSIG embedding file")->required();
    c.app->add_option("--labels", o->labels, "True labels CSV (figure_id,label)")->required();
    c.app->add_option("--out", o->out, "Optional metrics JSON (always printed to stdout)");
    c.app->add_option("--confusion-out", o->confusion, "Optional confusion CSV");
    c.action = [o](const std::vector<std::string>&) {
        const auto model = figclass::MlpModel::load(o->model);
        const auto data = figclass::make_dataset(read_embeddings(o->embeddings), read_labels(o->labels), model.classes);
        const auto rep = figclass::evaluate(model, data);
        if (!o->out.empty()) write_text(o->out, rep.to_json() + "\n");
        if (!o->confusion.empty()) rep.write_confusion_csv(o->confusion);
        std::cout << rep.to_json() << '\n';
    };
    cmds.push_back(std::move(c));
}

void add_trend(CLI::App& root, std::vector<Command>& cmds) {
    struct Opts { std::string mode; Path predictions, figures, papers, edges, out; std::string type_label = "neural-network-diagram";
                  std::vector<std::string> phrases = {"neural network", "deep learning"}; std::vector<std::string> fields;
                  std::vector<std::string> paper_ids; };
    auto o = std::make_shared<Opts>();
    Command c;
    c.app = root.add_subcommand("trend", "Per-year trend series: figure types, abstract keywords or citations");
    c.app->add_option("--mode", o->mode, "figure-type | keyword | citations")
        ->required()
        ->check(CLI::IsMember({"figure-type", "keyword", "citations"}));
    c.app->add_option("--out", o->out, "Trend CSV (label, one column per year)")->required();
    c.app->add_option("--predictions", o->predictions, "figure-type: predictions CSV (figure_id,label)");
    c.app->add_option("--figures", o->figures, "figure-type: figure metadata (JSON lines)");
    c.app->add_option("--papers", o->papers, "keyword/citations: paper metadata (JSON lines)");
    c.app->add_option("--edges", o->edges, "citations: citation edges CSV");
    c.app->add_option("--paper-ids", o->paper_ids, "citations: papers to track")->delimiter(',');
    c.app->add_option("--fields", o->fields, "Fields to report (default: all)")->delimiter(',');
    c.params.push_back(c.app->add_option("--type-label", o->type_label, "figure-type: label to count"));
    c.params.push_back(c.app->add_option("--phrases", o->phrases, "keyword: phrases, any match counts")->delimiter(','));
    c.action = [o](const std::vector<std::string>& header) {
        const auto need = [](const Path& p, const char* flag) {
            if (p.empty()) throw CLI::RequiredError(flag);
        };
        std::vector<trend::TrendSeries> series;
        if (o->mode == "figure-type") {
            need(o->predictions, "--predictions");
            need(o->figures, "--figures");
            const auto figs = read_figure_metadata(o->figures);
            std::unordered_map<std::string, std::string> preds;
            for (auto& [id, label] : read_labels(o->predictions)) preds.emplace(id, label);
            const auto fields = o->fields.empty() ? all_fields(figs) : to_fields(o->fields);
            series = trend::figure_type_trend(preds, figs, o->type_label, fields);
        } else if (o->mode == "keyword") {
            need(o->papers, "--papers");
            const auto papers = read_paper_metadata(o->papers);
            const auto fields = o->fields.empty() ? all_fields(papers) : to_fields(o->fields);
            series = trend::keyword_trend(papers, o->phrases, fields);
        } else {
            need(o->papers, "--papers");
            need(o->edges, "--edges");
            if (o->paper_ids.empty()) throw CLI::RequiredError("--paper-ids");
            const auto papers = read_paper_metadata(o->papers);
            const auto g = graph::load_graph(o->edges, papers);
            for (const auto& [id, per_year] : graph::yearly_citation_counts(g, o->paper_ids)) {
                series.push_back({id, per_year});
            }
        }
        trend::write_trend_csv(series, o->out, header);
    };
    cmds.push_back(std::move(c));
}

void add_synth(CLI::App& root, std::vector<Command>& cmds) {
    struct Opts { Path out_dir; std::size_t fields = 6, clusters = 4, figures = 1000, dim = 64; std::uint64_t seed = 0; };
    auto o = std::make_shared<Opts>();
    Command c;
    c.app = root.add_subcommand("synth", "Generate a planted-structure synthetic corpus");
    c.app->add_option("--out-dir", o->out_dir, "Output directory")->required();
    c.params.push_back(c.app->add_option("--fields", o->fields, "Number of fields")->check(CLI::Range(2, 1000)));
    c.params.push_back(c.app->add_option("--clusters", o->clusters, "Planted clusters")->check(CLI::PositiveNumber));
    c.params.push_back(c.app->add_option("--figures-per-field", o->figures, "Figures per field")->check(CLI::PositiveNumber));
    c.params.push_back(c.app->add_option("--dim", o->dim, "Embedding dimension")->check(CLI::PositiveNumber));
    c.params.push_back(c.app->add_option("--seed", o->seed, "Generator seed"));
    c.action = [o](const std::vector<std::string>& header) {
        const auto spec = default_synthetic_spec(o->fields, o->clusters, o->figures, o->dim, o->seed);
        const auto corpus = generate_synthetic_corpus(spec, o->seed);
        std::filesystem::create_directories(o->out_dir);
        write_embeddings(corpus.embeddings, o->out_dir / "embeddings.vsig");
        write_figure_metadata(corpus.figures, o->out_dir / "figures.jsonl");
        write_paper_metadata(corpus.papers, o->out_dir / "papers.jsonl");
        write_edges(corpus.edges, o->out_dir / "edges.csv");
        write_distance_csv(planted_distance(spec), o->out_dir / "planted_distance.csv", header);
        std::vector<std::pair<std::string, std::string>> labels;
        for (std::size_t i = 0; i < corpus.planted_cluster.size(); ++i)
            labels.emplace_back(corpus.embeddings.row_ids()[i], "c" + std::to_string(corpus.planted_cluster[i]));
        write_labels(labels, o->out_dir / "planted_clusters.csv");
    };
    cmds.push_back(std::move(c));
}

void add_pipeline(CLI::App& root, std::vector<Command>& cmds) {
    auto o = std::make_shared<PipelineConfig>();
    auto reference = std::make_shared<Path>();
    Command c;
    c.app = root.add_subcommand("pipeline", "Run every stage end to end");
    c.app->add_option("--embeddings", o->embeddings, "VSIG embedding file")->required();
    c.app->add_option("--figures", o->figures, "Figure metadata (JSON lines)")->required();
    c.app->add_option("--papers", o->papers, "Paper metadata with abstracts (JSON lines)")->required();
    c.app->add_option("--edges", o->edges, "Citation edges CSV")->required();
    c.app->add_option("--out-dir", o->out_dir, "Output directory")->required();
    c.app->add_option("--reference", *reference, "Optional extra distance matrix to Mantel-test visual distance against");
    c.params.push_back(c.app->add_option("--dims", o->pca_dims, "PCA components (capped at min(n-1, d))")->check(CLI::PositiveNumber));
    c.params.push_back(c.app->add_option("--fit-cap", o->pca_fit_cap, "Max rows for the PCA fit")->check(CLI::PositiveNumber));
    c.params.push_back(c.app->add_option("--k", o->clusters, "Clusters")->check(CLI::PositiveNumber));
    c.params.push_back(c.app->add_option("--restarts", o->kmeans_restarts, "k-means restarts")->check(CLI::PositiveNumber));
    c.params.push_back(c.app->add_option("--max-iter", o->kmeans_max_iter, "k-means iteration cap")->check(CLI::PositiveNumber));
    c.params.push_back(c.app->add_option("--alpha", o->alpha, "Jargon smoothing")->check(CLI::PositiveNumber));
    c.params.push_back(c.app->add_option("--sample-size", o->sample_size, "Citation path samples per field pair")
                           ->check(CLI::PositiveNumber));
    c.params.push_back(c.app->add_flag("--include-intra", o->include_intra, "Within-field citation averages"));
    c.params.push_back(c.app->add_option("--permutations", o->permutations, "Mantel permutations (>= 99)")
                           ->check(CLI::Range(std::size_t{99}, std::numeric_limits<std::size_t>::max())));
    c.params.push_back(c.app->add_option("--pca-seed", o->pca_seed, "PCA subsample seed"));
    c.params.push_back(c.app->add_option("--kmeans-seed", o->kmeans_seed, "k-means seed"));
    c.params.push_back(c.app->add_option("--path-seed", o->path_seed, "Citation path sampling seed"));
    c.params.push_back(c.app->add_option("--mantel-seed", o->mantel_seed, "Mantel permutation seed"));
    c.action = [o, reference](const std::vector<std::string>&) {
        if (!reference->empty()) o->reference = *reference;
        const auto r = run_pipeline(*o);
        log("pipeline: visual~citation r=" + format_double(r.visual_citation.r) + " p=" + format_double(r.visual_citation.p_value));
        log("pipeline: visual~jargon r=" + format_double(r.visual_jargon.r) + " p=" + format_double(r.visual_jargon.p_value));
        log("pipeline: jargon~citation r=" + format_double(r.jargon_citation.r) + " p=" + format_double(r.jargon_citation.p_value));
        if (r.visual_reference) {
            log("pipeline: visual~reference r=" + format_double(r.visual_reference->r) + " p=" +
                format_double(r.visual_reference->p_value));
        }
    };
    cmds.push_back(std::move(c));
}

}  // namespace

int run(int argc, char** argv) {
    CLI::App app{"Visual signatures of scientific fields: figure-embedding histograms compared with citation and "
                 "jargon distances"};
    app.name("vizsig");
    app.option_defaults()->always_capture_default();
    app.require_subcommand(1, 1);
    app.fallthrough();  // --threads may follow the subcommand too
    std::size_t thread_count = 0;
    app.add_option("--threads", thread_count, "Worker threads; 0 = all hardware threads. Results do not depend on it");

    std::vector<Command> cmds;
    add_validate(app, cmds);
    add_pca(app, cmds);
    add_sweep_pca(app, cmds);
    add_cluster(app, cmds);
    add_signatures(app, cmds);
    add_dist_visual(app, cmds);
    add_dist_jargon(app, cmds);
    add_dist_citation(app, cmds);
    add_mantel(app, cmds);
    add_upgma(app, cmds);
    add_discrepancy(app, cmds);
    add_nmf_topics(app, cmds);
    add_train(app, cmds);
    add_predict(app, cmds);
    add_evaluate(app, cmds);
    add_trend(app, cmds);
    add_synth(app, cmds);
    add_pipeline(app, cmds);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : 2;
    }

    set_threads(thread_count == 0 ? std::max(1u, std::thread::hardware_concurrency()) : thread_count);
    for (const auto& cmd : cmds) {
        if (!cmd.app->parsed()) continue;
        std::cerr << "[vizsig] " << cmd.app->get_name() << " (threads=" << threads() << ") resolved config:\n"
                  << cmd.app->config_to_str(true, false);
        try {
            cmd.action(header_for(cmd));
        } catch (const CLI::Error& e) {
            std::cerr << "vizsig " << cmd.app->get_name() << ": usage error: " << e.what() << '\n';
            return 2;
        } catch (const StageError& e) {
            std::cerr << "vizsig pipeline: error [" << errc_name(e.code()) << "] " << e.what() << '\n';
            return 1;
        } catch (const Error& e) {
            std::cerr << "vizsig " << cmd.app->get_name() << ": error [" << errc_name(e.code()) << "] " << e.what() << '\n';
            return 1;
        } catch (const std::exception& e) {
            std::cerr << "vizsig " << cmd.app->get_name() << ": error: " << e.what() << '\n';
            return 1;
        }
        return 0;
    }
    return 2;
}

}  // namespace vizsig::cli
