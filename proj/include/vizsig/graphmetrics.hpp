#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "vizsig/corpus.hpp"
#include "vizsig/distance_matrix.hpp"

namespace vizsig::graph {

inline constexpr std::size_t kDefaultSampleSize = 10'000;

struct LoadReport {
    std::size_t edges_read = 0;
    std::size_t dropped_unknown = 0;  // an endpoint has no paper metadata
    std::size_t duplicates = 0;
    std::size_t self_loops = 0;
};

/// Paper-level citation graph. Directed edges are kept for citation counts;
/// path queries use the undirected view.
class CitationGraph {
public:
    CitationGraph(std::span<const PaperMeta> papers, std::span<const CitationEdge> edges);

    std::size_t node_count() const { return ids_.size(); }
    std::size_t edge_count() const { return edge_count_; }
    const LoadReport& report() const { return report_; }

    const std::string& id(std::size_t v) const { return ids_[v]; }
    const FieldLabel& field(std::size_t v) const { return fields_[v]; }
    int year(std::size_t v) const { return years_[v]; }
    std::optional<std::size_t> index_of(const std::string& paper_id) const;

    /// Undirected neighbours of v, sorted ascending.
    std::span<const std::size_t> neighbours(std::size_t v) const {
        return {adj_.data() + adj_offsets_[v], adj_offsets_[v + 1] - adj_offsets_[v]};
    }
    /// Papers citing v.
    std::span<const std::size_t> citers(std::size_t v) const {
        return {in_.data() + in_offsets_[v], in_offsets_[v + 1] - in_offsets_[v]};
    }

    /// Node indices of each field, ascending.
    std::vector<std::size_t> nodes_of(const FieldLabel& field) const;

    /// Hop distances from `source` on the undirected view; -1 = unreachable.
    std::vector<std::int32_t> bfs(std::size_t source) const;

private:
    std::vector<std::string> ids_;
    std::vector<FieldLabel> fields_;
    std::vector<int> years_;
    std::unordered_map<std::string, std::size_t> index_;
    std::vector<std::size_t> adj_offsets_, adj_;
    std::vector<std::size_t> in_offsets_, in_;
    std::size_t edge_count_ = 0;
    LoadReport report_;
};

CitationGraph load_graph(const std::filesystem::path& edge_path, std::span<const PaperMeta> papers);

struct PathOptions {
    std::size_t sample_size = kDefaultSampleSize;
    std::uint64_t seed = 0;
    /// Also compute within-field averages (reported separately; the matrix
    /// diagonal stays 0).
    bool include_intra = false;
};

struct PairDiagnostics {
    FieldLabel a, b;
    std::size_t sampled_pairs = 0;
    std::size_t unreachable_pairs = 0;
    bool exhaustive = false;
};

/// Average shortest hop distance between fields. NaN marks a pair whose
/// sampled vertex pairs were all unreachable.
struct FieldPathDistance {
    DistanceMatrix matrix;
    std::vector<PairDiagnostics> diagnostics;   // i < j, plus (i, i) when intra is on
    std::vector<double> intra;                  // per field, NaN unless computed

    bool has_missing() const;
};

/// For each field pair: exhaustive over all n_i * n_j vertex pairs when that
/// product is <= sample_size, otherwise sample_size pairs drawn uniformly with
/// replacement. Unreachable pairs are excluded from the mean and counted.
FieldPathDistance avg_shortest_path(const CitationGraph& graph, std::span<const FieldLabel> fields,
                                    const PathOptions& options = {});

/// Citations received by each paper, bucketed by the citing paper's year.
std::map<std::string, std::map<int, std::size_t>> yearly_citation_counts(const CitationGraph& graph,
                                                                         std::span<const std::string> paper_ids);

void write_path_diagnostics(const FieldPathDistance& result, const std::filesystem::path& path);

}  // namespace vizsig::graph
