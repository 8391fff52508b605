#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "vizsig/corpus.hpp"
#include "vizsig/distance_matrix.hpp"

namespace vizsig {

struct SyntheticField {
    FieldLabel name;
    std::vector<double> proportions;  // planted cluster mix, k entries summing to 1
    std::vector<double> token_probs;  // abstract unigram distribution over `vocabulary`
};

/// Planted-structure corpus description used by tests and the `synth` command.
struct SyntheticSpec {
    std::vector<SyntheticField> fields;
    std::size_t figures_per_field = 1000;
    Eigen::MatrixXd centers;          // k x dim Gaussian cluster centers
    double spread = 1.0;              // isotropic standard deviation
    std::vector<std::string> vocabulary;
    std::size_t abstract_tokens = 80;
    /// Optional caption keyword group per cluster; empty means no captions.
    std::vector<std::vector<std::string>> caption_words;
    std::size_t caption_tokens = 6;
    std::size_t figures_per_paper = 4;
    int first_year = 2010;
    int last_year = 2019;
    std::size_t citations_per_paper = 6;
    double intra_field_citation = 0.6;
    /// Cross-field citations pick the target field with weight
    /// exp(-planted_distance / temperature).
    double citation_temperature = 0.15;

    std::size_t clusters() const { return static_cast<std::size_t>(centers.rows()); }
    void validate() const;
};

struct SyntheticCorpus {
    EmbeddingMatrix embeddings;
    std::vector<FigureMeta> figures;
    std::vector<PaperMeta> papers;
    std::vector<CitationEdge> edges;
    std::vector<std::size_t> planted_cluster;  // per embedding row
};

/// Deterministic for a fixed (spec, seed).
SyntheticCorpus generate_synthetic_corpus(const SyntheticSpec& spec, std::uint64_t seed);

/// Euclidean distance between planted proportion vectors, labels sorted.
DistanceMatrix planted_distance(const SyntheticSpec& spec);

/// A ready-made spec: distinct random cluster mixes per field, well separated
/// centers, abstracts mixing per-cluster token groups with the field's mix,
/// and per-cluster caption keyword groups.
SyntheticSpec default_synthetic_spec(std::size_t field_count, std::size_t clusters, std::size_t figures_per_field,
                                     std::size_t dim, std::uint64_t seed);

}  // namespace vizsig
