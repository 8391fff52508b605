#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "vizsig/distance_matrix.hpp"
#include "vizsig/error.hpp"
#include "vizsig/inference.hpp"

namespace vizsig {

/// Failure inside run_pipeline, tagged with the stage that raised it.
class StageError : public Error {
public:
    StageError(std::string stage, const Error& inner)
        : Error(inner.code(), "stage '" + stage + "': " + inner.what()), stage_(std::move(stage)) {}
    const std::string& stage() const noexcept { return stage_; }

private:
    std::string stage_;
};

struct PipelineConfig {
    std::filesystem::path embeddings;
    std::filesystem::path figures;
    std::filesystem::path papers;
    std::filesystem::path edges;
    std::filesystem::path out_dir;
    std::optional<std::filesystem::path> reference;  // extra distance matrix to test against
    std::size_t pca_dims = 256;
    std::size_t pca_fit_cap = 1'500'000;
    std::size_t clusters = 4;
    std::size_t kmeans_restarts = 10;
    std::size_t kmeans_max_iter = 300;
    double alpha = 0.5;
    std::size_t sample_size = 10'000;
    bool include_intra = false;
    std::size_t permutations = 9'999;
    std::uint64_t pca_seed = 0;
    std::uint64_t kmeans_seed = 0;
    std::uint64_t path_seed = 0;
    std::uint64_t mantel_seed = 0;

    /// Resolved configuration as one JSON object. Without paths it goes into
    /// the header line of every output, so reruns elsewhere stay identical.
    std::string to_json(bool include_paths = true) const;
};

struct PipelineResult {
    DistanceMatrix visual, jargon, citation;
    inference::MantelReport visual_citation, visual_jargon, jargon_citation;
    std::optional<inference::MantelReport> visual_reference;
    std::vector<std::filesystem::path> artifacts;
};

/// ingest -> PCA -> k-means -> signatures -> visual/jargon/citation distances
/// -> Mantel tests -> UPGMA dendrograms -> discrepancy, all written to out_dir.
PipelineResult run_pipeline(const PipelineConfig& config);

/// Restricts a matrix to `labels` (in that order).
DistanceMatrix restrict_to(const DistanceMatrix& m, const std::vector<FieldLabel>& labels);

}  // namespace vizsig
