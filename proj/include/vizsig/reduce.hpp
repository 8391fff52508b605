#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>

#include <Eigen/Dense>

#include "vizsig/corpus.hpp"

namespace vizsig::reduce {

inline constexpr std::size_t kDefaultComponents = 256;
inline constexpr std::size_t kDefaultFitCap = 1'500'000;

/// Principal axes of a mean-centered embedding matrix.
struct PcaModel {
    Eigen::VectorXd mean;                        // d
    Eigen::MatrixXd components;                  // p x d, orthonormal rows
    Eigen::VectorXd explained_variance;          // p, non-increasing
    Eigen::VectorXd explained_variance_ratio;    // p
    std::size_t zero_variance_components = 0;    // trailing padded directions
    std::size_t fit_rows = 0;                    // rows actually used for the fit

    std::size_t input_dim() const { return static_cast<std::size_t>(mean.size()); }
    std::size_t output_dim() const { return static_cast<std::size_t>(components.rows()); }

    void save(const std::filesystem::path& path) const;
    static PcaModel load(const std::filesystem::path& path);
};

struct PcaOptions {
    /// Rows beyond this cap are subsampled uniformly (seeded) for the fit.
    std::size_t fit_cap = kDefaultFitCap;
    std::uint64_t seed = 0;
};

/// Fits the top-p principal directions via SVD of the centered data (64-bit).
/// Each component is sign-flipped so its largest-magnitude coordinate is
/// positive. Requires n >= 2 and 1 <= p <= min(n - 1, d).
PcaModel pca_fit(const EmbeddingMatrix& data, std::size_t p, const PcaOptions& options = {});

/// Row i of the result is components * (row_i - mean); ids are preserved.
EmbeddingMatrix pca_transform(const PcaModel& model, const EmbeddingMatrix& data);

/// Same projection in double precision (no float32 rounding of the output).
Eigen::MatrixXd pca_project(const PcaModel& model, const Eigen::MatrixXd& rows);

/// mean + components^T * y for each row y.
Eigen::MatrixXd pca_reconstruct(const PcaModel& model, const Eigen::MatrixXd& projected);

/// Model restricted to its leading p components.
PcaModel truncate(const PcaModel& model, std::size_t p);

Eigen::MatrixXd to_eigen(const EmbeddingMatrix& m);

}  // namespace vizsig::reduce
