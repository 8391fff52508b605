#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "vizsig/corpus.hpp"
#include "vizsig/distance_matrix.hpp"

namespace vizsig::signatures {

inline constexpr std::size_t kDefaultClusters = 4;
inline constexpr std::size_t kDefaultMaxIter = 300;

struct KMeansOptions {
    std::size_t k = kDefaultClusters;
    std::uint64_t seed = 0;
    std::size_t max_iter = kDefaultMaxIter;
    /// Independent k-means++ starts; the lowest final inertia wins (first on ties).
    std::size_t restarts = 10;
};

struct KMeansModel {
    Eigen::MatrixXd centroids;               // k x p
    double inertia = 0.0;
    std::size_t iterations_run = 0;
    bool converged = false;
    std::vector<double> inertia_history;     // of the winning start, one per iteration
    std::vector<std::size_t> assignments;    // final assignment of the training rows

    std::size_t k() const { return static_cast<std::size_t>(centroids.rows()); }
};

/// Lloyd's algorithm with k-means++ seeding. At each Lloyd fixpoint a sweep of
/// single-point transfers (Hartigan) is tried; iteration stops when neither
/// changes anything or max_iter is reached. Empty clusters take the point
/// farthest from its current centroid.
KMeansModel kmeans_fit(const Eigen::MatrixXd& data, const KMeansOptions& options);
KMeansModel kmeans_fit(const EmbeddingMatrix& data, const KMeansOptions& options);

/// Nearest centroid per row (Euclidean); ties go to the lowest cluster index.
std::vector<std::size_t> kmeans_assign(const KMeansModel& model, const Eigen::MatrixXd& data);
std::vector<std::size_t> kmeans_assign(const KMeansModel& model, const EmbeddingMatrix& data);

/// Sum of squared distances from each row to its assigned centroid.
double inertia_of(const Eigen::MatrixXd& data, const Eigen::MatrixXd& centroids,
                  std::span<const std::size_t> assignments);

struct VisualSignature {
    FieldLabel field;
    std::vector<double> histogram;  // k frequencies summing to 1
    std::size_t support = 0;        // figure count
};

/// One signature per field present, sorted by field label.
/// `figure_ids[i]` is the figure whose cluster is `assignments[i]`.
std::vector<VisualSignature> build_signatures(std::span<const std::size_t> assignments,
                                              std::span<const std::string> figure_ids,
                                              std::span<const FigureMeta> figures, std::size_t k);

enum class HistogramDistance { euclidean, hellinger };

/// Pairwise distances between signatures, labels sorted lexicographically.
DistanceMatrix visual_distance(std::span<const VisualSignature> signatures,
                               HistogramDistance metric = HistogramDistance::euclidean);

void write_signatures_csv(std::span<const VisualSignature> signatures, const std::filesystem::path& path,
                          const std::vector<std::string>& comments = {});
std::vector<VisualSignature> read_signatures_csv(const std::filesystem::path& path);

/// "figure_id,cluster" lines.
void write_assignments_csv(std::span<const std::string> figure_ids, std::span<const std::size_t> assignments,
                           const std::filesystem::path& path, const std::vector<std::string>& comments = {});
std::pair<std::vector<std::string>, std::vector<std::size_t>> read_assignments_csv(const std::filesystem::path& path);

}  // namespace vizsig::signatures
