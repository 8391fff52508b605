#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "vizsig/distance_matrix.hpp"

namespace vizsig::inference {

inline constexpr std::size_t kDefaultPermutations = 9'999;

/// Fractional ranks starting at 1; tied values share their average rank.
std::vector<double> fractional_ranks(std::span<const double> values);

double pearson(std::span<const double> x, std::span<const double> y);

/// Pearson correlation of fractional ranks. Needs equal lengths >= 3 and
/// non-constant ranks on both sides.
double spearman(std::span<const double> x, std::span<const double> y);

/// Strict upper triangle in row-major order.
std::vector<double> upper_triangle(const Eigen::MatrixXd& m);

struct MantelReport {
    double r = 0.0;
    double p_value = 1.0;
    double z_score = 0.0;
    std::size_t permutations = 0;
    std::uint64_t seed = 0;
    bool exhaustive = false;

    /// One-line JSON record.
    std::string to_json() const;
};

/// One-sided Mantel test on Spearman correlation of the strict upper
/// triangles. Permutation t relabels B's rows and columns jointly with an RNG
/// stream derived from (seed, t). When m! <= permutations every relabeling is
/// enumerated once instead and p = #{r_perm >= r_obs} / m!.
MantelReport mantel_test(const DistanceMatrix& a, const DistanceMatrix& b,
                         std::size_t permutations = kDefaultPermutations, std::uint64_t seed = 0);

struct Merge {
    std::size_t node_a = 0;  // leaves are 0..m-1, merge t creates node m+t
    std::size_t node_b = 0;
    double distance = 0.0;
    double height = 0.0;     // distance / 2
    std::size_t members = 0;
};

struct Dendrogram {
    std::vector<FieldLabel> leaves;
    std::vector<Merge> merges;

    /// Newick with branch lengths on the height scale.
    std::string to_newick() const;
    void write_merge_csv(const std::filesystem::path& path) const;
};

/// Average-linkage (UPGMA) agglomeration. Ties go to the pair whose smallest
/// member leaves come first in label order.
Dendrogram upgma(const DistanceMatrix& d);

/// Leaf-to-leaf merge distance of the lowest common merge.
DistanceMatrix cophenetic(const Dendrogram& dendrogram);

/// Min-max normalizes the off-diagonal entries of each matrix to [0, 1] and
/// returns norm(b) - norm(a) with a zero diagonal.
Eigen::MatrixXd discrepancy(const DistanceMatrix& a, const DistanceMatrix& b);

}  // namespace vizsig::inference
