#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "vizsig/corpus.hpp"

namespace vizsig {

/// Symmetric field x field dissimilarities. The label ordering travels with the
/// values; consumers must align by label, never by position alone.
struct DistanceMatrix {
    std::vector<FieldLabel> labels;
    Eigen::MatrixXd values;

    std::size_t size() const noexcept { return labels.size(); }
    double operator()(std::size_t i, std::size_t j) const { return values(i, j); }

    /// Throws unless square, label-aligned, symmetric within 1e-12, zero
    /// diagonal and non-negative. NaN cells (missing) pass only if allowed.
    void validate(bool allow_missing = false) const;

    /// Same matrix with rows/columns reordered to `order`.
    DistanceMatrix reordered(const std::vector<FieldLabel>& order) const;
};

/// Label vectors are identical element-for-element.
bool same_labels(const DistanceMatrix& a, const DistanceMatrix& b);

/// Labeled square matrix CSV: optional "# ..." comment lines, a header row of
/// m labels, then m rows of m values. Missing cells are written as "NA".
/// Labels containing ',', '"' or newlines are double-quoted.
void write_matrix_csv(const std::vector<FieldLabel>& labels, const Eigen::MatrixXd& values,
                      const std::filesystem::path& path, const std::vector<std::string>& comments = {});
void write_distance_csv(const DistanceMatrix& matrix, const std::filesystem::path& path,
                        const std::vector<std::string>& comments = {});
DistanceMatrix read_distance_csv(const std::filesystem::path& path, bool allow_missing = false);

/// Shortest decimal representation that round-trips a double.
std::string format_double(double v);

/// Minimal CSV field splitting with double-quote support.
std::vector<std::string> split_csv_line(const std::string& line);
std::string csv_escape(const std::string& field);

}  // namespace vizsig
