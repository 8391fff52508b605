#pragma once

#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "vizsig/corpus.hpp"
#include "vizsig/distance_matrix.hpp"

namespace vizsig::text {

inline constexpr double kDefaultAlpha = 0.5;

/// Lowercases ASCII letters and splits on every byte that is not an ASCII
/// letter or digit. Bytes >= 0x80 count as word characters so UTF-8 words
/// stay intact. Tokens shorter than two code points are dropped.
std::vector<std::string> tokenize(std::string_view text);

struct TokenDistribution {
    FieldLabel field;
    std::map<std::string, std::size_t> counts;
    std::size_t total = 0;
};

/// Unigram counts over every abstract of `field`.
TokenDistribution build_distribution(std::span<const PaperMeta> papers, const FieldLabel& field);

/// One distribution per field that has usable abstracts, sorted by label.
std::vector<TokenDistribution> build_all_distributions(std::span<const PaperMeta> papers);

/// Additively smoothed probabilities over `vocabulary`:
/// (count + alpha) / (total + alpha * |V|).
std::vector<double> smoothed_probabilities(const TokenDistribution& dist, std::span<const std::string> vocabulary,
                                           double alpha);

/// Entropy and cross entropy in bits.
double entropy_bits(std::span<const double> p);
double cross_entropy_bits(std::span<const double> p, std::span<const double> q);

struct JargonResult {
    std::vector<FieldLabel> labels;
    Eigen::VectorXd entropy;      // m, H(X_i)
    Eigen::MatrixXd cross_entropy;  // m x m, Q(p_i || p_j)
    Eigen::MatrixXd efficiency;   // m x m, E_ij = H_i / Q_ij (asymmetric)
    DistanceMatrix distance;      // 1 - (E_ij + E_ji) / 2
    std::vector<std::string> vocabulary;
};

/// Codebook efficiency between every pair of fields over the union vocabulary.
JargonResult jargon_distance(std::span<const TokenDistribution> distributions, double alpha = kDefaultAlpha);

/// "token,count" lines aggregated over all distributions, tokens sorted.
void write_vocabulary(std::span<const TokenDistribution> distributions, const std::filesystem::path& path);

}  // namespace vizsig::text
