#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "vizsig/corpus.hpp"

namespace vizsig::topics {

inline constexpr std::size_t kDefaultTopics = 5;
inline constexpr std::size_t kDefaultMaxIter = 200;
inline constexpr double kDefaultTol = 1e-4;
inline constexpr double kUpdateEpsilon = 1e-12;

struct TermDocMatrix {
    std::vector<std::string> vocabulary;   // sorted
    Eigen::MatrixXd weights;               // docs x terms, >= 0, rows L2-normalized
    std::vector<std::string> doc_ids;
    std::vector<int> doc_years;
    std::vector<std::string> dropped_docs; // empty caption or all-zero weight row
    bool raw_tf_fallback = false;
};

struct TermDocOptions {
    /// With a single document (or any corpus where every idf is 0) use
    /// L2-normalized raw term frequency instead of failing.
    bool fallback_raw_tf = false;
};

/// TF-IDF over tokenized captions: tf(d, x) * ln(N / df(x)), rows L2-normalized.
TermDocMatrix build_term_doc(std::span<const FigureMeta> captions, const TermDocOptions& options = {});

struct NmfOptions {
    std::size_t topics = kDefaultTopics;
    std::uint64_t seed = 0;
    std::size_t max_iter = kDefaultMaxIter;
    double tol = kDefaultTol;
};

struct TopicModel {
    Eigen::MatrixXd w;                    // docs x t
    Eigen::MatrixXd h;                    // t x terms
    std::vector<double> objective_trace;  // ||V - WH||_F: initial value, then one per iteration
    std::size_t iterations = 0;
};

/// Lee-Seung multiplicative updates for min ||V - WH||_F^2 from a seeded
/// uniform(0, 1) start. Stops at max_iter or when the relative objective
/// change drops below tol.
TopicModel nmf_fit(const Eigen::MatrixXd& v, const NmfOptions& options);
TopicModel nmf_fit(const TermDocMatrix& v, const NmfOptions& options);

double frobenius_objective(const Eigen::MatrixXd& v, const Eigen::MatrixXd& w, const Eigen::MatrixXd& h);

/// The `count` largest entries of H's row after L1 normalization; ties in
/// lexicographic token order.
std::vector<std::string> top_keywords(const TopicModel& model, std::span<const std::string> vocabulary,
                                      std::size_t topic, std::size_t count);

/// Hard argmax topic per document (ties to the lowest topic index).
std::vector<std::size_t> dominant_topics(const TopicModel& model);

/// Per year, the fraction of documents whose dominant topic is each topic.
std::map<int, std::vector<double>> topic_share_by_year(const TopicModel& model, std::span<const int> doc_years);

/// Documents with the largest loading on `topic`, best first.
std::vector<std::string> exemplar_docs(const TopicModel& model, std::span<const std::string> doc_ids,
                                       std::size_t topic, std::size_t count);

/// topic, keywords (pipe-separated), exemplars (pipe-separated), one column per year.
void write_topic_report(const TopicModel& model, const TermDocMatrix& tdm, std::size_t keyword_count,
                        const std::filesystem::path& path, const std::vector<std::string>& comments = {});

}  // namespace vizsig::topics
