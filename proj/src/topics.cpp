#include "vizsig/topics.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <set>
#include <unordered_map>

#include "vizsig/distance_matrix.hpp"
#include "vizsig/rng.hpp"
#include "vizsig/textmetrics.hpp"

namespace vizsig::topics {

TermDocMatrix build_term_doc(std::span<const FigureMeta> captions, const TermDocOptions& options) {
    TermDocMatrix tdm;
    std::vector<std::vector<std::string>> docs;
    std::set<std::string> vocab;
    for (const auto& f : captions) {
        auto tokens = f.caption ? text::tokenize(*f.caption) : std::vector<std::string>{};
        if (tokens.empty()) {
            tdm.dropped_docs.push_back(f.figure_id);
            continue;
        }
        vocab.insert(tokens.begin(), tokens.end());
        tdm.doc_ids.push_back(f.figure_id);
        tdm.doc_years.push_back(f.year);
        docs.push_back(std::move(tokens));
    }
    if (docs.empty()) throw Error(Errc::degenerate, "term-doc: all captions are empty");
    tdm.vocabulary.assign(vocab.begin(), vocab.end());
    std::unordered_map<std::string, Eigen::Index> column;
    for (std::size_t t = 0; t < tdm.vocabulary.size(); ++t) column[tdm.vocabulary[t]] = static_cast<Eigen::Index>(t);

    const auto n_docs = static_cast<Eigen::Index>(docs.size());
    const auto n_terms = static_cast<Eigen::Index>(tdm.vocabulary.size());
    Eigen::MatrixXd tf = Eigen::MatrixXd::Zero(n_docs, n_terms);
    for (Eigen::Index d = 0; d < n_docs; ++d)
        for (const auto& tok : docs[static_cast<std::size_t>(d)]) tf(d, column[tok]) += 1.0;

    Eigen::VectorXd idf(n_terms);
    bool any_positive = false;
    for (Eigen::Index t = 0; t < n_terms; ++t) {
        const double df = static_cast<double>((tf.col(t).array() > 0.0).count());
        idf(t) = std::log(static_cast<double>(n_docs) / df);
        if (idf(t) > 0.0) any_positive = true;
    }
    Eigen::MatrixXd w;
    if (any_positive) {
        w = tf * idf.asDiagonal();
    } else if (options.fallback_raw_tf) {
        tdm.raw_tf_fallback = true;
        w = tf;
    } else {
        throw Error(Errc::degenerate, "term-doc: degenerate idf (every term occurs in every document); "
                                      "enable the raw-tf fallback to proceed");
    }

    std::vector<Eigen::Index> keep;
    for (Eigen::Index d = 0; d < n_docs; ++d) {
        const double norm = w.row(d).norm();
        if (norm > 0.0) {
            w.row(d) /= norm;
            keep.push_back(d);
        } else {
            tdm.dropped_docs.push_back(tdm.doc_ids[static_cast<std::size_t>(d)]);
        }
    }
    tdm.weights.resize(static_cast<Eigen::Index>(keep.size()), n_terms);
    std::vector<std::string> ids;
    std::vector<int> years;
    for (std::size_t r = 0; r < keep.size(); ++r) {
        tdm.weights.row(static_cast<Eigen::Index>(r)) = w.row(keep[r]);
        ids.push_back(tdm.doc_ids[static_cast<std::size_t>(keep[r])]);
        years.push_back(tdm.doc_years[static_cast<std::size_t>(keep[r])]);
    }
    tdm.doc_ids = std::move(ids);
    tdm.doc_years = std::move(years);
    return tdm;
}

double frobenius_objective(const Eigen::MatrixXd& v, const Eigen::MatrixXd& w, const Eigen::MatrixXd& h) {
    return (v - w * h).norm();
}

TopicModel nmf_fit(const Eigen::MatrixXd& v, const NmfOptions& options) {
    const auto docs = v.rows();
    const auto terms = v.cols();
    const auto t = static_cast<Eigen::Index>(options.topics);
    if (t < 1 || t > std::min(docs, terms)) {
        throw Error(Errc::invalid_argument, "nmf: topics=" + std::to_string(options.topics) +
                                                " must be in [1, min(docs, terms)] = [1, " +
                                                std::to_string(std::min(docs, terms)) + "]");
    }
    if ((v.array() < 0.0).any() || !v.allFinite()) throw Error(Errc::invalid_argument, "nmf: input must be finite and non-negative");
    if (options.max_iter < 1) throw Error(Errc::invalid_argument, "nmf: max_iter must be at least 1");

    TopicModel model;
    Rng rng(options.seed);
    model.w.resize(docs, t);
    model.h.resize(t, terms);
    for (Eigen::Index i = 0; i < docs; ++i)
        for (Eigen::Index c = 0; c < t; ++c) model.w(i, c) = rng.uniform();
    for (Eigen::Index c = 0; c < t; ++c)
        for (Eigen::Index j = 0; j < terms; ++j) model.h(c, j) = rng.uniform();

    double prev = frobenius_objective(v, model.w, model.h);
    model.objective_trace.push_back(prev);
    for (std::size_t iter = 0; iter < options.max_iter; ++iter) {
        const Eigen::MatrixXd wt_v = model.w.transpose() * v;
        const Eigen::MatrixXd wt_wh = (model.w.transpose() * model.w) * model.h;
        model.h.array() *= wt_v.array() / (wt_wh.array() + kUpdateEpsilon);

        const Eigen::MatrixXd v_ht = v * model.h.transpose();
        const Eigen::MatrixXd w_hht = model.w * (model.h * model.h.transpose());
        model.w.array() *= v_ht.array() / (w_hht.array() + kUpdateEpsilon);

        const double cur = frobenius_objective(v, model.w, model.h);
        if (!std::isfinite(cur)) throw Error(Errc::numerical, "nmf: objective became non-finite");
        model.objective_trace.push_back(cur);
        model.iterations = iter + 1;
        const double rel = prev > 0.0 ? std::abs(prev - cur) / prev : 0.0;
        prev = cur;
        if (rel < options.tol) break;
    }
    return model;
}

TopicModel nmf_fit(const TermDocMatrix& v, const NmfOptions& options) { return nmf_fit(v.weights, options); }

std::vector<std::string> top_keywords(const TopicModel& model, std::span<const std::string> vocabulary,
                                      std::size_t topic, std::size_t count) {
    if (topic >= static_cast<std::size_t>(model.h.rows())) throw Error(Errc::invalid_argument, "top keywords: topic index out of range");
    if (vocabulary.size() != static_cast<std::size_t>(model.h.cols())) {
        throw Error(Errc::dimension_mismatch, "top keywords: vocabulary size does not match H");
    }
    if (count > vocabulary.size()) throw Error(Errc::invalid_argument, "top keywords: count exceeds vocabulary size");
    Eigen::RowVectorXd row = model.h.row(static_cast<Eigen::Index>(topic));
    const double l1 = row.sum();
    if (l1 > 0.0) row /= l1;
    std::vector<std::size_t> order(vocabulary.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        const double va = row(static_cast<Eigen::Index>(a));
        const double vb = row(static_cast<Eigen::Index>(b));
        if (va != vb) return va > vb;
        return vocabulary[a] < vocabulary[b];
    });
    std::vector<std::string> out;
    for (std::size_t i = 0; i < count; ++i) out.push_back(vocabulary[order[i]]);
    return out;
}

std::vector<std::size_t> dominant_topics(const TopicModel& model) {
    std::vector<std::size_t> out(static_cast<std::size_t>(model.w.rows()));
    for (Eigen::Index d = 0; d < model.w.rows(); ++d) {
        Eigen::Index best = 0;
        for (Eigen::Index c = 1; c < model.w.cols(); ++c)
            if (model.w(d, c) > model.w(d, best)) best = c;
        out[static_cast<std::size_t>(d)] = static_cast<std::size_t>(best);
    }
    return out;
}

std::map<int, std::vector<double>> topic_share_by_year(const TopicModel& model, std::span<const int> doc_years) {
    if (doc_years.size() != static_cast<std::size_t>(model.w.rows())) {
        throw Error(Errc::dimension_mismatch, "topic share: one year per document required");
    }
    const auto t = static_cast<std::size_t>(model.w.cols());
    const auto topic = dominant_topics(model);
    std::map<int, std::vector<std::size_t>> counts;
    for (std::size_t d = 0; d < topic.size(); ++d) {
        auto& c = counts[doc_years[d]];
        if (c.empty()) c.assign(t, 0);
        ++c[topic[d]];
    }
    std::map<int, std::vector<double>> out;
    for (const auto& [year, c] : counts) {
        const double total = static_cast<double>(std::accumulate(c.begin(), c.end(), std::size_t{0}));
        auto& r = out[year];
        for (std::size_t v : c) r.push_back(static_cast<double>(v) / total);
    }
    return out;
}

std::vector<std::string> exemplar_docs(const TopicModel& model, std::span<const std::string> doc_ids,
                                       std::size_t topic, std::size_t count) {
    if (topic >= static_cast<std::size_t>(model.w.cols())) throw Error(Errc::invalid_argument, "exemplars: topic index out of range");
    std::vector<std::size_t> order(doc_ids.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    const auto c = static_cast<Eigen::Index>(topic);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return model.w(static_cast<Eigen::Index>(a), c) > model.w(static_cast<Eigen::Index>(b), c);
    });
    std::vector<std::string> out;
    for (std::size_t i = 0; i < std::min(count, order.size()); ++i) out.push_back(doc_ids[order[i]]);
    return out;
}

void write_topic_report(const TopicModel& model, const TermDocMatrix& tdm, std::size_t keyword_count,
                        const std::filesystem::path& path, const std::vector<std::string>& comments) {
    const auto shares = topic_share_by_year(model, tdm.doc_years);
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw Error(Errc::io, "cannot open '" + path.string() + "' for writing");
    for (const auto& c : comments) out << "# " << c << '\n';
    out << "topic,keywords,exemplars";
    for (const auto& [year, _] : shares) out << ',' << year;
    out << '\n';
    const std::size_t kw = std::min(keyword_count, tdm.vocabulary.size());
    for (std::size_t t = 0; t < static_cast<std::size_t>(model.h.rows()); ++t) {
        const auto words = top_keywords(model, tdm.vocabulary, t, kw);
        const auto docs = exemplar_docs(model, tdm.doc_ids, t, 3);
        std::string joined, ex;
        for (const auto& w : words) joined += (joined.empty() ? "" : "|") + w;
        for (const auto& d : docs) ex += (ex.empty() ? "" : "|") + d;
        out << t << ',' << csv_escape(joined) << ',' << csv_escape(ex);
        for (const auto& [year, r] : shares) out << ',' << format_double(r[t]);
        out << '\n';
    }
    if (!out) throw Error(Errc::io, "write failed for '" + path.string() + "'");
}

}  // namespace vizsig::topics
