#include "vizsig/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "vizsig/rng.hpp"

namespace vizsig {

namespace {

void check_simplex(const std::vector<double>& p, const std::string& what) {
    double sum = 0.0;
    for (double v : p) {
        if (!(v >= 0.0) || !std::isfinite(v)) throw Error(Errc::invalid_argument, what + " has a negative or non-finite entry");
        sum += v;
    }
    if (std::abs(sum - 1.0) > 1e-9) {
        throw Error(Errc::invalid_argument, what + " sums to " + std::to_string(sum) + ", expected 1 +- 1e-9");
    }
}

std::size_t categorical(const std::vector<double>& cumulative, Rng& rng) {
    const double u = rng.uniform() * cumulative.back();
    const auto it = std::upper_bound(cumulative.begin(), cumulative.end(), u);
    return std::min(static_cast<std::size_t>(it - cumulative.begin()), cumulative.size() - 1);
}

std::vector<double> cumsum(const std::vector<double>& p) {
    std::vector<double> c(p.size());
    double acc = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) c[i] = acc += p[i];
    return c;
}

std::string word(std::size_t i) {
    // Three lowercase letters after a fixed prefix: "waaa", "waab", ...
    std::string s = "w";
    std::string tail;
    for (int r = 0; r < 3; ++r) {
        tail += static_cast<char>('a' + i % 26);
        i /= 26;
    }
    std::reverse(tail.begin(), tail.end());
    return s + tail;
}

}  // namespace

void SyntheticSpec::validate() const {
    if (fields.size() < 2) throw Error(Errc::invalid_argument, "synthetic spec: need at least 2 fields");
    if (centers.rows() < 1 || centers.cols() < 1) throw Error(Errc::invalid_argument, "synthetic spec: no cluster centers");
    if (figures_per_field == 0 || figures_per_paper == 0) throw Error(Errc::invalid_argument, "synthetic spec: counts must be positive");
    if (!(spread >= 0.0)) throw Error(Errc::invalid_argument, "synthetic spec: spread must be non-negative");
    if (first_year < 1900 || last_year > 2100 || first_year > last_year) {
        throw Error(Errc::invalid_argument, "synthetic spec: year range must lie within [1900, 2100]");
    }
    if (!(intra_field_citation >= 0.0 && intra_field_citation <= 1.0) || !(citation_temperature > 0.0)) {
        throw Error(Errc::invalid_argument, "synthetic spec: citation parameters out of range");
    }
    if (!caption_words.empty() && caption_words.size() != clusters()) {
        throw Error(Errc::invalid_argument, "synthetic spec: need one caption word group per cluster");
    }
    std::set<FieldLabel> names;
    for (const auto& f : fields) {
        if (!names.insert(f.name).second) throw Error(Errc::duplicate_id, "synthetic spec: duplicate field '" + f.name.name() + "'");
        if (f.proportions.size() != clusters()) {
            throw Error(Errc::invalid_argument, "synthetic spec: field '" + f.name.name() + "' needs " +
                                                    std::to_string(clusters()) + " proportions");
        }
        check_simplex(f.proportions, "proportions of field '" + f.name.name() + "'");
        if (!vocabulary.empty() || !f.token_probs.empty()) {
            if (f.token_probs.size() != vocabulary.size()) {
                throw Error(Errc::invalid_argument, "synthetic spec: token distribution of '" + f.name.name() +
                                                        "' does not match the vocabulary");
            }
            check_simplex(f.token_probs, "token distribution of field '" + f.name.name() + "'");
        }
    }
}

SyntheticCorpus generate_synthetic_corpus(const SyntheticSpec& spec, std::uint64_t seed) {
    spec.validate();
    Rng rng(seed);
    const std::size_t dim = static_cast<std::size_t>(spec.centers.cols());
    const std::size_t papers_per_field = (spec.figures_per_field + spec.figures_per_paper - 1) / spec.figures_per_paper;
    const int year_span = spec.last_year - spec.first_year + 1;
    const DistanceMatrix planted = planted_distance(spec);

    SyntheticCorpus corpus;
    std::vector<float> values;
    std::vector<std::string> ids;
    values.reserve(spec.fields.size() * spec.figures_per_field * dim);

    std::vector<std::vector<std::size_t>> field_papers(spec.fields.size());
    for (std::size_t fi = 0; fi < spec.fields.size(); ++fi) {
        const auto& field = spec.fields[fi];
        const auto prop_cdf = cumsum(field.proportions);
        const auto token_cdf = field.token_probs.empty() ? std::vector<double>{} : cumsum(field.token_probs);

        const std::size_t first_paper = corpus.papers.size();
        for (std::size_t j = 0; j < papers_per_field; ++j) {
            PaperMeta p;
            p.paper_id = field.name.name() + "/p" + std::to_string(j);
            p.field = field.name;
            p.year = spec.first_year + static_cast<int>(rng.index(static_cast<std::uint64_t>(year_span)));
            if (!token_cdf.empty()) {
                std::string text;
                for (std::size_t t = 0; t < spec.abstract_tokens; ++t) {
                    if (t) text += ' ';
                    text += spec.vocabulary[categorical(token_cdf, rng)];
                }
                p.abstract = std::move(text);
            }
            field_papers[fi].push_back(corpus.papers.size());
            corpus.papers.push_back(std::move(p));
        }

        for (std::size_t i = 0; i < spec.figures_per_field; ++i) {
            const std::size_t cluster = categorical(prop_cdf, rng);
            for (std::size_t j = 0; j < dim; ++j) {
                const double v = spec.centers(static_cast<Eigen::Index>(cluster), static_cast<Eigen::Index>(j)) +
                                 spec.spread * rng.normal();
                values.push_back(static_cast<float>(v));
            }
            const auto& paper = corpus.papers[first_paper + i / spec.figures_per_paper];
            FigureMeta fig;
            fig.figure_id = field.name.name() + "/fig" + std::to_string(i);
            fig.paper_id = paper.paper_id;
            fig.field = field.name;
            fig.year = paper.year;
            if (!spec.caption_words.empty()) {
                const auto& group = spec.caption_words[cluster];
                std::string caption;
                for (std::size_t t = 0; t < spec.caption_tokens; ++t) {
                    if (t) caption += ' ';
                    caption += group[rng.index(group.size())];
                }
                fig.caption = std::move(caption);
            }
            ids.push_back(fig.figure_id);
            corpus.planted_cluster.push_back(cluster);
            corpus.figures.push_back(std::move(fig));
        }
    }

    // Field-blocked citations: mostly within the field, otherwise towards
    // fields that are close in planted distance.
    const std::size_t m = spec.fields.size();
    std::vector<std::size_t> sorted_pos(m);
    for (std::size_t fi = 0; fi < m; ++fi) {
        const auto it = std::find(planted.labels.begin(), planted.labels.end(), spec.fields[fi].name);
        sorted_pos[fi] = static_cast<std::size_t>(it - planted.labels.begin());
    }
    std::vector<std::vector<double>> cross_cdf(m);
    for (std::size_t fi = 0; fi < m; ++fi) {
        std::vector<double> w(m, 0.0);
        for (std::size_t g = 0; g < m; ++g) {
            if (g == fi) continue;
            w[g] = std::exp(-planted(sorted_pos[fi], sorted_pos[g]) / spec.citation_temperature);
        }
        cross_cdf[fi] = cumsum(w);
    }
    for (std::size_t fi = 0; fi < m; ++fi) {
        for (std::size_t src : field_papers[fi]) {
            std::set<std::size_t> targets;
            for (std::size_t c = 0; c < spec.citations_per_paper; ++c) {
                const std::size_t g = rng.uniform() < spec.intra_field_citation ? fi : categorical(cross_cdf[fi], rng);
                const auto& pool = field_papers[g];
                const std::size_t dst = pool[rng.index(pool.size())];
                if (dst != src) targets.insert(dst);
            }
            for (std::size_t dst : targets) corpus.edges.emplace_back(corpus.papers[src].paper_id, corpus.papers[dst].paper_id);
        }
    }

    const std::size_t n = ids.size();
    corpus.embeddings = EmbeddingMatrix(n, dim, std::move(values), std::move(ids));
    return corpus;
}

DistanceMatrix planted_distance(const SyntheticSpec& spec) {
    std::vector<const SyntheticField*> sorted;
    for (const auto& f : spec.fields) sorted.push_back(&f);
    std::sort(sorted.begin(), sorted.end(), [](auto* a, auto* b) { return a->name < b->name; });
    const auto m = static_cast<Eigen::Index>(sorted.size());
    DistanceMatrix dm;
    for (auto* f : sorted) dm.labels.push_back(f->name);
    dm.values = Eigen::MatrixXd::Zero(m, m);
    for (Eigen::Index i = 0; i < m; ++i) {
        for (Eigen::Index j = i + 1; j < m; ++j) {
            double acc = 0.0;
            for (std::size_t c = 0; c < sorted[i]->proportions.size(); ++c) {
                const double d = sorted[i]->proportions[c] - sorted[j]->proportions[c];
                acc += d * d;
            }
            dm.values(i, j) = dm.values(j, i) = std::sqrt(acc);
        }
    }
    return dm;
}

SyntheticSpec default_synthetic_spec(std::size_t field_count, std::size_t clusters, std::size_t figures_per_field,
                                     std::size_t dim, std::uint64_t seed) {
    if (field_count < 2 || clusters < 1 || dim < 1) throw Error(Errc::invalid_argument, "synthetic spec: bad shape");
    Rng rng(derive_seed(seed, 0x5eed));
    SyntheticSpec spec;
    spec.figures_per_field = figures_per_field;
    spec.spread = 1.0;
    spec.centers.resize(static_cast<Eigen::Index>(clusters), static_cast<Eigen::Index>(dim));
    // Expected center separation is 12 spread units whatever the dimension.
    const double scale = 12.0 / std::sqrt(2.0 * static_cast<double>(dim));
    for (Eigen::Index c = 0; c < spec.centers.rows(); ++c)
        for (Eigen::Index j = 0; j < spec.centers.cols(); ++j) spec.centers(c, j) = scale * rng.normal();

    constexpr std::size_t kWordsPerCluster = 12;
    constexpr std::size_t kSharedWords = 20;
    for (std::size_t i = 0; i < clusters * kWordsPerCluster + kSharedWords; ++i) spec.vocabulary.push_back(word(i));
    spec.caption_words.resize(clusters);
    for (std::size_t c = 0; c < clusters; ++c)
        for (std::size_t w = 0; w < kWordsPerCluster; ++w) spec.caption_words[c].push_back("k" + std::to_string(c) + word(w));

    for (std::size_t f = 0; f < field_count; ++f) {
        SyntheticField field;
        field.name = FieldLabel("field" + std::to_string(f));
        double sum = 0.0;
        for (std::size_t c = 0; c < clusters; ++c) {
            field.proportions.push_back(std::exp(1.5 * rng.normal()));
            sum += field.proportions.back();
        }
        for (double& p : field.proportions) p /= sum;
        // Abstract words: 70% from the cluster groups in the field's mix, 30% shared.
        field.token_probs.assign(spec.vocabulary.size(), 0.0);
        for (std::size_t c = 0; c < clusters; ++c)
            for (std::size_t w = 0; w < kWordsPerCluster; ++w)
                field.token_probs[c * kWordsPerCluster + w] = 0.7 * field.proportions[c] / kWordsPerCluster;
        for (std::size_t w = 0; w < kSharedWords; ++w) field.token_probs[clusters * kWordsPerCluster + w] = 0.3 / kSharedWords;
        double total = 0.0;
        for (double p : field.token_probs) total += p;
        for (double& p : field.token_probs) p /= total;
        spec.fields.push_back(std::move(field));
    }
    return spec;
}

}  // namespace vizsig
