#include "vizsig/textmetrics.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>

#include "vizsig/parallel.hpp"

namespace vizsig::text {

namespace {

bool is_word_byte(unsigned char c) {
    return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') || c >= 0x80;
}

std::size_t code_points(std::string_view s) {
    std::size_t n = 0;
    for (unsigned char c : s)
        if ((c & 0xC0) != 0x80) ++n;
    return n;
}

}  // namespace

std::vector<std::string> tokenize(std::string_view text) {
    std::vector<std::string> tokens;
    std::string cur;
    auto flush = [&] {
        if (code_points(cur) >= 2) tokens.push_back(cur);
        cur.clear();
    };
    for (unsigned char c : text) {
        if (is_word_byte(c)) {
            cur += static_cast<char>((c >= 'A' && c <= 'Z') ? c - 'A' + 'a' : c);
        } else {
            flush();
        }
    }
    flush();
    return tokens;
}

TokenDistribution build_distribution(std::span<const PaperMeta> papers, const FieldLabel& field) {
    TokenDistribution dist{field, {}, 0};
    for (const auto& p : papers) {
        if (p.field != field || !p.abstract) continue;
        for (auto& tok : tokenize(*p.abstract)) {
            ++dist.counts[std::move(tok)];
            ++dist.total;
        }
    }
    if (dist.total == 0) {
        throw Error(Errc::degenerate, "field '" + field.name() + "' has no usable abstract tokens");
    }
    return dist;
}

std::vector<TokenDistribution> build_all_distributions(std::span<const PaperMeta> papers) {
    std::set<FieldLabel> fields;
    for (const auto& p : papers) fields.insert(p.field);
    std::vector<FieldLabel> ordered(fields.begin(), fields.end());
    std::vector<TokenDistribution> all(ordered.size());
    parallel_for(ordered.size(), [&](std::size_t i) {
        all[i].field = ordered[i];
        for (const auto& p : papers) {
            if (p.field != ordered[i] || !p.abstract) continue;
            for (auto& tok : tokenize(*p.abstract)) {
                ++all[i].counts[std::move(tok)];
                ++all[i].total;
            }
        }
    });
    std::vector<TokenDistribution> out;
    for (auto& d : all)
        if (d.total > 0) out.push_back(std::move(d));
    return out;
}

std::vector<double> smoothed_probabilities(const TokenDistribution& dist, std::span<const std::string> vocabulary,
                                           double alpha) {
    const double denom = static_cast<double>(dist.total) + alpha * static_cast<double>(vocabulary.size());
    std::vector<double> p(vocabulary.size());
    for (std::size_t t = 0; t < vocabulary.size(); ++t) {
        auto it = dist.counts.find(vocabulary[t]);
        const double c = it == dist.counts.end() ? 0.0 : static_cast<double>(it->second);
        p[t] = (c + alpha) / denom;
    }
    return p;
}

double entropy_bits(std::span<const double> p) { return cross_entropy_bits(p, p); }

double cross_entropy_bits(std::span<const double> p, std::span<const double> q) {
    if (p.size() != q.size()) throw Error(Errc::dimension_mismatch, "cross entropy: length mismatch");
    double acc = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) {
        if (p[i] == 0.0) continue;
        acc -= p[i] * std::log2(q[i]);
    }
    return acc;
}

JargonResult jargon_distance(std::span<const TokenDistribution> distributions, double alpha) {
    if (!(alpha > 0.0)) throw Error(Errc::invalid_argument, "jargon distance: alpha must be > 0");
    if (distributions.size() < 2) throw Error(Errc::invalid_argument, "jargon distance: need at least 2 fields");

    std::vector<const TokenDistribution*> sorted;
    for (const auto& d : distributions) {
        if (d.total == 0) throw Error(Errc::degenerate, "jargon distance: empty distribution for '" + d.field.name() + "'");
        sorted.push_back(&d);
    }
    std::sort(sorted.begin(), sorted.end(), [](auto* a, auto* b) { return a->field < b->field; });
    for (std::size_t i = 1; i < sorted.size(); ++i)
        if (sorted[i]->field == sorted[i - 1]->field)
            throw Error(Errc::duplicate_id, "jargon distance: duplicate field '" + sorted[i]->field.name() + "'");

    JargonResult r;
    std::set<std::string> vocab;
    for (auto* d : sorted) {
        r.labels.push_back(d->field);
        for (const auto& [tok, _] : d->counts) vocab.insert(tok);
    }
    r.vocabulary.assign(vocab.begin(), vocab.end());

    const std::size_t m = sorted.size();
    std::vector<std::vector<double>> probs(m);
    parallel_for(m, [&](std::size_t i) { probs[i] = smoothed_probabilities(*sorted[i], r.vocabulary, alpha); });

    const auto mi = static_cast<Eigen::Index>(m);
    r.entropy.resize(mi);
    r.cross_entropy.resize(mi, mi);
    r.efficiency.resize(mi, mi);
    for (std::size_t i = 0; i < m; ++i) r.entropy(static_cast<Eigen::Index>(i)) = entropy_bits(probs[i]);
    parallel_for(m * m, [&](std::size_t idx) {
        const std::size_t i = idx / m;
        const std::size_t j = idx % m;
        const double q = i == j ? r.entropy(static_cast<Eigen::Index>(i)) : cross_entropy_bits(probs[i], probs[j]);
        r.cross_entropy(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = q;
        r.efficiency(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
            // q = 0 only with a one-token vocabulary, where both fields are the same point mass.
            i == j || q == 0.0 ? 1.0 : r.entropy(static_cast<Eigen::Index>(i)) / q;
    });

    r.distance.labels = r.labels;
    r.distance.values = Eigen::MatrixXd::Zero(mi, mi);
    for (Eigen::Index i = 0; i < mi; ++i) {
        for (Eigen::Index j = i + 1; j < mi; ++j) {
            // Gibbs: E <= 1 up to rounding; clamp the tiny negative residue.
            const double d = std::max(0.0, 1.0 - 0.5 * (r.efficiency(i, j) + r.efficiency(j, i)));
            r.distance.values(i, j) = r.distance.values(j, i) = d;
        }
    }
    return r;
}

void write_vocabulary(std::span<const TokenDistribution> distributions, const std::filesystem::path& path) {
    std::map<std::string, std::size_t> total;
    for (const auto& d : distributions)
        for (const auto& [tok, c] : d.counts) total[tok] += c;
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw Error(Errc::io, "cannot open '" + path.string() + "' for writing");
    for (const auto& [tok, c] : total) out << tok << ',' << c << '\n';
    if (!out) throw Error(Errc::io, "write failed for '" + path.string() + "'");
}

}  // namespace vizsig::text
