#include "vizsig/inference.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <functional>
#include <numeric>

#include <json.hpp>

#include "vizsig/parallel.hpp"
#include "vizsig/rng.hpp"

namespace vizsig::inference {

std::vector<double> fractional_ranks(std::span<const double> values) {
    const std::size_t n = values.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
    std::vector<double> ranks(n);
    std::size_t i = 0;
    while (i < n) {
        std::size_t j = i;
        while (j + 1 < n && values[order[j + 1]] == values[order[i]]) ++j;
        const double avg = 0.5 * static_cast<double>(i + j) + 1.0;
        for (std::size_t t = i; t <= j; ++t) ranks[order[t]] = avg;
        i = j + 1;
    }
    return ranks;
}

double pearson(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size()) throw Error(Errc::dimension_mismatch, "correlation: length mismatch");
    const auto n = static_cast<double>(x.size());
    const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
    const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
    double sxy = 0.0, sxx = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxy += (x[i] - mx) * (y[i] - my);
        sxx += (x[i] - mx) * (x[i] - mx);
        syy += (y[i] - my) * (y[i] - my);
    }
    if (sxx == 0.0 || syy == 0.0) throw Error(Errc::degenerate, "correlation: zero variance");
    return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

double spearman(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size()) throw Error(Errc::dimension_mismatch, "spearman: length mismatch");
    if (x.size() < 3) throw Error(Errc::invalid_argument, "spearman: need at least 3 values");
    const auto rx = fractional_ranks(x);
    const auto ry = fractional_ranks(y);
    return pearson(rx, ry);
}

std::vector<double> upper_triangle(const Eigen::MatrixXd& m) {
    std::vector<double> out;
    out.reserve(static_cast<std::size_t>(m.rows() * (m.rows() - 1) / 2));
    for (Eigen::Index i = 0; i < m.rows(); ++i)
        for (Eigen::Index j = i + 1; j < m.cols(); ++j) out.push_back(m(i, j));
    return out;
}

std::string MantelReport::to_json() const {
    nlohmann::ordered_json j;
    j["r"] = r;
    j["p_value"] = p_value;
    if (std::isfinite(z_score)) {
        j["z_score"] = z_score;
    } else {
        j["z_score"] = nullptr;
    }
    j["permutations"] = permutations;
    j["seed"] = seed;
    j["mode"] = exhaustive ? "exhaustive" : "random";
    return j.dump();
}

namespace {

// Spearman between A's fixed upper-triangle ranks and B's ranks read through a
// joint row/column relabeling. The rank multiset of B is permutation
// invariant, so centering and scale are computed once.
class RankCorrelator {
public:
    RankCorrelator(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) : m_(a.rows()) {
        const auto ra = fractional_ranks(upper_triangle(a));
        const auto rb = fractional_ranks(upper_triangle(b));
        const double mean = (static_cast<double>(ra.size()) + 1.0) / 2.0;
        a_centered_.resize(ra.size());
        b_ranks_ = Eigen::MatrixXd::Zero(m_, m_);
        std::size_t t = 0;
        double saa = 0.0, sbb = 0.0;
        for (Eigen::Index i = 0; i < m_; ++i) {
            for (Eigen::Index j = i + 1; j < m_; ++j, ++t) {
                a_centered_[t] = ra[t] - mean;
                b_ranks_(i, j) = b_ranks_(j, i) = rb[t] - mean;
                saa += a_centered_[t] * a_centered_[t];
                sbb += (rb[t] - mean) * (rb[t] - mean);
            }
        }
        if (saa == 0.0 || sbb == 0.0) throw Error(Errc::degenerate, "mantel: a matrix has constant off-diagonal entries");
        scale_ = std::sqrt(saa * sbb);
    }

    double operator()(std::span<const std::size_t> perm) const {
        double s = 0.0;
        std::size_t t = 0;
        for (Eigen::Index i = 0; i < m_; ++i) {
            const auto pi = static_cast<Eigen::Index>(perm[i]);
            for (Eigen::Index j = i + 1; j < m_; ++j, ++t) s += a_centered_[t] * b_ranks_(pi, static_cast<Eigen::Index>(perm[j]));
        }
        return std::clamp(s / scale_, -1.0, 1.0);
    }

private:
    Eigen::Index m_;
    std::vector<double> a_centered_;
    Eigen::MatrixXd b_ranks_;
    double scale_ = 1.0;
};

// Permutation correlations that match r_obs up to rounding count as ties.
constexpr double kTieSlack = 1e-12;

}  // namespace

MantelReport mantel_test(const DistanceMatrix& a, const DistanceMatrix& b, std::size_t permutations,
                         std::uint64_t seed) {
    a.validate();
    b.validate();
    if (!same_labels(a, b)) throw Error(Errc::invalid_argument, "mantel: matrices have different labels or ordering");
    const std::size_t m = a.size();
    if (m < 4) throw Error(Errc::invalid_argument, "mantel: need at least 4 labels");
    if (permutations < 99) throw Error(Errc::invalid_argument, "mantel: need at least 99 permutations");

    const RankCorrelator corr(a.values, b.values);
    std::vector<std::size_t> identity(m);
    std::iota(identity.begin(), identity.end(), std::size_t{0});

    MantelReport report;
    report.seed = seed;
    report.r = corr(identity);

    double factorial = 1.0;
    for (std::size_t i = 2; i <= m; ++i) factorial *= static_cast<double>(i);

    std::vector<double> r_perm;
    if (factorial <= static_cast<double>(permutations)) {
        report.exhaustive = true;
        std::vector<std::size_t> perm = identity;
        do {
            r_perm.push_back(corr(perm));
        } while (std::next_permutation(perm.begin(), perm.end()));
    } else {
        r_perm.resize(permutations);
        parallel_for(permutations, [&](std::size_t t) {
            std::vector<std::size_t> perm = identity;
            Rng rng(derive_seed(seed, t));
            rng.shuffle(perm.begin(), perm.end());
            r_perm[t] = corr(perm);
        });
    }
    report.permutations = r_perm.size();

    std::size_t at_least = 0;
    for (double r : r_perm)
        if (r >= report.r - kTieSlack) ++at_least;
    if (report.exhaustive) {
        report.p_value = static_cast<double>(at_least) / static_cast<double>(r_perm.size());
    } else {
        report.p_value = static_cast<double>(1 + at_least) / static_cast<double>(1 + r_perm.size());
    }

    const double mean = std::accumulate(r_perm.begin(), r_perm.end(), 0.0) / static_cast<double>(r_perm.size());
    double ss = 0.0;
    for (double r : r_perm) ss += (r - mean) * (r - mean);
    const double sd = r_perm.size() > 1 ? std::sqrt(ss / static_cast<double>(r_perm.size() - 1)) : 0.0;
    report.z_score = sd > 0.0 ? (report.r - mean) / sd : std::nan("");
    return report;
}

Dendrogram upgma(const DistanceMatrix& d) {
    d.validate();
    const std::size_t m = d.size();
    if (m < 2) throw Error(Errc::invalid_argument, "upgma: need at least 2 labels");

    // Slot s holds the active cluster whose smallest leaf is s.
    Eigen::MatrixXd dist = d.values;
    std::vector<char> active(m, 1);
    std::vector<std::size_t> node(m), size(m, 1);
    std::iota(node.begin(), node.end(), std::size_t{0});

    Dendrogram out;
    out.leaves = d.labels;
    for (std::size_t step = 0; step + 1 < m; ++step) {
        std::size_t bi = m, bj = m;
        double best = std::numeric_limits<double>::infinity();
        for (std::size_t i = 0; i < m; ++i) {
            if (!active[i]) continue;
            for (std::size_t j = i + 1; j < m; ++j) {
                if (!active[j]) continue;
                const double v = dist(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
                if (v < best) {
                    best = v;
                    bi = i;
                    bj = j;
                }
            }
        }
        const std::size_t na = size[bi], nb = size[bj];
        out.merges.push_back(Merge{node[bi], node[bj], best, best / 2.0, na + nb});
        for (std::size_t c = 0; c < m; ++c) {
            if (!active[c] || c == bi || c == bj) continue;
            const auto ci = static_cast<Eigen::Index>(c);
            const double v = (static_cast<double>(na) * dist(static_cast<Eigen::Index>(bi), ci) +
                              static_cast<double>(nb) * dist(static_cast<Eigen::Index>(bj), ci)) /
                             static_cast<double>(na + nb);
            dist(static_cast<Eigen::Index>(bi), ci) = dist(ci, static_cast<Eigen::Index>(bi)) = v;
        }
        active[bj] = 0;
        size[bi] = na + nb;
        node[bi] = m + step;
    }
    return out;
}

namespace {

std::string newick_label(const std::string& name) {
    if (name.find_first_of(" \t\n()[]':;,") == std::string::npos) return name;
    std::string out = "'";
    for (char c : name) {
        if (c == '\'') out += '\'';
        out += c;
    }
    out += '\'';
    return out;
}

}  // namespace

std::string Dendrogram::to_newick() const {
    const std::size_t m = leaves.size();
    std::function<double(std::size_t)> height = [&](std::size_t node) {
        return node < m ? 0.0 : merges[node - m].height;
    };
    std::function<std::string(std::size_t)> render = [&](std::size_t node) -> std::string {
        if (node < m) return newick_label(leaves[node].name());
        const auto& mg = merges[node - m];
        const double h = mg.height;
        return "(" + render(mg.node_a) + ":" + format_double(h - height(mg.node_a)) + "," + render(mg.node_b) + ":" +
               format_double(h - height(mg.node_b)) + ")";
    };
    if (merges.empty()) return m == 1 ? newick_label(leaves[0].name()) + ";" : ";";
    return render(m + merges.size() - 1) + ";";
}

void Dendrogram::write_merge_csv(const std::filesystem::path& path) const {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw Error(Errc::io, "cannot open '" + path.string() + "' for writing");
    for (std::size_t i = 0; i < leaves.size(); ++i) out << "# leaf " << i << " = " << leaves[i].name() << '\n';
    out << "step,node_a,node_b,merge_distance,height,member_count\n";
    for (std::size_t t = 0; t < merges.size(); ++t) {
        const auto& mg = merges[t];
        out << t << ',' << mg.node_a << ',' << mg.node_b << ',' << format_double(mg.distance) << ','
            << format_double(mg.height) << ',' << mg.members << '\n';
    }
    if (!out) throw Error(Errc::io, "write failed for '" + path.string() + "'");
}

DistanceMatrix cophenetic(const Dendrogram& dendrogram) {
    const std::size_t m = dendrogram.leaves.size();
    if (dendrogram.merges.size() + 1 != m) throw Error(Errc::invalid_argument, "cophenetic: dendrogram is incomplete");
    std::vector<std::vector<std::size_t>> members(m + dendrogram.merges.size());
    for (std::size_t i = 0; i < m; ++i) members[i] = {i};
    DistanceMatrix out{dendrogram.leaves, Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(m))};
    for (std::size_t t = 0; t < dendrogram.merges.size(); ++t) {
        const auto& mg = dendrogram.merges[t];
        if (mg.node_a >= m + t || mg.node_b >= m + t) throw Error(Errc::invalid_argument, "cophenetic: merge references a later node");
        for (std::size_t a : members[mg.node_a])
            for (std::size_t b : members[mg.node_b])
                out.values(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b)) =
                    out.values(static_cast<Eigen::Index>(b), static_cast<Eigen::Index>(a)) = mg.distance;
        auto& merged = members[m + t];
        merged = members[mg.node_a];
        merged.insert(merged.end(), members[mg.node_b].begin(), members[mg.node_b].end());
    }
    return out;
}

Eigen::MatrixXd discrepancy(const DistanceMatrix& a, const DistanceMatrix& b) {
    a.validate();
    b.validate();
    if (!same_labels(a, b)) throw Error(Errc::invalid_argument, "discrepancy: matrices have different labels or ordering");
    const auto m = static_cast<Eigen::Index>(a.size());
    auto normalize = [m](const Eigen::MatrixXd& v, const char* which) {
        double lo = std::numeric_limits<double>::infinity(), hi = -lo;
        for (Eigen::Index i = 0; i < m; ++i)
            for (Eigen::Index j = 0; j < m; ++j)
                if (i != j) {
                    lo = std::min(lo, v(i, j));
                    hi = std::max(hi, v(i, j));
                }
        if (!(hi > lo)) {
            throw Error(Errc::degenerate, std::string("discrepancy: matrix ") + which +
                                              " has constant off-diagonal entries; normalization undefined");
        }
        Eigen::MatrixXd out = (v.array() - lo) / (hi - lo);
        out.diagonal().setZero();
        return out;
    };
    if (m < 2) throw Error(Errc::invalid_argument, "discrepancy: need at least 2 labels");
    Eigen::MatrixXd out = normalize(b.values, "B") - normalize(a.values, "A");
    out.diagonal().setZero();
    return out;
}

}  // namespace vizsig::inference
