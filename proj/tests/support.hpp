#pragma once

// Shared helpers for the test binaries: scratch directories and small
// independent reference implementations used as oracles.

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <limits>
#include <map>
#include <random>
#include <set>
#include <numeric>
#include <queue>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "vizsig/corpus.hpp"
#include "vizsig/distance_matrix.hpp"
#include "vizsig/synthetic.hpp"

namespace testing {

using vizsig::CitationEdge;
using vizsig::FieldLabel;
using vizsig::PaperMeta;

inline std::filesystem::path scratch(const std::string& name) {
    const char* env = std::getenv("VIZSIG_TMP");
    std::filesystem::path base = env ? env : std::filesystem::temp_directory_path() / "vizsig_tests";
    auto dir = base / name;
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    return dir;
}

inline std::string slurp(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), {}};
}

inline void spit(const std::filesystem::path& p, const std::string& text) {
    std::ofstream out(p, std::ios::binary);
    out << text;
}

inline vizsig::DistanceMatrix make_dm(const std::vector<std::string>& names, const Eigen::MatrixXd& values) {
    vizsig::DistanceMatrix d;
    for (const auto& n : names) d.labels.emplace_back(n);
    d.values = values;
    return d;
}

inline std::vector<std::string> letters(std::size_t m) {
    std::vector<std::string> out;
    for (std::size_t i = 0; i < m; ++i) out.push_back(std::string(1, static_cast<char>('A' + i)));
    return out;
}

// Writes the corpus files the pipeline reads and the planted matrix.
inline void write_corpus(const vizsig::SyntheticSpec& spec, const vizsig::SyntheticCorpus& c,
                         const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    vizsig::write_embeddings(c.embeddings, dir / "embeddings.vsig");
    vizsig::write_figure_metadata(c.figures, dir / "figures.jsonl");
    vizsig::write_paper_metadata(c.papers, dir / "papers.jsonl");
    vizsig::write_edges(c.edges, dir / "edges.csv");
    vizsig::write_distance_csv(vizsig::planted_distance(spec), dir / "planted_distance.csv");
}

// --- oracles ---------------------------------------------------------------

// Cyclic Jacobi eigenvalue iteration on a symmetric matrix, eigenvalues
// sorted descending. Deliberately unrelated to the SVD used in the library.
inline std::vector<double> jacobi_eigenvalues(std::vector<std::vector<long double>> a) {
    const std::size_t n = a.size();
    for (int sweep = 0; sweep < 100; ++sweep) {
        long double off = 0;
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = i + 1; j < n; ++j) off += a[i][j] * a[i][j];
        if (off < 1e-36L) break;
        for (std::size_t p = 0; p < n; ++p) {
            for (std::size_t q = p + 1; q < n; ++q) {
                if (std::fabs(a[p][q]) < 1e-300L) continue;
                const long double theta = (a[q][q] - a[p][p]) / (2 * a[p][q]);
                const long double t = (theta >= 0 ? 1 : -1) / (std::fabs(theta) + std::sqrt(theta * theta + 1));
                const long double c = 1 / std::sqrt(t * t + 1), s = t * c;
                for (std::size_t k = 0; k < n; ++k) {
                    const long double akp = a[k][p], akq = a[k][q];
                    a[k][p] = c * akp - s * akq;
                    a[k][q] = s * akp + c * akq;
                }
                for (std::size_t k = 0; k < n; ++k) {
                    const long double apk = a[p][k], aqk = a[q][k];
                    a[p][k] = c * apk - s * aqk;
                    a[q][k] = s * apk + c * aqk;
                }
            }
        }
    }
    std::vector<double> ev;
    for (std::size_t i = 0; i < n; ++i) ev.push_back(static_cast<double>(a[i][i]));
    std::sort(ev.rbegin(), ev.rend());
    return ev;
}

// Sample covariance (n - 1 denominator) accumulated in long double.
inline std::vector<std::vector<long double>> covariance(const Eigen::MatrixXd& x) {
    const auto n = x.rows(), d = x.cols();
    std::vector<long double> mean(static_cast<std::size_t>(d), 0);
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j < d; ++j) mean[j] += x(i, j);
    for (auto& m : mean) m /= n;
    std::vector<std::vector<long double>> c(d, std::vector<long double>(d, 0));
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index a = 0; a < d; ++a)
            for (Eigen::Index b = 0; b < d; ++b) c[a][b] += (x(i, a) - mean[a]) * (x(i, b) - mean[b]);
    for (auto& row : c)
        for (auto& v : row) v /= (n - 1);
    return c;
}

// Floyd-Warshall on an undirected unweighted graph; -1 = unreachable.
inline std::vector<std::vector<int>> all_pairs_hops(std::size_t n, const std::vector<std::pair<std::size_t, std::size_t>>& edges) {
    const int inf = std::numeric_limits<int>::max() / 4;
    std::vector<std::vector<int>> d(n, std::vector<int>(n, inf));
    for (std::size_t i = 0; i < n; ++i) d[i][i] = 0;
    for (auto [a, b] : edges) {
        if (a == b) continue;
        d[a][b] = d[b][a] = 1;
    }
    for (std::size_t k = 0; k < n; ++k)
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < n; ++j)
                if (d[i][k] + d[k][j] < d[i][j]) d[i][j] = d[i][k] + d[k][j];
    for (auto& row : d)
        for (auto& v : row)
            if (v >= inf) v = -1;
    return d;
}

// Textbook Spearman: rank by counting (average rank for ties), then Pearson.
inline double spearman_oracle(const std::vector<double>& x, const std::vector<double>& y) {
    auto ranks = [](const std::vector<double>& v) {
        std::vector<long double> r(v.size());
        for (std::size_t i = 0; i < v.size(); ++i) {
            long double less = 0, equal = 0;
            for (double w : v) {
                if (w < v[i]) ++less;
                if (w == v[i]) ++equal;
            }
            r[i] = less + (equal + 1) / 2;
        }
        return r;
    };
    const auto rx = ranks(x), ry = ranks(y);
    const long double n = static_cast<long double>(x.size());
    long double mx = 0, my = 0;
    for (std::size_t i = 0; i < x.size(); ++i) mx += rx[i], my += ry[i];
    mx /= n, my /= n;
    long double sxy = 0, sxx = 0, syy = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxy += (rx[i] - mx) * (ry[i] - my);
        sxx += (rx[i] - mx) * (rx[i] - mx);
        syy += (ry[i] - my) * (ry[i] - my);
    }
    return static_cast<double>(sxy / std::sqrt(sxx * syy));
}

inline std::vector<double> upper(const Eigen::MatrixXd& m) {
    std::vector<double> out;
    for (Eigen::Index i = 0; i < m.rows(); ++i)
        for (Eigen::Index j = i + 1; j < m.cols(); ++j) out.push_back(m(i, j));
    return out;
}

// Exact Mantel p over every joint relabeling of B: #{r_perm >= r_obs} / m!.
inline double exhaustive_mantel_p(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
    const auto m = a.rows();
    const double r_obs = spearman_oracle(upper(a), upper(b));
    std::vector<Eigen::Index> perm(static_cast<std::size_t>(m));
    std::iota(perm.begin(), perm.end(), 0);
    std::size_t ge = 0, total = 0;
    do {
        Eigen::MatrixXd pb(m, m);
        for (Eigen::Index i = 0; i < m; ++i)
            for (Eigen::Index j = 0; j < m; ++j) pb(i, j) = b(perm[i], perm[j]);
        if (spearman_oracle(upper(a), upper(pb)) >= r_obs - 1e-12) ++ge;
        ++total;
    } while (std::next_permutation(perm.begin(), perm.end()));
    return static_cast<double>(ge) / static_cast<double>(total);
}

// Minimum k-means inertia by enumerating every assignment of n points to k
// labels (empty clusters allowed; they never help).
inline double best_partition_inertia(const Eigen::MatrixXd& x, std::size_t k) {
    const auto n = static_cast<std::size_t>(x.rows());
    std::vector<std::size_t> label(n, 0);
    double best = std::numeric_limits<double>::infinity();
    for (;;) {
        double total = 0;
        for (std::size_t c = 0; c < k; ++c) {
            Eigen::RowVectorXd mean = Eigen::RowVectorXd::Zero(x.cols());
            std::size_t cnt = 0;
            for (std::size_t i = 0; i < n; ++i)
                if (label[i] == c) mean += x.row(static_cast<Eigen::Index>(i)), ++cnt;
            if (!cnt) continue;
            mean /= static_cast<double>(cnt);
            for (std::size_t i = 0; i < n; ++i)
                if (label[i] == c) total += (x.row(static_cast<Eigen::Index>(i)) - mean).squaredNorm();
        }
        best = std::min(best, total);
        std::size_t pos = 0;
        while (pos < n && ++label[pos] == k) label[pos++] = 0;
        if (pos == n) break;
    }
    return best;
}

// Entropy quantities straight from the definitions, in long double.
struct JargonOracle {
    long double h_i, q_ij;
};

inline JargonOracle jargon_oracle(const std::map<std::string, std::size_t>& ci, const std::map<std::string, std::size_t>& cj, long double alpha) {
    std::set<std::string> vocab;
    for (const auto& [t, _] : ci) vocab.insert(t);
    for (const auto& [t, _] : cj) vocab.insert(t);
    long double ti = 0, tj = 0;
    for (const auto& [_, c] : ci) ti += c;
    for (const auto& [_, c] : cj) tj += c;
    const long double v = static_cast<long double>(vocab.size());
    long double h = 0, q = 0;
    for (const auto& t : vocab) {
        const long double pi = ((ci.contains(t) ? ci.at(t) : 0) + alpha) / (ti + alpha * v);
        const long double pj = ((cj.contains(t) ? cj.at(t) : 0) + alpha) / (tj + alpha * v);
        h -= pi * std::log(pi) / std::log(2.0L);
        q -= pi * std::log(pj) / std::log(2.0L);
    }
    return {h, q};
}

struct RandomGraph {
    std::vector<PaperMeta> papers;
    std::vector<CitationEdge> edges;
    std::vector<std::pair<std::size_t, std::size_t>> index_edges;
    std::vector<std::size_t> field_of;
};

inline RandomGraph random_graph(std::size_t n, std::size_t fields, double edge_factor, unsigned seed) {
    std::mt19937 gen(seed);
    RandomGraph g;
    for (std::size_t v = 0; v < n; ++v) {
        g.field_of.push_back(v % fields);
        g.papers.push_back({"p" + std::to_string(v), FieldLabel("f" + std::to_string(v % fields)), 2000, {}});
    }
    std::uniform_int_distribution<std::size_t> pick(0, n - 1);
    const auto m = static_cast<std::size_t>(edge_factor * static_cast<double>(n));
    for (std::size_t e = 0; e < m; ++e) {
        const std::size_t a = pick(gen), b = pick(gen);
        g.edges.emplace_back("p" + std::to_string(a), "p" + std::to_string(b));
        g.index_edges.emplace_back(a, b);
    }
    return g;
}

// Field-pair mean over reachable pairs, from the all-pairs oracle.
inline std::vector<std::vector<double>> oracle_means(const RandomGraph& g, std::size_t fields) {
    const auto d = all_pairs_hops(g.papers.size(), g.index_edges);
    std::vector<std::vector<double>> sum(fields, std::vector<double>(fields, 0)), cnt = sum;
    for (std::size_t a = 0; a < d.size(); ++a)
        for (std::size_t b = 0; b < d.size(); ++b)
            if (d[a][b] >= 0) sum[g.field_of[a]][g.field_of[b]] += d[a][b], cnt[g.field_of[a]][g.field_of[b]] += 1;
    for (std::size_t i = 0; i < fields; ++i)
        for (std::size_t j = 0; j < fields; ++j) sum[i][j] = cnt[i][j] ? sum[i][j] / cnt[i][j] : std::nan("");
    return sum;
}

}  // namespace testing
