#include "vizsig/graphmetrics.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <fstream>
#include <set>

#include "vizsig/parallel.hpp"
#include "vizsig/rng.hpp"

namespace vizsig::graph {

namespace {

void to_csr(std::size_t n, std::vector<std::pair<std::size_t, std::size_t>>& pairs, std::vector<std::size_t>& offsets,
            std::vector<std::size_t>& targets) {
    std::sort(pairs.begin(), pairs.end());
    pairs.erase(std::unique(pairs.begin(), pairs.end()), pairs.end());
    offsets.assign(n + 1, 0);
    for (const auto& [a, _] : pairs) ++offsets[a + 1];
    for (std::size_t v = 0; v < n; ++v) offsets[v + 1] += offsets[v];
    targets.resize(pairs.size());
    for (std::size_t e = 0; e < pairs.size(); ++e) targets[e] = pairs[e].second;
}

}  // namespace

CitationGraph::CitationGraph(std::span<const PaperMeta> papers, std::span<const CitationEdge> edges) {
    ids_.reserve(papers.size());
    for (const auto& p : papers) {
        auto [it, inserted] = index_.emplace(p.paper_id, ids_.size());
        if (!inserted) throw Error(Errc::duplicate_id, "citation graph: duplicate paper '" + p.paper_id + "'");
        ids_.push_back(p.paper_id);
        fields_.push_back(p.field);
        years_.push_back(p.year);
    }
    std::vector<std::pair<std::size_t, std::size_t>> directed;
    directed.reserve(edges.size());
    for (const auto& [citing, cited] : edges) {
        ++report_.edges_read;
        auto a = index_.find(citing);
        auto b = index_.find(cited);
        if (a == index_.end() || b == index_.end()) {
            ++report_.dropped_unknown;
            continue;
        }
        if (a->second == b->second) {
            ++report_.self_loops;
            continue;
        }
        directed.emplace_back(a->second, b->second);
    }
    const std::size_t before = directed.size();
    std::sort(directed.begin(), directed.end());
    directed.erase(std::unique(directed.begin(), directed.end()), directed.end());
    report_.duplicates = before - directed.size();
    edge_count_ = directed.size();

    std::vector<std::pair<std::size_t, std::size_t>> incoming, undirected;
    incoming.reserve(directed.size());
    undirected.reserve(2 * directed.size());
    for (const auto& [a, b] : directed) {
        incoming.emplace_back(b, a);
        undirected.emplace_back(a, b);
        undirected.emplace_back(b, a);
    }
    to_csr(ids_.size(), incoming, in_offsets_, in_);
    to_csr(ids_.size(), undirected, adj_offsets_, adj_);
}

std::optional<std::size_t> CitationGraph::index_of(const std::string& paper_id) const {
    auto it = index_.find(paper_id);
    if (it == index_.end()) return std::nullopt;
    return it->second;
}

std::vector<std::size_t> CitationGraph::nodes_of(const FieldLabel& field) const {
    std::vector<std::size_t> out;
    for (std::size_t v = 0; v < fields_.size(); ++v)
        if (fields_[v] == field) out.push_back(v);
    return out;
}

std::vector<std::int32_t> CitationGraph::bfs(std::size_t source) const {
    std::vector<std::int32_t> dist(ids_.size(), -1);
    std::vector<std::size_t> frontier{source};
    dist[source] = 0;
    std::size_t head = 0;
    while (head < frontier.size()) {
        const std::size_t v = frontier[head++];
        for (std::size_t w : neighbours(v)) {
            if (dist[w] < 0) {
                dist[w] = dist[v] + 1;
                frontier.push_back(w);
            }
        }
    }
    return dist;
}

CitationGraph load_graph(const std::filesystem::path& edge_path, std::span<const PaperMeta> papers) {
    const auto edges = read_edges(edge_path);
    return CitationGraph(papers, edges);
}

bool FieldPathDistance::has_missing() const {
    for (Eigen::Index i = 0; i < matrix.values.rows(); ++i)
        for (Eigen::Index j = 0; j < matrix.values.cols(); ++j)
            if (std::isnan(matrix.values(i, j))) return true;
    return false;
}

namespace {

struct Request {
    std::size_t pair;
    const std::vector<std::size_t>* all_targets = nullptr;  // exhaustive
    std::vector<std::size_t> targets;                       // sampled
};

struct Tally {
    std::uint64_t sum = 0;
    std::size_t reachable = 0;
    std::size_t unreachable = 0;
};

}  // namespace

FieldPathDistance avg_shortest_path(const CitationGraph& graph, std::span<const FieldLabel> fields,
                                    const PathOptions& options) {
    if (fields.empty()) throw Error(Errc::invalid_argument, "citation distance: no fields requested");
    if (options.sample_size == 0) throw Error(Errc::invalid_argument, "citation distance: sample_size must be positive");
    std::vector<FieldLabel> labels(fields.begin(), fields.end());
    std::sort(labels.begin(), labels.end());
    if (std::adjacent_find(labels.begin(), labels.end()) != labels.end()) {
        throw Error(Errc::duplicate_id, "citation distance: duplicate field requested");
    }
    const std::size_t m = labels.size();
    std::vector<std::vector<std::size_t>> members(m);
    for (std::size_t f = 0; f < m; ++f) {
        members[f] = graph.nodes_of(labels[f]);
        if (members[f].empty()) {
            throw Error(Errc::invalid_argument, "citation distance: field '" + labels[f].name() + "' has no papers");
        }
    }

    FieldPathDistance result;
    std::vector<std::pair<std::size_t, std::size_t>> pairs;
    for (std::size_t i = 0; i < m; ++i) {
        if (options.include_intra) pairs.emplace_back(i, i);
        for (std::size_t j = i + 1; j < m; ++j) pairs.emplace_back(i, j);
    }

    // Group every (source, targets) request so each source is searched once.
    std::map<std::size_t, std::vector<Request>> by_source;
    for (std::size_t p = 0; p < pairs.size(); ++p) {
        const auto [i, j] = pairs[p];
        PairDiagnostics diag{labels[i], labels[j], 0, 0, false};
        const std::size_t ni = members[i].size();
        const std::size_t nj = members[j].size();
        if (ni * nj <= options.sample_size) {
            diag.exhaustive = true;
            diag.sampled_pairs = ni * nj;
            for (std::size_t s : members[i]) by_source[s].push_back(Request{p, &members[j], {}});
        } else {
            diag.sampled_pairs = options.sample_size;
            Rng rng(derive_seed(options.seed, p));
            std::map<std::size_t, std::vector<std::size_t>> draws;
            for (std::size_t s = 0; s < options.sample_size; ++s) {
                const std::size_t a = members[i][rng.index(ni)];
                const std::size_t b = members[j][rng.index(nj)];
                draws[a].push_back(b);
            }
            for (auto& [a, targets] : draws) by_source[a].push_back(Request{p, nullptr, std::move(targets)});
        }
        result.diagnostics.push_back(std::move(diag));
    }

    std::vector<std::pair<std::size_t, std::vector<Request>>> work(by_source.begin(), by_source.end());
    std::vector<std::vector<std::pair<std::size_t, Tally>>> partial(work.size());
    parallel_for(work.size(), [&](std::size_t w) {
        const auto dist = graph.bfs(work[w].first);
        for (const auto& req : work[w].second) {
            Tally t;
            const auto& targets = req.all_targets ? *req.all_targets : req.targets;
            for (std::size_t v : targets) {
                if (dist[v] < 0) {
                    ++t.unreachable;
                } else {
                    t.sum += static_cast<std::uint64_t>(dist[v]);
                    ++t.reachable;
                }
            }
            partial[w].emplace_back(req.pair, t);
        }
    });
    std::vector<Tally> totals(pairs.size());
    for (const auto& per_source : partial) {
        for (const auto& [p, t] : per_source) {
            totals[p].sum += t.sum;
            totals[p].reachable += t.reachable;
            totals[p].unreachable += t.unreachable;
        }
    }

    const auto mi = static_cast<Eigen::Index>(m);
    result.matrix.labels = labels;
    result.matrix.values = Eigen::MatrixXd::Zero(mi, mi);
    result.intra.assign(m, std::nan(""));
    for (std::size_t p = 0; p < pairs.size(); ++p) {
        const auto [i, j] = pairs[p];
        result.diagnostics[p].unreachable_pairs = totals[p].unreachable;
        const double mean = totals[p].reachable == 0
                                ? std::nan("")
                                : static_cast<double>(totals[p].sum) / static_cast<double>(totals[p].reachable);
        if (i == j) {
            result.intra[i] = mean;
        } else {
            result.matrix.values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = mean;
            result.matrix.values(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(i)) = mean;
        }
    }
    return result;
}

std::map<std::string, std::map<int, std::size_t>> yearly_citation_counts(const CitationGraph& graph,
                                                                         std::span<const std::string> paper_ids) {
    std::map<std::string, std::map<int, std::size_t>> out;
    for (const auto& id : paper_ids) {
        const auto v = graph.index_of(id);
        if (!v) throw Error(Errc::invalid_argument, "citation counts: unknown paper '" + id + "'");
        auto& per_year = out[id];
        for (std::size_t c : graph.citers(*v)) ++per_year[graph.year(c)];
    }
    return out;
}

void write_path_diagnostics(const FieldPathDistance& result, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw Error(Errc::io, "cannot open '" + path.string() + "' for writing");
    out << "field_i,field_j,sampled_pairs,unreachable_pairs,mode\n";
    for (const auto& d : result.diagnostics) {
        out << csv_escape(d.a.name()) << ',' << csv_escape(d.b.name()) << ',' << d.sampled_pairs << ','
            << d.unreachable_pairs << ',' << (d.exhaustive ? "exhaustive" : "sampled") << '\n';
    }
    if (!out) throw Error(Errc::io, "write failed for '" + path.string() + "'");
}

}  // namespace vizsig::graph
