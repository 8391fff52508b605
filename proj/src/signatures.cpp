#include "vizsig/signatures.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <unordered_map>

#include "vizsig/parallel.hpp"
#include "vizsig/reduce.hpp"
#include "vizsig/rng.hpp"

namespace vizsig::signatures {

namespace {

// Fixed chunking keeps floating-point reduction order independent of the
// worker count.
constexpr std::size_t kChunk = 1024;

std::size_t chunk_count(std::size_t n) { return (n + kChunk - 1) / kChunk; }

std::size_t nearest(const Eigen::MatrixXd& centroids, const Eigen::Ref<const Eigen::RowVectorXd>& x, double* dist2) {
    std::size_t best = 0;
    double best_d = std::numeric_limits<double>::infinity();
    for (Eigen::Index c = 0; c < centroids.rows(); ++c) {
        const double d = (centroids.row(c) - x).squaredNorm();
        if (d < best_d) {
            best_d = d;
            best = static_cast<std::size_t>(c);
        }
    }
    if (dist2) *dist2 = best_d;
    return best;
}

Eigen::MatrixXd kmeanspp(const Eigen::MatrixXd& data, std::size_t k, Rng& rng) {
    const auto n = static_cast<std::size_t>(data.rows());
    Eigen::MatrixXd centroids(static_cast<Eigen::Index>(k), data.cols());
    std::vector<char> chosen(n, 0);
    std::size_t first = rng.index(n);
    centroids.row(0) = data.row(static_cast<Eigen::Index>(first));
    chosen[first] = 1;
    std::vector<double> d2(n);
    for (std::size_t i = 0; i < n; ++i) d2[i] = (data.row(static_cast<Eigen::Index>(i)) - centroids.row(0)).squaredNorm();
    for (std::size_t c = 1; c < k; ++c) {
        double total = 0.0;
        for (double v : d2) total += v;
        std::size_t pick = n;
        if (total > 0.0) {
            const double target = rng.uniform() * total;
            double acc = 0.0;
            for (std::size_t i = 0; i < n; ++i) {
                acc += d2[i];
                if (d2[i] > 0.0 && acc > target) {
                    pick = i;
                    break;
                }
            }
            if (pick == n) {
                for (std::size_t i = n; i-- > 0;)
                    if (d2[i] > 0.0) {
                        pick = i;
                        break;
                    }
            }
        } else {
            // All remaining mass is zero: every point coincides with a center.
            for (std::size_t i = 0; i < n && pick == n; ++i)
                if (!chosen[i]) pick = i;
        }
        chosen[pick] = 1;
        const auto pi = static_cast<Eigen::Index>(pick);
        centroids.row(static_cast<Eigen::Index>(c)) = data.row(pi);
        for (std::size_t i = 0; i < n; ++i)
            d2[i] = std::min(d2[i], (data.row(static_cast<Eigen::Index>(i)) - data.row(pi)).squaredNorm());
    }
    return centroids;
}

bool assign_rows(const Eigen::MatrixXd& data, const Eigen::MatrixXd& centroids, std::vector<std::size_t>& assignment) {
    const auto n = static_cast<std::size_t>(data.rows());
    std::vector<char> changed(chunk_count(n), 0);
    parallel_for(chunk_count(n), [&](std::size_t chunk) {
        const std::size_t end = std::min(n, (chunk + 1) * kChunk);
        for (std::size_t i = chunk * kChunk; i < end; ++i) {
            const std::size_t c = nearest(centroids, data.row(static_cast<Eigen::Index>(i)), nullptr);
            if (c != assignment[i]) {
                assignment[i] = c;
                changed[chunk] = 1;
            }
        }
    });
    return std::any_of(changed.begin(), changed.end(), [](char c) { return c != 0; });
}

void update_centroids(const Eigen::MatrixXd& data, const std::vector<std::size_t>& assignment,
                      Eigen::MatrixXd& centroids, std::vector<std::size_t>& counts) {
    const auto n = static_cast<std::size_t>(data.rows());
    const auto k = centroids.rows();
    const std::size_t chunks = chunk_count(n);
    std::vector<Eigen::MatrixXd> sums(chunks);
    std::vector<std::vector<std::size_t>> partial_counts(chunks);
    parallel_for(chunks, [&](std::size_t chunk) {
        sums[chunk] = Eigen::MatrixXd::Zero(k, data.cols());
        partial_counts[chunk].assign(static_cast<std::size_t>(k), 0);
        const std::size_t end = std::min(n, (chunk + 1) * kChunk);
        for (std::size_t i = chunk * kChunk; i < end; ++i) {
            sums[chunk].row(static_cast<Eigen::Index>(assignment[i])) += data.row(static_cast<Eigen::Index>(i));
            ++partial_counts[chunk][assignment[i]];
        }
    });
    Eigen::MatrixXd total = Eigen::MatrixXd::Zero(k, data.cols());
    counts.assign(static_cast<std::size_t>(k), 0);
    for (std::size_t chunk = 0; chunk < chunks; ++chunk) {
        total += sums[chunk];
        for (Eigen::Index c = 0; c < k; ++c) counts[c] += partial_counts[chunk][c];
    }
    for (Eigen::Index c = 0; c < k; ++c) {
        if (counts[c] > 0) centroids.row(c) = total.row(c) / static_cast<double>(counts[c]);
    }
}

void recompute_centroid(const Eigen::MatrixXd& data, const std::vector<std::size_t>& assignment, std::size_t cluster,
                        Eigen::MatrixXd& centroids) {
    Eigen::RowVectorXd sum = Eigen::RowVectorXd::Zero(data.cols());
    std::size_t count = 0;
    for (std::size_t i = 0; i < assignment.size(); ++i) {
        if (assignment[i] == cluster) {
            sum += data.row(static_cast<Eigen::Index>(i));
            ++count;
        }
    }
    if (count > 0) centroids.row(static_cast<Eigen::Index>(cluster)) = sum / static_cast<double>(count);
}

void repair_empty(const Eigen::MatrixXd& data, std::vector<std::size_t>& assignment, Eigen::MatrixXd& centroids,
                  std::vector<std::size_t>& counts) {
    for (std::size_t empty = 0; empty < counts.size(); ++empty) {
        if (counts[empty] != 0) continue;
        std::size_t far = assignment.size();
        double far_d = -1.0;
        for (std::size_t i = 0; i < assignment.size(); ++i) {
            if (counts[assignment[i]] < 2) continue;
            const double d = (data.row(static_cast<Eigen::Index>(i)) -
                              centroids.row(static_cast<Eigen::Index>(assignment[i]))).squaredNorm();
            if (d > far_d) {
                far_d = d;
                far = i;
            }
        }
        if (far == assignment.size()) continue;
        const std::size_t donor = assignment[far];
        assignment[far] = empty;
        --counts[donor];
        counts[empty] = 1;
        centroids.row(static_cast<Eigen::Index>(empty)) = data.row(static_cast<Eigen::Index>(far));
        recompute_centroid(data, assignment, donor, centroids);
    }
}

// One sweep of single-point transfers in row order. Moving x from A to B pays
// off when n_B/(n_B+1)|x-c_B|^2 < n_A/(n_A-1)|x-c_A|^2; every accepted move
// lowers the inertia, and a sweep without moves leaves a Lloyd fixpoint.
bool transfer_pass(const Eigen::MatrixXd& data, std::vector<std::size_t>& assignment, Eigen::MatrixXd& centroids,
                   std::vector<std::size_t>& counts) {
    bool moved = false;
    const auto k = static_cast<std::size_t>(centroids.rows());
    for (std::size_t i = 0; i < assignment.size(); ++i) {
        const std::size_t from = assignment[i];
        if (counts[from] < 2) continue;
        const auto x = data.row(static_cast<Eigen::Index>(i));
        const double na = static_cast<double>(counts[from]);
        const double leave = na / (na - 1.0) * (x - centroids.row(static_cast<Eigen::Index>(from))).squaredNorm();
        std::size_t to = from;
        double best = leave;
        for (std::size_t c = 0; c < k; ++c) {
            if (c == from) continue;
            const double nb = static_cast<double>(counts[c]);
            const double join = nb / (nb + 1.0) * (x - centroids.row(static_cast<Eigen::Index>(c))).squaredNorm();
            if (join < best) {
                best = join;
                to = c;
            }
        }
        // Margin so rounding in the running centroids cannot cause ping-pong.
        if (to == from || leave - best <= 1e-12 * std::max(1.0, leave)) continue;
        const auto a = static_cast<Eigen::Index>(from), b = static_cast<Eigen::Index>(to);
        const double nb = static_cast<double>(counts[to]);
        centroids.row(a) = (na * centroids.row(a) - x) / (na - 1.0);
        centroids.row(b) = (nb * centroids.row(b) + x) / (nb + 1.0);
        --counts[from];
        ++counts[to];
        assignment[i] = to;
        moved = true;
    }
    return moved;
}

KMeansModel lloyd(const Eigen::MatrixXd& data, std::size_t k, std::size_t max_iter, Rng& rng) {
    KMeansModel model;
    model.centroids = kmeanspp(data, k, rng);
    const auto n = static_cast<std::size_t>(data.rows());
    std::vector<std::size_t> assignment(n, k);  // k = "unassigned"
    std::vector<std::size_t> counts;
    std::size_t iter = 0;
    while (iter < max_iter) {
        const bool changed = assign_rows(data, model.centroids, assignment);
        if (!changed && iter > 0) {
            // Lloyd fixpoint: try transfers, which can leave a poor local optimum.
            if (!transfer_pass(data, assignment, model.centroids, counts)) {
                model.converged = true;
                break;
            }
        }
        update_centroids(data, assignment, model.centroids, counts);
        repair_empty(data, assignment, model.centroids, counts);
        model.inertia_history.push_back(inertia_of(data, model.centroids, assignment));
        model.iterations_run = ++iter;
    }
    if (!model.converged) {
        // A final assignment pass so reported assignments match the centroids.
        std::vector<std::size_t> check = assignment;
        model.converged = !assign_rows(data, model.centroids, check);
    }
    model.assignments = std::move(assignment);
    model.inertia = model.inertia_history.empty() ? inertia_of(data, model.centroids, model.assignments)
                                                  : model.inertia_history.back();
    return model;
}

}  // namespace

double inertia_of(const Eigen::MatrixXd& data, const Eigen::MatrixXd& centroids,
                  std::span<const std::size_t> assignments) {
    const auto n = static_cast<std::size_t>(data.rows());
    const std::size_t chunks = chunk_count(n);
    std::vector<double> partial(chunks, 0.0);
    parallel_for(chunks, [&](std::size_t chunk) {
        const std::size_t end = std::min(n, (chunk + 1) * kChunk);
        double s = 0.0;
        for (std::size_t i = chunk * kChunk; i < end; ++i)
            s += (data.row(static_cast<Eigen::Index>(i)) - centroids.row(static_cast<Eigen::Index>(assignments[i]))).squaredNorm();
        partial[chunk] = s;
    });
    double total = 0.0;
    for (double v : partial) total += v;
    return total;
}

KMeansModel kmeans_fit(const Eigen::MatrixXd& data, const KMeansOptions& options) {
    const auto n = static_cast<std::size_t>(data.rows());
    if (n == 0 || data.cols() == 0) throw Error(Errc::invalid_argument, "k-means: empty data");
    if (options.k < 1) throw Error(Errc::invalid_argument, "k-means: k must be at least 1");
    if (options.k > n) {
        throw Error(Errc::invalid_argument, "k-means: k=" + std::to_string(options.k) + " exceeds n=" + std::to_string(n));
    }
    if (options.max_iter < 1) throw Error(Errc::invalid_argument, "k-means: max_iter must be at least 1");
    if (!data.allFinite()) throw Error(Errc::non_finite, "k-means: non-finite input");
    const std::size_t restarts = std::max<std::size_t>(1, options.restarts);
    KMeansModel best;
    for (std::size_t r = 0; r < restarts; ++r) {
        Rng rng(derive_seed(options.seed, r));
        KMeansModel m = lloyd(data, options.k, options.max_iter, rng);
        if (r == 0 || m.inertia < best.inertia) best = std::move(m);
    }
    return best;
}

KMeansModel kmeans_fit(const EmbeddingMatrix& data, const KMeansOptions& options) {
    return kmeans_fit(reduce::to_eigen(data), options);
}

std::vector<std::size_t> kmeans_assign(const KMeansModel& model, const Eigen::MatrixXd& data) {
    if (data.cols() != model.centroids.cols()) {
        throw Error(Errc::dimension_mismatch, "k-means assign: data has " + std::to_string(data.cols()) +
                                                  " columns, centroids have " + std::to_string(model.centroids.cols()));
    }
    std::vector<std::size_t> out(static_cast<std::size_t>(data.rows()), 0);
    parallel_for(out.size(), [&](std::size_t i) {
        out[i] = nearest(model.centroids, data.row(static_cast<Eigen::Index>(i)), nullptr);
    });
    return out;
}

std::vector<std::size_t> kmeans_assign(const KMeansModel& model, const EmbeddingMatrix& data) {
    return kmeans_assign(model, reduce::to_eigen(data));
}

std::vector<VisualSignature> build_signatures(std::span<const std::size_t> assignments,
                                              std::span<const std::string> figure_ids,
                                              std::span<const FigureMeta> figures, std::size_t k) {
    if (assignments.size() != figure_ids.size()) {
        throw Error(Errc::dimension_mismatch, "signatures: assignment and figure id counts differ");
    }
    if (k == 0) throw Error(Errc::invalid_argument, "signatures: k must be positive");
    std::unordered_map<std::string_view, const FigureMeta*> meta;
    meta.reserve(figures.size());
    for (const auto& f : figures) meta.emplace(f.figure_id, &f);

    std::map<FieldLabel, std::vector<std::size_t>> counts;
    for (std::size_t i = 0; i < assignments.size(); ++i) {
        auto it = meta.find(figure_ids[i]);
        if (it == meta.end()) {
            throw Error(Errc::missing_metadata, "signatures: figure '" + figure_ids[i] + "' has no metadata");
        }
        if (assignments[i] >= k) throw Error(Errc::invalid_argument, "signatures: cluster index out of range");
        auto& c = counts[it->second->field];
        if (c.empty()) c.assign(k, 0);
        ++c[assignments[i]];
    }
    std::vector<VisualSignature> out;
    for (const auto& [field, c] : counts) {
        VisualSignature sig{field, std::vector<double>(k, 0.0), 0};
        for (std::size_t v : c) sig.support += v;
        for (std::size_t j = 0; j < k; ++j) sig.histogram[j] = static_cast<double>(c[j]) / static_cast<double>(sig.support);
        out.push_back(std::move(sig));
    }
    return out;
}

DistanceMatrix visual_distance(std::span<const VisualSignature> signatures, HistogramDistance metric) {
    if (signatures.empty()) throw Error(Errc::invalid_argument, "visual distance: no signatures");
    const std::size_t k = signatures.front().histogram.size();
    std::vector<const VisualSignature*> sorted;
    for (const auto& s : signatures) {
        if (s.histogram.size() != k) throw Error(Errc::dimension_mismatch, "visual distance: signatures have mixed k");
        sorted.push_back(&s);
    }
    std::sort(sorted.begin(), sorted.end(), [](auto* a, auto* b) { return a->field < b->field; });
    const auto m = static_cast<Eigen::Index>(sorted.size());
    DistanceMatrix dm;
    for (auto* s : sorted) dm.labels.push_back(s->field);
    dm.values = Eigen::MatrixXd::Zero(m, m);
    for (Eigen::Index i = 0; i < m; ++i) {
        for (Eigen::Index j = i + 1; j < m; ++j) {
            double acc = 0.0;
            for (std::size_t c = 0; c < k; ++c) {
                const double a = sorted[i]->histogram[c];
                const double b = sorted[j]->histogram[c];
                const double diff = metric == HistogramDistance::hellinger ? std::sqrt(a) - std::sqrt(b) : a - b;
                acc += diff * diff;
            }
            double d = std::sqrt(acc);
            if (metric == HistogramDistance::hellinger) d /= std::sqrt(2.0);
            dm.values(i, j) = dm.values(j, i) = d;
        }
    }
    dm.validate();
    return dm;
}

void write_signatures_csv(std::span<const VisualSignature> signatures, const std::filesystem::path& path,
                          const std::vector<std::string>& comments) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw Error(Errc::io, "cannot open '" + path.string() + "' for writing");
    const std::size_t k = signatures.empty() ? 0 : signatures.front().histogram.size();
    for (const auto& c : comments) out << "# " << c << '\n';
    out << "field,support";
    for (std::size_t c = 0; c < k; ++c) out << ",c" << c;
    out << '\n';
    for (const auto& s : signatures) {
        out << csv_escape(s.field.name()) << ',' << s.support;
        for (double v : s.histogram) out << ',' << format_double(v);
        out << '\n';
    }
    if (!out) throw Error(Errc::io, "write failed for '" + path.string() + "'");
}

namespace {

template <typename T>
T parse_number(const std::string& s, const std::filesystem::path& path, std::size_t line_no) {
    T v{};
    auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc() || res.ptr != s.data() + s.size()) {
        throw Error(Errc::malformed_line, path.string() + " line " + std::to_string(line_no) + ": bad number '" + s + "'");
    }
    return v;
}

template <typename F>
void for_each_data_line(const std::filesystem::path& path, bool skip_header, F&& fn) {
    std::ifstream in(path);
    if (!in) throw Error(Errc::io, "cannot open '" + path.string() + "'");
    std::string line;
    std::size_t line_no = 0;
    bool header_seen = !skip_header;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty() || line[0] == '#') continue;
        if (!header_seen) {
            header_seen = true;
            continue;
        }
        fn(split_csv_line(line), line_no);
    }
}

}  // namespace

std::vector<VisualSignature> read_signatures_csv(const std::filesystem::path& path) {
    std::vector<VisualSignature> out;
    for_each_data_line(path, true, [&](const std::vector<std::string>& cells, std::size_t line_no) {
        if (cells.size() < 3) {
            throw Error(Errc::malformed_line, path.string() + " line " + std::to_string(line_no) + ": too few columns");
        }
        VisualSignature s;
        s.field = FieldLabel(cells[0]);
        s.support = parse_number<std::size_t>(cells[1], path, line_no);
        double sum = 0.0;
        for (std::size_t c = 2; c < cells.size(); ++c) {
            s.histogram.push_back(parse_number<double>(cells[c], path, line_no));
            if (s.histogram.back() < 0.0) {
                throw Error(Errc::malformed_line, path.string() + " line " + std::to_string(line_no) + ": negative frequency");
            }
            sum += s.histogram.back();
        }
        if (std::abs(sum - 1.0) > 1e-9 || s.support == 0) {
            throw Error(Errc::malformed_line, path.string() + " line " + std::to_string(line_no) +
                                                  ": histogram must sum to 1 with positive support");
        }
        out.push_back(std::move(s));
    });
    return out;
}

void write_assignments_csv(std::span<const std::string> figure_ids, std::span<const std::size_t> assignments,
                           const std::filesystem::path& path, const std::vector<std::string>& comments) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw Error(Errc::io, "cannot open '" + path.string() + "' for writing");
    for (const auto& c : comments) out << "# " << c << '\n';
    out << "figure_id,cluster\n";
    for (std::size_t i = 0; i < figure_ids.size(); ++i) out << csv_escape(figure_ids[i]) << ',' << assignments[i] << '\n';
    if (!out) throw Error(Errc::io, "write failed for '" + path.string() + "'");
}

std::pair<std::vector<std::string>, std::vector<std::size_t>> read_assignments_csv(const std::filesystem::path& path) {
    std::pair<std::vector<std::string>, std::vector<std::size_t>> out;
    for_each_data_line(path, true, [&](const std::vector<std::string>& cells, std::size_t line_no) {
        if (cells.size() != 2) {
            throw Error(Errc::malformed_line, path.string() + " line " + std::to_string(line_no) + ": expected figure_id,cluster");
        }
        out.first.push_back(cells[0]);
        out.second.push_back(parse_number<std::size_t>(cells[1], path, line_no));
    });
    return out;
}

}  // namespace vizsig::signatures
