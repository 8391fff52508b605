#include "vizsig/distance_matrix.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <unordered_map>

#include "vizsig/error.hpp"

namespace vizsig {

void DistanceMatrix::validate(bool allow_missing) const {
    const auto m = static_cast<Eigen::Index>(labels.size());
    if (values.rows() != m || values.cols() != m) {
        throw Error(Errc::dimension_mismatch, "distance matrix shape does not match its label count");
    }
    for (Eigen::Index i = 0; i < m; ++i) {
        if (values(i, i) != 0.0) throw Error(Errc::invalid_argument, "distance matrix diagonal must be zero");
        for (Eigen::Index j = i + 1; j < m; ++j) {
            const double a = values(i, j);
            const double b = values(j, i);
            if (std::isnan(a) || std::isnan(b)) {
                if (allow_missing && std::isnan(a) && std::isnan(b)) continue;
                throw Error(Errc::non_finite, "distance matrix has a missing entry at (" + labels[i].name() + ", " +
                                                  labels[j].name() + ")");
            }
            if (!std::isfinite(a) || !std::isfinite(b)) throw Error(Errc::non_finite, "distance matrix has a non-finite entry");
            if (a < 0.0 || b < 0.0) throw Error(Errc::invalid_argument, "distance matrix has a negative entry");
            if (std::abs(a - b) > 1e-12) throw Error(Errc::invalid_argument, "distance matrix is not symmetric");
        }
    }
    for (std::size_t i = 0; i < labels.size(); ++i)
        for (std::size_t j = i + 1; j < labels.size(); ++j)
            if (labels[i] == labels[j]) throw Error(Errc::duplicate_id, "duplicate label '" + labels[i].name() + "'");
}

DistanceMatrix DistanceMatrix::reordered(const std::vector<FieldLabel>& order) const {
    if (order.size() != labels.size()) throw Error(Errc::dimension_mismatch, "reorder: label count differs");
    std::unordered_map<std::string, Eigen::Index> pos;
    for (std::size_t i = 0; i < labels.size(); ++i) pos[labels[i].name()] = static_cast<Eigen::Index>(i);
    std::vector<Eigen::Index> idx;
    for (const auto& l : order) {
        auto it = pos.find(l.name());
        if (it == pos.end()) throw Error(Errc::invalid_argument, "reorder: unknown label '" + l.name() + "'");
        idx.push_back(it->second);
    }
    DistanceMatrix out{order, Eigen::MatrixXd(values.rows(), values.cols())};
    for (std::size_t i = 0; i < idx.size(); ++i)
        for (std::size_t j = 0; j < idx.size(); ++j) out.values(i, j) = values(idx[i], idx[j]);
    return out;
}

bool same_labels(const DistanceMatrix& a, const DistanceMatrix& b) { return a.labels == b.labels; }

std::string format_double(double v) {
    if (std::isnan(v)) return "NA";
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

std::string csv_escape(const std::string& field) {
    if (field.find_first_of(",\"\n\r") == std::string::npos) return field;
    std::string out = "\"";
    for (char c : field) {
        if (c == '"') out += '"';
        out += c;
    }
    out += '"';
    return out;
}

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> out;
    std::string cur;
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        const char c = line[i];
        if (quoted) {
            if (c == '"') {
                if (i + 1 < line.size() && line[i + 1] == '"') {
                    cur += '"';
                    ++i;
                } else {
                    quoted = false;
                }
            } else {
                cur += c;
            }
        } else if (c == '"') {
            quoted = true;
        } else if (c == ',') {
            out.push_back(std::move(cur));
            cur.clear();
        } else {
            cur += c;
        }
    }
    out.push_back(std::move(cur));
    return out;
}

void write_matrix_csv(const std::vector<FieldLabel>& labels, const Eigen::MatrixXd& values,
                      const std::filesystem::path& path, const std::vector<std::string>& comments) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw Error(Errc::io, "cannot open '" + path.string() + "' for writing");
    for (const auto& c : comments) out << "# " << c << '\n';
    for (std::size_t i = 0; i < labels.size(); ++i) out << (i ? "," : "") << csv_escape(labels[i].name());
    out << '\n';
    for (Eigen::Index i = 0; i < values.rows(); ++i) {
        for (Eigen::Index j = 0; j < values.cols(); ++j) out << (j ? "," : "") << format_double(values(i, j));
        out << '\n';
    }
    if (!out) throw Error(Errc::io, "write failed for '" + path.string() + "'");
}

void write_distance_csv(const DistanceMatrix& matrix, const std::filesystem::path& path,
                        const std::vector<std::string>& comments) {
    write_matrix_csv(matrix.labels, matrix.values, path, comments);
}

DistanceMatrix read_distance_csv(const std::filesystem::path& path, bool allow_missing) {
    std::ifstream in(path);
    if (!in) throw Error(Errc::io, "cannot open '" + path.string() + "'");
    std::string line;
    std::size_t line_no = 0;
    DistanceMatrix dm;
    bool have_header = false;
    std::vector<std::vector<double>> rows;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty() || line[0] == '#') continue;
        auto cells = split_csv_line(line);
        if (!have_header) {
            for (auto& c : cells) dm.labels.emplace_back(std::move(c));
            have_header = true;
            continue;
        }
        if (cells.size() != dm.labels.size()) {
            throw Error(Errc::malformed_line, path.string() + " line " + std::to_string(line_no) + ": expected " +
                                                  std::to_string(dm.labels.size()) + " values");
        }
        std::vector<double> row;
        for (const auto& c : cells) {
            if (c == "NA") {
                row.push_back(std::nan(""));
                continue;
            }
            double v = 0.0;
            auto res = std::from_chars(c.data(), c.data() + c.size(), v);
            if (res.ec != std::errc() || res.ptr != c.data() + c.size()) {
                throw Error(Errc::malformed_line, path.string() + " line " + std::to_string(line_no) +
                                                      ": bad number '" + c + "'");
            }
            row.push_back(v);
        }
        rows.push_back(std::move(row));
    }
    if (!have_header) throw Error(Errc::malformed_line, path.string() + ": missing header row");
    if (rows.size() != dm.labels.size()) {
        throw Error(Errc::malformed_line, path.string() + ": expected " + std::to_string(dm.labels.size()) + " rows");
    }
    const auto m = static_cast<Eigen::Index>(rows.size());
    dm.values.resize(m, m);
    for (Eigen::Index i = 0; i < m; ++i)
        for (Eigen::Index j = 0; j < m; ++j) dm.values(i, j) = rows[i][j];
    dm.validate(allow_missing);
    return dm;
}

}  // namespace vizsig
