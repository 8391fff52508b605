#include "vizsig/corpus.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

#include <json.hpp>

namespace vizsig {

const char* errc_name(Errc code) noexcept {
    switch (code) {
        case Errc::io: return "io";
        case Errc::malformed_header: return "malformed header";
        case Errc::truncated_payload: return "truncated payload";
        case Errc::duplicate_id: return "duplicate id";
        case Errc::non_finite: return "non-finite value";
        case Errc::malformed_line: return "malformed line";
        case Errc::invalid_argument: return "invalid argument";
        case Errc::dimension_mismatch: return "dimension mismatch";
        case Errc::missing_metadata: return "missing metadata";
        case Errc::degenerate: return "degenerate input";
        case Errc::numerical: return "numerical failure";
    }
    return "unknown";
}

FieldLabel::FieldLabel(std::string name) : name_(std::move(name)) {
    if (name_.empty()) throw Error(Errc::invalid_argument, "field label must be non-empty");
}

EmbeddingMatrix::EmbeddingMatrix(std::size_t n, std::size_t d, std::vector<float> values,
                                 std::vector<std::string> row_ids)
    : n_(n), d_(d), values_(std::move(values)), row_ids_(std::move(row_ids)) {
    if (n_ == 0 || d_ == 0) throw Error(Errc::invalid_argument, "embedding matrix must have n >= 1 and d >= 1");
    if (values_.size() != n_ * d_) throw Error(Errc::dimension_mismatch, "embedding value count does not equal n*d");
    if (row_ids_.size() != n_) throw Error(Errc::dimension_mismatch, "embedding row id count does not equal n");
    for (std::size_t i = 0; i < n_; ++i) {
        for (std::size_t j = 0; j < d_; ++j) {
            if (!std::isfinite(values_[i * d_ + j])) {
                throw Error(Errc::non_finite, "non-finite value at row " + std::to_string(i));
            }
        }
    }
    std::unordered_map<std::string_view, std::size_t> seen;
    seen.reserve(n_);
    for (std::size_t i = 0; i < n_; ++i) {
        auto [it, inserted] = seen.emplace(row_ids_[i], i);
        if (!inserted) {
            throw Error(Errc::duplicate_id, "duplicate row id '" + row_ids_[i] + "' at rows " +
                                                std::to_string(it->second) + " and " + std::to_string(i));
        }
    }
}

namespace {

static_assert(std::endian::native == std::endian::little || std::endian::native == std::endian::big);

template <typename T>
T from_le(const unsigned char* p) {
    T v;
    std::memcpy(&v, p, sizeof(T));
    if constexpr (std::endian::native == std::endian::big) {
        auto* b = reinterpret_cast<unsigned char*>(&v);
        std::reverse(b, b + sizeof(T));
    }
    return v;
}

template <typename T>
void put_le(std::string& out, T v) {
    std::array<char, sizeof(T)> b;
    std::memcpy(b.data(), &v, sizeof(T));
    if constexpr (std::endian::native == std::endian::big) std::reverse(b.begin(), b.end());
    out.append(b.data(), b.size());
}

std::string slurp(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(Errc::io, "cannot open '" + path.string() + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    return std::move(buf).str();
}

void dump(const std::string& bytes, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(Errc::io, "cannot open '" + path.string() + "' for writing");
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw Error(Errc::io, "write failed for '" + path.string() + "'");
}

template <typename F>
void for_each_line(const std::filesystem::path& path, F&& fn) {
    std::ifstream in(path);
    if (!in) throw Error(Errc::io, "cannot open '" + path.string() + "'");
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.find_first_not_of(" \t") == std::string::npos) continue;
        fn(line, line_no);
    }
}

[[noreturn]] void bad_line(std::size_t line_no, const std::string& what) {
    throw Error(Errc::malformed_line, "line " + std::to_string(line_no) + ": " + what);
}

nlohmann::json parse_object(const std::string& line, std::size_t line_no) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::parse_error& e) {
        bad_line(line_no, std::string("invalid JSON: ") + e.what());
    }
    if (!j.is_object()) bad_line(line_no, "record is not an object");
    return j;
}

std::string required_string(const nlohmann::json& j, const char* key, std::size_t line_no) {
    auto it = j.find(key);
    if (it == j.end() || !it->is_string()) bad_line(line_no, std::string("missing string '") + key + "'");
    return it->get<std::string>();
}

std::optional<std::string> optional_string(const nlohmann::json& j, const char* key, std::size_t line_no) {
    auto it = j.find(key);
    if (it == j.end() || it->is_null()) return std::nullopt;
    if (!it->is_string()) bad_line(line_no, std::string("'") + key + "' must be a string");
    return it->get<std::string>();
}

int required_year(const nlohmann::json& j, std::size_t line_no) {
    auto it = j.find("year");
    if (it == j.end() || !it->is_number_integer()) bad_line(line_no, "missing integer 'year'");
    const auto year = it->get<long long>();
    if (year < 1900 || year > 2100) bad_line(line_no, "year " + std::to_string(year) + " outside [1900, 2100]");
    return static_cast<int>(year);
}

FieldLabel required_field(const nlohmann::json& j, std::size_t line_no) {
    auto name = required_string(j, "field", line_no);
    if (name.empty()) bad_line(line_no, "empty field label");
    return FieldLabel(std::move(name));
}

template <typename Record>
std::vector<Record> read_records(const std::filesystem::path& path,
                                 Record (*parse)(const std::string&, std::size_t),
                                 std::string Record::*id) {
    std::vector<Record> out;
    std::unordered_map<std::string, std::size_t> first_line;
    for_each_line(path, [&](const std::string& line, std::size_t line_no) {
        Record rec = parse(line, line_no);
        auto [it, inserted] = first_line.emplace(rec.*id, line_no);
        if (!inserted) {
            throw Error(Errc::duplicate_id, "duplicate id '" + rec.*id + "' on lines " +
                                                std::to_string(it->second) + " and " + std::to_string(line_no));
        }
        out.push_back(std::move(rec));
    });
    return out;
}

std::pair<std::string, std::string> split_pair(const std::string& line, std::size_t line_no) {
    const auto comma = line.find(',');
    if (comma == std::string::npos || line.find(',', comma + 1) != std::string::npos) {
        bad_line(line_no, "expected exactly two comma-separated values");
    }
    auto a = line.substr(0, comma);
    auto b = line.substr(comma + 1);
    if (a.empty() || b.empty()) bad_line(line_no, "empty value");
    return {std::move(a), std::move(b)};
}

}  // namespace

EmbeddingMatrix read_embeddings(const std::filesystem::path& path) {
    const std::string bytes = slurp(path);
    const auto* p = reinterpret_cast<const unsigned char*>(bytes.data());
    if (bytes.size() < kVsigHeaderBytes || std::memcmp(p, "VSIG", 4) != 0) {
        throw Error(Errc::malformed_header, "malformed header: missing VSIG magic in '" + path.string() + "'");
    }
    if (p[4] != kVsigVersion) {
        throw Error(Errc::malformed_header, "malformed header: unsupported version " + std::to_string(p[4]));
    }
    const std::size_t n = from_le<std::uint32_t>(p + 5);
    const std::size_t d = from_le<std::uint32_t>(p + 9);
    if (n == 0 || d == 0) throw Error(Errc::malformed_header, "malformed header: n and d must be positive");

    std::size_t offset = kVsigHeaderBytes;
    const std::size_t payload = n * d * sizeof(float);
    if (bytes.size() - offset < payload) throw Error(Errc::truncated_payload, "truncated payload in '" + path.string() + "'");
    std::vector<float> values(n * d);
    for (std::size_t i = 0; i < n * d; ++i) values[i] = from_le<float>(p + offset + 4 * i);
    offset += payload;

    std::vector<std::string> ids;
    ids.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        if (bytes.size() - offset < 2) throw Error(Errc::truncated_payload, "truncated payload: missing row id " + std::to_string(i));
        const std::size_t len = from_le<std::uint16_t>(p + offset);
        offset += 2;
        if (bytes.size() - offset < len) throw Error(Errc::truncated_payload, "truncated payload: short row id " + std::to_string(i));
        ids.emplace_back(bytes.data() + offset, len);
        offset += len;
    }
    if (offset != bytes.size()) {
        throw Error(Errc::malformed_header, "malformed file: " + std::to_string(bytes.size() - offset) + " trailing bytes");
    }
    return EmbeddingMatrix(n, d, std::move(values), std::move(ids));
}

void write_embeddings(const EmbeddingMatrix& matrix, const std::filesystem::path& path) {
    if (matrix.rows() > UINT32_MAX || matrix.cols() > UINT32_MAX) {
        throw Error(Errc::invalid_argument, "matrix too large for VSIG");
    }
    std::string out;
    out.reserve(kVsigHeaderBytes + matrix.values().size() * 4 + matrix.rows() * 8);
    out.append("VSIG");
    out.push_back(static_cast<char>(kVsigVersion));
    put_le<std::uint32_t>(out, static_cast<std::uint32_t>(matrix.rows()));
    put_le<std::uint32_t>(out, static_cast<std::uint32_t>(matrix.cols()));
    for (float v : matrix.values()) put_le<float>(out, v);
    for (const auto& id : matrix.row_ids()) {
        if (id.size() > UINT16_MAX) throw Error(Errc::invalid_argument, "row id longer than 65535 bytes");
        put_le<std::uint16_t>(out, static_cast<std::uint16_t>(id.size()));
        out.append(id);
    }
    dump(out, path);
}

FigureMeta parse_figure_line(const std::string& line, std::size_t line_no) {
    const auto j = parse_object(line, line_no);
    FigureMeta m;
    m.figure_id = required_string(j, "figure_id", line_no);
    if (m.figure_id.empty()) bad_line(line_no, "empty figure_id");
    m.paper_id = required_string(j, "paper_id", line_no);
    m.field = required_field(j, line_no);
    m.year = required_year(j, line_no);
    m.caption = optional_string(j, "caption", line_no);
    return m;
}

PaperMeta parse_paper_line(const std::string& line, std::size_t line_no) {
    const auto j = parse_object(line, line_no);
    PaperMeta m;
    m.paper_id = required_string(j, "paper_id", line_no);
    if (m.paper_id.empty()) bad_line(line_no, "empty paper_id");
    m.field = required_field(j, line_no);
    m.year = required_year(j, line_no);
    m.abstract = optional_string(j, "abstract", line_no);
    return m;
}

std::vector<FigureMeta> read_figure_metadata(const std::filesystem::path& path) {
    return read_records<FigureMeta>(path, &parse_figure_line, &FigureMeta::figure_id);
}

std::vector<PaperMeta> read_paper_metadata(const std::filesystem::path& path) {
    return read_records<PaperMeta>(path, &parse_paper_line, &PaperMeta::paper_id);
}

void write_figure_metadata(std::span<const FigureMeta> figures, const std::filesystem::path& path) {
    std::string out;
    for (const auto& f : figures) {
        nlohmann::ordered_json j;
        j["figure_id"] = f.figure_id;
        j["paper_id"] = f.paper_id;
        j["field"] = f.field.name();
        j["year"] = f.year;
        if (f.caption) j["caption"] = *f.caption;
        out += j.dump();
        out += '\n';
    }
    dump(out, path);
}

void write_paper_metadata(std::span<const PaperMeta> papers, const std::filesystem::path& path) {
    std::string out;
    for (const auto& p : papers) {
        nlohmann::ordered_json j;
        j["paper_id"] = p.paper_id;
        j["field"] = p.field.name();
        j["year"] = p.year;
        if (p.abstract) j["abstract"] = *p.abstract;
        out += j.dump();
        out += '\n';
    }
    dump(out, path);
}

std::vector<CitationEdge> read_edges(const std::filesystem::path& path) {
    std::vector<CitationEdge> edges;
    for_each_line(path, [&](const std::string& line, std::size_t line_no) {
        edges.push_back(split_pair(line, line_no));
    });
    return edges;
}

void write_edges(std::span<const CitationEdge> edges, const std::filesystem::path& path) {
    std::string out;
    for (const auto& [a, b] : edges) {
        out += a;
        out += ',';
        out += b;
        out += '\n';
    }
    dump(out, path);
}

std::vector<std::pair<std::string, std::string>> read_labels(const std::filesystem::path& path) {
    std::vector<std::pair<std::string, std::string>> labels;
    std::unordered_map<std::string, std::size_t> first_line;
    for_each_line(path, [&](const std::string& line, std::size_t line_no) {
        auto rec = split_pair(line, line_no);
        auto [it, inserted] = first_line.emplace(rec.first, line_no);
        if (!inserted) {
            throw Error(Errc::duplicate_id, "duplicate label for '" + rec.first + "' on lines " +
                                                std::to_string(it->second) + " and " + std::to_string(line_no));
        }
        labels.push_back(std::move(rec));
    });
    return labels;
}

void write_labels(std::span<const std::pair<std::string, std::string>> labels,
                  const std::filesystem::path& path) {
    write_edges(labels, path);
}

ValidationReport validate_corpus(const EmbeddingMatrix& embeddings, std::span<const FigureMeta> figures,
                                 std::span<const PaperMeta> papers) {
    ValidationReport report;
    report.figure_count = figures.size();
    report.paper_count = papers.size();

    std::unordered_set<std::string_view> row_ids(embeddings.row_ids().begin(), embeddings.row_ids().end());
    std::unordered_set<std::string_view> figure_ids;
    std::unordered_set<std::string_view> paper_ids;
    std::unordered_set<std::string_view> papers_with_figures;
    for (const auto& p : papers) paper_ids.insert(p.paper_id);
    for (const auto& f : figures) {
        figure_ids.insert(f.figure_id);
        if (!row_ids.contains(f.figure_id)) report.figures_without_rows.push_back(f.figure_id);
        if (!paper_ids.empty() && !paper_ids.contains(f.paper_id)) {
            report.figures_with_unknown_paper.push_back(f.figure_id);
        }
        papers_with_figures.insert(f.paper_id);
    }
    for (const auto& id : embeddings.row_ids()) {
        if (!figure_ids.contains(id)) report.rows_without_metadata.push_back(id);
    }
    for (const auto& p : papers) {
        if (!papers_with_figures.contains(p.paper_id)) ++report.papers_without_figures;
    }
    return report;
}

}  // namespace vizsig
