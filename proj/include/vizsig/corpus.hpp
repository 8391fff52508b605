#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "vizsig/error.hpp"

namespace vizsig {

/// Field (discipline) label such as "cs.CL". Compared by exact bytes.
class FieldLabel {
public:
    FieldLabel() = default;
    explicit FieldLabel(std::string name);

    const std::string& name() const noexcept { return name_; }

    friend bool operator==(const FieldLabel&, const FieldLabel&) = default;
    friend auto operator<=>(const FieldLabel&, const FieldLabel&) = default;

private:
    std::string name_;
};

struct FigureMeta {
    std::string figure_id;
    std::string paper_id;
    FieldLabel field;
    int year = 0;
    std::optional<std::string> caption;

    friend bool operator==(const FigureMeta&, const FigureMeta&) = default;
};

struct PaperMeta {
    std::string paper_id;
    FieldLabel field;
    int year = 0;
    std::optional<std::string> abstract;

    friend bool operator==(const PaperMeta&, const PaperMeta&) = default;
};

using CitationEdge = std::pair<std::string, std::string>;  // (citing, cited)

/// Dense n x d float32 matrix of figure vectors with one figure id per row.
class EmbeddingMatrix {
public:
    EmbeddingMatrix() = default;
    /// Validates: n, d >= 1, finite values, distinct ids.
    EmbeddingMatrix(std::size_t n, std::size_t d, std::vector<float> values,
                    std::vector<std::string> row_ids);

    std::size_t rows() const noexcept { return n_; }
    std::size_t cols() const noexcept { return d_; }
    std::span<const float> row(std::size_t i) const { return {values_.data() + i * d_, d_}; }
    float at(std::size_t i, std::size_t j) const { return values_[i * d_ + j]; }
    const std::vector<float>& values() const noexcept { return values_; }
    const std::vector<std::string>& row_ids() const noexcept { return row_ids_; }

    friend bool operator==(const EmbeddingMatrix&, const EmbeddingMatrix&) = default;

private:
    std::size_t n_ = 0;
    std::size_t d_ = 0;
    std::vector<float> values_;
    std::vector<std::string> row_ids_;
};

// VSIG container: "VSIG", u8 version, u32 n, u32 d (little endian), n*d f32 LE
// row-major, then n ids each as u16 LE byte length + UTF-8 bytes.
inline constexpr std::size_t kVsigHeaderBytes = 13;
inline constexpr std::uint8_t kVsigVersion = 1;

EmbeddingMatrix read_embeddings(const std::filesystem::path& path);
void write_embeddings(const EmbeddingMatrix& matrix, const std::filesystem::path& path);

std::vector<FigureMeta> read_figure_metadata(const std::filesystem::path& path);
std::vector<PaperMeta> read_paper_metadata(const std::filesystem::path& path);
void write_figure_metadata(std::span<const FigureMeta> figures, const std::filesystem::path& path);
void write_paper_metadata(std::span<const PaperMeta> papers, const std::filesystem::path& path);

/// Parses one JSON-lines record; exposed for the readers and tests.
FigureMeta parse_figure_line(const std::string& line, std::size_t line_no);
PaperMeta parse_paper_line(const std::string& line, std::size_t line_no);

std::vector<CitationEdge> read_edges(const std::filesystem::path& path);
void write_edges(std::span<const CitationEdge> edges, const std::filesystem::path& path);

/// "figure_id,label" lines.
std::vector<std::pair<std::string, std::string>> read_labels(const std::filesystem::path& path);
void write_labels(std::span<const std::pair<std::string, std::string>> labels,
                  const std::filesystem::path& path);

struct ValidationReport {
    std::vector<std::string> rows_without_metadata;  // embedding rows with no FigureMeta
    std::vector<std::string> figures_without_rows;   // FigureMeta with no embedding row
    std::vector<std::string> figures_with_unknown_paper;
    std::size_t papers_without_figures = 0;
    std::size_t figure_count = 0;
    std::size_t paper_count = 0;

    bool ok() const {
        return rows_without_metadata.empty() && figures_without_rows.empty() &&
               figures_with_unknown_paper.empty();
    }
};

/// Explicit O(n) join between embeddings and metadata; loading never does this.
ValidationReport validate_corpus(const EmbeddingMatrix& embeddings,
                                 std::span<const FigureMeta> figures,
                                 std::span<const PaperMeta> papers);

}  // namespace vizsig
