#pragma once

#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "vizsig/corpus.hpp"

namespace vizsig::trend {

struct TrendSeries {
    std::string label;
    std::map<int, std::size_t> points;  // year -> count

    std::size_t total() const;
};

/// Per field and year, the number of papers with at least one figure
/// predicted as `type_label`. Each requested field yields a series, possibly
/// all zero; years span the requested fields' figures.
std::vector<TrendSeries> figure_type_trend(const std::unordered_map<std::string, std::string>& predictions,
                                           std::span<const FigureMeta> figures, const std::string& type_label,
                                           std::span<const FieldLabel> fields);

/// Per field and year, the number of papers whose abstract contains any of
/// `phrases` (case-insensitive substring).
std::vector<TrendSeries> keyword_trend(std::span<const PaperMeta> papers, std::span<const std::string> phrases,
                                       std::span<const FieldLabel> fields);

/// Label column, then one column per year over the contiguous span of all
/// series; absent years are 0.
void write_trend_csv(std::span<const TrendSeries> series, const std::filesystem::path& path,
                     const std::vector<std::string>& comments = {});

}  // namespace vizsig::trend
