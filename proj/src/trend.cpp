#include "vizsig/trend.hpp"

#include <algorithm>
#include <fstream>
#include <set>

#include "vizsig/distance_matrix.hpp"

namespace vizsig::trend {

std::size_t TrendSeries::total() const {
    std::size_t t = 0;
    for (const auto& [_, c] : points) t += c;
    return t;
}

namespace {

std::string lower(std::string_view s) {
    std::string out(s);
    for (char& c : out)
        if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
    return out;
}

}  // namespace

std::vector<TrendSeries> figure_type_trend(const std::unordered_map<std::string, std::string>& predictions,
                                           std::span<const FigureMeta> figures, const std::string& type_label,
                                           std::span<const FieldLabel> fields) {
    std::set<FieldLabel> known;
    std::unordered_map<std::string_view, const FigureMeta*> meta;
    for (const auto& f : figures) {
        known.insert(f.field);
        meta.emplace(f.figure_id, &f);
    }
    std::map<FieldLabel, std::size_t> wanted;
    std::vector<TrendSeries> out;
    for (const auto& field : fields) {
        if (!known.contains(field)) throw Error(Errc::invalid_argument, "trend: unknown field '" + field.name() + "'");
        if (wanted.contains(field)) continue;
        wanted.emplace(field, out.size());
        out.push_back(TrendSeries{field.name(), {}});
    }
    std::set<std::pair<std::string_view, std::string_view>> seen;  // (field, paper)
    std::vector<std::pair<const std::string*, const FigureMeta*>> rows;
    for (const auto& [figure_id, label] : predictions) {
        auto it = meta.find(figure_id);
        if (it == meta.end()) throw Error(Errc::missing_metadata, "trend: predicted figure '" + figure_id + "' has no metadata");
        rows.emplace_back(&label, it->second);
    }
    for (const auto& [label, fig] : rows) {
        if (*label != type_label) continue;
        auto w = wanted.find(fig->field);
        if (w == wanted.end()) continue;
        if (!seen.emplace(fig->field.name(), fig->paper_id).second) continue;
        ++out[w->second].points[fig->year];
    }
    // Zero-fill the years the requested fields cover so flat series stay visible.
    for (const auto& f : figures) {
        auto w = wanted.find(f.field);
        if (w != wanted.end()) out[w->second].points.try_emplace(f.year, 0);
    }
    return out;
}

std::vector<TrendSeries> keyword_trend(std::span<const PaperMeta> papers, std::span<const std::string> phrases,
                                       std::span<const FieldLabel> fields) {
    if (phrases.empty()) throw Error(Errc::invalid_argument, "trend: no phrases given");
    std::vector<std::string> needles;
    for (const auto& p : phrases) {
        if (p.empty()) throw Error(Errc::invalid_argument, "trend: empty phrase");
        needles.push_back(lower(p));
    }
    std::map<FieldLabel, std::size_t> wanted;
    std::vector<TrendSeries> out;
    for (const auto& field : fields) {
        if (wanted.contains(field)) continue;
        wanted.emplace(field, out.size());
        out.push_back(TrendSeries{field.name(), {}});
    }
    for (const auto& p : papers) {
        auto w = wanted.find(p.field);
        if (w == wanted.end()) continue;
        auto& series = out[w->second];
        series.points.try_emplace(p.year, 0);
        if (!p.abstract) continue;
        const std::string text = lower(*p.abstract);
        const bool hit = std::any_of(needles.begin(), needles.end(),
                                     [&](const std::string& n) { return text.find(n) != std::string::npos; });
        if (hit) ++series.points[p.year];
    }
    return out;
}

void write_trend_csv(std::span<const TrendSeries> series, const std::filesystem::path& path,
                     const std::vector<std::string>& comments) {
    int lo = 0, hi = -1;
    for (const auto& s : series) {
        if (s.points.empty()) continue;
        if (hi < lo) {
            lo = s.points.begin()->first;
            hi = s.points.rbegin()->first;
        } else {
            lo = std::min(lo, s.points.begin()->first);
            hi = std::max(hi, s.points.rbegin()->first);
        }
    }
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw Error(Errc::io, "cannot open '" + path.string() + "' for writing");
    for (const auto& c : comments) out << "# " << c << '\n';
    out << "label";
    for (int y = lo; y <= hi; ++y) out << ',' << y;
    out << '\n';
    for (const auto& s : series) {
        out << csv_escape(s.label);
        for (int y = lo; y <= hi; ++y) {
            auto it = s.points.find(y);
            out << ',' << (it == s.points.end() ? 0 : it->second);
        }
        out << '\n';
    }
    if (!out) throw Error(Errc::io, "write failed for '" + path.string() + "'");
}

}  // namespace vizsig::trend
