#include "vizsig/reduce.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "vizsig/container.hpp"
#include "vizsig/rng.hpp"

namespace vizsig::reduce {

Eigen::MatrixXd to_eigen(const EmbeddingMatrix& m) {
    Eigen::MatrixXd out(m.rows(), m.cols());
    for (std::size_t i = 0; i < m.rows(); ++i)
        for (std::size_t j = 0; j < m.cols(); ++j) out(i, j) = m.at(i, j);
    return out;
}

namespace {

std::vector<std::size_t> fit_rows(std::size_t n, const PcaOptions& options) {
    std::vector<std::size_t> rows(n);
    std::iota(rows.begin(), rows.end(), std::size_t{0});
    if (n <= options.fit_cap) return rows;
    Rng rng(options.seed);
    // Partial Fisher-Yates: the first `cap` slots are a uniform sample.
    for (std::size_t i = 0; i < options.fit_cap; ++i) {
        const std::size_t j = i + rng.index(n - i);
        std::swap(rows[i], rows[j]);
    }
    rows.resize(options.fit_cap);
    std::sort(rows.begin(), rows.end());
    return rows;
}

}  // namespace

PcaModel pca_fit(const EmbeddingMatrix& data, std::size_t p, const PcaOptions& options) {
    const std::size_t n_all = data.rows();
    const std::size_t d = data.cols();
    if (options.fit_cap < 2) throw Error(Errc::invalid_argument, "PCA fit cap must be at least 2");
    const auto rows = fit_rows(n_all, options);
    const std::size_t n = rows.size();
    if (n < 2) throw Error(Errc::invalid_argument, "PCA needs at least 2 rows");
    if (p < 1 || p > std::min(n - 1, d)) {
        throw Error(Errc::invalid_argument, "PCA dimension p=" + std::to_string(p) + " outside [1, min(n-1, d)] = [1, " +
                                                std::to_string(std::min(n - 1, d)) + "]");
    }

    Eigen::MatrixXd x(n, d);
    for (std::size_t r = 0; r < n; ++r)
        for (std::size_t j = 0; j < d; ++j) x(r, j) = data.at(rows[r], j);
    const Eigen::VectorXd mean = x.colwise().mean().transpose();
    x.rowwise() -= mean.transpose();

    Eigen::BDCSVD<Eigen::MatrixXd> svd(x, Eigen::ComputeThinV);
    const Eigen::VectorXd& s = svd.singularValues();
    const Eigen::MatrixXd& v = svd.matrixV();

    const double denom = static_cast<double>(n - 1);
    const double total_variance = x.squaredNorm() / denom;

    PcaModel model;
    model.mean = mean;
    model.fit_rows = n;
    model.components.resize(static_cast<Eigen::Index>(p), static_cast<Eigen::Index>(d));
    model.explained_variance.resize(static_cast<Eigen::Index>(p));
    model.explained_variance_ratio.resize(static_cast<Eigen::Index>(p));
    const double tiny = std::numeric_limits<double>::epsilon() * std::max<double>(n, d) * (s.size() ? s(0) : 0.0);
    for (std::size_t c = 0; c < p; ++c) {
        const auto ci = static_cast<Eigen::Index>(c);
        Eigen::VectorXd axis = v.col(ci);
        Eigen::Index arg = 0;
        axis.cwiseAbs().maxCoeff(&arg);
        if (axis(arg) < 0) axis = -axis;
        model.components.row(ci) = axis.transpose();
        const double sv = s(ci) <= tiny ? 0.0 : s(ci);
        if (sv == 0.0) ++model.zero_variance_components;
        model.explained_variance(ci) = sv * sv / denom;
        model.explained_variance_ratio(ci) = total_variance > 0.0 ? model.explained_variance(ci) / total_variance : 0.0;
    }
    return model;
}

Eigen::MatrixXd pca_project(const PcaModel& model, const Eigen::MatrixXd& rows) {
    if (static_cast<std::size_t>(rows.cols()) != model.input_dim()) {
        throw Error(Errc::dimension_mismatch, "PCA input has " + std::to_string(rows.cols()) + " columns, model expects " +
                                                  std::to_string(model.input_dim()));
    }
    return (rows.rowwise() - model.mean.transpose()) * model.components.transpose();
}

EmbeddingMatrix pca_transform(const PcaModel& model, const EmbeddingMatrix& data) {
    if (data.cols() != model.input_dim()) {
        throw Error(Errc::dimension_mismatch, "PCA input has " + std::to_string(data.cols()) + " columns, model expects " +
                                                  std::to_string(model.input_dim()));
    }
    const std::size_t p = model.output_dim();
    const std::size_t d = data.cols();
    std::vector<float> out(data.rows() * p);
    Eigen::VectorXd centered(static_cast<Eigen::Index>(d));
    for (std::size_t i = 0; i < data.rows(); ++i) {
        for (std::size_t j = 0; j < d; ++j) centered(static_cast<Eigen::Index>(j)) = data.at(i, j) - model.mean(static_cast<Eigen::Index>(j));
        const Eigen::VectorXd y = model.components * centered;
        for (std::size_t c = 0; c < p; ++c) out[i * p + c] = static_cast<float>(y(static_cast<Eigen::Index>(c)));
    }
    return EmbeddingMatrix(data.rows(), p, std::move(out), data.row_ids());
}

Eigen::MatrixXd pca_reconstruct(const PcaModel& model, const Eigen::MatrixXd& projected) {
    if (static_cast<std::size_t>(projected.cols()) != model.output_dim()) {
        throw Error(Errc::dimension_mismatch, "projected width does not match model components");
    }
    return (projected * model.components).rowwise() + model.mean.transpose();
}

PcaModel truncate(const PcaModel& model, std::size_t p) {
    if (p < 1 || p > model.output_dim()) throw Error(Errc::invalid_argument, "truncate: p out of range");
    PcaModel out = model;
    const auto pi = static_cast<Eigen::Index>(p);
    out.components = model.components.topRows(pi);
    out.explained_variance = model.explained_variance.head(pi);
    out.explained_variance_ratio = model.explained_variance_ratio.head(pi);
    out.zero_variance_components = 0;
    for (Eigen::Index c = 0; c < pi; ++c)
        if (out.explained_variance(c) == 0.0) ++out.zero_variance_components;
    return out;
}

void PcaModel::save(const std::filesystem::path& path) const {
    LabeledContainer c;
    c.put("pca.mean", mean.transpose());
    c.put("pca.components", components);
    c.put("pca.explained_variance", explained_variance.transpose());
    c.put("pca.explained_variance_ratio", explained_variance_ratio.transpose());
    Eigen::MatrixXd info(1, 2);
    info << static_cast<double>(zero_variance_components), static_cast<double>(fit_rows);
    c.put("pca.info", info);
    c.save(path);
}

PcaModel PcaModel::load(const std::filesystem::path& path) {
    const auto c = LabeledContainer::load(path);
    PcaModel m;
    m.mean = c.matrix("pca.mean").row(0).transpose();
    m.components = c.matrix("pca.components");
    m.explained_variance = c.matrix("pca.explained_variance").row(0).transpose();
    m.explained_variance_ratio = c.matrix("pca.explained_variance_ratio").row(0).transpose();
    const auto& info = c.matrix("pca.info");
    m.zero_variance_components = static_cast<std::size_t>(info(0, 0));
    m.fit_rows = static_cast<std::size_t>(info(0, 1));
    if (m.components.cols() != m.mean.size() || m.explained_variance.size() != m.components.rows()) {
        throw Error(Errc::malformed_header, "inconsistent PCA model sections in '" + path.string() + "'");
    }
    return m;
}

}  // namespace vizsig::reduce
