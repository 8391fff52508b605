#include "vizsig/figclass.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <unordered_map>

#include <json.hpp>

#include "vizsig/container.hpp"
#include "vizsig/distance_matrix.hpp"

namespace vizsig::figclass {

MlpConfig MlpConfig::defaults(std::size_t input_dim, std::size_t classes) {
    MlpConfig c;
    c.layer_sizes = {input_dim, 512, 128, classes};
    c.dropout = {0.5, 0.5};
    return c;
}

void MlpConfig::validate() const {
    if (layer_sizes.size() < 3) throw Error(Errc::invalid_argument, "mlp: need input, at least one hidden layer, and output");
    for (std::size_t s : layer_sizes)
        if (s == 0) throw Error(Errc::invalid_argument, "mlp: layer sizes must be positive");
    if (layer_sizes.back() < 2) throw Error(Errc::invalid_argument, "mlp: need at least 2 classes");
    if (dropout.size() != layer_sizes.size() - 2) {
        throw Error(Errc::invalid_argument, "mlp: need one dropout rate per hidden layer");
    }
    for (double r : dropout)
        if (!(r >= 0.0 && r < 1.0)) throw Error(Errc::invalid_argument, "mlp: dropout rates must lie in [0, 1)");
    if (!(learning_rate > 0.0 && learning_rate < 1.0)) throw Error(Errc::invalid_argument, "mlp: learning rate must lie in (0, 1)");
    if (!(decay >= 0.0 && decay < 1.0)) throw Error(Errc::invalid_argument, "mlp: decay must lie in [0, 1)");
    if (epochs == 0 || batch_size == 0) throw Error(Errc::invalid_argument, "mlp: epochs and batch size must be positive");
}

Dataset Dataset::subset(std::span<const std::size_t> rows) const {
    Dataset out;
    out.x.resize(static_cast<Eigen::Index>(rows.size()), x.cols());
    for (std::size_t r = 0; r < rows.size(); ++r) {
        out.x.row(static_cast<Eigen::Index>(r)) = x.row(static_cast<Eigen::Index>(rows[r]));
        out.y.push_back(y[rows[r]]);
        if (!ids.empty()) out.ids.push_back(ids[rows[r]]);
    }
    return out;
}

Dataset make_dataset(const EmbeddingMatrix& embeddings, std::span<const std::pair<std::string, std::string>> labels,
                     std::span<const std::string> classes) {
    std::unordered_map<std::string_view, std::size_t> row_of;
    for (std::size_t i = 0; i < embeddings.rows(); ++i) row_of.emplace(embeddings.row_ids()[i], i);
    std::unordered_map<std::string_view, std::size_t> class_of;
    for (std::size_t c = 0; c < classes.size(); ++c) class_of.emplace(classes[c], c);

    Dataset out;
    out.x.resize(static_cast<Eigen::Index>(labels.size()), static_cast<Eigen::Index>(embeddings.cols()));
    for (std::size_t i = 0; i < labels.size(); ++i) {
        const auto& [id, label] = labels[i];
        auto r = row_of.find(id);
        if (r == row_of.end()) throw Error(Errc::missing_metadata, "labeled figure '" + id + "' has no embedding row");
        auto c = class_of.find(label);
        if (c == class_of.end()) throw Error(Errc::invalid_argument, "label '" + label + "' of '" + id + "' is not a known class");
        for (std::size_t j = 0; j < embeddings.cols(); ++j)
            out.x(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = embeddings.at(r->second, j);
        out.y.push_back(c->second);
        out.ids.push_back(id);
    }
    return out;
}

Split split_dataset(const Dataset& data, std::size_t class_count, std::uint64_t seed) {
    std::vector<std::vector<std::size_t>> by_class(class_count);
    for (std::size_t i = 0; i < data.size(); ++i) {
        if (data.y[i] >= class_count) throw Error(Errc::invalid_argument, "split: label index out of range");
        by_class[data.y[i]].push_back(i);
    }
    std::vector<std::size_t> train, val, test;
    for (std::size_t c = 0; c < class_count; ++c) {
        auto& rows = by_class[c];
        if (rows.empty()) continue;
        if (rows.size() < 10) {
            throw Error(Errc::invalid_argument, "split: class " + std::to_string(c) + " has " + std::to_string(rows.size()) +
                                                    " examples, need at least 10");
        }
        Rng rng(derive_seed(seed, c));
        rng.shuffle(rows.begin(), rows.end());
        const auto tenth = static_cast<std::size_t>(std::llround(static_cast<double>(rows.size()) / 10.0));
        test.insert(test.end(), rows.begin(), rows.begin() + static_cast<std::ptrdiff_t>(tenth));
        val.insert(val.end(), rows.begin() + static_cast<std::ptrdiff_t>(tenth),
                   rows.begin() + static_cast<std::ptrdiff_t>(2 * tenth));
        train.insert(train.end(), rows.begin() + static_cast<std::ptrdiff_t>(2 * tenth), rows.end());
    }
    std::sort(train.begin(), train.end());
    std::sort(val.begin(), val.end());
    std::sort(test.begin(), test.end());
    return Split{data.subset(train), data.subset(val), data.subset(test)};
}

namespace {

void init_uniform(Eigen::MatrixXd& m, double limit, Rng& rng) {
    for (Eigen::Index i = 0; i < m.rows(); ++i)
        for (Eigen::Index j = 0; j < m.cols(); ++j) m(i, j) = rng.uniform(-limit, limit);
}

Eigen::VectorXd log_sum_exp_rows(const Eigen::MatrixXd& logits) {
    Eigen::VectorXd out(logits.rows());
    for (Eigen::Index i = 0; i < logits.rows(); ++i) {
        const double mx = logits.row(i).maxCoeff();
        out(i) = mx + std::log((logits.row(i).array() - mx).exp().sum());
    }
    return out;
}

}  // namespace

MlpModel::MlpModel(const MlpConfig& config, std::vector<std::string> class_names) : classes(std::move(class_names)) {
    config.validate();
    if (classes.size() != config.layer_sizes.back()) {
        throw Error(Errc::invalid_argument, "mlp: class list size does not match output layer");
    }
    Rng rng(derive_seed(config.seed, 0));
    const std::size_t layers = config.layer_sizes.size() - 1;
    for (std::size_t l = 0; l < layers; ++l) {
        const auto in = static_cast<Eigen::Index>(config.layer_sizes[l]);
        const auto out = static_cast<Eigen::Index>(config.layer_sizes[l + 1]);
        Eigen::MatrixXd w(out, in);
        const bool output = l + 1 == layers;
        const double limit = output ? std::sqrt(6.0 / static_cast<double>(in + out)) : std::sqrt(6.0 / static_cast<double>(in));
        init_uniform(w, limit, rng);
        weights.push_back(std::move(w));
        biases.push_back(Eigen::VectorXd::Zero(out));
    }
    dropout = config.dropout;
}

MlpModel MlpModel::zeros(const MlpConfig& config, std::vector<std::string> classes) {
    MlpModel m(config, std::move(classes));
    for (auto& w : m.weights) w.setZero();
    for (auto& b : m.biases) b.setZero();
    return m;
}

Eigen::MatrixXd MlpModel::logits(const Eigen::MatrixXd& x) const {
    if (static_cast<std::size_t>(x.cols()) != input_dim()) {
        throw Error(Errc::dimension_mismatch, "mlp: input width " + std::to_string(x.cols()) + " does not match " +
                                                  std::to_string(input_dim()));
    }
    Eigen::MatrixXd a = x;
    for (std::size_t l = 0; l < weights.size(); ++l) {
        Eigen::MatrixXd z = (a * weights[l].transpose()).rowwise() + biases[l].transpose();
        if (l + 1 < weights.size()) z = z.cwiseMax(0.0);
        a = std::move(z);
    }
    return a;
}

Eigen::MatrixXd softmax(const Eigen::MatrixXd& logits) {
    Eigen::MatrixXd p(logits.rows(), logits.cols());
    for (Eigen::Index i = 0; i < logits.rows(); ++i) {
        const Eigen::ArrayXd e = (logits.row(i).array() - logits.row(i).maxCoeff()).exp();
        p.row(i) = (e / e.sum()).matrix().transpose();
    }
    return p;
}

Gradients compute_gradients(const MlpModel& model, const Eigen::MatrixXd& x, std::span<const std::size_t> y,
                            Rng* dropout_rng) {
    const std::size_t layers = model.weights.size();
    if (static_cast<std::size_t>(x.rows()) != y.size() || y.empty()) {
        throw Error(Errc::dimension_mismatch, "mlp: batch rows and labels differ or batch is empty");
    }
    if (static_cast<std::size_t>(x.cols()) != model.input_dim()) {
        throw Error(Errc::dimension_mismatch, "mlp: input width does not match the model");
    }
    const double batch = static_cast<double>(y.size());

    // Forward, keeping pre-activations and dropout masks for the backward pass.
    std::vector<Eigen::MatrixXd> inputs{x};
    std::vector<Eigen::MatrixXd> pre;
    std::vector<Eigen::MatrixXd> masks;
    for (std::size_t l = 0; l + 1 < layers; ++l) {
        Eigen::MatrixXd z = (inputs.back() * model.weights[l].transpose()).rowwise() + model.biases[l].transpose();
        Eigen::MatrixXd a = z.cwiseMax(0.0);
        Eigen::MatrixXd mask;
        const double rate = l < model.dropout.size() ? model.dropout[l] : 0.0;
        if (dropout_rng && rate > 0.0) {
            mask.resize(a.rows(), a.cols());
            const double keep = 1.0 - rate;
            for (Eigen::Index i = 0; i < mask.rows(); ++i)
                for (Eigen::Index j = 0; j < mask.cols(); ++j) mask(i, j) = dropout_rng->uniform() < keep ? 1.0 / keep : 0.0;
            a = a.cwiseProduct(mask);
        }
        pre.push_back(std::move(z));
        masks.push_back(std::move(mask));
        inputs.push_back(std::move(a));
    }
    const Eigen::MatrixXd logits =
        (inputs.back() * model.weights.back().transpose()).rowwise() + model.biases.back().transpose();
    const Eigen::VectorXd lse = log_sum_exp_rows(logits);

    Gradients g;
    g.weights.resize(layers);
    g.biases.resize(layers);
    Eigen::MatrixXd delta = softmax(logits);
    for (std::size_t i = 0; i < y.size(); ++i) {
        if (y[i] >= model.class_count()) throw Error(Errc::invalid_argument, "mlp: label index out of range");
        const auto ii = static_cast<Eigen::Index>(i);
        g.loss += lse(ii) - logits(ii, static_cast<Eigen::Index>(y[i]));
        delta(ii, static_cast<Eigen::Index>(y[i])) -= 1.0;
    }
    g.loss /= batch;
    delta /= batch;

    for (std::size_t l = layers; l-- > 0;) {
        g.weights[l] = delta.transpose() * inputs[l];
        g.biases[l] = delta.colwise().sum().transpose();
        if (l == 0) break;
        Eigen::MatrixXd da = delta * model.weights[l];
        if (masks[l - 1].size() > 0) da = da.cwiseProduct(masks[l - 1]);
        delta = da.cwiseProduct((pre[l - 1].array() > 0.0).cast<double>().matrix());
    }
    return g;
}

MlpModel train(const MlpConfig& config, const Dataset& train_set, const Dataset& val_set,
               std::vector<std::string> classes) {
    config.validate();
    if (train_set.size() == 0) throw Error(Errc::invalid_argument, "mlp: empty training set");
    if (static_cast<std::size_t>(train_set.x.cols()) != config.layer_sizes.front()) {
        throw Error(Errc::dimension_mismatch, "mlp: training vectors have width " + std::to_string(train_set.x.cols()) +
                                                  ", config expects " + std::to_string(config.layer_sizes.front()));
    }
    MlpModel model(config, std::move(classes));
    Rng rng(derive_seed(config.seed, 1));
    std::vector<std::size_t> order(train_set.size());
    std::iota(order.begin(), order.end(), std::size_t{0});

    for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
        const double lr = config.learning_rate / (1.0 + config.decay * static_cast<double>(epoch));
        rng.shuffle(order.begin(), order.end());
        double loss_sum = 0.0;
        for (std::size_t start = 0, batch_no = 0; start < order.size(); start += config.batch_size, ++batch_no) {
            const std::size_t end = std::min(order.size(), start + config.batch_size);
            const std::span<const std::size_t> rows(order.data() + start, end - start);
            const Dataset batch = train_set.subset(rows);
            const Gradients g = compute_gradients(model, batch.x, batch.y, &rng);
            if (!std::isfinite(g.loss)) {
                throw Error(Errc::numerical, "mlp: non-finite loss at epoch " + std::to_string(epoch) + ", batch " +
                                                 std::to_string(batch_no) + " (lr " + format_double(lr) + ")");
            }
            for (std::size_t l = 0; l < model.weights.size(); ++l) {
                model.weights[l] -= lr * g.weights[l];
                model.biases[l] -= lr * g.biases[l];
            }
            loss_sum += g.loss * static_cast<double>(rows.size());
        }
        model.history.loss.push_back(loss_sum / static_cast<double>(order.size()));
        if (val_set.size() > 0) {
            model.history.validation_accuracy.push_back(evaluate(model, val_set).accuracy);
        } else {
            model.history.validation_accuracy.push_back(std::nan(""));
        }
    }
    return model;
}

std::vector<Prediction> predict(const MlpModel& model, const Eigen::MatrixXd& x) {
    const Eigen::MatrixXd p = softmax(model.logits(x));
    std::vector<Prediction> out(static_cast<std::size_t>(p.rows()));
    for (Eigen::Index i = 0; i < p.rows(); ++i) {
        auto& pr = out[static_cast<std::size_t>(i)];
        Eigen::Index best = 0;
        for (Eigen::Index c = 1; c < p.cols(); ++c)
            if (p(i, c) > p(i, best)) best = c;
        pr.label = static_cast<std::size_t>(best);
        for (Eigen::Index c = 0; c < p.cols(); ++c) pr.probabilities.push_back(p(i, c));
    }
    return out;
}

EvalReport evaluate_predictions(std::span<const std::size_t> truth, std::span<const std::size_t> predicted,
                                std::vector<std::string> classes) {
    if (truth.size() != predicted.size()) throw Error(Errc::dimension_mismatch, "evaluate: length mismatch");
    if (truth.empty()) throw Error(Errc::invalid_argument, "evaluate: empty test set");
    const std::size_t c = classes.size();
    EvalReport r;
    r.classes = std::move(classes);
    r.confusion.assign(c, std::vector<std::size_t>(c, 0));
    std::size_t correct = 0;
    for (std::size_t i = 0; i < truth.size(); ++i) {
        if (truth[i] >= c || predicted[i] >= c) throw Error(Errc::invalid_argument, "evaluate: class index out of range");
        ++r.confusion[truth[i]][predicted[i]];
        if (truth[i] == predicted[i]) ++correct;
    }
    r.accuracy = static_cast<double>(correct) / static_cast<double>(truth.size());
    for (std::size_t k = 0; k < c; ++k) {
        std::size_t predicted_k = 0, actual_k = 0;
        for (std::size_t j = 0; j < c; ++j) {
            predicted_k += r.confusion[j][k];
            actual_k += r.confusion[k][j];
        }
        const double tp = static_cast<double>(r.confusion[k][k]);
        r.precision.push_back(predicted_k ? std::optional(tp / static_cast<double>(predicted_k)) : std::nullopt);
        r.recall.push_back(actual_k ? std::optional(tp / static_cast<double>(actual_k)) : std::nullopt);
    }
    return r;
}

EvalReport evaluate(const MlpModel& model, const Dataset& test) {
    const auto preds = predict(model, test.x);
    std::vector<std::size_t> labels;
    for (const auto& p : preds) labels.push_back(p.label);
    return evaluate_predictions(test.y, labels, model.classes);
}

std::string EvalReport::to_json() const {
    nlohmann::ordered_json j;
    j["accuracy"] = accuracy;
    nlohmann::ordered_json per_class = nlohmann::ordered_json::array();
    for (std::size_t k = 0; k < classes.size(); ++k) {
        nlohmann::ordered_json c;
        c["class"] = classes[k];
        c["precision"] = precision[k] ? nlohmann::ordered_json(*precision[k]) : nlohmann::ordered_json("undefined");
        c["recall"] = recall[k] ? nlohmann::ordered_json(*recall[k]) : nlohmann::ordered_json("undefined");
        std::size_t support = 0;
        for (std::size_t v : confusion[k]) support += v;
        c["support"] = support;
        per_class.push_back(std::move(c));
    }
    j["classes"] = std::move(per_class);
    j["confusion"] = confusion;
    return j.dump(2);
}

void EvalReport::write_confusion_csv(const std::filesystem::path& path) const {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw Error(Errc::io, "cannot open '" + path.string() + "' for writing");
    out << "true\\predicted";
    for (const auto& c : classes) out << ',' << csv_escape(c);
    out << '\n';
    for (std::size_t k = 0; k < classes.size(); ++k) {
        out << csv_escape(classes[k]);
        for (std::size_t v : confusion[k]) out << ',' << v;
        out << '\n';
    }
    if (!out) throw Error(Errc::io, "write failed for '" + path.string() + "'");
}

double gradient_check(const MlpConfig& config, const Dataset& sample, double h) {
    std::vector<std::string> names;
    for (std::size_t c = 0; c < config.layer_sizes.back(); ++c) names.push_back("class" + std::to_string(c));
    MlpModel model(config, names);
    const Gradients analytic = compute_gradients(model, sample.x, sample.y, nullptr);
    double worst = 0.0;
    auto compare = [&](double& param, double grad) {
        const double saved = param;
        param = saved + h;
        const double up = compute_gradients(model, sample.x, sample.y, nullptr).loss;
        param = saved - h;
        const double down = compute_gradients(model, sample.x, sample.y, nullptr).loss;
        param = saved;
        const double numeric = (up - down) / (2.0 * h);
        const double denom = std::max({std::abs(grad), std::abs(numeric), 1e-8});
        worst = std::max(worst, std::abs(grad - numeric) / denom);
    };
    for (std::size_t l = 0; l < model.weights.size(); ++l) {
        for (Eigen::Index i = 0; i < model.weights[l].rows(); ++i)
            for (Eigen::Index j = 0; j < model.weights[l].cols(); ++j) compare(model.weights[l](i, j), analytic.weights[l](i, j));
        for (Eigen::Index i = 0; i < model.biases[l].size(); ++i) compare(model.biases[l](i), analytic.biases[l](i));
    }
    return worst;
}

void MlpModel::save(const std::filesystem::path& path) const {
    LabeledContainer c;
    Eigen::MatrixXd sizes(1, static_cast<Eigen::Index>(weights.size() + 1));
    sizes(0, 0) = static_cast<double>(input_dim());
    for (std::size_t l = 0; l < weights.size(); ++l) {
        c.put("mlp.w" + std::to_string(l), weights[l]);
        c.put("mlp.b" + std::to_string(l), biases[l].transpose());
        sizes(0, static_cast<Eigen::Index>(l + 1)) = static_cast<double>(weights[l].rows());
    }
    c.put("mlp.layers", sizes);
    Eigen::MatrixXd drop(1, static_cast<Eigen::Index>(dropout.size()));
    for (std::size_t i = 0; i < dropout.size(); ++i) drop(0, static_cast<Eigen::Index>(i)) = dropout[i];
    c.put("mlp.dropout", drop);
    c.put_strings("mlp.classes", classes);
    Eigen::MatrixXd hist(2, static_cast<Eigen::Index>(history.loss.size()));
    for (std::size_t e = 0; e < history.loss.size(); ++e) {
        hist(0, static_cast<Eigen::Index>(e)) = history.loss[e];
        hist(1, static_cast<Eigen::Index>(e)) = history.validation_accuracy[e];
    }
    c.put("mlp.history", hist);
    c.save(path);
}

MlpModel MlpModel::load(const std::filesystem::path& path) {
    const auto c = LabeledContainer::load(path);
    MlpModel m;
    const auto& sizes = c.matrix("mlp.layers");
    const auto layers = static_cast<std::size_t>(sizes.cols() - 1);
    for (std::size_t l = 0; l < layers; ++l) {
        m.weights.push_back(c.matrix("mlp.w" + std::to_string(l)));
        m.biases.push_back(c.matrix("mlp.b" + std::to_string(l)).row(0).transpose());
        const auto& w = m.weights.back();
        if (w.cols() != static_cast<Eigen::Index>(sizes(0, static_cast<Eigen::Index>(l))) ||
            w.rows() != static_cast<Eigen::Index>(sizes(0, static_cast<Eigen::Index>(l + 1))) ||
            m.biases.back().size() != w.rows()) {
            throw Error(Errc::malformed_header, "mlp: layer shapes do not chain in '" + path.string() + "'");
        }
    }
    const auto& drop = c.matrix("mlp.dropout");
    for (Eigen::Index i = 0; i < drop.cols(); ++i) m.dropout.push_back(drop(0, i));
    m.classes = c.strings("mlp.classes");
    if (m.classes.size() != m.class_count()) throw Error(Errc::malformed_header, "mlp: class list does not match output layer");
    const auto& hist = c.matrix("mlp.history");
    for (Eigen::Index e = 0; e < hist.cols(); ++e) {
        m.history.loss.push_back(hist(0, e));
        m.history.validation_accuracy.push_back(hist(1, e));
    }
    return m;
}

}  // namespace vizsig::figclass
