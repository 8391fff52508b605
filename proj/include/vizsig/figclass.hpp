#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "vizsig/corpus.hpp"
#include "vizsig/rng.hpp"

namespace vizsig::figclass {

inline const std::vector<std::string> kDefaultClasses = {"neural-network-diagram", "embedding-visualization",
                                                        "negative"};

struct MlpConfig {
    std::vector<std::size_t> layer_sizes;  // input, hidden..., classes
    std::vector<double> dropout;           // one rate per hidden layer
    double learning_rate = 0.001;
    double decay = 0.001;                  // lr_t = lr / (1 + decay * epoch)
    std::size_t epochs = 150;
    std::size_t batch_size = 256;
    std::uint64_t seed = 0;

    /// input -> 512 -> 128 -> classes, ReLU, dropout 0.5.
    static MlpConfig defaults(std::size_t input_dim, std::size_t classes);
    void validate() const;
};

/// Feature rows with integer class indices.
struct Dataset {
    Eigen::MatrixXd x;                 // examples x features
    std::vector<std::size_t> y;
    std::vector<std::string> ids;

    std::size_t size() const { return y.size(); }
    Dataset subset(std::span<const std::size_t> rows) const;
};

/// Joins "figure_id,label" records with embedding rows. Labels must belong to
/// `classes`; the class index is the position in that list.
Dataset make_dataset(const EmbeddingMatrix& embeddings, std::span<const std::pair<std::string, std::string>> labels,
                     std::span<const std::string> classes);

struct Split {
    Dataset train, val, test;
};

/// Stratified 8:1:1 split. Per class with n examples: round(n/10) to test,
/// round(n/10) to validation, the rest to training. Needs >= 10 per class.
Split split_dataset(const Dataset& data, std::size_t class_count, std::uint64_t seed);

struct TrainingHistory {
    std::vector<double> loss;                 // mean training loss per epoch
    std::vector<double> validation_accuracy;  // NaN when no validation set
};

class MlpModel {
public:
    MlpModel() = default;
    /// Seeded initialization: He-uniform weights for hidden layers,
    /// Glorot-uniform for the output layer, zero biases.
    MlpModel(const MlpConfig& config, std::vector<std::string> classes);
    /// All parameters zero.
    static MlpModel zeros(const MlpConfig& config, std::vector<std::string> classes);

    std::size_t layer_count() const { return weights.size(); }
    std::size_t input_dim() const { return static_cast<std::size_t>(weights.front().cols()); }
    std::size_t class_count() const { return static_cast<std::size_t>(weights.back().rows()); }

    /// Logits for a batch (rows = examples), dropout off.
    Eigen::MatrixXd logits(const Eigen::MatrixXd& x) const;

    void save(const std::filesystem::path& path) const;
    static MlpModel load(const std::filesystem::path& path);

    std::vector<Eigen::MatrixXd> weights;  // layer l: out x in
    std::vector<Eigen::VectorXd> biases;
    std::vector<double> dropout;           // per hidden layer, training only
    std::vector<std::string> classes;
    TrainingHistory history;
};

struct Gradients {
    std::vector<Eigen::MatrixXd> weights;
    std::vector<Eigen::VectorXd> biases;
    double loss = 0.0;
};

/// Mean softmax cross-entropy over the batch and its parameter gradients.
/// With `dropout_rng` set, inverted dropout masks are drawn from it.
Gradients compute_gradients(const MlpModel& model, const Eigen::MatrixXd& x, std::span<const std::size_t> y,
                            Rng* dropout_rng = nullptr);

/// Row-wise softmax, max-shifted.
Eigen::MatrixXd softmax(const Eigen::MatrixXd& logits);

/// Mini-batch gradient descent on softmax cross-entropy.
MlpModel train(const MlpConfig& config, const Dataset& train_set, const Dataset& val_set,
               std::vector<std::string> classes);

struct Prediction {
    std::size_t label = 0;
    std::vector<double> probabilities;
};

/// Argmax class (ties to the lowest index) with softmax probabilities.
std::vector<Prediction> predict(const MlpModel& model, const Eigen::MatrixXd& x);

struct EvalReport {
    std::vector<std::string> classes;
    double accuracy = 0.0;
    std::vector<std::optional<double>> precision;  // nullopt when 0/0
    std::vector<std::optional<double>> recall;
    std::vector<std::vector<std::size_t>> confusion;  // rows = true, cols = predicted

    std::string to_json() const;
    void write_confusion_csv(const std::filesystem::path& path) const;
};

EvalReport evaluate_predictions(std::span<const std::size_t> truth, std::span<const std::size_t> predicted,
                                std::vector<std::string> classes);
EvalReport evaluate(const MlpModel& model, const Dataset& test);

/// Largest relative difference between analytic gradients and central finite
/// differences (h = 1e-5) over every parameter, dropout disabled.
double gradient_check(const MlpConfig& config, const Dataset& sample, double h = 1e-5);

}  // namespace vizsig::figclass
