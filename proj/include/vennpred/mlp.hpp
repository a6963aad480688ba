#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "vennpred/data.hpp"

namespace vennpred {

/// Weights of a d -> h -> 1 network: tanh hidden layer, logistic output.
struct MlpParameters {
    Eigen::MatrixXd hidden_weights; // h x d
    Eigen::VectorXd hidden_bias;    // h
    Eigen::VectorXd output_weights; // h
    double output_bias = 0.0;

    std::size_t input_dim() const { return static_cast<std::size_t>(hidden_weights.cols()); }
    std::size_t hidden_units() const { return static_cast<std::size_t>(hidden_weights.rows()); }
    std::size_t parameter_count() const;

    /// Parameters in a fixed order: hidden weights (column-major), hidden
    /// bias, output weights, output bias.
    std::vector<double> flatten() const;
    void unflatten(std::span<const double> values);

    bool all_finite() const;
};

struct MlpModel : MlpParameters {
    static MlpModel zeros(std::size_t input_dim, std::size_t hidden_units);

    /// Output probability for one input, in (0,1).
    double forward(std::span<const double> x) const;

    /// Outputs for every column of a d x n matrix.
    Eigen::VectorXd forward_batch(const Eigen::MatrixXd& inputs) const;
};

struct MlpGradient : MlpParameters {};

struct TrainConfig {
    std::size_t hidden_units = 5;
    double lr_init = 0.01;
    double lr_increase = 1.05;
    double lr_decrease = 0.7;
    double error_increase_tolerance = 1.04;
    std::size_t max_epochs = 500;
    std::size_t patience = 30;
    static constexpr double val_fraction = 0.2;
    std::uint64_t seed_material = 0;

    void validate() const;
};

/// Smallest training set accepted by train(): the 20% validation split must
/// hold at least one example.
inline constexpr std::size_t kMinTrainingExamples = 5;

/// Probabilities are clamped to [kProbClamp, 1 - kProbClamp] inside logs.
inline constexpr double kProbClamp = 1e-12;

/// Mean cross-entropy (natural log) of the model over a labeled batch.
double mean_cross_entropy(const MlpModel& model, const Dataset& batch);

/// Analytic gradient of mean_cross_entropy.
MlpGradient gradient(const MlpModel& model, const Dataset& batch);

struct EpochRecord {
    double train_error;      // training error after the epoch (stored, i.e. post-rejection)
    double candidate_error;  // training error of the proposed step
    double validation_error; // validation error of the stored model
    double learning_rate;    // rate used for the proposed step
    bool accepted;
};

struct TrainResult {
    MlpModel model;        // weights at the lowest validation error
    MlpModel final_model;  // weights when training stopped
    std::size_t best_epoch = 0;
    std::vector<EpochRecord> epochs;
};

/**
 * Full-batch gradient descent on mean cross-entropy with an adaptive learning
 * rate and early stopping on a 20% validation split.
 *
 * A step whose training error exceeds the previous one by more than
 * error_increase_tolerance is discarded and the rate shrinks by lr_decrease;
 * a step that lowers the error is kept and the rate grows by lr_increase.
 * Training stops after max_epochs or when the validation error has not
 * improved for patience epochs.
 *
 * The examples are put into canonical order first, and the seed for the
 * initial weights and the split comes from the content of the data, so any
 * permutation of the input yields bit-identical weights.
 */
TrainResult train_with_log(const Dataset& data, const TrainConfig& cfg);

MlpModel train(const Dataset& data, const TrainConfig& cfg);

/// Features as a d x n matrix (one column per example).
Eigen::MatrixXd to_matrix(const Dataset& data);

} // namespace vennpred
