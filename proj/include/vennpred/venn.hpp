#pragma once

#include <array>
#include <cstddef>
#include <span>
#include <vector>

#include "vennpred/data.hpp"
#include "vennpred/mlp.hpp"
#include "vennpred/rebalance.hpp"

namespace vennpred {

using Category = std::size_t;

struct CategoryAssignment {
    std::vector<Category> training; // one per original training example, same order
    Category new_example = 0;
};

/**
 * A Venn taxonomy: partitions the training set extended with the new example
 * (carrying an assumed label) into categories. Implementations must not
 * depend on the order of the training examples.
 */
class Taxonomy {
public:
    virtual ~Taxonomy() = default;
    virtual CategoryAssignment assign(const Dataset& train, std::span<const double> new_features,
                                      int assumed_label) const = 0;
};

/// Network outputs for the original training examples and the new example.
struct ExtensionScores {
    std::vector<double> training;
    double new_example = 0.5;
    /// False when the extended set was too small to train on; every score is
    /// then 0.5 and all examples share one category.
    bool trained = false;
};

/**
 * The scoring half of the ANN taxonomy: normalizes the training set
 * extended with (x, assumed label), rebalances it, trains a network on the
 * result and scores the original training examples plus the new one. The
 * resampled copies only shape the network.
 *
 * Extended sets that are too small after rebalancing (fewer than
 * kMinTrainingExamples) are trained on unrebalanced; smaller still, nothing
 * is trained.
 */
class AnnScorer {
public:
    AnnScorer(RebalanceMode mode, TrainConfig train_cfg);

    ExtensionScores score(const Dataset& train, std::span<const double> new_features, int assumed_label) const;

    const RebalanceMode& mode() const { return mode_; }
    const TrainConfig& train_config() const { return train_cfg_; }

private:
    RebalanceMode mode_;
    TrainConfig train_cfg_;
};

/// Taxonomy that bins AnnScorer outputs into `lambda` equal regions of [0,1].
class AnnBinTaxonomy : public Taxonomy {
public:
    AnnBinTaxonomy(std::size_t lambda, RebalanceMode mode, TrainConfig train_cfg);

    CategoryAssignment assign(const Dataset& train, std::span<const double> new_features,
                              int assumed_label) const override;

    /// floor(o * lambda) clamped to lambda - 1: half-open bins, last one closed.
    static Category bin(double output, std::size_t lambda);
    static CategoryAssignment bin_all(const ExtensionScores& scores, std::size_t lambda);

    std::size_t lambda() const { return lambda_; }
    const AnnScorer& scorer() const { return scorer_; }

private:
    std::size_t lambda_;
    AnnScorer scorer_;
};

/// Counts within the new example's category, the new example included.
struct LabelDistribution {
    std::size_t positives = 0;
    std::size_t members = 1;

    double p1() const { return static_cast<double>(positives) / static_cast<double>(members); }
    double p0() const { return 1.0 - p1(); }
    double p(int label) const { return label == 1 ? p1() : p0(); }
};

LabelDistribution empirical_distribution(std::span<const int> training_labels,
                                         std::span<const Category> training_categories, Category new_category,
                                         int assumed_label);

struct Interval {
    double lower = 0.0;
    double upper = 1.0;
};

struct PredictionRule {
    enum class Kind { Argmax, Threshold };
    Kind kind = Kind::Threshold;
    double theta = 0.5;

    static PredictionRule argmax() { return {Kind::Argmax, 0.5}; }
    static PredictionRule threshold(double theta) { return {Kind::Threshold, theta}; }

    /// Argmax picks 1 only when mean p(1) > 0.5 (ties go to 0); threshold
    /// picks 1 iff mean p(1) > theta.
    int decide(double mean_p1) const;
};

struct VennOutput {
    std::array<LabelDistribution, 2> dist; // indexed by assumed label
    double mean_p1 = 0.0;
    int prediction = 0;
    Interval pred_interval;

    /// [1 - U, 1 - L]: bounds on the probability that the prediction is wrong.
    Interval error_interval() const { return {1.0 - pred_interval.upper, 1.0 - pred_interval.lower}; }

    /// Probability interval for class `label`: min and max over assumed labels.
    Interval interval_for(int label) const;
};

/// Reduces the two per-label distributions to a prediction.
VennOutput combine(const std::array<LabelDistribution, 2>& dist, const PredictionRule& rule);

VennOutput predict(const Taxonomy& taxonomy, const Dataset& train, std::span<const double> features,
                   const PredictionRule& rule);

/// Same as predict() with an AnnBinTaxonomy for each lambda, sharing the two
/// trainings across all of them. Output i corresponds to lambdas[i].
std::vector<VennOutput> predict_lambda_sweep(const AnnScorer& scorer, const Dataset& train,
                                             std::span<const double> features, std::span<const std::size_t> lambdas,
                                             const PredictionRule& rule);

} // namespace vennpred
