#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "vennpred/data.hpp"
#include "vennpred/metrics.hpp"
#include "vennpred/mlp.hpp"
#include "vennpred/rebalance.hpp"
#include "vennpred/venn.hpp"

namespace vennpred {

/// How a predictor turns p(1) into a class.
struct ThresholdPolicy {
    enum class Kind {
        Argmax, // 1 iff p(1) > 0.5
        Fixed,  // 1 iff p(1) > value
        Auto,   // 1 iff p(1) > positive frequency of the training set
    };
    Kind kind = Kind::Auto;
    double value = 0.5;

    static ThresholdPolicy argmax() { return {Kind::Argmax, 0.5}; }
    static ThresholdPolicy fixed(double theta) { return {Kind::Fixed, theta}; }
    static ThresholdPolicy automatic() { return {Kind::Auto, 0.5}; }

    PredictionRule resolve(const Dataset& train) const;
    std::string describe() const;
};

struct Prediction {
    double p1 = 0.5;  // single-probability summary (mean p(1) for Venn predictors)
    int label = 0;    // predicted class
    std::optional<Interval> correct_interval; // bounds on P(prediction correct), when available
};

class FittedPredictor {
public:
    virtual ~FittedPredictor() = default;
    virtual Prediction predict(std::span<const double> features) const = 0;
};

/// Something that can be trained on a labeled set and then predict.
class Predictor {
public:
    virtual ~Predictor() = default;
    virtual std::unique_ptr<FittedPredictor> fit(const Dataset& train) const = 0;
    virtual std::string name() const = 0;
};

/// Venn predictor over any taxonomy; fitting only stores the training set.
class VennPredictor : public Predictor {
public:
    VennPredictor(std::shared_ptr<const Taxonomy> taxonomy, ThresholdPolicy threshold, std::string name);
    std::unique_ptr<FittedPredictor> fit(const Dataset& train) const override;
    std::string name() const override { return name_; }

private:
    std::shared_ptr<const Taxonomy> taxonomy_;
    ThresholdPolicy threshold_;
    std::string name_;
};

/// Plain network: normalize, rebalance, train once, output the network's p(1).
class AnnPredictor : public Predictor {
public:
    AnnPredictor(RebalanceMode mode, TrainConfig cfg, ThresholdPolicy threshold);
    std::unique_ptr<FittedPredictor> fit(const Dataset& train) const override;
    std::string name() const override;

private:
    RebalanceMode mode_;
    TrainConfig cfg_;
    ThresholdPolicy threshold_;
};

/// Several predictors that share their expensive fitting work; predict()
/// returns one Prediction per member, in names() order.
class FittedSweep {
public:
    virtual ~FittedSweep() = default;
    virtual std::vector<Prediction> predict(std::span<const double> features) const = 0;
};

class SweepPredictor {
public:
    virtual ~SweepPredictor() = default;
    virtual std::unique_ptr<FittedSweep> fit(const Dataset& train) const = 0;
    virtual std::vector<std::string> names() const = 0;
};

/// ANN Venn predictors for several lambdas; the two networks trained per
/// prediction are shared by all of them.
class VennLambdaSweep : public SweepPredictor {
public:
    VennLambdaSweep(AnnScorer scorer, std::vector<std::size_t> lambdas, ThresholdPolicy threshold);
    std::unique_ptr<FittedSweep> fit(const Dataset& train) const override;
    std::vector<std::string> names() const override;

private:
    AnnScorer scorer_;
    std::vector<std::size_t> lambdas_;
    ThresholdPolicy threshold_;
};

struct PredictorSpec {
    enum class Kind { Venn, Ann };
    Kind kind = Kind::Venn;
    RebalanceMode rebalance;
    std::size_t lambda = 6;
    TrainConfig train;
    /// Defaults: Auto for Venn predictors, Argmax for plain networks.
    std::optional<ThresholdPolicy> threshold;
};

std::unique_ptr<Predictor> make_predictor(const PredictorSpec& spec);

// ---------------------------------------------------------------------------
// Batch protocol

struct BatchPlan {
    std::size_t folds = 10;
    std::size_t repeats = 10;
    std::uint64_t seed = 1;
    std::size_t workers = 1; // parallelism cap; results do not depend on it
    std::size_t reliability_bins = 20;
};

struct PooledPrediction {
    std::size_t repeat = 0;
    std::size_t index = 0; // position in the dataset
    double p1 = 0.0;
    int predicted = 0;
    int label = 0;
};

struct BatchResult {
    MetricReport pooled;
    std::vector<MetricReport> per_run;
    std::vector<PooledPrediction> predictions; // ordered by (repeat, index)
};

/// Fold membership (indices into data) for a stratified k-fold split.
std::vector<std::vector<std::size_t>> stratified_folds(const Dataset& data, std::size_t folds, std::uint64_t seed);

/**
 * Repeated stratified k-fold cross-validation. Every example is predicted
 * once per repeat by a predictor fitted on the other folds; metrics are
 * computed over all repeats' predictions pooled together.
 *
 * Each class needs at least `folds` members, except when folds equals the
 * dataset size (leave-one-out).
 */
BatchResult run_batch(const Dataset& data, const Predictor& predictor, const BatchPlan& plan);

/// One BatchResult per sweep member, all from the same folds.
std::vector<BatchResult> run_batch(const Dataset& data, const SweepPredictor& sweep, const BatchPlan& plan);

// ---------------------------------------------------------------------------
// Online protocol

struct OnlineStep {
    int err = 0;
    double p1 = 0.0;
    int predicted = 0;
    int label = 0;
    std::optional<double> lower_error; // 1 - U(prediction)
    std::optional<double> upper_error; // 1 - L(prediction)
    double error_prob = 0.0;           // |prediction - p1|
};

struct OnlineTrace {
    std::string predictor;
    std::vector<OnlineStep> steps;
    bool has_bounds = false;
    // Cumulative curves, element n-1 covers steps 1..n.
    std::vector<std::size_t> errors;  // E_n
    std::vector<double> lower;        // LEP_n (bounded predictors)
    std::vector<double> upper;        // UEP_n (bounded predictors)
    std::vector<double> expected;     // EP_n

    std::size_t size() const { return steps.size(); }

    /// Two-sided Poisson-binomial p-value of E_N against EP_N.
    double miscalibration_pvalue() const;

    /// LEP_n - slack(n) <= E_n <= UEP_n + slack(n) for every prefix n.
    bool bounds_contain_errors(const std::function<double(std::size_t)>& slack) const;
};

/**
 * Prequential run: the first initial_size examples form the training set;
 * each later example is predicted by a predictor refitted on everything
 * revealed so far, then its label is revealed. Examples are taken in
 * dataset order.
 */
OnlineTrace run_online(const Dataset& data, const Predictor& predictor, std::size_t initial_size);

/// One trace per sweep member.
std::vector<OnlineTrace> run_online(const Dataset& data, const SweepPredictor& sweep, std::size_t initial_size);

/// Columns n, err, E_n, LEP_n, UEP_n for bounded predictors, n, err, E_n, EP_n otherwise.
void write_trace_csv(const OnlineTrace& trace, const std::filesystem::path& path);

/// Solid E_n line, dashed bound (or EP_n) lines.
std::string render_trace_svg(const OnlineTrace& trace, const std::string& title);

/// Runs fn(i) for i in [0, n) on up to `workers` threads; rethrows the first exception.
void parallel_for(std::size_t n, std::size_t workers, const std::function<void(std::size_t)>& fn);

} // namespace vennpred
