#include "vennpred/venn.hpp"

#include <algorithm>
#include <cmath>

#include "vennpred/errors.hpp"

namespace vennpred {

AnnScorer::AnnScorer(RebalanceMode mode, TrainConfig train_cfg) : mode_(mode), train_cfg_(train_cfg)
{
    train_cfg_.validate();
}

ExtensionScores AnnScorer::score(const Dataset& train, std::span<const double> new_features, int assumed_label) const
{
    if (assumed_label != 0 && assumed_label != 1)
        throw DataError("assumed label must be 0 or 1");
    if (new_features.size() != train.dim())
        throw DataError("new example has " + std::to_string(new_features.size()) + " features, training set has " +
                        std::to_string(train.dim()));

    ExtensionScores out;
    out.training.assign(train.size(), 0.5);

    Dataset extended = train;
    extended.add(std::vector<double>(new_features.begin(), new_features.end()), assumed_label);
    if (extended.size() < kMinTrainingExamples)
        return out;

    const Dataset canon = extended.canonical();
    const NormalizationStats stats = fit_normalizer(canon);
    const Dataset normalized = apply_normalizer(stats, canon);
    RebalanceResult balanced = rebalance(normalized, mode_);
    const Dataset& fit_set = balanced.data.size() >= kMinTrainingExamples ? balanced.data : normalized;
    const MlpModel model = vennpred::train(fit_set, train_cfg_);

    Eigen::MatrixXd inputs(static_cast<Eigen::Index>(train.dim()), static_cast<Eigen::Index>(train.size() + 1));
    for (std::size_t i = 0; i <= train.size(); ++i) {
        const auto z = apply_normalizer(stats, i < train.size() ? std::span<const double>(train[i].features)
                                                                  : new_features);
        for (std::size_t j = 0; j < z.size(); ++j)
            inputs(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(i)) = z[j];
    }
    const Eigen::VectorXd outputs = model.forward_batch(inputs);
    for (std::size_t i = 0; i < train.size(); ++i)
        out.training[i] = outputs[static_cast<Eigen::Index>(i)];
    out.new_example = outputs[static_cast<Eigen::Index>(train.size())];
    out.trained = true;
    return out;
}

AnnBinTaxonomy::AnnBinTaxonomy(std::size_t lambda, RebalanceMode mode, TrainConfig train_cfg)
    : lambda_(lambda), scorer_(mode, train_cfg)
{
    if (lambda_ == 0)
        throw std::invalid_argument("lambda must be at least 1");
}

Category AnnBinTaxonomy::bin(double output, std::size_t lambda)
{
    const double scaled = std::floor(output * static_cast<double>(lambda));
    if (!(scaled > 0.0))
        return 0;
    return std::min(static_cast<Category>(scaled), lambda - 1);
}

CategoryAssignment AnnBinTaxonomy::bin_all(const ExtensionScores& scores, std::size_t lambda)
{
    CategoryAssignment out;
    out.training.assign(scores.training.size(), 0);
    if (!scores.trained)
        return out;
    for (std::size_t i = 0; i < scores.training.size(); ++i)
        out.training[i] = bin(scores.training[i], lambda);
    out.new_example = bin(scores.new_example, lambda);
    return out;
}

CategoryAssignment AnnBinTaxonomy::assign(const Dataset& train, std::span<const double> new_features,
                                          int assumed_label) const
{
    if (lambda_ == 1) {
        // One category regardless of the network; skip training.
        if (new_features.size() != train.dim())
            throw DataError("new example dimension mismatch");
        return CategoryAssignment{std::vector<Category>(train.size(), 0), 0};
    }
    return bin_all(scorer_.score(train, new_features, assumed_label), lambda_);
}

LabelDistribution empirical_distribution(std::span<const int> training_labels,
                                         std::span<const Category> training_categories, Category new_category,
                                         int assumed_label)
{
    if (training_labels.size() != training_categories.size())
        throw DataError("labels and categories differ in length");
    LabelDistribution d{assumed_label == 1 ? std::size_t{1} : std::size_t{0}, 1};
    for (std::size_t i = 0; i < training_labels.size(); ++i) {
        if (training_categories[i] != new_category)
            continue;
        ++d.members;
        if (training_labels[i] == 1)
            ++d.positives;
    }
    return d;
}

int PredictionRule::decide(double mean_p1) const
{
    if (kind == Kind::Argmax)
        return mean_p1 > 1.0 - mean_p1 ? 1 : 0;
    return mean_p1 > theta ? 1 : 0;
}

Interval VennOutput::interval_for(int label) const
{
    const double a = dist[0].p(label);
    const double b = dist[1].p(label);
    return {std::min(a, b), std::max(a, b)};
}

VennOutput combine(const std::array<LabelDistribution, 2>& dist, const PredictionRule& rule)
{
    VennOutput out;
    out.dist = dist;
    out.mean_p1 = 0.5 * (dist[0].p1() + dist[1].p1());
    out.prediction = rule.decide(out.mean_p1);
    out.pred_interval = out.interval_for(out.prediction);
    return out;
}

VennOutput predict(const Taxonomy& taxonomy, const Dataset& train, std::span<const double> features,
                   const PredictionRule& rule)
{
    if (train.empty())
        throw DataError("Venn prediction needs a nonempty training set");
    const auto labels = train.labels();
    std::array<LabelDistribution, 2> dist;
    for (int k = 0; k <= 1; ++k) {
        const CategoryAssignment cats = taxonomy.assign(train, features, k);
        dist[static_cast<std::size_t>(k)] = empirical_distribution(labels, cats.training, cats.new_example, k);
    }
    return combine(dist, rule);
}

std::vector<VennOutput> predict_lambda_sweep(const AnnScorer& scorer, const Dataset& train,
                                             std::span<const double> features, std::span<const std::size_t> lambdas,
                                             const PredictionRule& rule)
{
    if (train.empty())
        throw DataError("Venn prediction needs a nonempty training set");
    const auto labels = train.labels();
    const std::array<ExtensionScores, 2> scores{scorer.score(train, features, 0), scorer.score(train, features, 1)};
    std::vector<VennOutput> out;
    out.reserve(lambdas.size());
    for (std::size_t lambda : lambdas) {
        if (lambda == 0)
            throw std::invalid_argument("lambda must be at least 1");
        std::array<LabelDistribution, 2> dist;
        for (int k = 0; k <= 1; ++k) {
            const auto& sc = scores[static_cast<std::size_t>(k)];
            const CategoryAssignment cats =
                lambda == 1 ? CategoryAssignment{std::vector<Category>(train.size(), 0), 0}
                            : AnnBinTaxonomy::bin_all(sc, lambda);
            dist[static_cast<std::size_t>(k)] = empirical_distribution(labels, cats.training, cats.new_example, k);
        }
        out.push_back(combine(dist, rule));
    }
    return out;
}

} // namespace vennpred
