#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace vennpred {

struct ConfusionRates {
    double sensitivity = 0.0; // TP / (TP + FN)
    double specificity = 0.0; // TN / (TN + FP)
};

/// Throws std::domain_error ("undefined rate") when either class is absent
/// from the labels.
ConfusionRates confusion_rates(std::span<const int> predictions, std::span<const int> labels);

/// Summed log-loss, natural log, probabilities clamped to [1e-12, 1 - 1e-12].
double cross_entropy(std::span<const double> probs, std::span<const int> labels);

/// Mean squared difference between probability and label.
double brier(std::span<const double> probs, std::span<const int> labels);

/**
 * Murphy reliability: (1/N) sum_k n_k (r_k - phi_k)^2 over `bins` equal
 * intervals of [0,1] (last one closed), where r_k is the mean forecast and
 * phi_k the positive fraction in bin k. Empty bins contribute nothing.
 */
double reliability(std::span<const double> probs, std::span<const int> labels, std::size_t bins = 20);

/// Exact distribution of a sum of independent Bernoulli(q_i) variables;
/// element s is P(S = s). O(N^2) convolution.
std::vector<double> poisson_binomial_pmf(std::span<const double> q);

/**
 * Two-sided test of the observed error count against the expected count
 * implied by per-example error probabilities q_i: returns
 * P(|S - EP| >= |E - EP|) under the exact Poisson-binomial law of S, where
 * EP = sum q_i and E = sum errors.
 */
double miscalibration_pvalue(std::span<const double> q, std::span<const int> errors);

struct MetricReport {
    double sensitivity = 0.0;
    double specificity = 0.0;
    double cross_entropy = 0.0;
    double brier = 0.0;
    double reliability = 0.0;
    std::size_t n_bins = 20;
    std::size_t n = 0;

    /// "sensitivity=...\nspecificity=...\n..." one field per line.
    std::string to_key_value() const;
    static std::string csv_header();
    std::string to_csv_row() const;
};

MetricReport evaluate(std::span<const double> probs, std::span<const int> predictions, std::span<const int> labels,
                      std::size_t bins = 20);

} // namespace vennpred
