#pragma once

#include <cstddef>
#include <filesystem>
#include <string>
#include <vector>

#include "vennpred/data.hpp"

namespace vennpred {

enum class FeatureCriterion { ChiSquared, InformationGain };

FeatureCriterion parse_feature_criterion(const std::string& name); // "chi2" or "ig"

struct FeatureScore {
    std::size_t index = 0; // 0-based column
    double chi2 = 0.0;
    double info_gain = 0.0; // bits
    bool retained = false;
};

/**
 * Scores each binary feature against the label: chi-squared of the 2x2
 * contingency table (no continuity correction) and information gain
 * H(Y) - H(Y|X) in bits. A feature is retained when its score under
 * `criterion` exceeds `epsilon`.
 *
 * Features must take only the values 0 and 1; anything else throws
 * DataError (discretize first).
 */
std::vector<FeatureScore> score_features(const Dataset& data, FeatureCriterion criterion, double epsilon = 0.0);

/// Columns with retained == true, in order.
std::vector<std::size_t> retained_features(const std::vector<FeatureScore>& scores);

/// CSV with columns index (1-based), chi2, info_gain, retained.
void write_feature_scores(const std::vector<FeatureScore>& scores, const std::filesystem::path& path);

} // namespace vennpred
