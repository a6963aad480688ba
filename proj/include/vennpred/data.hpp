#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace vennpred {

/// One observation: a feature vector and, optionally, its binary class.
struct Example {
    std::vector<double> features;
    std::optional<int> label;

    bool operator==(const Example&) const = default;
};

/// Strict weak order on examples: lexicographic on features, then label
/// (unlabeled sorts first). Used to put a multiset into a canonical order.
bool canonical_less(const Example& a, const Example& b);

/**
 * Ordered collection of examples sharing one dimensionality.
 *
 * Labels, when present, are exactly 0 or 1; add() rejects anything else.
 * Class counts are maintained incrementally.
 */
class Dataset {
public:
    Dataset() = default;
    explicit Dataset(std::size_t dim, std::vector<std::string> schema = {});

    void add(Example example);
    void add(std::vector<double> features, std::optional<int> label);
    void reserve(std::size_t n) { examples_.reserve(n); }

    std::size_t size() const { return examples_.size(); }
    bool empty() const { return examples_.empty(); }
    std::size_t dim() const { return dim_; }
    const std::vector<std::string>& schema() const { return schema_; }

    const Example& operator[](std::size_t i) const { return examples_[i]; }
    const std::vector<Example>& examples() const { return examples_; }
    auto begin() const { return examples_.begin(); }
    auto end() const { return examples_.end(); }

    std::size_t positives() const { return positives_; }
    std::size_t negatives() const { return negatives_; }
    std::size_t labeled() const { return positives_ + negatives_; }
    bool fully_labeled() const { return labeled() == size(); }

    /// Labels as a vector; throws DataError if any example is unlabeled.
    std::vector<int> labels() const;

    /// Examples at the given positions, in the given order.
    Dataset subset(std::span<const std::size_t> indices) const;

    /// Projection onto the given feature columns (0-based).
    Dataset select_features(std::span<const std::size_t> columns) const;

    /// Copy with examples sorted by canonical_less.
    Dataset canonical() const;

private:
    std::size_t dim_ = 0;
    std::vector<std::string> schema_;
    std::vector<Example> examples_;
    std::size_t positives_ = 0;
    std::size_t negatives_ = 0;
};

// ---------------------------------------------------------------------------
// CSV

/**
 * Reads a comma-separated file. When has_labels is set the last column is the
 * class label (0 or 1). A first row containing any non-numeric cell is taken
 * as a header. Throws DataError naming the row and column of the first bad
 * cell.
 */
Dataset load_csv(const std::filesystem::path& path, bool has_labels);

/// Parses CSV text; same rules as load_csv.
Dataset parse_csv(std::string_view text, bool has_labels);

/// Writes the dataset with a header row; labels (if any) go in the last column.
void save_csv(const Dataset& data, const std::filesystem::path& path);

// ---------------------------------------------------------------------------
// Normalization

struct NormalizationStats {
    std::vector<double> mean;
    std::vector<double> std; // population standard deviation (divisor l)
};

NormalizationStats fit_normalizer(const Dataset& train);

/// (x_j - mean_j) / std_j per coordinate; coordinates with std_j == 0 map to 0.
std::vector<double> apply_normalizer(const NormalizationStats& stats, std::span<const double> x);
Dataset apply_normalizer(const NormalizationStats& stats, const Dataset& data);

// ---------------------------------------------------------------------------
// Synthetic data

/**
 * Logistic latent model over binary features. Feature j is Bernoulli with
 * rate feature_rates[j] (0.5 when the vector is empty); the true positive
 * probability is logistic(bias + w.x + noise_scale * z), z ~ N(0,1) per
 * example. When target_prevalence is set, bias is replaced by the value that
 * makes the mean true probability of the drawn sample equal the target.
 */
struct SyntheticSpec {
    std::size_t dim = 34;
    std::vector<double> latent_weights = std::vector<double>(34, 0.0);
    std::vector<double> feature_rates;
    double bias = 0.0;
    double noise_scale = 0.0;
    std::optional<double> target_prevalence = 0.1852;
    std::uint64_t seed = 1;

    /// A 34-feature, 18.52%-positive design: seven informative features,
    /// the rest pure noise.
    static SyntheticSpec reference(std::uint64_t seed, std::size_t dim = 34);
};

struct SyntheticSample {
    Dataset data;
    std::vector<double> true_probs;
    double bias = 0.0; // bias actually used (after tuning)
};

SyntheticSample generate_synthetic(const SyntheticSpec& spec, std::size_t n);

/// Fisher-Yates shuffle of the example order, seeded.
Dataset shuffled(const Dataset& data, std::uint64_t seed);

} // namespace vennpred
