#include "vennpred/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "vennpred/mlp.hpp"

namespace vennpred {

namespace {

void check_lengths(std::size_t a, std::size_t b)
{
    if (a != b)
        throw std::invalid_argument("length mismatch: " + std::to_string(a) + " vs " + std::to_string(b));
}

std::string fmt(double v)
{
    std::ostringstream os;
    os.precision(17);
    os << v;
    return os.str();
}

} // namespace

ConfusionRates confusion_rates(std::span<const int> predictions, std::span<const int> labels)
{
    check_lengths(predictions.size(), labels.size());
    std::size_t tp = 0, fn = 0, tn = 0, fp = 0;
    for (std::size_t i = 0; i < labels.size(); ++i) {
        if (labels[i] == 1)
            (predictions[i] == 1 ? tp : fn)++;
        else
            (predictions[i] == 1 ? fp : tn)++;
    }
    if (tp + fn == 0 || tn + fp == 0)
        throw std::domain_error("undefined rate: labels contain only one class");
    return {static_cast<double>(tp) / static_cast<double>(tp + fn),
            static_cast<double>(tn) / static_cast<double>(tn + fp)};
}

double cross_entropy(std::span<const double> probs, std::span<const int> labels)
{
    check_lengths(probs.size(), labels.size());
    double total = 0.0;
    for (std::size_t i = 0; i < probs.size(); ++i) {
        const double p = std::clamp(probs[i], kProbClamp, 1.0 - kProbClamp);
        total -= labels[i] == 1 ? std::log(p) : std::log(1.0 - p);
    }
    return total;
}

double brier(std::span<const double> probs, std::span<const int> labels)
{
    check_lengths(probs.size(), labels.size());
    if (probs.empty())
        return 0.0;
    double total = 0.0;
    for (std::size_t i = 0; i < probs.size(); ++i) {
        const double d = probs[i] - labels[i];
        total += d * d;
    }
    return total / static_cast<double>(probs.size());
}

double reliability(std::span<const double> probs, std::span<const int> labels, std::size_t bins)
{
    check_lengths(probs.size(), labels.size());
    if (bins == 0)
        throw std::invalid_argument("reliability needs at least one bin");
    if (probs.empty())
        return 0.0;
    std::vector<double> sum_p(bins, 0.0);
    std::vector<double> positives(bins, 0.0);
    std::vector<std::size_t> count(bins, 0);
    for (std::size_t i = 0; i < probs.size(); ++i) {
        const double scaled = std::floor(probs[i] * static_cast<double>(bins));
        const std::size_t k = scaled > 0.0 ? std::min(static_cast<std::size_t>(scaled), bins - 1) : 0;
        sum_p[k] += probs[i];
        positives[k] += labels[i];
        ++count[k];
    }
    double rel = 0.0;
    for (std::size_t k = 0; k < bins; ++k) {
        if (count[k] == 0)
            continue;
        const double n_k = static_cast<double>(count[k]);
        const double d = sum_p[k] / n_k - positives[k] / n_k;
        rel += n_k * d * d;
    }
    return rel / static_cast<double>(probs.size());
}

std::vector<double> poisson_binomial_pmf(std::span<const double> q)
{
    std::vector<double> pmf(q.size() + 1, 0.0);
    pmf[0] = 1.0;
    for (std::size_t i = 0; i < q.size(); ++i) {
        const double p = q[i];
        if (!(p >= 0.0 && p <= 1.0))
            throw std::invalid_argument("probability outside [0,1] at index " + std::to_string(i));
        for (std::size_t s = i + 1; s > 0; --s)
            pmf[s] = pmf[s] * (1.0 - p) + pmf[s - 1] * p;
        pmf[0] *= 1.0 - p;
    }
    return pmf;
}

double miscalibration_pvalue(std::span<const double> q, std::span<const int> errors)
{
    check_lengths(q.size(), errors.size());
    const std::vector<double> pmf = poisson_binomial_pmf(q);
    const double expected = std::accumulate(q.begin(), q.end(), 0.0);
    const double observed = static_cast<double>(std::count(errors.begin(), errors.end(), 1));
    const double deviation = std::abs(observed - expected);
    // Outcomes as extreme as the observed one, up to summation noise in EP.
    const double slack = 1e-9 * std::max(1.0, expected);
    double p = 0.0;
    for (std::size_t s = 0; s < pmf.size(); ++s)
        if (std::abs(static_cast<double>(s) - expected) >= deviation - slack)
            p += pmf[s];
    return std::min(p, 1.0);
}

std::string MetricReport::to_key_value() const
{
    std::ostringstream os;
    os << "sensitivity=" << fmt(sensitivity) << '\n'
       << "specificity=" << fmt(specificity) << '\n'
       << "cross_entropy=" << fmt(cross_entropy) << '\n'
       << "brier=" << fmt(brier) << '\n'
       << "reliability=" << fmt(reliability) << '\n'
       << "n_bins=" << n_bins << '\n'
       << "n=" << n << '\n';
    return os.str();
}

std::string MetricReport::csv_header()
{
    return "sensitivity,specificity,cross_entropy,brier,reliability,n_bins,n";
}

std::string MetricReport::to_csv_row() const
{
    return fmt(sensitivity) + ',' + fmt(specificity) + ',' + fmt(cross_entropy) + ',' + fmt(brier) + ',' +
           fmt(reliability) + ',' + std::to_string(n_bins) + ',' + std::to_string(n);
}

MetricReport evaluate(std::span<const double> probs, std::span<const int> predictions, std::span<const int> labels,
                      std::size_t bins)
{
    MetricReport r;
    const ConfusionRates rates = confusion_rates(predictions, labels);
    r.sensitivity = rates.sensitivity;
    r.specificity = rates.specificity;
    r.cross_entropy = cross_entropy(probs, labels);
    r.brier = brier(probs, labels);
    r.reliability = reliability(probs, labels, bins);
    r.n_bins = bins;
    r.n = labels.size();
    return r;
}

} // namespace vennpred
