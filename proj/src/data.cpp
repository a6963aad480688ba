#include "vennpred/data.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

#include "vennpred/errors.hpp"
#include "vennpred/random.hpp"

namespace vennpred {

bool canonical_less(const Example& a, const Example& b)
{
    if (a.features != b.features)
        return std::lexicographical_compare(a.features.begin(), a.features.end(), b.features.begin(),
                                            b.features.end());
    return a.label.value_or(-1) < b.label.value_or(-1);
}

Dataset::Dataset(std::size_t dim, std::vector<std::string> schema) : dim_(dim), schema_(std::move(schema))
{
    if (dim_ == 0)
        throw DataError("dataset dimensionality must be positive");
    if (!schema_.empty() && schema_.size() != dim_)
        throw DataError("schema has " + std::to_string(schema_.size()) + " names for " + std::to_string(dim_) +
                        " features");
}

void Dataset::add(Example example)
{
    if (example.features.size() != dim_)
        throw DataError("example has " + std::to_string(example.features.size()) + " features, dataset expects " +
                        std::to_string(dim_));
    if (example.label) {
        if (*example.label == 1)
            ++positives_;
        else if (*example.label == 0)
            ++negatives_;
        else
            throw DataError("label must be 0 or 1, got " + std::to_string(*example.label));
    }
    examples_.push_back(std::move(example));
}

void Dataset::add(std::vector<double> features, std::optional<int> label)
{
    add(Example{std::move(features), label});
}

std::vector<int> Dataset::labels() const
{
    std::vector<int> out;
    out.reserve(size());
    for (std::size_t i = 0; i < size(); ++i) {
        if (!examples_[i].label)
            throw DataError("example " + std::to_string(i) + " is unlabeled");
        out.push_back(*examples_[i].label);
    }
    return out;
}

Dataset Dataset::subset(std::span<const std::size_t> indices) const
{
    Dataset out(dim_, schema_);
    out.reserve(indices.size());
    for (std::size_t i : indices)
        out.add(examples_.at(i));
    return out;
}

Dataset Dataset::select_features(std::span<const std::size_t> columns) const
{
    std::vector<std::string> names;
    for (std::size_t c : columns) {
        if (c >= dim_)
            throw DataError("feature index " + std::to_string(c) + " out of range (dim " + std::to_string(dim_) + ")");
        if (!schema_.empty())
            names.push_back(schema_[c]);
    }
    Dataset out(columns.size(), std::move(names));
    out.reserve(size());
    for (const auto& ex : examples_) {
        std::vector<double> f;
        f.reserve(columns.size());
        for (std::size_t c : columns)
            f.push_back(ex.features[c]);
        out.add(std::move(f), ex.label);
    }
    return out;
}

Dataset Dataset::canonical() const
{
    Dataset out = *this;
    std::sort(out.examples_.begin(), out.examples_.end(), canonical_less);
    return out;
}

// ---------------------------------------------------------------------------
// CSV

namespace {

std::vector<std::string_view> split_row(std::string_view line)
{
    std::vector<std::string_view> cells;
    std::size_t start = 0;
    while (true) {
        const std::size_t comma = line.find(',', start);
        cells.push_back(line.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start));
        if (comma == std::string_view::npos)
            break;
        start = comma + 1;
    }
    return cells;
}

std::string_view trim(std::string_view s)
{
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t'))
        s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r'))
        s.remove_suffix(1);
    return s;
}

std::optional<double> parse_number(std::string_view cell)
{
    cell = trim(cell);
    if (!cell.empty() && cell.front() == '+')
        cell.remove_prefix(1);
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), v);
    if (ec != std::errc() || ptr != cell.data() + cell.size() || cell.empty() || !std::isfinite(v))
        return std::nullopt;
    return v;
}

std::string where(std::size_t row, std::size_t col)
{
    return "row " + std::to_string(row) + ", column " + std::to_string(col);
}

} // namespace

Dataset parse_csv(std::string_view text, bool has_labels)
{
    std::vector<std::vector<std::string_view>> rows;
    std::vector<std::size_t> line_numbers;
    std::size_t line_no = 0;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        std::size_t nl = text.find('\n', pos);
        if (nl == std::string_view::npos)
            nl = text.size();
        ++line_no;
        std::string_view line = text.substr(pos, nl - pos);
        if (line_no == 1 && line.starts_with("\xEF\xBB\xBF"))
            line.remove_prefix(3);
        if (!trim(line).empty()) {
            rows.push_back(split_row(line));
            line_numbers.push_back(line_no);
        }
        pos = nl + 1;
    }
    if (rows.empty())
        throw DataError("no rows");

    std::vector<std::string> header;
    std::size_t first = 0;
    if (std::any_of(rows[0].begin(), rows[0].end(), [](auto c) { return !parse_number(c); })) {
        for (auto c : rows[0])
            header.emplace_back(trim(c));
        first = 1;
    }
    if (first >= rows.size())
        throw DataError("no rows");

    const std::size_t cols = rows[first].size();
    const std::size_t dim = has_labels ? cols - 1 : cols;
    if (dim == 0)
        throw DataError("no feature columns");
    if (!header.empty() && header.size() != cols)
        throw DataError("header has " + std::to_string(header.size()) + " columns, data has " +
                        std::to_string(cols));
    if (!header.empty())
        header.resize(dim);

    Dataset data(dim, std::move(header));
    data.reserve(rows.size() - first);
    for (std::size_t r = first; r < rows.size(); ++r) {
        const auto& cells = rows[r];
        const std::size_t row = line_numbers[r];
        if (cells.size() != cols)
            throw DataError("parse error at " + where(row, cells.size()) + ": expected " + std::to_string(cols) +
                            " columns, found " + std::to_string(cells.size()));
        std::vector<double> features(dim);
        for (std::size_t c = 0; c < dim; ++c) {
            const auto v = parse_number(cells[c]);
            if (!v)
                throw DataError("parse error at " + where(row, c + 1) + ": non-numeric value '" +
                                std::string(trim(cells[c])) + "'");
            features[c] = *v;
        }
        std::optional<int> label;
        if (has_labels) {
            const auto v = parse_number(cells[dim]);
            if (!v || (*v != 0.0 && *v != 1.0))
                throw DataError("parse error at " + where(row, dim + 1) + ": label must be 0 or 1, found '" +
                                std::string(trim(cells[dim])) + "'");
            label = static_cast<int>(*v);
        }
        data.add(std::move(features), label);
    }
    return data;
}

Dataset load_csv(const std::filesystem::path& path, bool has_labels)
{
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw std::runtime_error("cannot open " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_csv(buf.str(), has_labels);
}

void save_csv(const Dataset& data, const std::filesystem::path& path)
{
    std::ofstream out(path);
    if (!out)
        throw std::runtime_error("cannot write " + path.string());
    const bool labeled = data.labeled() > 0;
    for (std::size_t j = 0; j < data.dim(); ++j) {
        if (j)
            out << ',';
        out << (data.schema().empty() ? "f" + std::to_string(j + 1) : data.schema()[j]);
    }
    if (labeled)
        out << ",label";
    out << '\n';
    char buf[64];
    for (const auto& ex : data) {
        for (std::size_t j = 0; j < ex.features.size(); ++j) {
            if (j)
                out << ',';
            const auto res = std::to_chars(buf, buf + sizeof buf, ex.features[j]);
            out.write(buf, res.ptr - buf);
        }
        if (labeled)
            out << ',' << (ex.label ? std::to_string(*ex.label) : "");
        out << '\n';
    }
}

// ---------------------------------------------------------------------------
// Normalization

NormalizationStats fit_normalizer(const Dataset& train)
{
    if (train.empty())
        throw DataError("cannot fit normalizer on an empty dataset");
    const std::size_t d = train.dim();
    const double n = static_cast<double>(train.size());
    NormalizationStats stats{std::vector<double>(d, 0.0), std::vector<double>(d, 0.0)};
    for (const auto& ex : train)
        for (std::size_t j = 0; j < d; ++j)
            stats.mean[j] += ex.features[j];
    for (auto& m : stats.mean)
        m /= n;
    for (const auto& ex : train)
        for (std::size_t j = 0; j < d; ++j) {
            const double dev = ex.features[j] - stats.mean[j];
            stats.std[j] += dev * dev;
        }
    for (auto& s : stats.std)
        s = std::sqrt(s / n);
    return stats;
}

std::vector<double> apply_normalizer(const NormalizationStats& stats, std::span<const double> x)
{
    if (x.size() != stats.mean.size())
        throw DataError("normalizer expects " + std::to_string(stats.mean.size()) + " features, got " +
                        std::to_string(x.size()));
    std::vector<double> out(x.size());
    for (std::size_t j = 0; j < x.size(); ++j)
        out[j] = stats.std[j] > 0.0 ? (x[j] - stats.mean[j]) / stats.std[j] : 0.0;
    return out;
}

Dataset apply_normalizer(const NormalizationStats& stats, const Dataset& data)
{
    Dataset out(data.dim(), data.schema());
    out.reserve(data.size());
    for (const auto& ex : data)
        out.add(apply_normalizer(stats, ex.features), ex.label);
    return out;
}

// ---------------------------------------------------------------------------
// Synthetic data

namespace {

double logistic(double t)
{
    return 1.0 / (1.0 + std::exp(-t));
}

double clamp_open(double p)
{
    return std::clamp(p, 1e-12, 1.0 - 1e-12);
}

} // namespace

SyntheticSpec SyntheticSpec::reference(std::uint64_t seed, std::size_t dim)
{
    SyntheticSpec spec;
    spec.dim = dim;
    spec.seed = seed;
    spec.latent_weights.assign(dim, 0.0);
    spec.feature_rates.assign(dim, 0.0);
    // The design itself is fixed; only the sample depends on the seed.
    Rng rng(0xd5a7a5e7ULL ^ dim);
    for (auto& r : spec.feature_rates)
        r = 0.15 + 0.35 * uniform01(rng);
    const std::size_t informative = std::min<std::size_t>(7, dim);
    for (std::size_t k = 0; k < informative; ++k) {
        const std::size_t j = k * dim / informative;
        const double magnitude = 1.0 + 1.0 * uniform01(rng);
        spec.latent_weights[j] = (k % 3 == 2) ? -magnitude : magnitude;
    }
    spec.noise_scale = 0.5;
    spec.target_prevalence = 0.1852;
    return spec;
}

SyntheticSample generate_synthetic(const SyntheticSpec& spec, std::size_t n)
{
    if (n == 0)
        throw DataError("synthetic sample size must be at least 1");
    if (spec.dim == 0 || spec.latent_weights.size() != spec.dim)
        throw DataError("synthetic spec: latent_weights must have dim entries");
    if (!spec.feature_rates.empty() && spec.feature_rates.size() != spec.dim)
        throw DataError("synthetic spec: feature_rates must be empty or have dim entries");
    if (!(spec.noise_scale >= 0.0))
        throw DataError("synthetic spec: noise_scale must be non-negative");
    if (spec.target_prevalence && !(*spec.target_prevalence > 0.0 && *spec.target_prevalence < 1.0))
        throw DataError("synthetic spec: target_prevalence must lie in (0,1)");

    Rng feature_rng(hash_combine(spec.seed, 1));
    Rng noise_rng(hash_combine(spec.seed, 2));
    Rng label_rng(hash_combine(spec.seed, 3));

    std::vector<std::vector<double>> features(n, std::vector<double>(spec.dim));
    std::vector<double> score(n);
    for (std::size_t i = 0; i < n; ++i) {
        double s = 0.0;
        for (std::size_t j = 0; j < spec.dim; ++j) {
            const double rate = spec.feature_rates.empty() ? 0.5 : spec.feature_rates[j];
            features[i][j] = uniform01(feature_rng) < rate ? 1.0 : 0.0;
            s += spec.latent_weights[j] * features[i][j];
        }
        if (spec.noise_scale > 0.0)
            s += spec.noise_scale * standard_normal(noise_rng);
        score[i] = s;
    }

    auto mean_prob = [&](double bias) {
        double total = 0.0;
        for (double s : score)
            total += clamp_open(logistic(bias + s));
        return total / static_cast<double>(n);
    };

    double bias = spec.bias;
    if (spec.target_prevalence) {
        // Mean probability is increasing in the bias.
        double lo = -60.0;
        double hi = 60.0;
        for (int it = 0; it < 200 && hi - lo > 1e-13; ++it) {
            const double mid = 0.5 * (lo + hi);
            (mean_prob(mid) < *spec.target_prevalence ? lo : hi) = mid;
        }
        bias = 0.5 * (lo + hi);
    }

    SyntheticSample out{Dataset(spec.dim), std::vector<double>(n), bias};
    out.data.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double p = clamp_open(logistic(bias + score[i]));
        out.true_probs[i] = p;
        out.data.add(std::move(features[i]), uniform01(label_rng) < p ? 1 : 0);
    }
    return out;
}

Dataset shuffled(const Dataset& data, std::uint64_t seed)
{
    std::vector<std::size_t> order(data.size());
    std::iota(order.begin(), order.end(), 0);
    Rng rng(hash_combine(seed, 0x5aff1e));
    for (std::size_t i = order.size(); i > 1; --i)
        std::swap(order[i - 1], order[uniform_index(rng, i)]);
    return data.subset(order);
}

} // namespace vennpred
