#include "vennpred/mlp.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "vennpred/errors.hpp"
#include "vennpred/random.hpp"

namespace vennpred {

std::size_t MlpParameters::parameter_count() const
{
    return static_cast<std::size_t>(hidden_weights.size() + hidden_bias.size() + output_weights.size() + 1);
}

std::vector<double> MlpParameters::flatten() const
{
    std::vector<double> out;
    out.reserve(parameter_count());
    out.insert(out.end(), hidden_weights.data(), hidden_weights.data() + hidden_weights.size());
    out.insert(out.end(), hidden_bias.data(), hidden_bias.data() + hidden_bias.size());
    out.insert(out.end(), output_weights.data(), output_weights.data() + output_weights.size());
    out.push_back(output_bias);
    return out;
}

void MlpParameters::unflatten(std::span<const double> values)
{
    if (values.size() != parameter_count())
        throw DataError("parameter vector has wrong length");
    auto it = values.begin();
    std::copy_n(it, hidden_weights.size(), hidden_weights.data());
    it += hidden_weights.size();
    std::copy_n(it, hidden_bias.size(), hidden_bias.data());
    it += hidden_bias.size();
    std::copy_n(it, output_weights.size(), output_weights.data());
    it += output_weights.size();
    output_bias = *it;
}

bool MlpParameters::all_finite() const
{
    return hidden_weights.allFinite() && hidden_bias.allFinite() && output_weights.allFinite() &&
           std::isfinite(output_bias);
}

MlpModel MlpModel::zeros(std::size_t input_dim, std::size_t hidden_units)
{
    MlpModel m;
    const auto h = static_cast<Eigen::Index>(hidden_units);
    m.hidden_weights = Eigen::MatrixXd::Zero(h, static_cast<Eigen::Index>(input_dim));
    m.hidden_bias = Eigen::VectorXd::Zero(h);
    m.output_weights = Eigen::VectorXd::Zero(h);
    m.output_bias = 0.0;
    return m;
}

namespace {

double logistic(double t)
{
    return 1.0 / (1.0 + std::exp(-t));
}

double clamped_log_loss(double p, double y)
{
    const double q = std::clamp(p, kProbClamp, 1.0 - kProbClamp);
    return -(y * std::log(q) + (1.0 - y) * std::log(1.0 - q));
}

void check_dim(const MlpModel& model, std::size_t d)
{
    if (d != model.input_dim())
        throw DataError("model expects " + std::to_string(model.input_dim()) + " inputs, got " + std::to_string(d));
}

/// tanh(z) = 1 - 2 / (exp(2z) + 1), using Eigen's vectorized exp; saturates
/// cleanly to +-1 when exp overflows or underflows.
Eigen::MatrixXd tanh_activation(const Eigen::MatrixXd& z)
{
    return (1.0 - 2.0 / ((2.0 * z.array()).exp() + 1.0)).matrix();
}

/// Forward pass keeping the hidden activations for backpropagation.
struct ForwardCache {
    Eigen::MatrixXd hidden; // h x n, tanh activations
    Eigen::VectorXd output; // n
};

ForwardCache forward_cached(const MlpModel& m, const Eigen::MatrixXd& x)
{
    ForwardCache c;
    c.hidden = tanh_activation((m.hidden_weights * x).colwise() + m.hidden_bias);
    Eigen::VectorXd t = (c.hidden.transpose() * m.output_weights).array() + m.output_bias;
    c.output = t.unaryExpr([](double v) { return logistic(v); });
    return c;
}

double mean_loss(const Eigen::VectorXd& output, const Eigen::VectorXd& y)
{
    if (output.size() == 0)
        return 0.0;
    double total = 0.0;
    for (Eigen::Index i = 0; i < output.size(); ++i)
        total += clamped_log_loss(output[i], y[i]);
    return total / static_cast<double>(output.size());
}

MlpGradient backward(const MlpModel& m, const Eigen::MatrixXd& x, const Eigen::VectorXd& y, const ForwardCache& c)
{
    const double n = static_cast<double>(x.cols());
    const Eigen::RowVectorXd delta = ((c.output - y) / n).transpose();         // 1 x n
    MlpGradient g;
    g.output_weights = c.hidden * delta.transpose();                             // h
    g.output_bias = delta.sum();
    const Eigen::MatrixXd dz =
        (m.output_weights * delta).cwiseProduct((1.0 - c.hidden.array().square()).matrix()); // h x n
    g.hidden_weights = dz * x.transpose();
    g.hidden_bias = dz.rowwise().sum();
    return g;
}

Eigen::VectorXd label_vector(const Dataset& data)
{
    const auto labels = data.labels();
    Eigen::VectorXd y(static_cast<Eigen::Index>(labels.size()));
    for (std::size_t i = 0; i < labels.size(); ++i)
        y[static_cast<Eigen::Index>(i)] = labels[i];
    return y;
}

struct Split {
    std::vector<std::size_t> train;
    std::vector<std::size_t> validation;
};

/// Stratified when both classes are present. Identical examples (e.g. the
/// copies made by minority oversampling) always land on the same side, so the
/// validation error measures generalization rather than recall. Indices refer
/// to `data`, which is in canonical order, so identical examples are adjacent.
Split validation_split(const Dataset& data, Rng& rng)
{
    const std::size_t n = data.size();
    const auto n_val = std::max<std::size_t>(
        1, static_cast<std::size_t>(std::llround(TrainConfig::val_fraction * static_cast<double>(n))));

    struct Group {
        std::size_t begin;
        std::size_t end;
    };
    std::vector<Group> groups[2];
    for (std::size_t i = 0; i < n;) {
        std::size_t j = i + 1;
        while (j < n && data[j] == data[i])
            ++j;
        groups[*data[i].label].push_back({i, j});
        i = j;
    }
    auto shuffle = [&](std::vector<Group>& v) {
        for (std::size_t i = v.size(); i > 1; --i)
            std::swap(v[i - 1], v[uniform_index(rng, i)]);
    };

    const std::size_t pos = data.positives();
    std::size_t target[2];
    if (pos == 0 || pos == n) {
        target[0] = pos == 0 ? n_val : 0;
        target[1] = pos == n ? n_val : 0;
    } else {
        auto val_pos = static_cast<std::size_t>(
            std::llround(static_cast<double>(n_val) * static_cast<double>(pos) / static_cast<double>(n)));
        val_pos = std::min(val_pos, pos);
        val_pos = std::max(val_pos, n_val > n - pos ? n_val - (n - pos) : std::size_t{0});
        target[1] = val_pos;
        target[0] = n_val - val_pos;
    }

    Split split;
    for (int cls = 0; cls <= 1; ++cls) {
        shuffle(groups[cls]);
        std::size_t taken = 0;
        for (std::size_t g = 0; g < groups[cls].size(); ++g) {
            const Group& grp = groups[cls][g];
            // Never move a class entirely into validation.
            const bool to_val = taken < target[cls] && g + 1 < groups[cls].size();
            for (std::size_t i = grp.begin; i < grp.end; ++i)
                (to_val ? split.validation : split.train).push_back(i);
            if (to_val)
                taken += grp.end - grp.begin;
        }
    }
    if (split.validation.empty()) {
        // Every class is a single group of identical examples: fall back to
        // a plain split so early stopping still has data.
        split.train.clear();
        std::vector<std::size_t> all(n);
        std::iota(all.begin(), all.end(), 0);
        for (std::size_t i = all.size(); i > 1; --i)
            std::swap(all[i - 1], all[uniform_index(rng, i)]);
        split.validation.assign(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(n_val));
        split.train.assign(all.begin() + static_cast<std::ptrdiff_t>(n_val), all.end());
    }
    std::sort(split.train.begin(), split.train.end());
    std::sort(split.validation.begin(), split.validation.end());
    return split;
}

MlpModel initial_weights(std::size_t d, std::size_t h, Rng& rng)
{
    MlpModel m = MlpModel::zeros(d, h);
    const double r1 = 1.0 / std::sqrt(static_cast<double>(d));
    const double r2 = 1.0 / std::sqrt(static_cast<double>(h));
    auto draw = [&](double r) { return (2.0 * uniform01(rng) - 1.0) * r; };
    for (Eigen::Index i = 0; i < m.hidden_weights.size(); ++i)
        m.hidden_weights.data()[i] = draw(r1);
    for (Eigen::Index i = 0; i < m.hidden_bias.size(); ++i)
        m.hidden_bias[i] = draw(r1);
    for (Eigen::Index i = 0; i < m.output_weights.size(); ++i)
        m.output_weights[i] = draw(r2);
    m.output_bias = draw(r2);
    return m;
}

void step(MlpModel& m, const MlpGradient& g, double lr)
{
    m.hidden_weights -= lr * g.hidden_weights;
    m.hidden_bias -= lr * g.hidden_bias;
    m.output_weights -= lr * g.output_weights;
    m.output_bias -= lr * g.output_bias;
}

} // namespace

double MlpModel::forward(std::span<const double> x) const
{
    check_dim(*this, x.size());
    const Eigen::Map<const Eigen::VectorXd> v(x.data(), static_cast<Eigen::Index>(x.size()));
    const Eigen::VectorXd a = tanh_activation(hidden_weights * v + hidden_bias);
    return logistic(output_bias + output_weights.dot(a));
}

Eigen::VectorXd MlpModel::forward_batch(const Eigen::MatrixXd& inputs) const
{
    check_dim(*this, static_cast<std::size_t>(inputs.rows()));
    return forward_cached(*this, inputs).output;
}

Eigen::MatrixXd to_matrix(const Dataset& data)
{
    Eigen::MatrixXd x(static_cast<Eigen::Index>(data.dim()), static_cast<Eigen::Index>(data.size()));
    for (std::size_t i = 0; i < data.size(); ++i)
        for (std::size_t j = 0; j < data.dim(); ++j)
            x(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(i)) = data[i].features[j];
    return x;
}

double mean_cross_entropy(const MlpModel& model, const Dataset& batch)
{
    check_dim(model, batch.dim());
    return mean_loss(model.forward_batch(to_matrix(batch)), label_vector(batch));
}

MlpGradient gradient(const MlpModel& model, const Dataset& batch)
{
    check_dim(model, batch.dim());
    if (batch.empty())
        throw DataError("gradient of an empty batch");
    const Eigen::MatrixXd x = to_matrix(batch);
    const Eigen::VectorXd y = label_vector(batch);
    return backward(model, x, y, forward_cached(model, x));
}

void TrainConfig::validate() const
{
    if (hidden_units == 0)
        throw DataError("hidden_units must be positive");
    if (!(lr_init > 0.0) || !(lr_increase > 1.0) || !(lr_decrease > 0.0 && lr_decrease < 1.0) ||
        !(error_increase_tolerance > 1.0))
        throw DataError("invalid learning-rate schedule");
    if (max_epochs == 0 || patience == 0)
        throw DataError("max_epochs and patience must be positive");
}

TrainResult train_with_log(const Dataset& data, const TrainConfig& cfg)
{
    cfg.validate();
    if (!data.fully_labeled())
        throw DataError("training data must be labeled");
    if (data.size() < kMinTrainingExamples)
        throw DataError("insufficient data for validation split");

    const Dataset canon = data.canonical();
    const std::uint64_t seed = content_seed(canon, cfg.seed_material);
    Rng init_rng(hash_combine(seed, 0x1417));
    Rng split_rng(hash_combine(seed, 0x5b17));

    const Split split = validation_split(canon, split_rng);
    const Dataset train_part = canon.subset(split.train);
    const Dataset val_part = canon.subset(split.validation);
    const Eigen::MatrixXd x_train = to_matrix(train_part);
    const Eigen::VectorXd y_train = label_vector(train_part);
    const Eigen::MatrixXd x_val = to_matrix(val_part);
    const Eigen::VectorXd y_val = label_vector(val_part);

    TrainResult result;
    MlpModel model = initial_weights(canon.dim(), cfg.hidden_units, init_rng);
    ForwardCache cache = forward_cached(model, x_train);
    double perf = mean_loss(cache.output, y_train);
    double best_val = mean_loss(model.forward_batch(x_val), y_val);
    result.model = model;
    std::size_t since_best = 0;
    double lr = cfg.lr_init;

    result.epochs.reserve(cfg.max_epochs);
    for (std::size_t epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
        const MlpGradient g = backward(model, x_train, y_train, cache);
        MlpModel candidate = model;
        step(candidate, g, lr);
        ForwardCache cand_cache = forward_cached(candidate, x_train);
        const double cand_perf = mean_loss(cand_cache.output, y_train);

        EpochRecord rec{perf, cand_perf, 0.0, lr, true};
        if (!std::isfinite(cand_perf) || !candidate.all_finite() || cand_perf > perf * cfg.error_increase_tolerance) {
            rec.accepted = false;
            lr *= cfg.lr_decrease;
        } else {
            if (cand_perf < perf)
                lr *= cfg.lr_increase;
            model = std::move(candidate);
            cache = std::move(cand_cache);
            perf = cand_perf;
        }
        rec.train_error = perf;

        const double val = mean_loss(model.forward_batch(x_val), y_val);
        rec.validation_error = val;
        result.epochs.push_back(rec);
        if (val < best_val) {
            best_val = val;
            result.model = model;
            result.best_epoch = epoch;
            since_best = 0;
        } else if (++since_best >= cfg.patience) {
            break;
        }
    }
    result.final_model = std::move(model);
    if (!result.model.all_finite())
        throw NumericalError("training produced non-finite weights");
    return result;
}

MlpModel train(const Dataset& data, const TrainConfig& cfg)
{
    return train_with_log(data, cfg).model;
}

} // namespace vennpred
