#include "vennpred/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <fstream>
#include <mutex>
#include <sstream>
#include <thread>

#include "vennpred/errors.hpp"
#include "vennpred/random.hpp"

namespace vennpred {

// ---------------------------------------------------------------------------
// Predictors

PredictionRule ThresholdPolicy::resolve(const Dataset& train) const
{
    switch (kind) {
    case Kind::Argmax:
        return PredictionRule::argmax();
    case Kind::Fixed:
        return PredictionRule::threshold(value);
    case Kind::Auto:
        break;
    }
    const double prevalence =
        train.empty() ? 0.5 : static_cast<double>(train.positives()) / static_cast<double>(train.size());
    return PredictionRule::threshold(prevalence);
}

std::string ThresholdPolicy::describe() const
{
    switch (kind) {
    case Kind::Argmax:
        return "argmax";
    case Kind::Fixed: {
        std::ostringstream os;
        os << value;
        return os.str();
    }
    case Kind::Auto:
        break;
    }
    return "auto";
}

namespace {

class FittedVenn : public FittedPredictor {
public:
    FittedVenn(std::shared_ptr<const Taxonomy> taxonomy, Dataset train, PredictionRule rule)
        : taxonomy_(std::move(taxonomy)), train_(std::move(train)), rule_(rule)
    {
    }

    Prediction predict(std::span<const double> features) const override
    {
        const VennOutput out = vennpred::predict(*taxonomy_, train_, features, rule_);
        return {out.mean_p1, out.prediction, out.pred_interval};
    }

private:
    std::shared_ptr<const Taxonomy> taxonomy_;
    Dataset train_;
    PredictionRule rule_;
};

class FittedAnn : public FittedPredictor {
public:
    FittedAnn(NormalizationStats stats, MlpModel model, PredictionRule rule)
        : stats_(std::move(stats)), model_(std::move(model)), rule_(rule)
    {
    }

    Prediction predict(std::span<const double> features) const override
    {
        const double p = model_.forward(apply_normalizer(stats_, features));
        return {p, rule_.decide(p), std::nullopt};
    }

private:
    NormalizationStats stats_;
    MlpModel model_;
    PredictionRule rule_;
};

} // namespace

VennPredictor::VennPredictor(std::shared_ptr<const Taxonomy> taxonomy, ThresholdPolicy threshold, std::string name)
    : taxonomy_(std::move(taxonomy)), threshold_(threshold), name_(std::move(name))
{
    if (!taxonomy_)
        throw std::invalid_argument("VennPredictor needs a taxonomy");
}

std::unique_ptr<FittedPredictor> VennPredictor::fit(const Dataset& train) const
{
    if (train.empty() || !train.fully_labeled())
        throw DataError("Venn predictor needs a nonempty labeled training set");
    return std::make_unique<FittedVenn>(taxonomy_, train, threshold_.resolve(train));
}

AnnPredictor::AnnPredictor(RebalanceMode mode, TrainConfig cfg, ThresholdPolicy threshold)
    : mode_(mode), cfg_(cfg), threshold_(threshold)
{
    cfg_.validate();
}

std::unique_ptr<FittedPredictor> AnnPredictor::fit(const Dataset& train) const
{
    const Dataset canon = train.canonical();
    NormalizationStats stats = fit_normalizer(canon);
    const Dataset normalized = apply_normalizer(stats, canon);
    RebalanceResult balanced = rebalance(normalized, mode_);
    const Dataset& fit_set = balanced.data.size() >= kMinTrainingExamples ? balanced.data : normalized;
    MlpModel model = vennpred::train(fit_set, cfg_);
    return std::make_unique<FittedAnn>(std::move(stats), std::move(model), threshold_.resolve(train));
}

std::string AnnPredictor::name() const
{
    return mode_.kind == RebalanceKind::None ? "ANN" : "ANN+" + to_string(mode_.kind);
}

std::unique_ptr<Predictor> make_predictor(const PredictorSpec& spec)
{
    if (spec.kind == PredictorSpec::Kind::Ann)
        return std::make_unique<AnnPredictor>(spec.rebalance, spec.train,
                                              spec.threshold.value_or(ThresholdPolicy::argmax()));
    auto taxonomy = std::make_shared<AnnBinTaxonomy>(spec.lambda, spec.rebalance, spec.train);
    std::string name = spec.rebalance.kind == RebalanceKind::None ? "ANN-VP" : "ANN-VP+" + to_string(spec.rebalance.kind);
    return std::make_unique<VennPredictor>(std::move(taxonomy), spec.threshold.value_or(ThresholdPolicy::automatic()),
                                           std::move(name));
}

VennLambdaSweep::VennLambdaSweep(AnnScorer scorer, std::vector<std::size_t> lambdas, ThresholdPolicy threshold)
    : scorer_(std::move(scorer)), lambdas_(std::move(lambdas)), threshold_(threshold)
{
    if (lambdas_.empty())
        throw std::invalid_argument("lambda sweep needs at least one lambda");
    for (std::size_t l : lambdas_)
        if (l == 0)
            throw std::invalid_argument("lambda must be at least 1");
}

namespace {

class FittedVennSweep : public FittedSweep {
public:
    FittedVennSweep(const AnnScorer& scorer, const std::vector<std::size_t>& lambdas, Dataset train,
                    PredictionRule rule)
        : scorer_(scorer), lambdas_(lambdas), train_(std::move(train)), rule_(rule)
    {
    }

    std::vector<Prediction> predict(std::span<const double> features) const override
    {
        std::vector<Prediction> out;
        for (const VennOutput& v : predict_lambda_sweep(scorer_, train_, features, lambdas_, rule_))
            out.push_back({v.mean_p1, v.prediction, v.pred_interval});
        return out;
    }

private:
    const AnnScorer& scorer_;
    const std::vector<std::size_t>& lambdas_;
    Dataset train_;
    PredictionRule rule_;
};

/// Adapts a single predictor to the sweep interface.
class SingleSweep : public SweepPredictor {
public:
    explicit SingleSweep(const Predictor& p) : predictor_(p) {}

    std::unique_ptr<FittedSweep> fit(const Dataset& train) const override
    {
        return std::make_unique<Fitted>(predictor_.fit(train));
    }
    std::vector<std::string> names() const override { return {predictor_.name()}; }

private:
    struct Fitted : FittedSweep {
        explicit Fitted(std::unique_ptr<FittedPredictor> f) : inner(std::move(f)) {}
        std::vector<Prediction> predict(std::span<const double> features) const override
        {
            return {inner->predict(features)};
        }
        std::unique_ptr<FittedPredictor> inner;
    };
    const Predictor& predictor_;
};

} // namespace

std::unique_ptr<FittedSweep> VennLambdaSweep::fit(const Dataset& train) const
{
    if (train.empty() || !train.fully_labeled())
        throw DataError("Venn predictor needs a nonempty labeled training set");
    return std::make_unique<FittedVennSweep>(scorer_, lambdas_, train, threshold_.resolve(train));
}

std::vector<std::string> VennLambdaSweep::names() const
{
    const std::string base = scorer_.mode().kind == RebalanceKind::None
                                 ? "ANN-VP"
                                 : "ANN-VP+" + to_string(scorer_.mode().kind);
    std::vector<std::string> out;
    for (std::size_t l : lambdas_)
        out.push_back(base + " lambda=" + std::to_string(l));
    return out;
}

// ---------------------------------------------------------------------------
// Parallel helper

void parallel_for(std::size_t n, std::size_t workers, const std::function<void(std::size_t)>& fn)
{
    workers = std::max<std::size_t>(1, std::min(workers, n));
    if (workers == 1) {
        for (std::size_t i = 0; i < n; ++i)
            fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    auto body = [&] {
        for (std::size_t i = next++; i < n; i = next++) {
            try {
                fn(i);
            } catch (...) {
                std::lock_guard lock(failure_mutex);
                if (!failure)
                    failure = std::current_exception();
                next = n;
            }
        }
    };
    std::vector<std::jthread> pool;
    pool.reserve(workers - 1);
    for (std::size_t w = 1; w < workers; ++w)
        pool.emplace_back(body);
    body();
    pool.clear();
    if (failure)
        std::rethrow_exception(failure);
}

// ---------------------------------------------------------------------------
// Batch

std::vector<std::vector<std::size_t>> stratified_folds(const Dataset& data, std::size_t folds, std::uint64_t seed)
{
    if (folds < 2)
        throw std::invalid_argument("at least 2 folds are required");
    std::vector<std::size_t> pos;
    std::vector<std::size_t> neg;
    for (std::size_t i = 0; i < data.size(); ++i) {
        if (!data[i].label)
            throw DataError("cross-validation requires labeled data");
        (*data[i].label == 1 ? pos : neg).push_back(i);
    }
    Rng rng(hash_combine(seed, 0xf01d));
    auto shuffle = [&](std::vector<std::size_t>& v) {
        for (std::size_t i = v.size(); i > 1; --i)
            std::swap(v[i - 1], v[uniform_index(rng, i)]);
    };
    shuffle(pos);
    shuffle(neg);

    std::vector<std::vector<std::size_t>> out(folds);
    std::size_t slot = 0;
    for (const auto* cls : {&pos, &neg})
        for (std::size_t i : *cls)
            out[slot++ % folds].push_back(i);
    for (auto& f : out)
        std::sort(f.begin(), f.end());
    return out;
}

std::vector<BatchResult> run_batch(const Dataset& data, const SweepPredictor& sweep, const BatchPlan& plan)
{
    if (!data.fully_labeled())
        throw DataError("batch evaluation requires labeled data");
    if (plan.repeats == 0)
        throw std::invalid_argument("repeats must be positive");
    if (plan.folds > data.size())
        throw DataError("more folds than examples");
    const bool leave_one_out = plan.folds == data.size();
    if (!leave_one_out && (data.positives() < plan.folds || data.negatives() < plan.folds))
        throw DataError("each class needs at least " + std::to_string(plan.folds) + " examples for " +
                        std::to_string(plan.folds) + "-fold cross-validation");

    const std::size_t n = data.size();
    const std::size_t members = sweep.names().size();
    std::vector<std::vector<std::vector<std::size_t>>> splits(plan.repeats);
    std::vector<std::size_t> fold_of(plan.repeats * n);
    for (std::size_t r = 0; r < plan.repeats; ++r) {
        splits[r] = stratified_folds(data, plan.folds, hash_combine(plan.seed, r));
        for (std::size_t f = 0; f < plan.folds; ++f)
            for (std::size_t i : splits[r][f])
                fold_of[r * n + i] = f;
    }

    std::vector<std::unique_ptr<FittedSweep>> fitted(plan.repeats * plan.folds);
    parallel_for(fitted.size(), plan.workers, [&](std::size_t task) {
        const std::size_t r = task / plan.folds;
        const std::size_t f = task % plan.folds;
        std::vector<std::size_t> train_idx;
        train_idx.reserve(n);
        for (std::size_t g = 0; g < plan.folds; ++g)
            if (g != f)
                train_idx.insert(train_idx.end(), splits[r][g].begin(), splits[r][g].end());
        std::sort(train_idx.begin(), train_idx.end());
        fitted[task] = sweep.fit(data.subset(train_idx));
    });

    std::vector<BatchResult> results(members);
    for (auto& res : results)
        res.predictions.resize(plan.repeats * n);
    parallel_for(plan.repeats * n, plan.workers, [&](std::size_t task) {
        const std::size_t r = task / n;
        const std::size_t i = task % n;
        const auto preds = fitted[r * plan.folds + fold_of[task]]->predict(data[i].features);
        if (preds.size() != members)
            throw std::logic_error("sweep returned the wrong number of predictions");
        for (std::size_t m = 0; m < members; ++m)
            results[m].predictions[task] = {r, i, preds[m].p1, preds[m].label, *data[i].label};
    });

    for (auto& res : results) {
        auto report = [&](std::size_t begin, std::size_t end) {
            std::vector<double> probs;
            std::vector<int> preds;
            std::vector<int> labels;
            for (std::size_t t = begin; t < end; ++t) {
                probs.push_back(res.predictions[t].p1);
                preds.push_back(res.predictions[t].predicted);
                labels.push_back(res.predictions[t].label);
            }
            return evaluate(probs, preds, labels, plan.reliability_bins);
        };
        for (std::size_t r = 0; r < plan.repeats; ++r)
            res.per_run.push_back(report(r * n, (r + 1) * n));
        res.pooled = report(0, res.predictions.size());
    }
    return results;
}

BatchResult run_batch(const Dataset& data, const Predictor& predictor, const BatchPlan& plan)
{
    return std::move(run_batch(data, SingleSweep(predictor), plan).front());
}

// ---------------------------------------------------------------------------
// Online

double OnlineTrace::miscalibration_pvalue() const
{
    std::vector<double> q;
    std::vector<int> errs;
    for (const auto& s : steps) {
        q.push_back(s.error_prob);
        errs.push_back(s.err);
    }
    return vennpred::miscalibration_pvalue(q, errs);
}

bool OnlineTrace::bounds_contain_errors(const std::function<double(std::size_t)>& slack) const
{
    if (!has_bounds)
        return false;
    for (std::size_t i = 0; i < steps.size(); ++i) {
        const double e = static_cast<double>(errors[i]);
        const double s = slack(i + 1);
        if (e < lower[i] - s || e > upper[i] + s)
            return false;
    }
    return true;
}

std::vector<OnlineTrace> run_online(const Dataset& data, const SweepPredictor& sweep, std::size_t initial_size)
{
    if (initial_size == 0)
        throw std::invalid_argument("initial training set must hold at least one example");
    if (!data.fully_labeled())
        throw DataError("online evaluation requires labeled data");
    if (initial_size >= data.size())
        throw DataError("initial training set leaves nothing to predict");

    const auto names = sweep.names();
    std::vector<OnlineTrace> traces(names.size());
    for (std::size_t m = 0; m < names.size(); ++m)
        traces[m].predictor = names[m];

    Dataset revealed(data.dim(), data.schema());
    for (std::size_t i = 0; i < initial_size; ++i)
        revealed.add(data[i]);

    for (std::size_t i = initial_size; i < data.size(); ++i) {
        const auto preds = sweep.fit(revealed)->predict(data[i].features);
        if (preds.size() != traces.size())
            throw std::logic_error("sweep returned the wrong number of predictions");
        for (std::size_t m = 0; m < traces.size(); ++m) {
            OnlineTrace& trace = traces[m];
            const Prediction& p = preds[m];
            OnlineStep step;
            step.p1 = p.p1;
            step.predicted = p.label;
            step.label = *data[i].label;
            step.err = p.label != step.label ? 1 : 0;
            step.error_prob = std::abs(static_cast<double>(p.label) - p.p1);
            if (p.correct_interval) {
                step.lower_error = 1.0 - p.correct_interval->upper;
                step.upper_error = 1.0 - p.correct_interval->lower;
            }
            if (trace.steps.empty())
                trace.has_bounds = p.correct_interval.has_value();
            else if (trace.has_bounds != p.correct_interval.has_value())
                throw std::logic_error("predictor switched between bounded and unbounded outputs");

            const bool first = trace.steps.empty();
            trace.errors.push_back((first ? 0 : trace.errors.back()) + static_cast<std::size_t>(step.err));
            trace.expected.push_back((first ? 0.0 : trace.expected.back()) + step.error_prob);
            if (trace.has_bounds) {
                trace.lower.push_back((first ? 0.0 : trace.lower.back()) + *step.lower_error);
                trace.upper.push_back((first ? 0.0 : trace.upper.back()) + *step.upper_error);
            }
            trace.steps.push_back(step);
        }
        revealed.add(data[i]);
    }
    return traces;
}

OnlineTrace run_online(const Dataset& data, const Predictor& predictor, std::size_t initial_size)
{
    return std::move(run_online(data, SingleSweep(predictor), initial_size).front());
}

void write_trace_csv(const OnlineTrace& trace, const std::filesystem::path& path)
{
    std::ofstream out(path);
    if (!out)
        throw std::runtime_error("cannot write " + path.string());
    out.precision(17);
    out << (trace.has_bounds ? "n,err,E_n,LEP_n,UEP_n\n" : "n,err,E_n,EP_n\n");
    for (std::size_t i = 0; i < trace.size(); ++i) {
        out << i + 1 << ',' << trace.steps[i].err << ',' << trace.errors[i] << ',';
        if (trace.has_bounds)
            out << trace.lower[i] << ',' << trace.upper[i] << '\n';
        else
            out << trace.expected[i] << '\n';
    }
}

std::string render_trace_svg(const OnlineTrace& trace, const std::string& title)
{
    constexpr double width = 640, height = 420, left = 60, right = 20, top = 40, bottom = 50;
    const double plot_w = width - left - right;
    const double plot_h = height - top - bottom;
    const std::size_t n = trace.size();

    double y_max = 1.0;
    for (std::size_t i = 0; i < n; ++i) {
        y_max = std::max(y_max, static_cast<double>(trace.errors[i]));
        y_max = std::max(y_max, trace.has_bounds ? trace.upper[i] : trace.expected[i]);
    }
    y_max *= 1.05;
    auto px = [&](std::size_t i) { return left + plot_w * static_cast<double>(i) / static_cast<double>(std::max<std::size_t>(n, 1)); };
    auto py = [&](double v) { return top + plot_h * (1.0 - v / y_max); };

    std::ostringstream os;
    os.precision(6);
    os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height
       << "\" viewBox=\"0 0 " << width << ' ' << height << "\">\n";
    os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    os << "<text x=\"" << width / 2 << "\" y=\"24\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"15\">"
       << title << "</text>\n";
    os << "<g stroke=\"black\" stroke-width=\"1\">\n"
       << "<line x1=\"" << left << "\" y1=\"" << top + plot_h << "\" x2=\"" << left + plot_w << "\" y2=\""
       << top + plot_h << "\"/>\n"
       << "<line x1=\"" << left << "\" y1=\"" << top << "\" x2=\"" << left << "\" y2=\"" << top + plot_h
       << "\"/>\n</g>\n";
    os << "<g font-family=\"sans-serif\" font-size=\"11\">\n";
    for (int t = 0; t <= 5; ++t) {
        const double v = y_max * t / 5.0;
        os << "<text x=\"" << left - 6 << "\" y=\"" << py(v) + 4 << "\" text-anchor=\"end\">"
           << std::lround(v) << "</text>\n";
        const std::size_t xi = n * static_cast<std::size_t>(t) / 5;
        os << "<text x=\"" << px(xi) << "\" y=\"" << top + plot_h + 16 << "\" text-anchor=\"middle\">" << xi
           << "</text>\n";
    }
    os << "<text x=\"" << left + plot_w / 2 << "\" y=\"" << height - 12
       << "\" text-anchor=\"middle\">Examples</text>\n</g>\n";

    auto polyline = [&](auto value, const char* dash) {
        os << "<polyline fill=\"none\" stroke=\"black\" stroke-width=\"1.5\"";
        if (dash)
            os << " stroke-dasharray=\"" << dash << '"';
        os << " points=\"" << px(0) << ',' << py(0.0);
        for (std::size_t i = 0; i < n; ++i)
            os << ' ' << px(i + 1) << ',' << py(value(i));
        os << "\"/>\n";
    };
    polyline([&](std::size_t i) { return static_cast<double>(trace.errors[i]); }, nullptr);
    if (trace.has_bounds) {
        polyline([&](std::size_t i) { return trace.lower[i]; }, "6,4");
        polyline([&](std::size_t i) { return trace.upper[i]; }, "6,4");
    } else {
        polyline([&](std::size_t i) { return trace.expected[i]; }, "6,4");
    }

    os << "<g font-family=\"sans-serif\" font-size=\"11\">\n"
       << "<line x1=\"" << left + 10 << "\" y1=\"" << top + 10 << "\" x2=\"" << left + 40 << "\" y2=\"" << top + 10
       << "\" stroke=\"black\" stroke-width=\"1.5\"/>\n"
       << "<text x=\"" << left + 46 << "\" y=\"" << top + 14 << "\">Errors</text>\n"
       << "<line x1=\"" << left + 10 << "\" y1=\"" << top + 26 << "\" x2=\"" << left + 40 << "\" y2=\"" << top + 26
       << "\" stroke=\"black\" stroke-width=\"1.5\" stroke-dasharray=\"6,4\"/>\n"
       << "<text x=\"" << left + 46 << "\" y=\"" << top + 30 << "\">"
       << (trace.has_bounds ? "Lower and upper error probability" : "Error probability") << "</text>\n</g>\n";
    os << "</svg>\n";
    return os.str();
}

} // namespace vennpred
