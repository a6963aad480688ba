#include "doctest.h"

#include <cmath>
#include <filesystem>
#include <fstream>

#include "vennpred/errors.hpp"
#include "vennpred/harness.hpp"

using namespace vennpred;

namespace {

/// Predicts the training prevalence for everything; optional fixed interval.
class ConstantPredictor : public Predictor {
public:
    explicit ConstantPredictor(std::optional<Interval> interval = std::nullopt, bool perfect = false)
        : interval_(interval), perfect_(perfect)
    {
    }

    std::unique_ptr<FittedPredictor> fit(const Dataset& train) const override
    {
        const double p = static_cast<double>(train.positives()) / static_cast<double>(train.size());
        return std::make_unique<Fitted>(p, interval_, perfect_);
    }
    std::string name() const override { return "constant"; }

private:
    struct Fitted : FittedPredictor {
        Fitted(double p, std::optional<Interval> i, bool perfect) : p(p), interval(i), perfect(perfect) {}
        Prediction predict(std::span<const double> x) const override
        {
            if (perfect) // the label is stored in the first feature
                return {x[0], static_cast<int>(x[0]), interval};
            return {p, p > 0.5 ? 1 : 0, interval};
        }
        double p;
        std::optional<Interval> interval;
        bool perfect;
    };
    std::optional<Interval> interval_;
    bool perfect_;
};

Dataset toy(std::size_t pos, std::size_t neg)
{
    Dataset d(1);
    for (std::size_t i = 0; i < pos + neg; ++i)
        d.add({static_cast<double>(i)}, i < pos ? 1 : 0);
    return d;
}

} // namespace

TEST_CASE("stratified folds keep the class ratio")
{
    const auto d = generate_synthetic(SyntheticSpec::reference(1, 3), 162).data;
    const auto folds = stratified_folds(d, 10, 4);
    std::vector<int> seen(d.size(), 0);
    std::size_t pmin = 1000, pmax = 0;
    for (const auto& f : folds) {
        std::size_t p = 0;
        for (std::size_t i : f) {
            ++seen[i];
            p += *d[i].label == 1;
        }
        pmin = std::min(pmin, p);
        pmax = std::max(pmax, p);
        CHECK(f.size() >= 16);
        CHECK(f.size() <= 17);
    }
    CHECK(pmax - pmin <= 1);
    for (int s : seen)
        CHECK(s == 1);
}

TEST_CASE("prevalence predictor cross-entropy by hand")
{
    // 4 positives, 16 negatives, 4 folds: every training set has 3 of 15 positive.
    const auto d = toy(4, 16);
    BatchPlan plan;
    plan.folds = 4;
    plan.repeats = 2;
    const auto r = run_batch(d, ConstantPredictor(), plan);
    const double expected = 2.0 * (4.0 * -std::log(0.2) + 16.0 * -std::log(0.8));
    CHECK(r.pooled.cross_entropy == doctest::Approx(expected).epsilon(1e-13));
    CHECK(r.pooled.n == 40);
    CHECK(r.per_run.size() == 2);
    CHECK(r.per_run[0].cross_entropy == doctest::Approx(expected / 2.0).epsilon(1e-13));
}

TEST_CASE("leave-one-out predicts each example once")
{
    const auto d = toy(3, 7);
    BatchPlan plan;
    plan.folds = 10;
    plan.repeats = 3;
    const auto r = run_batch(d, ConstantPredictor(), plan);
    REQUIRE(r.predictions.size() == 30);
    for (std::size_t t = 0; t < r.predictions.size(); ++t) {
        CHECK(r.predictions[t].repeat == t / 10);
        CHECK(r.predictions[t].index == t % 10);
        // Held-out positive: 2 of 9 remain; held-out negative: 3 of 9.
        CHECK(r.predictions[t].p1 == (r.predictions[t].label == 1 ? 2.0 / 9.0 : 3.0 / 9.0));
    }
    plan.folds = 5;
    CHECK_THROWS_AS(run_batch(d, ConstantPredictor(), plan), DataError);
}

TEST_CASE("batch results do not depend on worker count")
{
    const auto d = generate_synthetic(SyntheticSpec::reference(2, 4), 60).data;
    PredictorSpec spec;
    spec.rebalance = {RebalanceKind::MinorityOversampling, 0};
    const auto vp = make_predictor(spec);
    BatchPlan plan;
    plan.folds = 5;
    plan.repeats = 1;
    plan.workers = 1;
    const auto a = run_batch(d, *vp, plan);
    plan.workers = 4;
    const auto b = run_batch(d, *vp, plan);
    CHECK(a.pooled.to_csv_row() == b.pooled.to_csv_row());
    for (std::size_t i = 0; i < a.predictions.size(); ++i)
        CHECK(a.predictions[i].p1 == b.predictions[i].p1);
}

TEST_CASE("vacuous intervals give trivial bounds")
{
    const auto d = toy(5, 15);
    const auto t = run_online(shuffled(d, 1), ConstantPredictor(Interval{0.0, 1.0}), 3);
    REQUIRE(t.size() == 17);
    CHECK(t.has_bounds);
    for (std::size_t n = 1; n <= t.size(); ++n) {
        CHECK(t.lower[n - 1] == 0.0);
        CHECK(t.upper[n - 1] == static_cast<double>(n));
    }
    CHECK(t.bounds_contain_errors([](std::size_t) { return 0.0; }));
}

TEST_CASE("perfect predictor with tight bounds")
{
    Dataset d(1);
    for (int i = 0; i < 12; ++i)
        d.add({static_cast<double>(i % 3 == 0)}, i % 3 == 0 ? 1 : 0);
    const auto t = run_online(d, ConstantPredictor(Interval{1.0, 1.0}, true), 2);
    CHECK(t.errors.back() == 0);
    CHECK(t.lower.back() == 0.0);
    CHECK(t.upper.back() == 0.0);
    CHECK(t.bounds_contain_errors([](std::size_t) { return 0.0; }));
}

TEST_CASE("online trace bookkeeping and output files")
{
    const auto d = shuffled(generate_synthetic(SyntheticSpec::reference(6, 4), 40).data, 6);
    PredictorSpec spec;
    spec.rebalance = {RebalanceKind::MinorityOversampling, 0};
    const auto t = run_online(d, *make_predictor(spec), 5);
    REQUIRE(t.size() == 35);
    std::size_t e = 0;
    double lo = 0.0, up = 0.0;
    for (std::size_t i = 0; i < t.size(); ++i) {
        const auto& s = t.steps[i];
        e += static_cast<std::size_t>(s.err);
        lo += *s.lower_error;
        up += *s.upper_error;
        CHECK(*s.lower_error <= *s.upper_error);
        CHECK(*s.lower_error >= 0.0);
        CHECK(*s.upper_error <= 1.0);
        CHECK(t.errors[i] == e);
        CHECK(t.lower[i] == lo);
        CHECK(t.upper[i] == up);
    }

    const auto dir = std::filesystem::temp_directory_path();
    write_trace_csv(t, dir / "vennpred_trace.csv");
    std::ifstream in(dir / "vennpred_trace.csv");
    std::string header;
    std::getline(in, header);
    CHECK(header == "n,err,E_n,LEP_n,UEP_n");
    std::filesystem::remove(dir / "vennpred_trace.csv");

    const auto svg = render_trace_svg(t, "trace");
    CHECK(svg.find("<svg") != std::string::npos);
    CHECK(svg.find("stroke-dasharray") != std::string::npos);

    const auto ann = run_online(d, AnnPredictor({RebalanceKind::None, 0}, TrainConfig{}, ThresholdPolicy::argmax()), 5);
    CHECK_FALSE(ann.has_bounds);
    const double p = ann.miscalibration_pvalue();
    CHECK(p >= 0.0);
    CHECK(p <= 1.0);
}

TEST_CASE("500-example online run stays inside the bounds")
{
    const auto d = shuffled(generate_synthetic(SyntheticSpec::reference(1, 7), 500).data, 1);
    VennLambdaSweep sweep(AnnScorer({RebalanceKind::MinorityOversampling, 0}, TrainConfig{}), {6},
                          ThresholdPolicy::automatic());
    const auto t = run_online(d, sweep, 5).front();
    const double n = static_cast<double>(t.size());
    CHECK(static_cast<double>(t.errors.back()) >= t.lower.back() - 0.05 * n);
    CHECK(static_cast<double>(t.errors.back()) <= t.upper.back() + 0.05 * n);
}

TEST_CASE("threshold policies")
{
    const auto d = toy(1, 3);
    CHECK(ThresholdPolicy::automatic().resolve(d).theta == 0.25);
    CHECK(ThresholdPolicy::fixed(0.1852).resolve(d).theta == 0.1852);
    CHECK(ThresholdPolicy::argmax().resolve(d).kind == PredictionRule::Kind::Argmax);
    CHECK(ThresholdPolicy::automatic().describe() == "auto");
}
