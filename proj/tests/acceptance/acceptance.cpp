// Acceptance checks 1-8. Prints one PASS/FAIL line per criterion; exits
// nonzero if any selected criterion fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <map>
#include <numeric>
#include <string>
#include <thread>

#include "CLI11.hpp"
#include "gradcheck.hpp"
#include "vennpred/vennpred.hpp"

using namespace vennpred;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

std::string fmt(const char* f, auto... args)
{
    char buf[512];
    std::snprintf(buf, sizeof buf, f, args...);
    return buf;
}

std::size_t default_workers()
{
    return std::max(1u, std::thread::hardware_concurrency());
}

// ---------------------------------------------------------------------------
// 1: engine probabilities vs a rational recount

struct Fraction {
    long long num = 0;
    long long den = 1;
    Fraction(long long n, long long d) : num(n / std::gcd(n, d)), den(d / std::gcd(n, d)) {}
    bool operator==(const Fraction&) const = default;
    bool operator<(const Fraction& o) const { return num * o.den < o.num * den; }
    double value() const { return static_cast<double>(num) / static_cast<double>(den); }
};

// Category of a score without floor(): the number of inner bin edges j/lambda
// that the score reaches.
std::size_t oracle_bin(double o, std::size_t lambda)
{
    std::size_t k = 0;
    for (std::size_t j = 1; j < lambda; ++j)
        if (o * static_cast<double>(lambda) >= static_cast<double>(j))
            k = j;
    return k;
}

Outcome criterion1()
{
    Rng rng(20240601);
    const std::size_t lambdas[] = {1, 2, 6};
    std::size_t mismatches = 0, checked = 0;
    for (int inst = 0; inst < 200; ++inst) {
        const std::size_t l = 1 + uniform_index(rng, 30);
        const std::size_t d = 1 + uniform_index(rng, 4);
        const std::size_t lambda = lambdas[inst % 3];
        const auto kind = static_cast<RebalanceKind>(uniform_index(rng, 3));
        Dataset train(d);
        for (std::size_t i = 0; i < l; ++i) {
            std::vector<double> x(d);
            for (double& v : x)
                v = uniform01(rng) < 0.5 ? 1.0 : 0.0;
            train.add(std::move(x), uniform01(rng) < 0.3 ? 1 : 0);
        }
        std::vector<double> x(d);
        for (double& v : x)
            v = uniform01(rng) < 0.5 ? 1.0 : 0.0;

        TrainConfig cfg;
        cfg.max_epochs = 60;
        const RebalanceMode mode{kind, static_cast<std::uint64_t>(inst)};
        const AnnBinTaxonomy tax(lambda, mode, cfg);
        const VennOutput engine = predict(tax, train, x, PredictionRule::threshold(0.3));

        const AnnScorer scorer(mode, cfg);
        std::vector<Fraction> p1;
        for (int k = 0; k <= 1; ++k) {
            const ExtensionScores s = scorer.score(train, x, k);
            const std::size_t target = lambda == 1 ? 0 : oracle_bin(s.new_example, lambda);
            long long members = 1, positives = k;
            for (std::size_t i = 0; i < l; ++i) {
                const std::size_t c = lambda == 1 ? 0 : oracle_bin(s.training[i], lambda);
                if (c == target) {
                    ++members;
                    positives += *train[i].label;
                }
            }
            p1.emplace_back(positives, members);
            const auto& e = engine.dist[static_cast<std::size_t>(k)];
            const Fraction got(static_cast<long long>(e.positives), static_cast<long long>(e.members));
            ++checked;
            if (!(got == p1.back()) || e.p1() != p1.back().value())
                ++mismatches;
        }
        const Fraction lo1 = std::min(p1[0], p1[1]);
        const Fraction hi1 = p1[0] < p1[1] ? p1[1] : p1[0];
        const auto i1 = engine.interval_for(1);
        if (i1.lower != lo1.value() || i1.upper != hi1.value())
            ++mismatches;
    }
    return {mismatches == 0, fmt("%zu label distributions, %zu mismatches", checked, mismatches)};
}

// ---------------------------------------------------------------------------
// 2: online validity of ANN-VP+MO

Outcome criterion2()
{
    std::size_t ok = 0, runs = 0;
    std::string worst;
    double worst_margin = INFINITY;
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
        auto spec = SyntheticSpec::reference(seed, 7);
        spec.target_prevalence = 0.185;
        const Dataset data = shuffled(generate_synthetic(spec, 500).data, seed);
        for (std::size_t h : {5, 100}) {
            TrainConfig cfg;
            cfg.hidden_units = h;
            const VennLambdaSweep sweep(AnnScorer({RebalanceKind::MinorityOversampling, 0}, cfg), {2, 6, 10},
                                        ThresholdPolicy::automatic());
            for (const auto& t : run_online(data, sweep, 5)) {
                ++runs;
                double margin = INFINITY;
                for (std::size_t i = 0; i < t.size(); ++i) {
                    const double slack = 2.0 * std::sqrt(static_cast<double>(i + 1));
                    const double e = static_cast<double>(t.errors[i]);
                    margin = std::min({margin, e - (t.lower[i] - slack), t.upper[i] + slack - e});
                }
                ok += margin >= 0.0;
                if (margin < worst_margin) {
                    worst_margin = margin;
                    worst = fmt("seed %llu h=%zu %s", static_cast<unsigned long long>(seed), h, t.predictor.c_str());
                }
                std::fprintf(stderr, "  [2] seed %llu h=%zu %s: E_N=%zu LEP_N=%.2f UEP_N=%.2f margin=%.2f\n",
                             static_cast<unsigned long long>(seed), h, t.predictor.c_str(), t.errors.back(),
                             t.lower.back(), t.upper.back(), margin);
            }
        }
    }
    return {ok == runs, fmt("%zu/%zu runs contained at every prefix; tightest %s (margin %.2f)", ok, runs,
                            worst.c_str(), worst_margin)};
}

// ---------------------------------------------------------------------------
// 3 and 4: batch comparisons on the 162-example design

constexpr double kTheta = 0.1852;

Dataset batch_data(std::uint64_t seed)
{
    return generate_synthetic(SyntheticSpec::reference(seed, 7), 162).data;
}

BatchPlan batch_plan(std::uint64_t seed)
{
    BatchPlan plan;
    plan.seed = seed;
    plan.workers = default_workers();
    return plan;
}

MetricReport vp_report(const Dataset& d, RebalanceKind kind, std::uint64_t seed)
{
    const VennLambdaSweep sweep(AnnScorer({kind, 0}, TrainConfig{}), {6}, ThresholdPolicy::fixed(kTheta));
    return run_batch(d, sweep, batch_plan(seed)).front().pooled;
}

MetricReport ann_report(const Dataset& d, RebalanceKind kind, std::uint64_t seed)
{
    const AnnPredictor ann({kind, 0}, TrainConfig{}, ThresholdPolicy::fixed(kTheta));
    return run_batch(d, ann, batch_plan(seed)).pooled;
}

Outcome criterion3()
{
    int ok = 0;
    std::string detail;
    for (std::uint64_t seed = 1; seed <= 3; ++seed) {
        const Dataset d = batch_data(seed);
        const double vmo = vp_report(d, RebalanceKind::MinorityOversampling, seed).reliability;
        const double amo = ann_report(d, RebalanceKind::MinorityOversampling, seed).reliability;
        const double vmu = vp_report(d, RebalanceKind::MajorityUndersampling, seed).reliability;
        const double amu = ann_report(d, RebalanceKind::MajorityUndersampling, seed).reliability;
        const bool pass = 2.0 * vmo <= amo && 2.0 * vmu <= amu;
        ok += pass;
        detail += fmt("%sseed %llu: MO %.4f vs %.4f, MU %.4f vs %.4f", seed == 1 ? "" : "; ",
                      static_cast<unsigned long long>(seed), vmo, amo, vmu, amu);
    }
    return {ok == 3, fmt("%d/3 seeds (REL VP vs ANN) ", ok) + detail};
}

Outcome criterion4()
{
    int ok = 0;
    std::string detail;
    for (std::uint64_t seed = 1; seed <= 3; ++seed) {
        const Dataset d = batch_data(seed);
        const double plain = vp_report(d, RebalanceKind::None, seed).sensitivity;
        const double mo = vp_report(d, RebalanceKind::MinorityOversampling, seed).sensitivity;
        ok += mo > plain;
        detail += fmt("%sseed %llu: %.4f vs %.4f", seed == 1 ? "" : "; ", static_cast<unsigned long long>(seed), mo,
                      plain);
    }
    return {ok == 3, fmt("%d/3 seeds (sensitivity VP+MO vs VP, theta %.4f) ", ok, kTheta) + detail};
}

// ---------------------------------------------------------------------------
// 5: gradients

Outcome criterion5()
{
    double worst = 0.0;
    for (std::uint64_t s = 0; s < 100; ++s)
        worst = std::max(worst, testing::gradient_relative_error(1000 + s));
    return {worst < 1e-4, fmt("100 model/batch pairs, max relative error %.3g", worst)};
}

// ---------------------------------------------------------------------------
// 6: Poisson-binomial

double enumerated_pvalue(const std::vector<double>& q, std::size_t observed, std::vector<double>& pmf)
{
    const std::size_t n = q.size();
    pmf.assign(n + 1, 0.0);
    for (std::uint32_t mask = 0; mask < (1u << n); ++mask) {
        double p = 1.0;
        std::size_t s = 0;
        for (std::size_t i = 0; i < n; ++i) {
            const bool hit = mask >> i & 1u;
            p *= hit ? q[i] : 1.0 - q[i];
            s += hit;
        }
        pmf[s] += p;
    }
    const double ep = std::accumulate(q.begin(), q.end(), 0.0);
    const double dev = std::abs(static_cast<double>(observed) - ep);
    double pv = 0.0;
    for (std::size_t s = 0; s <= n; ++s)
        if (std::abs(static_cast<double>(s) - ep) >= dev - 1e-9)
            pv += pmf[s];
    return std::min(1.0, pv);
}

Outcome criterion6()
{
    Rng rng(6);
    double worst_enum = 0.0, worst_sum = 0.0;
    for (std::size_t n = 1; n <= 12; ++n)
        for (int rep = 0; rep < 40; ++rep) {
            std::vector<double> q(n);
            for (double& v : q)
                v = uniform01(rng);
            std::vector<int> err(n);
            for (int& e : err)
                e = uniform01(rng) < 0.5;
            const std::size_t observed = static_cast<std::size_t>(std::accumulate(err.begin(), err.end(), 0));
            std::vector<double> ref;
            const double pv_ref = enumerated_pvalue(q, observed, ref);
            const auto pmf = poisson_binomial_pmf(q);
            for (std::size_t s = 0; s <= n; ++s)
                worst_enum = std::max(worst_enum, std::abs(pmf[s] - ref[s]));
            worst_enum = std::max(worst_enum, std::abs(miscalibration_pvalue(q, err) - pv_ref));
            worst_sum = std::max(worst_sum, std::abs(std::accumulate(pmf.begin(), pmf.end(), 0.0) - 1.0));
        }

    double worst_z = 0.0;
    for (std::size_t n : {50, 157}) {
        std::vector<double> q(n);
        for (double& v : q)
            v = 0.4 * uniform01(rng);
        const auto pmf = poisson_binomial_pmf(q);
        worst_sum = std::max(worst_sum, std::abs(std::accumulate(pmf.begin(), pmf.end(), 0.0) - 1.0));
        const double ep = std::accumulate(q.begin(), q.end(), 0.0);
        const std::size_t observed = static_cast<std::size_t>(std::round(ep + 1.5 * std::sqrt(ep)));
        std::vector<int> err(n, 0);
        for (std::size_t i = 0; i < observed; ++i)
            err[i] = 1;
        const double exact = miscalibration_pvalue(q, err);
        const double dev = std::abs(static_cast<double>(observed) - ep);
        const int draws = 100000;
        int extreme = 0;
        std::vector<int> hist(n + 1, 0);
        for (int t = 0; t < draws; ++t) {
            std::size_t s = 0;
            for (double v : q)
                s += uniform01(rng) < v;
            ++hist[s];
            extreme += std::abs(static_cast<double>(s) - ep) >= dev - 1e-9;
        }
        auto z = [&](double p, double est) {
            const double se = std::sqrt(std::max(p * (1.0 - p), 1e-300) / draws);
            return std::abs(est - p) / se;
        };
        worst_z = std::max(worst_z, z(exact, static_cast<double>(extreme) / draws));
        for (std::size_t s = 0; s <= n; ++s)
            if (pmf[s] * draws >= 10.0)
                worst_z = std::max(worst_z, z(pmf[s], static_cast<double>(hist[s]) / draws));
    }
    const bool pass = worst_enum <= 1e-12 && worst_sum <= 1e-12 && worst_z <= 3.0;
    return {pass, fmt("enumeration max diff %.2g, |sum-1| max %.2g, Monte Carlo max %.2f SE", worst_enum, worst_sum,
                      worst_z)};
}

// ---------------------------------------------------------------------------
// 7: metric examples

Outcome criterion7()
{
    std::vector<std::string> failed;
    auto expect = [&](bool ok, const char* what) {
        if (!ok)
            failed.emplace_back(what);
    };
    {
        const std::vector<int> y{1, 1, 0, 0};
        const auto r = confusion_rates(y, y);
        expect(r.sensitivity == 1.0 && r.specificity == 1.0, "perfect rates");
        const std::vector<int> all1{1, 1, 1, 1};
        const auto a = confusion_rates(all1, y);
        expect(a.sensitivity == 1.0 && a.specificity == 0.0, "all-positive rates");
    }
    {
        const std::vector<double> half(10, 0.5);
        const std::vector<int> y{1, 0, 1, 0, 1, 0, 1, 0, 1, 1};
        expect(std::abs(cross_entropy(half, y) - 10.0 * std::log(2.0)) < 1e-12, "CE all-0.5");
        const std::vector<double> p{1.0, 0.0};
        const std::vector<int> l{1, 0};
        expect(cross_entropy(p, l) < 1e-10, "CE perfect");
        const std::vector<double> e{std::exp(-1.0)};
        const std::vector<int> one{1};
        expect(std::abs(cross_entropy(e, one) - 1.0) < 1e-12, "CE e^-1");
    }
    {
        const std::vector<double> half(4, 0.5);
        const std::vector<int> y{1, 0, 0, 1};
        expect(brier(half, y) == 0.25, "Brier all-0.5");
        const std::vector<double> exact{1, 0, 0, 1};
        expect(brier(exact, y) == 0.0, "Brier perfect");
        const std::vector<double> p{0.8};
        const std::vector<int> z{0};
        expect(std::abs(brier(p, z) - 0.64) < 1e-12, "Brier 0.8");
    }
    {
        const std::vector<double> half(6, 0.5);
        const std::vector<int> y{1, 0, 1, 0, 1, 0};
        expect(reliability(half, y) == 0.0, "REL r=phi");
        const std::vector<double> p9(5, 0.9);
        const std::vector<int> zeros(5, 0);
        expect(std::abs(reliability(p9, zeros) - 0.81) < 1e-12, "REL 0.81");
        Rng rng(7);
        std::vector<double> p(100000);
        std::vector<int> lab(p.size());
        for (std::size_t i = 0; i < p.size(); ++i) {
            p[i] = uniform01(rng);
            lab[i] = uniform01(rng) < p[i];
        }
        expect(reliability(p, lab, 20) < 0.005, "REL calibrated stream");
    }
    {
        const std::vector<double> q{0.5, 0.5, 0.5};
        const std::vector<int> e{1, 1, 1};
        expect(std::abs(miscalibration_pvalue(q, e) - 0.25) < 1e-12, "p-value 0.25");
        const std::vector<double> q2{0.25, 0.75};
        const std::vector<int> e2{1, 0};
        expect(miscalibration_pvalue(q2, e2) == 1.0, "p-value at EP");
    }
    std::string detail = "14 examples";
    for (const auto& f : failed)
        detail += "; failed: " + f;
    return {failed.empty(), detail};
}

// ---------------------------------------------------------------------------
// 8: determinism

Outcome criterion8()
{
    const Dataset d = generate_synthetic(SyntheticSpec::reference(8, 7), 80).data;
    const Dataset test = generate_synthetic(SyntheticSpec::reference(9, 7), 10).data;
    std::size_t diffs = 0, compared = 0;
    for (auto kind : {RebalanceKind::None, RebalanceKind::MinorityOversampling, RebalanceKind::MajorityUndersampling}) {
        const VennLambdaSweep sweep(AnnScorer({kind, 0}, TrainConfig{}), {2, 6, 10}, ThresholdPolicy::automatic());
        const auto base = sweep.fit(d);
        for (std::uint64_t perm = 1; perm <= 3; ++perm) {
            const auto other = sweep.fit(shuffled(d, perm));
            for (const auto& e : test) {
                const auto a = base->predict(e.features);
                const auto b = other->predict(e.features);
                for (std::size_t m = 0; m < a.size(); ++m) {
                    ++compared;
                    diffs += a[m].p1 != b[m].p1 || a[m].label != b[m].label ||
                             a[m].correct_interval->lower != b[m].correct_interval->lower ||
                             a[m].correct_interval->upper != b[m].correct_interval->upper;
                }
            }
        }
    }

    const VennLambdaSweep sweep(AnnScorer({RebalanceKind::MinorityOversampling, 0}, TrainConfig{}), {6},
                                ThresholdPolicy::automatic());
    BatchPlan plan;
    plan.folds = 5;
    plan.repeats = 2;
    plan.seed = 8;
    plan.workers = 1;
    const auto ref = run_batch(d, sweep, plan).front();
    std::size_t report_diffs = 0;
    for (std::size_t w : {2, 3, 8}) {
        plan.workers = w;
        const auto r = run_batch(d, sweep, plan).front();
        report_diffs += r.pooled.to_csv_row() != ref.pooled.to_csv_row();
        for (std::size_t i = 0; i < r.per_run.size(); ++i)
            report_diffs += r.per_run[i].to_csv_row() != ref.per_run[i].to_csv_row();
        for (std::size_t i = 0; i < r.predictions.size(); ++i)
            report_diffs += r.predictions[i].p1 != ref.predictions[i].p1;
    }
    return {diffs == 0 && report_diffs == 0,
            fmt("%zu permuted-training predictions compared, %zu differ; worker counts 1/2/3/8: %zu differences",
                compared, diffs, report_diffs)};
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"vennpred acceptance checks"};
    std::vector<int> only;
    app.add_option("--only", only, "Run only these criteria (1-8)")->check(CLI::Range(1, 8));
    CLI11_PARSE(app, argc, argv);
    if (only.empty())
        only = {1, 2, 3, 4, 5, 6, 7, 8};

    const std::map<int, std::pair<const char*, std::function<Outcome()>>> criteria{
        {1, {"Venn probabilities equal a rational recount", criterion1}},
        {2, {"online bounds contain cumulative errors", criterion2}},
        {3, {"VP reliability beats ANN by 2x", criterion3}},
        {4, {"MO raises VP sensitivity", criterion4}},
        {5, {"analytic gradient matches finite differences", criterion5}},
        {6, {"Poisson-binomial DP, enumeration, Monte Carlo", criterion6}},
        {7, {"metric examples", criterion7}},
        {8, {"determinism and order invariance", criterion8}},
    };
    int failures = 0;
    for (int id : only) {
        const auto& [title, run] = criteria.at(id);
        const auto start = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = run();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        std::printf("AC%d %s: %s [%s] (%.1fs)\n", id, o.pass ? "PASS" : "FAIL", title, o.detail.c_str(), secs);
        std::fflush(stdout);
        failures += !o.pass;
    }
    return failures == 0 ? 0 : 1;
}
