#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "vennpred/vennpred.hpp"

namespace fs = std::filesystem;
using namespace vennpred;

namespace {

enum ExitCode { kOk = 0, kUsage = 1, kDataError = 2, kNumerical = 3 };

struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct Options {
    fs::path out_dir = ".";
    std::uint64_t seed = 1;

    // gen
    std::size_t n = 162;
    std::size_t dim = 34;
    double prevalence = 0.1852;
    std::string name = "synthetic";

    // data input
    fs::path data;
    std::vector<std::size_t> features; // 1-based
    bool unlabeled = false;

    // featsel
    std::string criterion = "chi2";
    double epsilon = 0.0;

    // predictors
    std::string predictor = "vp";
    std::string mode = "none";
    std::vector<std::size_t> lambdas{6};
    std::string theta = "auto";
    std::size_t hidden = 5;
    std::size_t workers = 1;

    // batch
    std::size_t folds = 10;
    std::size_t repeats = 10;
    std::size_t bins = 20;

    // online
    std::size_t initial = 5;
    std::optional<std::uint64_t> shuffle;
    std::size_t replicates = 1;
};

std::ofstream open_out(const fs::path& path)
{
    std::ofstream out(path);
    if (!out)
        throw DataError("cannot write " + path.string());
    out.precision(17);
    return out;
}

template <typename T>
std::string ini_list(const std::vector<T>& v)
{
    std::string s = "[";
    for (std::size_t i = 0; i < v.size(); ++i)
        s += (i ? "," : "") + std::to_string(v[i]);
    return s + "]";
}

std::string quoted(const std::string& s) { return '"' + s + '"'; }

/// Resolved configuration of the command that ran; `--config` replays it.
void write_manifest(const std::string& command, const Options& o)
{
    auto out = open_out(o.out_dir / (command + ".manifest.ini"));
    out << "out-dir=" << quoted(o.out_dir.string()) << "\n[" << command << "]\n";
    if (command == "gen") {
        out << "n=" << o.n << "\ndim=" << o.dim << "\nprevalence=" << o.prevalence << "\nseed=" << o.seed
            << "\nname=" << quoted(o.name) << '\n';
        return;
    }
    out << "data=" << quoted(o.data.string()) << '\n';
    if (!o.features.empty())
        out << "features=" << ini_list(o.features) << '\n';
    if (command == "featsel") {
        out << "criterion=" << quoted(o.criterion) << "\nepsilon=" << o.epsilon << '\n';
        return;
    }
    out << "predictor=" << quoted(o.predictor) << "\nmode=" << quoted(o.mode) << '\n';
    if (o.predictor == "vp")
        out << "lambda=" << ini_list(o.lambdas) << '\n';
    out << "theta=" << quoted(o.theta) << "\nhidden=" << o.hidden << "\nworkers=" << o.workers << "\nseed=" << o.seed
        << '\n';
    if (command == "batch") {
        out << "folds=" << o.folds << "\nrepeats=" << o.repeats << "\nbins=" << o.bins << '\n';
        return;
    }
    out << "initial=" << o.initial << "\nreplicates=" << o.replicates << '\n';
    if (o.shuffle)
        out << "shuffle=" << *o.shuffle << '\n';
}

Dataset load_input(const Options& o)
{
    if (o.data.empty())
        throw UsageError("--data is required");
    if (!fs::exists(o.data))
        throw DataError("input file not found: " + o.data.string());
    Dataset d = load_csv(o.data, !o.unlabeled);
    if (o.features.empty())
        return d;
    std::vector<std::size_t> cols;
    for (std::size_t f : o.features) {
        if (f == 0 || f > d.dim())
            throw UsageError("--features index " + std::to_string(f) + " outside 1.." + std::to_string(d.dim()));
        cols.push_back(f - 1);
    }
    return d.select_features(cols);
}

ThresholdPolicy parse_theta(const std::string& s)
{
    if (s == "auto")
        return ThresholdPolicy::automatic();
    if (s == "argmax")
        return ThresholdPolicy::argmax();
    try {
        std::size_t used = 0;
        const double v = std::stod(s, &used);
        if (used == s.size() && v >= 0.0 && v <= 1.0)
            return ThresholdPolicy::fixed(v);
    } catch (const std::exception&) {
    }
    throw UsageError("--theta must be auto, argmax or a number in [0,1], got '" + s + "'");
}

/// One sweep per configuration: Venn predictors share trainings across lambdas.
std::unique_ptr<SweepPredictor> make_sweep(Options& o, const CLI::App& sub, std::unique_ptr<Predictor>& holder)
{
    TrainConfig cfg;
    cfg.hidden_units = o.hidden;
    cfg.validate();
    const RebalanceMode mode{parse_rebalance_kind(o.mode), 0};
    const bool lambda_given = sub.count("--lambda") > 0;

    if (o.predictor == "ann") {
        if (lambda_given)
            throw UsageError("--lambda applies only to --predictor vp");
        if (!sub.count("--theta"))
            o.theta = "argmax";
        const ThresholdPolicy t = parse_theta(o.theta);
        holder = std::make_unique<AnnPredictor>(mode, cfg, t);
        struct Wrap : SweepPredictor {
            explicit Wrap(const Predictor& p) : p(p) {}
            std::unique_ptr<FittedSweep> fit(const Dataset& train) const override
            {
                struct F : FittedSweep {
                    std::unique_ptr<FittedPredictor> inner;
                    std::vector<Prediction> predict(std::span<const double> x) const override
                    {
                        return {inner->predict(x)};
                    }
                };
                auto f = std::make_unique<F>();
                f->inner = p.fit(train);
                return f;
            }
            std::vector<std::string> names() const override { return {p.name()}; }
            const Predictor& p;
        };
        return std::make_unique<Wrap>(*holder);
    }
    if (o.predictor != "vp")
        throw UsageError("--predictor must be vp or ann");
    for (std::size_t l : o.lambdas)
        if (l == 0)
            throw UsageError("--lambda must be at least 1");
    return std::make_unique<VennLambdaSweep>(AnnScorer(mode, cfg), o.lambdas, parse_theta(o.theta));
}

std::string slug(std::string s)
{
    for (char& c : s)
        if (!std::isalnum(static_cast<unsigned char>(c)))
            c = '_';
    return s;
}

int run_gen(const Options& o)
{
    auto spec = SyntheticSpec::reference(o.seed, o.dim);
    if (o.prevalence <= 0.0 || o.prevalence >= 1.0)
        throw UsageError("--prevalence must lie in (0,1)");
    spec.target_prevalence = o.prevalence;
    const auto sample = generate_synthetic(spec, o.n);
    save_csv(sample.data, o.out_dir / (o.name + ".csv"));
    auto probs = open_out(o.out_dir / (o.name + ".probs.csv"));
    probs << "true_prob\n";
    for (double p : sample.true_probs)
        probs << p << '\n';
    std::cout << "wrote " << (o.out_dir / (o.name + ".csv")).string() << ": " << sample.data.size() << " rows, "
              << sample.data.dim() << " features, " << sample.data.positives() << " positive\n";
    return kOk;
}

int run_featsel(const Options& o)
{
    const Dataset d = load_input(o);
    const auto scores = score_features(d, parse_feature_criterion(o.criterion), o.epsilon);
    write_feature_scores(scores, o.out_dir / "features.csv");
    std::cout << "retained features (1-based):";
    for (std::size_t j : retained_features(scores))
        std::cout << ' ' << j + 1;
    std::cout << '\n';
    return kOk;
}

int run_batch_cmd(Options& o, const CLI::App& sub)
{
    const Dataset d = load_input(o);
    std::unique_ptr<Predictor> holder;
    const auto sweep = make_sweep(o, sub, holder);
    BatchPlan plan;
    plan.folds = o.folds;
    plan.repeats = o.repeats;
    plan.seed = o.seed;
    plan.workers = o.workers;
    plan.reliability_bins = o.bins;
    if (plan.folds < 2)
        throw UsageError("--folds must be at least 2");
    const auto results = run_batch(d, *sweep, plan);
    const auto names = sweep->names();

    auto pooled = open_out(o.out_dir / "batch_pooled.csv");
    auto runs = open_out(o.out_dir / "batch_runs.csv");
    pooled << "predictor," << MetricReport::csv_header() << '\n';
    runs << "predictor,repeat," << MetricReport::csv_header() << '\n';
    for (std::size_t m = 0; m < results.size(); ++m) {
        pooled << names[m] << ',' << results[m].pooled.to_csv_row() << '\n';
        for (std::size_t r = 0; r < results[m].per_run.size(); ++r)
            runs << names[m] << ',' << r << ',' << results[m].per_run[r].to_csv_row() << '\n';
        std::cout << names[m] << '\n' << results[m].pooled.to_key_value() << '\n';
    }
    return kOk;
}

int run_online_cmd(Options& o, const CLI::App& sub)
{
    const Dataset d = load_input(o);
    std::unique_ptr<Predictor> holder;
    const auto sweep = make_sweep(o, sub, holder);
    if (o.replicates == 0)
        throw UsageError("--replicates must be positive");
    if (o.replicates > 1 && !o.shuffle)
        throw UsageError("--replicates needs --shuffle to vary the order");

    auto summary = open_out(o.out_dir / "online_summary.csv");
    summary << "predictor,replicate,n,E_N,LEP_N,UEP_N,EP_N,pvalue\n";
    for (std::size_t rep = 0; rep < o.replicates; ++rep) {
        const Dataset ordered = o.shuffle ? shuffled(d, *o.shuffle + rep) : d;
        for (const auto& trace : run_online(ordered, *sweep, o.initial)) {
            std::string stem = "trace_" + slug(trace.predictor);
            if (o.replicates > 1)
                stem += "_r" + std::to_string(rep);
            write_trace_csv(trace, o.out_dir / (stem + ".csv"));
            auto svg = open_out(o.out_dir / (stem + ".svg"));
            svg << render_trace_svg(trace, trace.predictor);

            summary << trace.predictor << ',' << rep << ',' << trace.size() << ',' << trace.errors.back() << ',';
            if (trace.has_bounds)
                summary << trace.lower.back() << ',' << trace.upper.back() << ",,\n";
            else
                summary << ",," << trace.expected.back() << ',' << trace.miscalibration_pvalue() << '\n';
            std::cout << trace.predictor << ": " << trace.errors.back() << " errors in " << trace.size()
                      << " predictions";
            if (trace.has_bounds)
                std::cout << ", bounds [" << trace.lower.back() << ", " << trace.upper.back() << "]\n";
            else
                std::cout << ", expected " << trace.expected.back() << ", p-value " << trace.miscalibration_pvalue()
                          << '\n';
        }
    }
    return kOk;
}

void add_data_options(CLI::App* sub, Options& o)
{
    sub->add_option("--data", o.data, "Input CSV (last column is the 0/1 label)");
    sub->add_option("--features", o.features, "Use only these feature columns (1-based)");
}

void add_predictor_options(CLI::App* sub, Options& o)
{
    sub->add_option("--predictor", o.predictor, "vp or ann")->check(CLI::IsMember({"vp", "ann"}))->capture_default_str();
    sub->add_option("--mode", o.mode, "Rebalancing: none, mo or mu")
        ->check(CLI::IsMember({"none", "mo", "mu"}))
        ->capture_default_str();
    sub->add_option("--lambda", o.lambdas, "Taxonomy categories; several values share trainings")
        ->capture_default_str();
    sub->add_option("--theta", o.theta, "auto (training prevalence), argmax, or a number")->capture_default_str();
    sub->add_option("--hidden", o.hidden, "Hidden units")->check(CLI::PositiveNumber)->capture_default_str();
    sub->add_option("--workers", o.workers, "Threads (results do not depend on it)")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    sub->add_option("--seed", o.seed, "Seed")->capture_default_str();
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Venn prediction with neural-network taxonomies"};
    app.require_subcommand(1);
    app.set_config("--config", "", "Rerun from a manifest written by a previous run");
    Options o;
    if (const char* env = std::getenv("VENNPRED_OUT"))
        o.out_dir = env;
    app.add_option("--out-dir", o.out_dir, "Output directory (default $VENNPRED_OUT or .)")->capture_default_str();

    auto* gen = app.add_subcommand("gen", "Generate a synthetic dataset")->configurable();
    gen->add_option("--n", o.n, "Examples")->check(CLI::PositiveNumber)->capture_default_str();
    gen->add_option("--dim", o.dim, "Binary features")->check(CLI::PositiveNumber)->capture_default_str();
    gen->add_option("--prevalence", o.prevalence, "Mean true positive probability")->capture_default_str();
    gen->add_option("--seed", o.seed, "Seed")->capture_default_str();
    gen->add_option("--name", o.name, "Output file stem")->capture_default_str();

    auto* featsel = app.add_subcommand("featsel", "Score binary features against the label")->configurable();
    add_data_options(featsel, o);
    featsel->add_option("--criterion", o.criterion, "chi2 or ig")->check(CLI::IsMember({"chi2", "ig"}))
        ->capture_default_str();
    featsel->add_option("--epsilon", o.epsilon, "Retain features scoring above this")->capture_default_str();

    auto* batch = app.add_subcommand("batch", "Repeated stratified cross-validation")->configurable();
    add_data_options(batch, o);
    add_predictor_options(batch, o);
    batch->add_option("--folds", o.folds, "Folds")->capture_default_str();
    batch->add_option("--repeats", o.repeats, "Repeats")->check(CLI::PositiveNumber)->capture_default_str();
    batch->add_option("--bins", o.bins, "Reliability bins")->check(CLI::PositiveNumber)->capture_default_str();

    auto* online = app.add_subcommand("online", "Prequential run with cumulative error curves")->configurable();
    add_data_options(online, o);
    add_predictor_options(online, o);
    online->add_option("--initial", o.initial, "Initial training set size")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    online->add_option("--shuffle", o.shuffle, "Shuffle the data once with this seed");
    online->add_option("--replicates", o.replicates, "Independent orderings (seeds shuffle, shuffle+1, ...)")
        ->capture_default_str();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? kOk : kUsage;
    }

    try {
        fs::create_directories(o.out_dir);
        int rc = kOk;
        CLI::App* used = app.get_subcommands().front();
        if (used == gen)
            rc = run_gen(o);
        else if (used == featsel)
            rc = run_featsel(o);
        else if (used == batch)
            rc = run_batch_cmd(o, *batch);
        else
            rc = run_online_cmd(o, *online);
        write_manifest(used->get_name(), o);
        return rc;
    } catch (const UsageError& e) {
        std::cerr << "usage error: " << e.what() << '\n';
        return kUsage;
    } catch (const std::invalid_argument& e) {
        std::cerr << "usage error: " << e.what() << '\n';
        return kUsage;
    } catch (const NumericalError& e) {
        std::cerr << "numerical failure: " << e.what() << '\n';
        return kNumerical;
    } catch (const DataError& e) {
        std::cerr << "data error: " << e.what() << '\n';
        return kDataError;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kDataError;
    }
}
