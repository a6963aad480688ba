#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "vennpred/vennpred.hpp"

namespace py = pybind11;
using namespace vennpred;

namespace {

using Matrix = py::array_t<double, py::array::c_style | py::array::forcecast>;
using Labels = py::array_t<int, py::array::c_style | py::array::forcecast>;

Dataset to_dataset(const Matrix& x, const std::optional<Labels>& y)
{
    if (x.ndim() != 2)
        throw std::invalid_argument("features must be a 2-D array");
    const auto n = static_cast<std::size_t>(x.shape(0));
    const auto d = static_cast<std::size_t>(x.shape(1));
    if (y && static_cast<std::size_t>(y->size()) != n)
        throw std::invalid_argument("labels and features disagree on the number of examples");
    Dataset out(d);
    out.reserve(n);
    const double* px = x.data();
    for (std::size_t i = 0; i < n; ++i) {
        std::vector<double> row(px + i * d, px + (i + 1) * d);
        out.add(std::move(row), y ? std::optional<int>(y->data()[i]) : std::nullopt);
    }
    return out;
}

py::array_t<double> features_of(const Dataset& d)
{
    py::array_t<double> out({d.size(), d.dim()});
    auto m = out.mutable_unchecked<2>();
    for (std::size_t i = 0; i < d.size(); ++i)
        for (std::size_t j = 0; j < d.dim(); ++j)
            m(i, j) = d[i].features[j];
    return out;
}

py::array_t<int> labels_of(const Dataset& d)
{
    const auto l = d.labels();
    return py::array_t<int>(l.size(), l.data());
}

ThresholdPolicy parse_theta(const py::object& theta)
{
    if (theta.is_none())
        return ThresholdPolicy::automatic();
    if (py::isinstance<py::str>(theta)) {
        const auto s = theta.cast<std::string>();
        if (s == "auto")
            return ThresholdPolicy::automatic();
        if (s == "argmax")
            return ThresholdPolicy::argmax();
        throw std::invalid_argument("theta must be 'auto', 'argmax' or a number");
    }
    return ThresholdPolicy::fixed(theta.cast<double>());
}

TrainConfig config(std::size_t hidden)
{
    TrainConfig cfg;
    cfg.hidden_units = hidden;
    cfg.validate();
    return cfg;
}

py::dict report_dict(const MetricReport& r)
{
    py::dict d;
    d["sensitivity"] = r.sensitivity;
    d["specificity"] = r.specificity;
    d["cross_entropy"] = r.cross_entropy;
    d["brier"] = r.brier;
    d["reliability"] = r.reliability;
    d["n"] = r.n;
    return d;
}

template <typename T>
py::array_t<T> array(const std::vector<T>& v)
{
    return py::array_t<T>(v.size(), v.data());
}

} // namespace

PYBIND11_MODULE(_core, m)
{
    m.doc() = "Venn prediction with neural-network taxonomies";

    py::register_exception<DataError>(m, "DataError", PyExc_ValueError);
    py::register_exception<NumericalError>(m, "NumericalError", PyExc_ArithmeticError);

    m.def(
        "generate_synthetic",
        [](std::size_t n, std::size_t dim, double prevalence, std::uint64_t seed) {
            auto spec = SyntheticSpec::reference(seed, dim);
            spec.target_prevalence = prevalence;
            const auto s = generate_synthetic(spec, n);
            return py::make_tuple(features_of(s.data), labels_of(s.data), array(s.true_probs));
        },
        py::arg("n"), py::arg("dim") = 34, py::arg("prevalence") = 0.1852, py::arg("seed") = 1,
        "Returns (X, y, true_probs) from the reference synthetic design.");

    m.def(
        "rebalance",
        [](const Matrix& x, const Labels& y, const std::string& mode) {
            const auto r = rebalance(to_dataset(x, y), {parse_rebalance_kind(mode), 0});
            return py::make_tuple(features_of(r.data), labels_of(r.data));
        },
        py::arg("X"), py::arg("y"), py::arg("mode"));

    m.def(
        "score_features",
        [](const Matrix& x, const Labels& y, const std::string& criterion, double epsilon) {
            py::list out;
            for (const auto& s : score_features(to_dataset(x, y), parse_feature_criterion(criterion), epsilon)) {
                py::dict d;
                d["index"] = s.index;
                d["chi2"] = s.chi2;
                d["info_gain"] = s.info_gain;
                d["retained"] = s.retained;
                out.append(d);
            }
            return out;
        },
        py::arg("X"), py::arg("y"), py::arg("criterion") = "chi2", py::arg("epsilon") = 0.0);

    m.def(
        "train_mlp",
        [](const Matrix& x, const Labels& y, std::size_t hidden) {
            const auto model = train(to_dataset(x, y), config(hidden));
            const auto flat = model.flatten();
            return py::make_tuple(array(flat), model.input_dim(), model.hidden_units());
        },
        py::arg("X"), py::arg("y"), py::arg("hidden") = 5,
        "Trains a network; returns (flat parameters, input_dim, hidden_units).");

    m.def(
        "mlp_forward",
        [](const std::vector<double>& params, std::size_t dim, std::size_t hidden, const Matrix& x) {
            auto model = MlpModel::zeros(dim, hidden);
            model.unflatten(params);
            const Dataset d = to_dataset(x, std::nullopt);
            const Eigen::VectorXd out = model.forward_batch(to_matrix(d));
            return py::array_t<double>(out.size(), out.data());
        },
        py::arg("params"), py::arg("input_dim"), py::arg("hidden"), py::arg("X"));

    m.def(
        "venn_predict",
        [](const Matrix& x, const Labels& y, const std::vector<double>& point, std::size_t lambda,
           const std::string& mode, const py::object& theta, std::size_t hidden) {
            const Dataset train = to_dataset(x, y);
            const AnnBinTaxonomy tax(lambda, {parse_rebalance_kind(mode), 0}, config(hidden));
            const auto out = predict(tax, train, point, parse_theta(theta).resolve(train));
            py::dict d;
            d["p1"] = py::make_tuple(out.dist[0].p1(), out.dist[1].p1());
            d["mean_p1"] = out.mean_p1;
            d["prediction"] = out.prediction;
            d["interval"] = py::make_tuple(out.pred_interval.lower, out.pred_interval.upper);
            const auto err = out.error_interval();
            d["error_interval"] = py::make_tuple(err.lower, err.upper);
            return d;
        },
        py::arg("X"), py::arg("y"), py::arg("x"), py::arg("lambda_") = 6, py::arg("mode") = "none",
        py::arg("theta") = py::none(), py::arg("hidden") = 5);

    m.def(
        "run_batch",
        [](const Matrix& x, const Labels& y, const std::string& predictor, const std::string& mode,
           std::size_t lambda, const py::object& theta, std::size_t hidden, std::size_t folds, std::size_t repeats,
           std::uint64_t seed, std::size_t workers) {
            PredictorSpec spec;
            spec.kind = predictor == "ann" ? PredictorSpec::Kind::Ann : PredictorSpec::Kind::Venn;
            if (predictor != "ann" && predictor != "vp")
                throw std::invalid_argument("predictor must be 'vp' or 'ann'");
            spec.rebalance = {parse_rebalance_kind(mode), 0};
            spec.lambda = lambda;
            spec.train = config(hidden);
            if (!theta.is_none())
                spec.threshold = parse_theta(theta);
            BatchPlan plan;
            plan.folds = folds;
            plan.repeats = repeats;
            plan.seed = seed;
            plan.workers = workers;
            const Dataset data = to_dataset(x, y);
            const auto p = make_predictor(spec);
            BatchResult r;
            {
                py::gil_scoped_release release;
                r = run_batch(data, *p, plan);
            }
            py::dict d;
            d["pooled"] = report_dict(r.pooled);
            py::list runs;
            for (const auto& run : r.per_run)
                runs.append(report_dict(run));
            d["per_run"] = runs;
            return d;
        },
        py::arg("X"), py::arg("y"), py::arg("predictor") = "vp", py::arg("mode") = "none", py::arg("lambda_") = 6,
        py::arg("theta") = py::none(), py::arg("hidden") = 5, py::arg("folds") = 10, py::arg("repeats") = 10,
        py::arg("seed") = 1, py::arg("workers") = 1);

    m.def(
        "run_online",
        [](const Matrix& x, const Labels& y, const std::string& mode, std::size_t lambda, const py::object& theta,
           std::size_t hidden, std::size_t initial) {
            PredictorSpec spec;
            spec.rebalance = {parse_rebalance_kind(mode), 0};
            spec.lambda = lambda;
            spec.train = config(hidden);
            if (!theta.is_none())
                spec.threshold = parse_theta(theta);
            const Dataset data = to_dataset(x, y);
            const auto p = make_predictor(spec);
            OnlineTrace t;
            {
                py::gil_scoped_release release;
                t = run_online(data, *p, initial);
            }
            py::dict d;
            d["errors"] = array(t.errors);
            d["lower"] = array(t.lower);
            d["upper"] = array(t.upper);
            return d;
        },
        py::arg("X"), py::arg("y"), py::arg("mode") = "mo", py::arg("lambda_") = 6, py::arg("theta") = py::none(),
        py::arg("hidden") = 5, py::arg("initial") = 5,
        "Prequential run of a Venn predictor; returns cumulative E_n, LEP_n and UEP_n.");

    m.def(
        "reliability",
        [](const std::vector<double>& p, const std::vector<int>& y, std::size_t bins) {
            return reliability(p, y, bins);
        },
        py::arg("probs"), py::arg("labels"), py::arg("bins") = 20);
    m.def(
        "cross_entropy", [](const std::vector<double>& p, const std::vector<int>& y) { return cross_entropy(p, y); },
        py::arg("probs"), py::arg("labels"));
    m.def(
        "brier", [](const std::vector<double>& p, const std::vector<int>& y) { return brier(p, y); },
        py::arg("probs"), py::arg("labels"));
    m.def(
        "poisson_binomial_pmf", [](const std::vector<double>& q) { return array(poisson_binomial_pmf(q)); },
        py::arg("q"));
    m.def(
        "miscalibration_pvalue",
        [](const std::vector<double>& q, const std::vector<int>& errors) { return miscalibration_pvalue(q, errors); },
        py::arg("q"), py::arg("errors"));
}
