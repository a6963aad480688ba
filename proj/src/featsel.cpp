#include "vennpred/featsel.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "vennpred/errors.hpp"

namespace vennpred {

FeatureCriterion parse_feature_criterion(const std::string& name)
{
    if (name == "chi2")
        return FeatureCriterion::ChiSquared;
    if (name == "ig")
        return FeatureCriterion::InformationGain;
    throw std::invalid_argument("unknown criterion '" + name + "' (expected chi2 or ig)");
}

namespace {

double plogp(double count, double total)
{
    if (count <= 0.0)
        return 0.0;
    const double p = count / total;
    return -p * std::log2(p);
}

double entropy2(double a, double b)
{
    const double t = a + b;
    return t > 0.0 ? plogp(a, t) + plogp(b, t) : 0.0;
}

} // namespace

std::vector<FeatureScore> score_features(const Dataset& data, FeatureCriterion criterion, double epsilon)
{
    if (!data.fully_labeled())
        throw DataError("feature scoring requires labeled data");
    if (data.empty())
        throw DataError("feature scoring requires a nonempty dataset");

    std::vector<FeatureScore> out;
    out.reserve(data.dim());
    const double n = static_cast<double>(data.size());
    for (std::size_t j = 0; j < data.dim(); ++j) {
        // table[x][y]
        std::uint64_t table[2][2] = {{0, 0}, {0, 0}};
        for (std::size_t i = 0; i < data.size(); ++i) {
            const double v = data[i].features[j];
            if (v != 0.0 && v != 1.0)
                throw DataError("feature " + std::to_string(j + 1) + " is not binary (value " + std::to_string(v) +
                                " at example " + std::to_string(i) + "); discretize it before scoring");
            ++table[v == 1.0 ? 1 : 0][*data[i].label];
        }
        const double a = static_cast<double>(table[0][0]);
        const double b = static_cast<double>(table[0][1]);
        const double c = static_cast<double>(table[1][0]);
        const double d = static_cast<double>(table[1][1]);

        FeatureScore s;
        s.index = j;
        // n (ad - bc)^2 / (row and column margins); a zero margin means no term.
        const double margins = (a + b) * (c + d) * (a + c) * (b + d);
        if (margins > 0.0) {
            const double diff = a * d - b * c;
            s.chi2 = n * diff * diff / margins;
        }
        const double h_y = entropy2(a + c, b + d);
        const double h_y_given_x = ((a + b) * entropy2(a, b) + (c + d) * entropy2(c, d)) / n;
        s.info_gain = std::max(0.0, h_y - h_y_given_x);
        if (s.chi2 == 0.0)
            s.info_gain = 0.0; // independence: the entropy difference is rounding noise
        const double score = criterion == FeatureCriterion::ChiSquared ? s.chi2 : s.info_gain;
        s.retained = score > epsilon;
        out.push_back(s);
    }
    return out;
}

std::vector<std::size_t> retained_features(const std::vector<FeatureScore>& scores)
{
    std::vector<std::size_t> out;
    for (const auto& s : scores)
        if (s.retained)
            out.push_back(s.index);
    return out;
}

void write_feature_scores(const std::vector<FeatureScore>& scores, const std::filesystem::path& path)
{
    std::ofstream out(path);
    if (!out)
        throw std::runtime_error("cannot write " + path.string());
    out.precision(17);
    out << "index,chi2,info_gain,retained\n";
    for (const auto& s : scores)
        out << s.index + 1 << ',' << s.chi2 << ',' << s.info_gain << ',' << (s.retained ? 1 : 0) << '\n';
}

} // namespace vennpred
