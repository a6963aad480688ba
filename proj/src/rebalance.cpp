#include "vennpred/rebalance.hpp"

#include <algorithm>

#include "vennpred/errors.hpp"
#include "vennpred/random.hpp"

namespace vennpred {

std::string to_string(RebalanceKind kind)
{
    switch (kind) {
    case RebalanceKind::None:
        return "none";
    case RebalanceKind::MinorityOversampling:
        return "mo";
    case RebalanceKind::MajorityUndersampling:
        return "mu";
    }
    return "?";
}

RebalanceKind parse_rebalance_kind(const std::string& name)
{
    if (name == "none")
        return RebalanceKind::None;
    if (name == "mo")
        return RebalanceKind::MinorityOversampling;
    if (name == "mu")
        return RebalanceKind::MajorityUndersampling;
    throw std::invalid_argument("unknown rebalance mode '" + name + "' (expected none, mo or mu)");
}

RebalanceResult rebalance(const Dataset& data, const RebalanceMode& mode)
{
    if (!data.fully_labeled())
        throw DataError("rebalance requires every example to be labeled");
    if (mode.kind == RebalanceKind::None)
        return {data, false};
    if (data.positives() == 0 || data.negatives() == 0)
        return {data, true};
    if (data.positives() == data.negatives())
        return {data, false};

    const Dataset canon = data.canonical();
    const int minority_label = canon.positives() < canon.negatives() ? 1 : 0;
    std::vector<std::size_t> minority;
    std::vector<std::size_t> majority;
    for (std::size_t i = 0; i < canon.size(); ++i)
        (*canon[i].label == minority_label ? minority : majority).push_back(i);

    Rng rng(hash_combine(content_seed(canon, mode.seed_material), static_cast<std::uint64_t>(mode.kind)));
    std::vector<std::size_t> keep;
    if (mode.kind == RebalanceKind::MinorityOversampling) {
        keep.resize(canon.size());
        for (std::size_t i = 0; i < keep.size(); ++i)
            keep[i] = i;
        for (std::size_t extra = majority.size() - minority.size(); extra > 0; --extra)
            keep.push_back(minority[uniform_index(rng, minority.size())]);
    } else {
        // Partial Fisher-Yates: the first |minority| slots form a uniform subset.
        for (std::size_t i = 0; i < minority.size(); ++i)
            std::swap(majority[i], majority[i + uniform_index(rng, majority.size() - i)]);
        keep = minority;
        keep.insert(keep.end(), majority.begin(), majority.begin() + static_cast<std::ptrdiff_t>(minority.size()));
        std::sort(keep.begin(), keep.end());
    }
    return {canon.subset(keep), false};
}

} // namespace vennpred
