#include "doctest.h"

#include <algorithm>
#include <map>

#include "vennpred/data.hpp"
#include "vennpred/rebalance.hpp"

using namespace vennpred;

namespace {

Dataset counts(std::size_t pos, std::size_t neg)
{
    Dataset d(1);
    for (std::size_t i = 0; i < pos; ++i)
        d.add({static_cast<double>(i)}, 1);
    for (std::size_t i = 0; i < neg; ++i)
        d.add({100.0 + static_cast<double>(i)}, 0);
    return d;
}

std::map<double, int> multiplicity(const Dataset& d)
{
    std::map<double, int> m;
    for (const auto& e : d)
        ++m[e.features[0]];
    return m;
}

} // namespace

TEST_CASE("minority oversampling counts")
{
    const auto d = counts(3, 10);
    const auto r = rebalance(d, {RebalanceKind::MinorityOversampling, 0});
    CHECK_FALSE(r.degenerate);
    CHECK(r.data.size() == 20);
    CHECK(r.data.positives() == 10);
    CHECK(r.data.negatives() == 10);
    // Every original survives; copies are only of minority examples.
    const auto before = multiplicity(d);
    const auto after = multiplicity(r.data);
    for (const auto& [v, c] : before) {
        REQUIRE(after.count(v));
        CHECK(after.at(v) >= c);
        if (v >= 100.0)
            CHECK(after.at(v) == 1);
    }

    CHECK(rebalance(counts(30, 132), {RebalanceKind::MinorityOversampling, 0}).data.size() == 264);
}

TEST_CASE("majority undersampling counts")
{
    const auto d = counts(3, 10);
    const auto r = rebalance(d, {RebalanceKind::MajorityUndersampling, 0});
    CHECK(r.data.size() == 6);
    CHECK(r.data.positives() == 3);
    const auto after = multiplicity(r.data);
    for (const auto& [v, c] : after)
        CHECK(c == 1);
    for (double v : {0.0, 1.0, 2.0})
        CHECK(after.count(v) == 1);
}

TEST_CASE("rebalance edge cases")
{
    const auto balanced = counts(4, 4);
    CHECK(rebalance(balanced, {RebalanceKind::MinorityOversampling, 0}).data.examples() == balanced.examples());
    const auto d = counts(3, 10);
    CHECK(rebalance(d, {RebalanceKind::None, 0}).data.examples() == d.examples());
    const auto one = counts(0, 5);
    const auto r = rebalance(one, {RebalanceKind::MajorityUndersampling, 0});
    CHECK(r.degenerate);
    CHECK(r.data.examples() == one.examples());
}

TEST_CASE("rebalance output multiset ignores input order")
{
    const auto d = counts(5, 17);
    for (auto kind : {RebalanceKind::MinorityOversampling, RebalanceKind::MajorityUndersampling}) {
        const auto a = rebalance(d, {kind, 3}).data.canonical();
        const auto b = rebalance(shuffled(d, 8), {kind, 3}).data.canonical();
        CHECK(a.examples() == b.examples());
    }
}

TEST_CASE("rebalance kind names")
{
    for (auto k : {RebalanceKind::None, RebalanceKind::MinorityOversampling, RebalanceKind::MajorityUndersampling})
        CHECK(parse_rebalance_kind(to_string(k)) == k);
    CHECK_THROWS(parse_rebalance_kind("smote"));
}
