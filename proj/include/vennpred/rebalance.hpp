#pragma once

#include <cstdint>
#include <string>

#include "vennpred/data.hpp"

namespace vennpred {

enum class RebalanceKind {
    None,
    MinorityOversampling,  // MO
    MajorityUndersampling, // MU
};

struct RebalanceMode {
    RebalanceKind kind = RebalanceKind::None;
    std::uint64_t seed_material = 0;
};

std::string to_string(RebalanceKind kind);
RebalanceKind parse_rebalance_kind(const std::string& name); // "none", "mo", "mu"

struct RebalanceResult {
    Dataset data;
    /// Set when one class is empty and resampling was skipped.
    bool degenerate = false;
};

/**
 * Equalizes class counts.
 *
 * MO keeps every example and appends minority copies drawn uniformly with
 * replacement until the classes match (size 2 * max). MU keeps the minority
 * class and a uniformly drawn majority subset of the same size (size
 * 2 * min). Balanced input, RebalanceKind::None, and input missing a class
 * are returned unchanged. The draw is seeded from the content of the data,
 * so the output multiset does not depend on the input order.
 */
RebalanceResult rebalance(const Dataset& data, const RebalanceMode& mode);

} // namespace vennpred
