#include "vennpred/random.hpp"

#include <bit>
#include <cmath>
#include <numbers>

#include "vennpred/data.hpp"

namespace vennpred {

std::uint64_t splitmix64(std::uint64_t x)
{
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

std::uint64_t hash_combine(std::uint64_t seed, std::uint64_t value)
{
    return splitmix64(seed ^ splitmix64(value + 0x632be59bd9b4e019ULL));
}

double uniform01(Rng& rng)
{
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

std::size_t uniform_index(Rng& rng, std::size_t n)
{
    const std::uint64_t bound = n;
    // Rejection keeps the draw exactly uniform.
    const std::uint64_t limit = UINT64_MAX - (UINT64_MAX % bound);
    std::uint64_t r;
    do {
        r = rng();
    } while (r >= limit);
    return static_cast<std::size_t>(r % bound);
}

double standard_normal(Rng& rng)
{
    double u1;
    do {
        u1 = uniform01(rng);
    } while (u1 <= 0.0);
    const double u2 = uniform01(rng);
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

namespace {

std::uint64_t feature_bits(double v)
{
    // +0.0 and -0.0 compare equal, so they must hash equal too.
    return std::bit_cast<std::uint64_t>(v + 0.0);
}

} // namespace

std::uint64_t multiset_hash(const Dataset& data)
{
    const Dataset sorted = data.canonical();
    std::uint64_t h = hash_combine(0x5eed, data.dim());
    for (const auto& ex : sorted) {
        for (double v : ex.features)
            h = hash_combine(h, feature_bits(v));
        h = hash_combine(h, ex.label ? static_cast<std::uint64_t>(*ex.label) : 0xffULL);
    }
    return hash_combine(h, sorted.size());
}

std::uint64_t content_seed(const Dataset& data, std::uint64_t seed_material)
{
    return hash_combine(multiset_hash(data), seed_material);
}

} // namespace vennpred
