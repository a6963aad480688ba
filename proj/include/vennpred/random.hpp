#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <span>

namespace vennpred {

class Dataset;

/// Engine used everywhere a stream of random numbers is needed. The
/// distributions below are written out by hand because the standard
/// distribution classes are implementation-defined, and results must be
/// bit-identical across standard libraries.
using Rng = std::mt19937_64;

std::uint64_t splitmix64(std::uint64_t x);

/// Combines two 64-bit values into one, order-sensitive.
std::uint64_t hash_combine(std::uint64_t seed, std::uint64_t value);

/// Uniform double in [0, 1) with 53 random bits.
double uniform01(Rng& rng);

/// Uniform integer in [0, n). n must be positive.
std::size_t uniform_index(Rng& rng, std::size_t n);

/// Standard normal deviate (Box-Muller, one value per call).
double standard_normal(Rng& rng);

/// Hash of the dataset viewed as a multiset of (features, label) pairs.
/// Any permutation of the examples yields the same value.
std::uint64_t multiset_hash(const Dataset& data);

/// Seed derived from the content of a dataset plus caller-supplied material.
std::uint64_t content_seed(const Dataset& data, std::uint64_t seed_material);

} // namespace vennpred
