#pragma once

#include <cstddef>
#include <cstdint>
#include <random>

#include "pushforward/measures.hpp"

namespace pushforward {

using Rng = std::mt19937_64;

/// SplitMix64 finalizer; derives independent per-trial seeds from one seed.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) noexcept;

/// Uniform double in [0,1) from the top 53 bits (portable, unlike
/// std::uniform_real_distribution).
double uniform01(Rng& rng) noexcept;
std::size_t uniform_index(Rng& rng, std::size_t n) noexcept;

/// Uniform point of the model (normalized Lebesgue; counting on finite spaces).
Point random_point(const ModelSpace& space, Rng& rng);

/// Flat-Dirichlet weights on `atoms` uniform random points.
AtomicMeasure random_measure_with(const ModelSpace& space, Rng& rng, std::size_t atoms);
/// Atom count uniform in {1..max_atoms}, then random_measure_with.
AtomicMeasure random_measure(const ModelSpace& space, Rng& rng, std::size_t max_atoms = 20);

}  // namespace pushforward
