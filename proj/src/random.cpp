#include "pushforward/random.hpp"

#include <cmath>
#include <numbers>
#include <vector>

#include "pushforward/errors.hpp"

namespace pushforward {

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) noexcept {
    std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (stream + 1);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

double uniform01(Rng& rng) noexcept { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

std::size_t uniform_index(Rng& rng, std::size_t n) noexcept {
    return static_cast<std::size_t>(rng() % n);
}

Point random_point(const ModelSpace& space, Rng& rng) {
    switch (space.kind()) {
        case SpaceKind::finite: return Point::index(uniform_index(rng, space.size()));
        case SpaceKind::circle: return Point(uniform01(rng));
        case SpaceKind::interval: return Point(uniform01(rng));
        case SpaceKind::square: {
            const double x = uniform01(rng);
            return Point(x, uniform01(rng));
        }
        case SpaceKind::solid_torus: {
            const double phi = uniform01(rng);
            const double r = std::sqrt(uniform01(rng));
            const double theta = 2.0 * std::numbers::pi * uniform01(rng);
            return Point(phi, r * std::cos(theta), r * std::sin(theta));
        }
    }
    return Point();
}

AtomicMeasure random_measure_with(const ModelSpace& space, Rng& rng, std::size_t atoms) {
    if (atoms == 0) throw ParameterError("random measure needs at least one atom");
    std::vector<Atom> list;
    list.reserve(atoms);
    double total = 0.0;
    for (std::size_t i = 0; i < atoms; ++i) {
        Point p = random_point(space, rng);
        const double w = -std::log1p(-uniform01(rng));
        list.push_back({p, w});
        total += w;
    }
    if (!(total > 0.0)) {
        for (auto& a : list) a.weight = 1.0;
        total = static_cast<double>(atoms);
    }
    for (auto& a : list) a.weight /= total;
    return AtomicMeasure(space, std::move(list));
}

AtomicMeasure random_measure(const ModelSpace& space, Rng& rng, std::size_t max_atoms) {
    if (max_atoms == 0) throw ParameterError("max_atoms must be >= 1");
    return random_measure_with(space, rng, 1 + uniform_index(rng, max_atoms));
}

}  // namespace pushforward
