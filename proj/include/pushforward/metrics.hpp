#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "pushforward/measures.hpp"
#include "pushforward/transport.hpp"

namespace pushforward {

struct WassersteinResult {
    double value = 0.0;  ///< W_p(mu, nu)
    TransportPlan plan;  ///< optimal coupling; plan.cost = value^p
};

/// Exact W_p between atomic measures: min-cost transport with costs d^p.
WassersteinResult wasserstein(const AtomicMeasure& mu, const AtomicMeasure& nu, double p = 1.0);

/// W_1 between atom lists on the interval or the circle, from the CDFs:
/// int |F - G| on the interval and min_c int |F - G - c| on the circle.
/// Atoms must be sorted by coordinate (AtomicMeasure keeps them sorted).
double wasserstein1_line(std::span<const Atom> a, std::span<const Atom> b, bool periodic);

/// Exact Levy-Prokhorov distance.
///
/// For alpha in (t_k, t_{k+1}] between consecutive atom distances the pairs
/// within distance < alpha are fixed, and d_P <= alpha holds iff the max flow
/// F_k over those pairs satisfies 1 - F_k <= alpha. The first interval whose
/// feasibility gap 1 - F_k fits gives d_P = max(t_k, 1 - F_k).
double prokhorov(const AtomicMeasure& mu, const AtomicMeasure& nu);
/// Same, on raw atom lists of one space (no validation).
double prokhorov(const ModelSpace& space, std::span<const Atom> a, std::span<const Atom> b);
/// d_P(a, b) < eps, with a single flow computation.
bool prokhorov_less_than(const ModelSpace& space, std::span<const Atom> a, std::span<const Atom> b, double eps);

/// First N members of a fixed dense family of [0,1]-valued test functions.
///
/// Continuum spaces: products of per-axis hats max(0, 1 - dist/w) with
/// w = L 2^{-l} and centers on the level-l dyadic lattice of each axis.
/// Levels are enumerated by total level, then per-axis levels
/// lexicographically, then centers lexicographically. Finite spaces use the
/// indicator of each point (the family is then finite).
class WeakStarBasis {
public:
    explicit WeakStarBasis(const ModelSpace& space, std::size_t terms = 20);

    const ModelSpace& space() const noexcept { return space_; }
    std::size_t size() const noexcept { return functions_.size(); }
    const TestFunction& operator[](std::size_t i) const { return functions_.at(i); }
    /// Bound on the omitted series tail: 2^{-N}, or 0 if the family is exhausted.
    double tail_bound() const noexcept { return tail_; }

private:
    ModelSpace space_;
    std::vector<TestFunction> functions_;
    double tail_ = 0.0;
};

struct WeakStarDistance {
    double value = 0.0;       ///< truncated sum over the basis
    double tail_bound = 0.0;  ///< the full series lies in [value, value + tail_bound]
};

/// sum_{i <= N} 2^{-i} |int g_i dmu - int g_i dnu|.
WeakStarDistance weak_star(const AtomicMeasure& mu, const AtomicMeasure& nu, const WeakStarBasis& basis);

enum class MetricKind { wasserstein, prokhorov, weak_star };

MetricKind parse_metric(const std::string& name);
std::string to_string(MetricKind kind);

}  // namespace pushforward
