#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "pushforward/measures.hpp"
#include "pushforward/metrics.hpp"

namespace pushforward {

/// A finite sample of states together with their orbits up to a horizon, and
/// the metric d used in the Bowen distance d_n = max_{k<n} d(T^k x, T^k y).
///
/// Three kinds of state: points of a system's space, pairs of points under a
/// product map (max product metric), and atomic measures moved by the
/// push-forward and compared with W_1 or Prokhorov.
class BowenContext {
public:
    enum class Kind { points, product, measures };

    static BowenContext points(const SystemMap& system, std::vector<Point> sample, std::size_t horizon);
    static BowenContext product(const SystemMap& a, const SystemMap& b,
                                std::vector<std::pair<Point, Point>> sample, std::size_t horizon);
    /// `metric` must be wasserstein (W_1) or prokhorov.
    static BowenContext measures(const SystemMap& system, std::vector<AtomicMeasure> sample, MetricKind metric,
                                 std::size_t horizon);

    Kind kind() const noexcept { return kind_; }
    /// Space of the states (the first factor for product contexts).
    const ModelSpace& space() const noexcept { return space_a_; }
    MetricKind metric() const noexcept { return metric_; }
    std::size_t size() const noexcept { return size_; }
    std::size_t horizon() const noexcept { return horizon_; }
    /// Set when the sample is the whole (finite) space: counts are then exact
    /// and never flagged as saturated.
    bool exhaustive() const noexcept { return exhaustive_; }
    /// Covering radius of the sample in the base metric, when known (grid
    /// builders set it): every state lies this close to a sample state.
    std::optional<double> resolution() const noexcept { return resolution_; }
    void set_resolution(double r) { resolution_ = r; }
    const std::string& description() const noexcept { return description_; }
    void set_description(std::string d) { description_ = std::move(d); }

    /// d(T^k x_i, T^k x_j), k < horizon.
    double distance(std::size_t i, std::size_t j, std::size_t k) const;
    /// d_n(x_i, x_j); n in [1, horizon].
    double bowen_distance(std::size_t i, std::size_t j, std::size_t n) const;
    /// d_n(x_i, x_j) >= eps, checking the most discriminating times first.
    bool separated(std::size_t i, std::size_t j, std::size_t n, double eps) const;

    /// Coordinates of state i at time k that are 1-Lipschitz for the base
    /// metric; `periodic` marks coordinates living on [0,1) mod 1.
    void features(std::size_t i, std::size_t k, double eps, std::vector<double>& values,
                  std::vector<bool>& periodic) const;

    /// Smallest heaviest-atom weight over all stored measure states.
    double min_heaviest_weight() const noexcept { return min_heaviest_; }
    /// Atoms of measure state i at time k (measure contexts only).
    std::span<const Atom> state_atoms(std::size_t i, std::size_t k) const;

private:
    BowenContext() = default;
    bool far_apart(std::size_t i, std::size_t j, std::size_t k, double eps) const;

    Kind kind_ = Kind::points;
    ModelSpace space_a_ = ModelSpace::circle();
    ModelSpace space_b_ = ModelSpace::circle();
    MetricKind metric_ = MetricKind::wasserstein;
    std::size_t size_ = 0;
    std::size_t horizon_ = 0;
    bool exhaustive_ = false;
    std::optional<double> resolution_;
    std::string description_;
    // Orbits, sample-major: state (i, k) lives at index i * horizon + k.
    std::vector<Point> traj_a_;
    std::vector<Point> traj_b_;
    std::vector<Atom> atoms_;
    std::vector<std::uint32_t> offsets_;
    double prokhorov_scale_ = 1.0;
    double min_heaviest_ = 1.0;
};

/// d_n(x, y) for a point map.
double bowen_distance(const SystemMap& system, const Point& x, const Point& y, std::size_t n);
/// d_n(mu, nu) for the push-forward under W_1 or Prokhorov.
double bowen_distance(const SystemMap& system, const AtomicMeasure& mu, const AtomicMeasure& nu, std::size_t n,
                      MetricKind metric);

/// Greedy (n, eps)-separated subset: sample order, keep a state iff it is at
/// d_n distance >= eps from everything kept. Returns the kept indices; its
/// size is a lower bound for sep(n, eps).
std::vector<std::size_t> separated_set(const BowenContext& ctx, std::size_t n, double eps);
std::size_t separated_count(const BowenContext& ctx, std::size_t n, double eps);

struct EntropyEstimate {
    std::vector<double> eps_list;                  ///< ascending
    std::vector<std::size_t> n_values;             ///< ascending
    std::vector<std::vector<std::size_t>> counts;  ///< [eps][n], monotone lower bounds
    std::vector<std::vector<bool>> saturated;      ///< count >= 0.9 * sample size
    std::vector<std::optional<double>> slopes;     ///< per eps; empty if < 3 unsaturated n
    std::vector<std::vector<std::size_t>> windows; ///< the n values each slope used
    std::vector<double> oscillation;               ///< max |increment - slope| over the window
    double h_estimate = 0.0;
    double h_eps = 0.0;  ///< the eps whose slope is h_estimate
    std::size_t sample_size = 0;
    std::string sample;
};

inline constexpr double kSaturationFraction = 0.9;

/// Least-squares slope of log count against n per eps, over unsaturated
/// cells; h_estimate is the slope at the smallest eps with one.
///
/// Raw greedy counts are replaced by the envelope max over (n' <= n,
/// eps' >= eps), which keeps them valid lower bounds and makes the table
/// monotone. Throws ParameterError for fewer than 4 n values and
/// EstimateInvalid when every eps is saturated or the sample is coarser than
/// min(eps)/4.
EntropyEstimate entropy_estimate(const BowenContext& ctx, std::vector<double> eps_list,
                                 std::vector<std::size_t> n_range, std::size_t threads = 1);

/// Grid on a continuum space: i/m on the circle, i/(m-1) on the interval,
/// products of those on the square; every index on a finite space.
std::vector<Point> grid_sample(const ModelSpace& space, std::size_t per_axis);

EntropyEstimate entropy_base(const SystemMap& system, std::vector<double> eps_list,
                             std::vector<std::size_t> n_range, std::size_t per_axis = 1 << 14,
                             std::size_t threads = 1);

/// Default per-axis count for n_embed: the largest m with m^n_embed <= 2^16
/// (at most 2^14), made odd for n_embed >= 2 so that doubling maps do not
/// collapse the grid.
std::size_t default_embed_per_axis(std::size_t n_embed);

/// Entropy of the push-forward on {dyadic_embed(x_1..x_k)} over a grid of
/// k-tuples (k = n_embed, at most 2^16 tuples).
EntropyEstimate entropy_embedded_Dn(const SystemMap& system, std::size_t n_embed, MetricKind metric,
                                    std::vector<double> eps_list, std::vector<std::size_t> n_range,
                                    std::size_t sample_per_axis = 0, std::size_t threads = 1);

/// Entropy of T x S under the max metric, on the product of two grids.
EntropyEstimate entropy_product(const SystemMap& a, const SystemMap& b, std::vector<double> eps_list,
                                std::vector<std::size_t> n_range, std::size_t per_axis = 256,
                                std::size_t threads = 1);

}  // namespace pushforward
