#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "pushforward/measures.hpp"
#include "pushforward/metrics.hpp"

namespace pushforward {

struct OrbitStep {
    std::size_t n = 0;
    AtomicMeasure measure;
};

/// Snapshots of Phi^n(mu0).
struct OrbitRecord {
    AtomicMeasure initial;
    std::vector<OrbitStep> steps;
    double escaped_mass = 0.0;
};

/// Repeated push-forward; snapshots at n = 0, every `snapshot_every` steps and
/// at the final step.
OrbitRecord iterate(const SystemMap& system, const AtomicMeasure& mu0, std::size_t n,
                    std::size_t snapshot_every = 1);

struct InvariantVector {
    std::vector<double> weights;
    double residual = 0.0;  ///< || phi q - q ||_1
    std::size_t iterations = 0;
};

/// Invariant probability vector of a finite push-forward matrix.
///
/// Power iteration from the uniform vector, then a Cesaro average over one
/// full period of the iterates: after n steps the mass sits on periodic
/// indices and the iterates cycle exactly, so the average is invariant.
/// Throws ConvergenceFailure when all mass escapes (partial maps) or the
/// residual stays above `tolerance` after `max_iterations`.
InvariantVector invariant_measure_finite(const PushForwardMatrix& m, std::size_t max_iterations = 100000,
                                         double tolerance = 1e-10);

enum class AttractorKind { point, square_lambda, solenoid_level };

/// An attractor with a projection onto it (or onto its approximant).
class AttractorDescriptor {
public:
    static AttractorDescriptor point(const ModelSpace& space, const Point& p);
    /// Lambda = {x = 1} U {y = 0} in the unit square.
    static AttractorDescriptor square_lambda();
    /// F^k of the solid torus for the solenoid map with parameter lambda: each
    /// slice phi = c is 2^k disks of radius lambda^k.
    static AttractorDescriptor solenoid_level(double lambda, std::size_t level = 8);

    AttractorKind kind() const noexcept { return kind_; }
    const ModelSpace& space() const noexcept { return space_; }
    /// A nearest point of the attractor set (nearest within the same phi
    /// slice for the solenoid approximant).
    Point project(const Point& x) const;
    bool contains(const Point& x, double tolerance = kTolerance) const;

private:
    AttractorDescriptor(AttractorKind kind, const ModelSpace& space) : kind_(kind), space_(space) {}

    AttractorKind kind_;
    ModelSpace space_;
    Point point_;
    double lambda_ = 0.0;
    std::size_t level_ = 0;
};

struct AttractorDistance {
    double sup_distance = 0.0;  ///< max_i d(x_i, proj(x_i))
    double w1_projected = 0.0;  ///< sum_i w_i d(x_i, proj(x_i)), the cost of the projection coupling
};

AttractorDistance attractor_distance(const AtomicMeasure& mu, const AttractorDescriptor& attractor);

struct ProbeReport {
    double max_ratio = 0.0;
    std::optional<AtomicMeasure> argmax_mu;
    std::optional<AtomicMeasure> argmax_nu;
    std::size_t argmax_step = 0;
    std::optional<double> declared;
    std::size_t trials = 0;
    std::size_t skipped = 0;
    std::vector<double> ratios;  ///< per-trial max ratio (NaN for skipped pairs)
};

struct ProbeOptions {
    MetricKind metric = MetricKind::wasserstein;
    double p = 1.0;             ///< Wasserstein order
    std::size_t steps = 1;      ///< ratios d(Phi^k mu, Phi^k nu)/d(mu,nu) for k = 1..steps
    std::size_t max_atoms = 20;
    std::uint64_t seed = 0;
    std::size_t threads = 1;
    std::size_t weak_star_terms = 20;
};

/// Max ratio of distances after and before applying Phi^k over random pairs.
ProbeReport lipschitz_probe(const SystemMap& system, std::size_t trials, const ProbeOptions& options);

/// An eps-net (greedy, in visiting order) of {T^k x : burn <= k <= horizon}.
std::vector<Point> omega_limit_sample(const SystemMap& system, const Point& x, std::size_t burn,
                                      std::size_t horizon, double eps);

struct WitnessResult {
    std::optional<std::size_t> n;
    std::optional<AtomicMeasure> perturbed;  ///< the measure mu-bar found
    double distance = 0.0;                   ///< weak-* distance of Phi^n(mu-bar) to nu
    std::string note;
};

/// Searches n <= horizon and mu-bar (atoms of mu moved by at most eps, same
/// weights) with weak-* d(Phi^n mu-bar, nu) <= eps. Perturbations are only
/// searched for circle_doubling; other systems try mu-bar = mu. A miss is not
/// a disproof of mixing.
WitnessResult mixing_witness(const SystemMap& system, const AtomicMeasure& mu, const AtomicMeasure& nu,
                             double eps, std::size_t horizon, std::size_t weak_star_terms = 20);

/// First n in [1, horizon] with d(Phi^n mu, mu) < eps.
std::optional<std::size_t> return_time(const SystemMap& system, const AtomicMeasure& mu, double eps,
                                       std::size_t horizon, MetricKind metric = MetricKind::prokhorov);

struct PeriodicApproximation {
    AtomicMeasure measure;     ///< sum_i target(P_i) delta_{q_i}, q_i on the orbit
    std::vector<Point> orbit;  ///< the periodic orbit, in dynamical order
};

/// For x -> d x mod 1 with d a power of two: a single periodic orbit meeting
/// every cell of a dyadic grid (built from a de Bruijn sequence) and the
/// measure placing each cell's target mass on the orbit point in that cell.
PeriodicApproximation dense_periodic_measure(const SystemMap& system, const AtomicMeasure& target,
                                             const GridPartition& grid);

/// Binary de Bruijn-style sequence over `alphabet` symbols containing every
/// word of length `order` exactly once cyclically.
std::vector<int> de_bruijn(int alphabet, int order);

}  // namespace pushforward
