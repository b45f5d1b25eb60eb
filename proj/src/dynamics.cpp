#include "pushforward/dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "pushforward/errors.hpp"
#include "pushforward/parallel.hpp"
#include "pushforward/random.hpp"

namespace pushforward {

namespace {

double measure_distance(MetricKind metric, const AtomicMeasure& mu, const AtomicMeasure& nu,
                        const WeakStarBasis* basis, double p = 1.0) {
    switch (metric) {
        case MetricKind::wasserstein: return wasserstein(mu, nu, p).value;
        case MetricKind::prokhorov: return prokhorov(mu, nu);
        case MetricKind::weak_star: return weak_star(mu, nu, *basis).value;
    }
    return 0.0;
}

double l1_residual(const PushForwardMatrix& m, const std::vector<double>& q) {
    const auto mq = m.multiply(q);
    double r = 0.0;
    for (std::size_t i = 0; i < q.size(); ++i) r += std::fabs(mq[i] - q[i]);
    return r;
}

}  // namespace

OrbitRecord iterate(const SystemMap& system, const AtomicMeasure& mu0, std::size_t n,
                    std::size_t snapshot_every) {
    if (snapshot_every == 0) throw ParameterError("snapshot_every must be >= 1");
    OrbitRecord rec{mu0, {}, mu0.escaped_mass()};
    rec.steps.push_back({0, mu0});
    AtomicMeasure cur = mu0;
    for (std::size_t k = 1; k <= n; ++k) {
        cur = push_forward(system, cur);
        if (k % snapshot_every == 0 || k == n) rec.steps.push_back({k, cur});
    }
    rec.escaped_mass = cur.escaped_mass();
    return rec;
}

InvariantVector invariant_measure_finite(const PushForwardMatrix& m, std::size_t max_iterations,
                                         double tolerance) {
    const std::size_t n = m.n();
    if (n == 0) throw ParameterError("empty matrix");
    std::vector<double> q(n, 1.0 / static_cast<double>(n));
    std::size_t iterations = 0;

    // After n steps every surviving unit of mass sits on a periodic index.
    for (std::size_t k = 0; k < n && iterations < max_iterations; ++k, ++iterations) q = m.multiply(q);
    double mass = 0.0;
    for (double v : q) mass += v;
    if (!(mass > 0.0)) {
        throw ConvergenceFailure("all mass escaped after " + std::to_string(iterations) +
                                 " steps: no invariant probability vector");
    }
    for (double& v : q) v /= mass;

    // On periodic indices phi permutes entries without arithmetic, so the
    // iterates return exactly to the snapshot after one common period.
    const std::vector<double> snapshot = q;
    std::vector<double> sum(q);
    std::size_t terms = 1;
    auto finish = [&](std::vector<double> avg) {
        double total = 0.0;
        for (double v : avg) total += v;
        for (double& v : avg) v /= total;
        InvariantVector out{std::move(avg), 0.0, iterations};
        out.residual = l1_residual(m, out.weights);
        return out;
    };
    while (iterations < max_iterations) {
        q = m.multiply(q);
        ++iterations;
        if (q == snapshot) return finish(sum);
        for (std::size_t i = 0; i < n; ++i) sum[i] += q[i];
        ++terms;
        if (terms % 1024 == 0) {
            auto candidate = finish(sum);
            if (candidate.residual <= tolerance) return candidate;
        }
    }
    auto candidate = finish(sum);
    if (candidate.residual <= tolerance) return candidate;
    throw ConvergenceFailure("Cesaro average residual " + std::to_string(candidate.residual) + " after " +
                             std::to_string(iterations) + " iterations");
}

AttractorDescriptor AttractorDescriptor::point(const ModelSpace& space, const Point& p) {
    AttractorDescriptor a(AttractorKind::point, space);
    space.validate(p);
    a.point_ = space.canonical(p);
    return a;
}

AttractorDescriptor AttractorDescriptor::square_lambda() {
    return AttractorDescriptor(AttractorKind::square_lambda, ModelSpace::square());
}

AttractorDescriptor AttractorDescriptor::solenoid_level(double lambda, std::size_t level) {
    if (!(lambda > 0.0 && lambda < 0.5)) throw ParameterError("solenoid lambda must lie in (0, 1/2)");
    if (level > 20) throw ParameterError("solenoid level must be <= 20");
    AttractorDescriptor a(AttractorKind::solenoid_level, ModelSpace::solid_torus());
    a.lambda_ = lambda;
    a.level_ = level;
    return a;
}

Point AttractorDescriptor::project(const Point& x) const {
    space_.validate(x);
    switch (kind_) {
        case AttractorKind::point: return point_;
        case AttractorKind::square_lambda:
            return (1.0 - x[0] <= x[1]) ? Point(1.0, x[1]) : Point(x[0], 0.0);
        case AttractorKind::solenoid_level: {
            // Slice phi of F^k(torus): disks of radius lambda^k centred at the
            // images of (psi, 0, 0) for the 2^k preimages psi = (phi + j)/2^k.
            const std::size_t count = std::size_t{1} << level_;
            const double radius = std::pow(lambda_, static_cast<double>(level_));
            double best = std::numeric_limits<double>::infinity();
            double bx = 0.0, by = 0.0;
            for (std::size_t j = 0; j < count; ++j) {
                double psi = (x[0] + static_cast<double>(j)) / static_cast<double>(count);
                double cx = 0.0, cy = 0.0;
                for (std::size_t i = 0; i < level_; ++i) {
                    const double angle = 2.0 * std::numbers::pi * psi;
                    cx = lambda_ * cx + 0.5 * std::cos(angle);
                    cy = lambda_ * cy + 0.5 * std::sin(angle);
                    psi = wrap_unit(2.0 * psi);
                }
                const double d = std::hypot(x[1] - cx, x[2] - cy);
                if (d < best) {
                    best = d;
                    bx = cx;
                    by = cy;
                }
            }
            if (best <= radius) return x;
            const double s = radius / best;
            return Point(x[0], bx + s * (x[1] - bx), by + s * (x[2] - by));
        }
    }
    return x;
}

bool AttractorDescriptor::contains(const Point& x, double tolerance) const {
    return space_.distance(x, project(x)) <= tolerance;
}

AttractorDistance attractor_distance(const AtomicMeasure& mu, const AttractorDescriptor& attractor) {
    if (!(mu.space() == attractor.space())) {
        throw SpaceMismatch("measure on " + mu.space().name() + ", attractor in " + attractor.space().name());
    }
    AttractorDistance r;
    for (const auto& a : mu.atoms()) {
        const double d = mu.space().distance(a.point, attractor.project(a.point));
        r.sup_distance = std::max(r.sup_distance, d);
        r.w1_projected += a.weight * d;
    }
    return r;
}

ProbeReport lipschitz_probe(const SystemMap& system, std::size_t trials, const ProbeOptions& options) {
    if (trials == 0) throw ParameterError("trials must be >= 1");
    if (options.steps == 0) throw ParameterError("probe steps must be >= 1");
    const ModelSpace& space = system.space();
    std::optional<WeakStarBasis> basis;
    if (options.metric == MetricKind::weak_star) basis.emplace(space, options.weak_star_terms);

    struct Trial {
        double ratio = std::numeric_limits<double>::quiet_NaN();
        std::size_t step = 0;
        std::optional<AtomicMeasure> mu, nu;
    };
    std::vector<Trial> results(trials);
    parallel_for(trials, options.threads, [&](std::size_t t) {
        Rng rng(derive_seed(options.seed, t));
        AtomicMeasure mu = random_measure(space, rng, options.max_atoms);
        AtomicMeasure nu = random_measure(space, rng, options.max_atoms);
        const WeakStarBasis* b = basis ? &*basis : nullptr;
        const double d0 = measure_distance(options.metric, mu, nu, b, options.p);
        if (!(d0 > 1e-15)) return;
        Trial out;
        AtomicMeasure a = mu, c = nu;
        double best = -1.0;
        for (std::size_t k = 1; k <= options.steps; ++k) {
            a = push_forward(system, a);
            c = push_forward(system, c);
            if (a.escaped_mass() > 0.0 || c.escaped_mass() > 0.0) break;
            const double ratio = measure_distance(options.metric, a, c, b, options.p) / d0;
            if (ratio > best) {
                best = ratio;
                out.step = k;
            }
        }
        if (best < 0.0) return;
        out.ratio = best;
        out.mu = std::move(mu);
        out.nu = std::move(nu);
        results[t] = std::move(out);
    });

    ProbeReport report;
    report.trials = trials;
    report.declared = system.lipschitz();
    bool have = false;
    for (auto& r : results) {
        report.ratios.push_back(r.ratio);
        if (std::isnan(r.ratio)) {
            ++report.skipped;
            continue;
        }
        if (!have || r.ratio > report.max_ratio) {
            have = true;
            report.max_ratio = r.ratio;
            report.argmax_step = r.step;
            report.argmax_mu = std::move(r.mu);
            report.argmax_nu = std::move(r.nu);
        }
    }
    return report;
}

std::vector<Point> omega_limit_sample(const SystemMap& system, const Point& x, std::size_t burn,
                                      std::size_t horizon, double eps) {
    if (!(horizon > burn)) throw ParameterError("omega sample needs horizon > burn");
    if (!(eps > 0.0)) throw ParameterError("eps must be > 0");
    const ModelSpace& space = system.space();
    space.validate(x);
    std::vector<Point> net;
    Point y = space.canonical(x);
    for (std::size_t k = 0; k <= horizon; ++k) {
        if (k >= burn) {
            const bool far = std::all_of(net.begin(), net.end(),
                                         [&](const Point& q) { return space.distance(q, y) >= eps; });
            if (far) net.push_back(y);
        }
        if (k == horizon) break;
        auto next = system.try_evaluate(y);
        if (!next) break;
        y = *next;
    }
    return net;
}

namespace {

// Quantile matching: atom i of mu (mass interval [W_{i-1}, W_i)) is sent to
// the atom of nu whose mass interval contains the midpoint.
std::vector<Point> quantile_targets(const AtomicMeasure& mu, const AtomicMeasure& nu) {
    std::vector<Point> targets;
    targets.reserve(mu.size());
    double acc = 0.0, nu_acc = 0.0;
    std::size_t j = 0;
    for (const auto& a : mu.atoms()) {
        const double mid = acc + 0.5 * a.weight;
        acc += a.weight;
        while (j + 1 < nu.size() && nu_acc + nu[j].weight <= mid) {
            nu_acc += nu[j].weight;
            ++j;
        }
        targets.push_back(nu[j].point);
    }
    return targets;
}

}  // namespace

WitnessResult mixing_witness(const SystemMap& system, const AtomicMeasure& mu, const AtomicMeasure& nu,
                             double eps, std::size_t horizon, std::size_t weak_star_terms) {
    if (!(eps > 0.0)) throw ParameterError("eps must be > 0");
    if (!(mu.space() == system.space()) || !(nu.space() == system.space())) {
        throw SpaceMismatch("witness measures must live on " + system.space().name());
    }
    const WeakStarBasis basis(system.space(), weak_star_terms);
    const bool expanding = system.kind() == MapKind::circle_doubling;
    const double d = expanding ? static_cast<double>(system.degree()) : 1.0;

    WitnessResult result;
    result.note = expanding ? "" : "perturbation search unsupported for " + system.name() + "; tried mu-bar = mu";
    AtomicMeasure orbit = mu;
    std::vector<Point> targets = expanding ? quantile_targets(mu, nu) : std::vector<Point>{};
    for (std::size_t n = 0; n <= horizon; ++n) {
        if (n > 0) orbit = push_forward(system, orbit);
        if (orbit.escaped_mass() > 0.0) break;
        const double direct = weak_star(orbit, nu, basis).value;
        if (direct <= eps) {
            result.n = n;
            result.perturbed = mu;
            result.distance = direct;
            return result;
        }
        if (!expanding) continue;
        // Preimages of y under x -> d^n x are spaced d^{-n} apart; once that
        // spacing is below eps one lies within eps of every atom. Past 2^40
        // the preimages lose resolution in double precision.
        const double scale = std::pow(d, static_cast<double>(n));
        if (scale > 0x1.0p40) break;
        if (1.0 / scale > 2.0 * eps) continue;
        std::vector<Atom> moved;
        bool ok = true;
        for (std::size_t i = 0; i < mu.size() && ok; ++i) {
            const double x = mu[i].point[0];
            const double y = targets[i][0];
            const double j = std::round(x * scale - y);
            double best = -1.0;
            double best_d = std::numeric_limits<double>::infinity();
            for (double dj : {-1.0, 0.0, 1.0}) {
                const double z = wrap_unit((y + j + dj) / scale);
                const double dz = circle_distance(z, x);
                if (dz < best_d) {
                    best_d = dz;
                    best = z;
                }
            }
            if (best_d > eps) ok = false;
            moved.push_back({Point(best), mu[i].weight});
        }
        if (!ok) continue;
        AtomicMeasure bar(system.space(), std::move(moved));
        AtomicMeasure image = bar;
        for (std::size_t k = 0; k < n; ++k) image = push_forward(system, image);
        const double dist = weak_star(image, nu, basis).value;
        if (dist <= eps) {
            result.n = n;
            result.perturbed = std::move(bar);
            result.distance = dist;
            return result;
        }
    }
    return result;
}

std::optional<std::size_t> return_time(const SystemMap& system, const AtomicMeasure& mu, double eps,
                                       std::size_t horizon, MetricKind metric) {
    if (!(eps > 0.0)) throw ParameterError("eps must be > 0");
    std::optional<WeakStarBasis> basis;
    if (metric == MetricKind::weak_star) basis.emplace(system.space());
    AtomicMeasure cur = mu;
    for (std::size_t n = 1; n <= horizon; ++n) {
        cur = push_forward(system, cur);
        if (cur.escaped_mass() > 0.0) return std::nullopt;
        if (measure_distance(metric, cur, mu, basis ? &*basis : nullptr) < eps) return n;
    }
    return std::nullopt;
}

std::vector<int> de_bruijn(int alphabet, int order) {
    if (alphabet < 2 || order < 1) throw ParameterError("de Bruijn needs alphabet >= 2 and order >= 1");
    if (std::pow(static_cast<double>(alphabet), order) > 1 << 24) throw ParameterError("de Bruijn sequence too long");
    // Lyndon-word concatenation (Fredricksen-Kessler-Maiorana).
    std::vector<int> a(static_cast<std::size_t>(alphabet * order), 0);
    std::vector<int> seq;
    auto db = [&](auto&& self, int t, int p) -> void {
        if (t > order) {
            if (order % p == 0) seq.insert(seq.end(), a.begin() + 1, a.begin() + p + 1);
            return;
        }
        a[t] = a[t - p];
        self(self, t + 1, p);
        for (int j = a[t - p] + 1; j < alphabet; ++j) {
            a[t] = j;
            self(self, t + 1, t);
        }
    };
    db(db, 1, 1);
    return seq;
}

PeriodicApproximation dense_periodic_measure(const SystemMap& system, const AtomicMeasure& target,
                                             const GridPartition& grid) {
    if (system.kind() != MapKind::circle_doubling) {
        throw UnsupportedSpace("dense periodic measures are built for circle_doubling only");
    }
    const int d = system.degree();
    int s = 0;
    while ((1 << s) < d) ++s;
    if ((1 << s) != d) throw ParameterError("dense periodic measure needs the degree to be a power of two");
    if (!(target.space() == system.space()) || !(grid.space() == system.space())) {
        throw SpaceMismatch("target and grid must live on the circle");
    }
    const std::size_t m = grid.boxes_per_axis(0);
    int r = 0;
    while ((std::size_t{1} << r) < m) ++r;
    const int order = std::max(1, (r + s - 1) / s);

    // Every base-d word of length `order` appears once in the cyclic digit
    // string, so the orbit of its periodic point visits every cell.
    const auto digits = de_bruijn(d, order);
    const std::size_t period = digits.size();
    PeriodicApproximation out{AtomicMeasure::dirac(system.space(), Point(0.0)), {}};
    out.orbit.reserve(period);
    const std::size_t depth = static_cast<std::size_t>(std::ceil(64.0 / s)) + 1;
    for (std::size_t j = 0; j < period; ++j) {
        double v = 0.0;
        for (std::size_t t = depth; t-- > 0;) v = (v + digits[(j + t) % period]) / d;
        out.orbit.push_back(Point(wrap_unit(v)));
    }

    std::vector<double> mass(grid.size(), 0.0);
    for (const auto& a : target.atoms()) mass[grid.cell_of(a.point)] += a.weight;
    std::vector<std::int64_t> holder(grid.size(), -1);
    for (std::size_t j = 0; j < period; ++j) {
        auto& h = holder[grid.cell_of(out.orbit[j])];
        if (h < 0) h = static_cast<std::int64_t>(j);
    }
    std::vector<Atom> atoms;
    for (std::size_t c = 0; c < grid.size(); ++c) {
        if (mass[c] == 0.0) continue;
        if (holder[c] < 0) throw Error("periodic orbit misses grid cell " + std::to_string(c));
        atoms.push_back({out.orbit[static_cast<std::size_t>(holder[c])], mass[c]});
    }
    out.measure = AtomicMeasure(system.space(), std::move(atoms), target.escaped_mass());
    return out;
}

}  // namespace pushforward
