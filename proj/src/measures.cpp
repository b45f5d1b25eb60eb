#include "pushforward/measures.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "pushforward/errors.hpp"

namespace pushforward {

namespace {

// Signed offset b - a on a periodic unit axis, in [-1/2, 1/2).
double periodic_offset(double a, double b) {
    double d = b - a;
    d -= std::round(d);
    return d;
}

Point weighted_mean(const ModelSpace& space, const Atom& a, const Atom& b) {
    const double t = b.weight / (a.weight + b.weight);
    Point p = a.point;
    for (std::size_t k = 0; k < space.dim(); ++k) {
        if (space.periodic_axis(k)) {
            p[k] = wrap_unit(a.point[k] + t * periodic_offset(a.point[k], b.point[k]));
        } else if (!space.is_finite()) {
            p[k] = a.point[k] + t * (b.point[k] - a.point[k]);
        }
    }
    return p;
}

void absorb(const ModelSpace& space, Atom& into, const Atom& other) {
    into.point = weighted_mean(space, into, other);
    into.weight += other.weight;
}

// Clusters atoms whose points lie within kTolerance. Input must be sorted by
// point; within a cluster weights accumulate in input order.
std::vector<Atom> merge_sorted(const ModelSpace& space, std::vector<Atom> sorted) {
    std::vector<Atom> out;
    out.reserve(sorted.size());
    for (auto& atom : sorted) {
        bool merged = false;
        for (std::size_t c = out.size(); c-- > 0;) {
            if (out[c].point[0] < atom.point[0] - 2 * kTolerance) break;
            if (space.distance(out[c].point, atom.point) <= kTolerance) {
                absorb(space, out[c], atom);
                merged = true;
                break;
            }
        }
        if (!merged) out.push_back(atom);
    }
    if (space.periodic_axis(0) && out.size() > 1) {
        // Clusters straddling phi = 0 ~ 1.
        for (std::size_t hi = out.size(); hi-- > 1;) {
            if (out[hi].point[0] < 1.0 - 2 * kTolerance) break;
            for (std::size_t lo = 0; lo < hi && out[lo].point[0] <= 2 * kTolerance; ++lo) {
                if (out[lo].weight > 0.0 && space.distance(out[lo].point, out[hi].point) <= kTolerance) {
                    absorb(space, out[lo], out[hi]);
                    out[hi].weight = 0.0;
                    break;
                }
            }
        }
        std::erase_if(out, [](const Atom& a) { return a.weight == 0.0; });
        std::stable_sort(out.begin(), out.end(),
                         [](const Atom& a, const Atom& b) { return a.point < b.point; });
    }
    return out;
}

}  // namespace

AtomicMeasure::AtomicMeasure(const ModelSpace& space, std::vector<Atom> atoms, double escaped_mass)
    : space_(space), escaped_(escaped_mass) {
    if (!(escaped_mass >= 0.0) || escaped_mass > 1.0 + kTolerance) {
        throw ParameterError("escaped mass must lie in [0, 1]");
    }
    for (auto& a : atoms) {
        if (!std::isfinite(a.weight) || a.weight < 0.0) {
            throw ParameterError("atom weights must be finite and nonnegative, got " +
                                 std::to_string(a.weight));
        }
        a.point = space.canonical(a.point);
        space.validate(a.point);
    }
    std::erase_if(atoms, [](const Atom& a) { return a.weight == 0.0; });
    std::stable_sort(atoms.begin(), atoms.end(),
                     [](const Atom& a, const Atom& b) { return a.point < b.point; });
    atoms_ = merge_sorted(space, std::move(atoms));
    const double total = total_weight() + escaped_;
    if (std::fabs(total - 1.0) > kTolerance) {
        throw ParameterError("atom weights sum to " + std::to_string(total_weight()) +
                             " (plus escaped " + std::to_string(escaped_) + "), expected 1");
    }
}

AtomicMeasure AtomicMeasure::dirac(const ModelSpace& space, const Point& x) {
    return AtomicMeasure(space, {Atom{x, 1.0}});
}

AtomicMeasure AtomicMeasure::from_simplex(const ModelSpace& space, std::span<const double> weights) {
    if (!space.is_finite()) throw UnsupportedSpace("from_simplex needs a finite space");
    if (weights.size() != space.size()) {
        throw DimensionError("simplex vector has length " + std::to_string(weights.size()) +
                             ", space has " + std::to_string(space.size()) + " points");
    }
    std::vector<Atom> atoms;
    for (std::size_t i = 0; i < weights.size(); ++i) atoms.push_back({Point::index(i), weights[i]});
    return AtomicMeasure(space, std::move(atoms));
}

double AtomicMeasure::total_weight() const noexcept {
    double s = 0.0;
    for (const auto& a : atoms_) s += a.weight;
    return s;
}

std::vector<double> AtomicMeasure::to_simplex() const {
    if (!space_.is_finite()) throw UnsupportedSpace("to_simplex needs a finite space");
    std::vector<double> w(space_.size(), 0.0);
    for (const auto& a : atoms_) w[a.point.as_index()] = a.weight;
    return w;
}

AtomicMeasure push_forward(const SystemMap& system, const AtomicMeasure& mu) {
    if (!(mu.space() == system.space())) {
        throw SpaceMismatch("measure on " + mu.space().name() + " pushed by a map on " +
                            system.space().name());
    }
    std::vector<Atom> images;
    images.reserve(mu.size());
    double escaped = mu.escaped_mass();
    for (const auto& a : mu.atoms()) {
        if (auto y = system.try_evaluate(a.point)) {
            images.push_back({*y, a.weight});
        } else {
            escaped += a.weight;
        }
    }
    return AtomicMeasure(mu.space(), std::move(images), std::min(escaped, 1.0));
}

// ---------------------------------------------------------------------------

PushForwardMatrix::PushForwardMatrix(std::vector<std::int64_t> images)
    : n_(images.size()), t_(n_ * n_, 0), phi_(n_ * n_, 0) {
    for (std::size_t i = 0; i < n_; ++i) {
        const auto j = images[i];
        if (j < 0) {
            total_ = false;
            continue;
        }
        if (static_cast<std::size_t>(j) >= n_) throw ParameterError("image index out of range");
        t_[i * n_ + static_cast<std::size_t>(j)] = 1;
        phi_[static_cast<std::size_t>(j) * n_ + i] = 1;
    }
}

std::vector<std::vector<int>> PushForwardMatrix::t_rows() const {
    std::vector<std::vector<int>> rows(n_, std::vector<int>(n_));
    for (std::size_t i = 0; i < n_; ++i)
        for (std::size_t j = 0; j < n_; ++j) rows[i][j] = t(i, j);
    return rows;
}

std::vector<std::vector<int>> PushForwardMatrix::phi_rows() const {
    std::vector<std::vector<int>> rows(n_, std::vector<int>(n_));
    for (std::size_t i = 0; i < n_; ++i)
        for (std::size_t j = 0; j < n_; ++j) rows[i][j] = phi(i, j);
    return rows;
}

std::vector<double> PushForwardMatrix::multiply(std::span<const double> p) const {
    if (p.size() != n_) {
        throw DimensionError("vector of length " + std::to_string(p.size()) + " applied to a " +
                             std::to_string(n_) + "x" + std::to_string(n_) + " matrix");
    }
    std::vector<double> q(n_, 0.0);
    for (std::size_t i = 0; i < n_; ++i) {
        for (std::size_t j = 0; j < n_; ++j) {
            if (phi_[i * n_ + j]) q[i] += p[j];
        }
    }
    return q;
}

PushForwardMatrix matrix_of(const SystemMap& system) {
    if (!system.space().is_finite()) {
        throw UnsupportedSpace("matrix_of needs a finite space, got " + system.space().name());
    }
    return PushForwardMatrix(system.table());
}

std::vector<double> apply_matrix(const PushForwardMatrix& m, std::span<const double> p) {
    if (p.size() != m.n()) {
        throw DimensionError("simplex vector has length " + std::to_string(p.size()) +
                             ", matrix has order " + std::to_string(m.n()));
    }
    double sum = 0.0;
    for (double v : p) {
        if (!(v >= 0.0)) throw ParameterError("simplex vector has a negative entry");
        sum += v;
    }
    if (std::fabs(sum - 1.0) > kTolerance) throw ParameterError("simplex vector does not sum to 1");
    return m.multiply(p);
}

// ---------------------------------------------------------------------------

PiecewiseLinear::PiecewiseLinear(std::vector<double> knots, std::vector<double> values, bool periodic)
    : knots_(std::move(knots)), values_(std::move(values)), periodic_(periodic) {
    if (knots_.size() < 2 || knots_.size() != values_.size()) {
        throw ParameterError("piecewise-linear function needs >= 2 knots with one value each");
    }
    for (std::size_t k = 0; k + 1 < knots_.size(); ++k) {
        if (!(knots_[k] < knots_[k + 1])) throw ParameterError("knots must be strictly increasing");
    }
    for (double v : values_) {
        if (!(v >= 0.0 && v <= 1.0)) throw ParameterError("test function values must lie in [0, 1]");
    }
    if (periodic_) {
        if (knots_.front() != 0.0 || knots_.back() != 1.0 ||
            std::fabs(values_.front() - values_.back()) > kTolerance) {
            throw ParameterError("periodic function needs knots spanning [0,1] with equal end values");
        }
    }
}

PiecewiseLinear PiecewiseLinear::constant(double value, double lo, double hi, bool periodic) {
    return PiecewiseLinear({lo, hi}, {value, value}, periodic);
}

PiecewiseLinear PiecewiseLinear::hat(double center, double width, double lo, double hi, bool periodic) {
    if (!(width > 0.0)) throw ParameterError("hat width must be > 0");
    auto dist = [&](double x) {
        return periodic ? circle_distance(x, center) : std::fabs(x - center);
    };
    auto value = [&](double x) { return std::max(0.0, 1.0 - dist(x) / width); };
    std::vector<double> cuts{lo, hi};
    std::vector<double> raw{center, center - width, center + width};
    if (periodic) {
        raw.push_back(center + 0.5);
        raw.push_back(center - 0.5);
    }
    for (double c : raw) {
        if (periodic) c = wrap_unit(c);
        if (c > lo && c < hi) cuts.push_back(c);
    }
    std::sort(cuts.begin(), cuts.end());
    cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());
    std::vector<double> values;
    values.reserve(cuts.size());
    for (double c : cuts) values.push_back(value(c));
    if (periodic) values.back() = values.front();
    return PiecewiseLinear(std::move(cuts), std::move(values), periodic);
}

double PiecewiseLinear::operator()(double x) const {
    if (periodic_) x = wrap_unit(x);
    if (x <= knots_.front()) return values_.front();
    if (x >= knots_.back()) return values_.back();
    auto it = std::upper_bound(knots_.begin(), knots_.end(), x);
    const std::size_t k = static_cast<std::size_t>(it - knots_.begin()) - 1;
    const double t = (x - knots_[k]) / (knots_[k + 1] - knots_[k]);
    return values_[k] + t * (values_[k + 1] - values_[k]);
}

TestFunction TestFunction::constant(const ModelSpace& space, double value) {
    if (space.is_finite()) return table(space, std::vector<double>(space.size(), value));
    std::vector<PiecewiseLinear> factors;
    for (std::size_t k = 0; k < space.dim(); ++k) {
        auto [lo, hi] = space.axis_range(k);
        factors.push_back(PiecewiseLinear::constant(k == 0 ? value : 1.0, lo, hi, space.periodic_axis(k)));
    }
    return product(space, std::move(factors));
}

TestFunction TestFunction::table(const ModelSpace& space, std::vector<double> values) {
    if (!space.is_finite()) throw UnsupportedSpace("value tables need a finite space");
    if (values.size() != space.size()) throw DimensionError("value table length does not match space");
    for (double v : values) {
        if (!(v >= 0.0 && v <= 1.0)) throw ParameterError("test function values must lie in [0, 1]");
    }
    TestFunction f(space);
    f.table_ = std::move(values);
    return f;
}

TestFunction TestFunction::product(const ModelSpace& space, std::vector<PiecewiseLinear> factors) {
    if (space.is_finite()) throw UnsupportedSpace("product test functions need a continuum space");
    if (factors.size() != space.dim()) throw DimensionError("need one factor per axis");
    for (std::size_t k = 0; k < factors.size(); ++k) {
        auto [lo, hi] = space.axis_range(k);
        if (factors[k].periodic() != space.periodic_axis(k) || factors[k].knots().front() > lo ||
            factors[k].knots().back() < hi) {
            throw ParameterError("factor " + std::to_string(k) + " does not cover its axis");
        }
    }
    TestFunction f(space);
    f.factors_ = std::move(factors);
    return f;
}

double TestFunction::operator()(const Point& x) const {
    if (!table_.empty()) return table_.at(x.as_index());
    double v = 1.0;
    for (std::size_t k = 0; k < factors_.size(); ++k) v *= factors_[k](x[k]);
    return v;
}

double integrate(const TestFunction& f, const AtomicMeasure& mu) {
    if (!(f.space() == mu.space())) throw SpaceMismatch("test function and measure on different spaces");
    double s = 0.0;
    for (const auto& a : mu.atoms()) s += a.weight * f(a.point);
    return s;
}

// ---------------------------------------------------------------------------

AtomicMeasure quantize(const AtomicMeasure& mu, const GridPartition& grid) {
    if (!(mu.space() == grid.space())) throw SpaceMismatch("grid and measure on different spaces");
    std::vector<double> mass(grid.size(), 0.0);
    for (const auto& a : mu.atoms()) mass[grid.cell_of(a.point)] += a.weight;
    std::vector<Atom> atoms;
    for (std::size_t c = 0; c < mass.size(); ++c) {
        if (mass[c] > 0.0) atoms.push_back({grid.representative(c), mass[c]});
    }
    return AtomicMeasure(mu.space(), std::move(atoms), mu.escaped_mass());
}

AtomicMeasure quantize_uniform(const GridPartition& grid) {
    std::vector<Atom> atoms;
    atoms.reserve(grid.size());
    for (std::size_t c = 0; c < grid.size(); ++c) atoms.push_back({grid.representative(c), grid.uniform_mass(c)});
    return AtomicMeasure(grid.space(), std::move(atoms));
}

std::vector<double> dyadic_weights(std::size_t n) {
    if (n == 0) throw ParameterError("dyadic embedding needs at least one point");
    if (n > 52) throw ParameterError("dyadic embedding supports at most 52 points");
    const double denom = std::ldexp(1.0, static_cast<int>(n)) - 1.0;
    std::vector<double> w(n);
    for (std::size_t i = 0; i < n; ++i) w[i] = std::ldexp(1.0, static_cast<int>(i)) / denom;
    return w;
}

AtomicMeasure dyadic_embed(const ModelSpace& space, std::span<const Point> points) {
    const auto w = dyadic_weights(points.size());
    std::vector<Atom> atoms;
    atoms.reserve(points.size());
    for (std::size_t i = 0; i < points.size(); ++i) atoms.push_back({points[i], w[i]});
    return AtomicMeasure(space, std::move(atoms));
}

AtomicMeasure periodic_orbit_measure(const SystemMap& system, const Point& x, std::size_t period) {
    if (period == 0) throw ParameterError("period must be >= 1");
    std::vector<Atom> atoms;
    atoms.reserve(period);
    const double w = 1.0 / static_cast<double>(period);
    Point y = x;
    for (std::size_t k = 0; k < period; ++k) {
        atoms.push_back({y, w});
        auto next = system.try_evaluate(y);
        if (!next) throw NotPeriodic("orbit of " + to_string(x) + " leaves the window");
        y = *next;
    }
    const double gap = system.space().distance(y, x);
    if (gap > kPeriodTolerance) {
        throw NotPeriodic("T^" + std::to_string(period) + " of " + to_string(x) + " is at distance " +
                          std::to_string(gap) + " from the start");
    }
    // k copies of 1/k may miss 1 by an ulp or two; the constructor tolerates that.
    return AtomicMeasure(system.space(), std::move(atoms));
}

}  // namespace pushforward
