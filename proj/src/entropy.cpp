#include "pushforward/entropy.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numbers>
#include <unordered_map>

#include "pushforward/errors.hpp"
#include "pushforward/parallel.hpp"
#include "pushforward/transport.hpp"

namespace pushforward {

namespace {

constexpr std::size_t kMaxFeatureDims = 4;

void point_features(const ModelSpace& space, const Point& p, double eps, std::vector<double>& values,
                    std::vector<bool>& periodic) {
    switch (space.kind()) {
        case SpaceKind::finite:
            // Distinct points sit at distance 1, so only eps <= 1 separates them.
            if (eps <= 1.0) {
                values.push_back(p[0]);
                periodic.push_back(false);
            }
            return;
        case SpaceKind::circle:
            values.push_back(p[0]);
            periodic.push_back(true);
            return;
        case SpaceKind::interval:
            values.push_back(p[0]);
            periodic.push_back(false);
            return;
        case SpaceKind::square:
            values.insert(values.end(), {p[0], p[1]});
            periodic.insert(periodic.end(), {false, false});
            return;
        case SpaceKind::solid_torus:
            values.insert(values.end(), {p[0], p[1], p[2]});
            periodic.insert(periodic.end(), {true, false, false});
            return;
    }
}

// Integrals of 1-Lipschitz functions: |int g dmu - int g dnu| <= W_1(mu, nu).
void measure_features(const ModelSpace& space, std::span<const Atom> atoms, double scale,
                      std::vector<double>& values, std::vector<bool>& periodic) {
    std::array<double, 4> acc{};
    std::size_t count = 0;
    for (const auto& a : atoms) {
        const Point& p = a.point;
        switch (space.kind()) {
            case SpaceKind::circle:
                acc[0] += a.weight * circle_distance(p[0], 0.0);
                acc[1] += a.weight * circle_distance(p[0], 0.25);
                count = 2;
                break;
            case SpaceKind::interval:
                acc[0] += a.weight * p[0];
                count = 1;
                break;
            case SpaceKind::square:
                acc[0] += a.weight * p[0];
                acc[1] += a.weight * p[1];
                count = 2;
                break;
            case SpaceKind::solid_torus:
                acc[0] += a.weight * circle_distance(p[0], 0.0);
                acc[1] += a.weight * circle_distance(p[0], 0.25);
                acc[2] += a.weight * p[1];
                acc[3] += a.weight * p[2];
                count = 4;
                break;
            case SpaceKind::finite:
                break;
        }
    }
    for (std::size_t k = 0; k < count; ++k) {
        values.push_back(acc[k] * scale);
        periodic.push_back(false);
    }
}

std::uint64_t hash_key(const std::vector<std::int64_t>& cell) {
    std::uint64_t h = 1469598103934665603ULL;
    for (auto c : cell) {
        h ^= static_cast<std::uint64_t>(c) + 0x9E3779B97F4A7C15ULL + (h << 6) + (h >> 2);
        h *= 1099511628211ULL;
    }
    return h;
}

// Largest distance from a point of the space to the nearest grid point.
double covering_radius(const ModelSpace& space, std::size_t m) {
    switch (space.kind()) {
        case SpaceKind::circle: return 0.5 / static_cast<double>(m);
        case SpaceKind::interval: return 0.5 / static_cast<double>(m - 1);
        case SpaceKind::square: return std::numbers::sqrt2 * 0.5 / static_cast<double>(m - 1);
        case SpaceKind::finite: return 0.0;
        case SpaceKind::solid_torus: break;
    }
    throw UnsupportedSpace("no sample grid for " + space.name());
}

void require_continuum(const SystemMap& system, const char* what) {
    if (system.space().is_finite()) {
        throw UnsupportedSpace(std::string(what) + " needs a continuum space, got " + system.space().name());
    }
}

}  // namespace

BowenContext BowenContext::points(const SystemMap& system, std::vector<Point> sample, std::size_t horizon) {
    if (sample.empty()) throw ParameterError("Bowen sample is empty");
    if (horizon == 0) throw ParameterError("Bowen horizon must be >= 1");
    BowenContext ctx;
    ctx.kind_ = Kind::points;
    ctx.space_a_ = system.space();
    ctx.size_ = sample.size();
    ctx.horizon_ = horizon;
    ctx.traj_a_.reserve(sample.size() * horizon);
    for (const auto& x0 : sample) {
        system.space().validate(x0);
        Point x = system.space().canonical(x0);
        for (std::size_t k = 0; k < horizon; ++k) {
            ctx.traj_a_.push_back(x);
            if (k + 1 < horizon) x = system.evaluate(x);
        }
    }
    if (system.space().is_finite()) {
        std::vector<Point> sorted = sample;
        std::sort(sorted.begin(), sorted.end());
        sorted.erase(std::unique(sorted.begin(), sorted.end()), sorted.end());
        ctx.exhaustive_ = sorted.size() == system.space().size();
    }
    ctx.description_ = std::to_string(sample.size()) + " points of " + system.space().name();
    return ctx;
}

BowenContext BowenContext::product(const SystemMap& a, const SystemMap& b,
                                   std::vector<std::pair<Point, Point>> sample, std::size_t horizon) {
    if (sample.empty()) throw ParameterError("Bowen sample is empty");
    if (horizon == 0) throw ParameterError("Bowen horizon must be >= 1");
    BowenContext ctx;
    ctx.kind_ = Kind::product;
    ctx.space_a_ = a.space();
    ctx.space_b_ = b.space();
    ctx.size_ = sample.size();
    ctx.horizon_ = horizon;
    ctx.traj_a_.reserve(sample.size() * horizon);
    ctx.traj_b_.reserve(sample.size() * horizon);
    for (const auto& [x0, y0] : sample) {
        a.space().validate(x0);
        b.space().validate(y0);
        Point x = a.space().canonical(x0), y = b.space().canonical(y0);
        for (std::size_t k = 0; k < horizon; ++k) {
            ctx.traj_a_.push_back(x);
            ctx.traj_b_.push_back(y);
            if (k + 1 < horizon) {
                x = a.evaluate(x);
                y = b.evaluate(y);
            }
        }
    }
    ctx.description_ = std::to_string(sample.size()) + " pairs of " + a.space().name() + " x " + b.space().name();
    return ctx;
}

BowenContext BowenContext::measures(const SystemMap& system, std::vector<AtomicMeasure> sample, MetricKind metric,
                                    std::size_t horizon) {
    if (sample.empty()) throw ParameterError("Bowen sample is empty");
    if (horizon == 0) throw ParameterError("Bowen horizon must be >= 1");
    if (metric == MetricKind::weak_star) throw ParameterError("measure Bowen contexts use wasserstein or prokhorov");
    BowenContext ctx;
    ctx.kind_ = Kind::measures;
    ctx.space_a_ = system.space();
    ctx.metric_ = metric;
    ctx.size_ = sample.size();
    ctx.horizon_ = horizon;
    ctx.prokhorov_scale_ = metric == MetricKind::prokhorov ? 1.0 / (1.0 + system.space().diameter()) : 1.0;
    ctx.offsets_.reserve(sample.size() * horizon + 1);
    ctx.offsets_.push_back(0);
    for (auto& mu0 : sample) {
        if (!(mu0.space() == system.space())) throw SpaceMismatch("sample measure on another space");
        if (mu0.escaped_mass() > 0.0) throw ParameterError("sample measures must be probability measures");
        AtomicMeasure mu = std::move(mu0);
        for (std::size_t k = 0; k < horizon; ++k) {
            double heavy = 0.0;
            for (const auto& a : mu.atoms()) heavy = std::max(heavy, a.weight);
            ctx.min_heaviest_ = std::min(ctx.min_heaviest_, heavy);
            ctx.atoms_.insert(ctx.atoms_.end(), mu.atoms().begin(), mu.atoms().end());
            ctx.offsets_.push_back(static_cast<std::uint32_t>(ctx.atoms_.size()));
            if (k + 1 < horizon) {
                mu = push_forward(system, mu);
                if (mu.escaped_mass() > 0.0) throw ParameterError("mass escaped along a sample orbit");
            }
        }
    }
    ctx.description_ = std::to_string(sample.size()) + " measures on " + system.space().name() + " (" +
                       to_string(metric) + ")";
    return ctx;
}

std::span<const Atom> BowenContext::state_atoms(std::size_t i, std::size_t k) const {
    if (kind_ != Kind::measures) throw ParameterError("state_atoms needs a measure context");
    const std::size_t a = i * horizon_ + k;
    return {atoms_.data() + offsets_[a], offsets_[a + 1] - offsets_[a]};
}

double BowenContext::distance(std::size_t i, std::size_t j, std::size_t k) const {
    const std::size_t a = i * horizon_ + k, b = j * horizon_ + k;
    switch (kind_) {
        case Kind::points: return space_a_.distance(traj_a_[a], traj_a_[b]);
        case Kind::product:
            return std::max(space_a_.distance(traj_a_[a], traj_a_[b]), space_b_.distance(traj_b_[a], traj_b_[b]));
        case Kind::measures: {
            const auto mu = state_atoms(i, k), nu = state_atoms(j, k);
            if (metric_ == MetricKind::prokhorov) return prokhorov(space_a_, mu, nu);
            if (space_a_.kind() == SpaceKind::circle || space_a_.kind() == SpaceKind::interval) {
                return wasserstein1_line(mu, nu, space_a_.kind() == SpaceKind::circle);
            }
            std::vector<double> wa, wb, cost;
            for (const auto& x : mu) wa.push_back(x.weight);
            for (const auto& y : nu) wb.push_back(y.weight);
            for (const auto& x : mu)
                for (const auto& y : nu) cost.push_back(space_a_.distance(x.point, y.point));
            return std::max(0.0, solve_transport(wa, wb, cost).cost);
        }
    }
    return 0.0;
}

double BowenContext::bowen_distance(std::size_t i, std::size_t j, std::size_t n) const {
    if (n == 0 || n > horizon_) throw ParameterError("Bowen n must lie in [1, horizon]");
    double d = 0.0;
    for (std::size_t k = 0; k < n; ++k) d = std::max(d, distance(i, j, k));
    return d;
}

bool BowenContext::far_apart(std::size_t i, std::size_t j, std::size_t k, double eps) const {
    if (kind_ == Kind::measures && metric_ == MetricKind::prokhorov) {
        return !prokhorov_less_than(space_a_, state_atoms(i, k), state_atoms(j, k), eps);
    }
    return distance(i, j, k) >= eps;
}

bool BowenContext::separated(std::size_t i, std::size_t j, std::size_t n, double eps) const {
    // Late times first (expanding maps separate there), then the start.
    if (far_apart(i, j, n - 1, eps)) return true;
    if (n == 1) return false;
    if (far_apart(i, j, 0, eps)) return true;
    for (std::size_t k = n - 1; k-- > 1;)
        if (far_apart(i, j, k, eps)) return true;
    return false;
}

void BowenContext::features(std::size_t i, std::size_t k, double eps, std::vector<double>& values,
                            std::vector<bool>& periodic) const {
    const std::size_t a = i * horizon_ + k;
    switch (kind_) {
        case Kind::points: point_features(space_a_, traj_a_[a], eps, values, periodic); return;
        case Kind::product:
            point_features(space_a_, traj_a_[a], eps, values, periodic);
            point_features(space_b_, traj_b_[a], eps, values, periodic);
            return;
        case Kind::measures: measure_features(space_a_, state_atoms(i, k), prokhorov_scale_, values, periodic); return;
    }
}

double bowen_distance(const SystemMap& system, const Point& x, const Point& y, std::size_t n) {
    if (n == 0) throw ParameterError("Bowen n must be >= 1");
    return BowenContext::points(system, {x, y}, n).bowen_distance(0, 1, n);
}

double bowen_distance(const SystemMap& system, const AtomicMeasure& mu, const AtomicMeasure& nu, std::size_t n,
                      MetricKind metric) {
    if (n == 0) throw ParameterError("Bowen n must be >= 1");
    return BowenContext::measures(system, {mu, nu}, metric, n).bowen_distance(0, 1, n);
}

namespace {

struct AxisCell {
    std::int64_t cell;
    std::int64_t modulus;  // 0 for a line coordinate
};

// Cells of side >= eps: coordinates within eps fall in the same or adjacent cells.
void bucketize(const std::vector<double>& values, const std::vector<bool>& periodic, std::size_t dims, double eps,
               std::vector<AxisCell>& out) {
    for (std::size_t d = 0; d < dims; ++d) {
        if (periodic[d]) {
            const auto m = std::max<std::int64_t>(1, static_cast<std::int64_t>(std::floor(1.0 / eps)));
            out.push_back({std::min<std::int64_t>(m - 1, static_cast<std::int64_t>(std::floor(values[d] * m))), m});
        } else {
            out.push_back({static_cast<std::int64_t>(std::floor(values[d] / eps)), 0});
        }
    }
}

std::uint64_t cell_key(const std::vector<AxisCell>& cells) {
    std::vector<std::int64_t> raw;
    raw.reserve(cells.size());
    for (const auto& c : cells) raw.push_back(c.cell);
    return hash_key(raw);
}

void neighbour_keys(const std::vector<AxisCell>& cells, std::vector<std::uint64_t>& keys) {
    keys.clear();
    std::vector<std::vector<std::int64_t>> options(cells.size());
    for (std::size_t d = 0; d < cells.size(); ++d) {
        for (std::int64_t delta = -1; delta <= 1; ++delta) {
            std::int64_t c = cells[d].cell + delta;
            if (cells[d].modulus) c = ((c % cells[d].modulus) + cells[d].modulus) % cells[d].modulus;
            if (std::find(options[d].begin(), options[d].end(), c) == options[d].end()) options[d].push_back(c);
        }
    }
    std::vector<std::size_t> pick(cells.size(), 0);
    std::vector<std::int64_t> probe(cells.size());
    for (;;) {
        for (std::size_t d = 0; d < cells.size(); ++d) probe[d] = options[d][pick[d]];
        keys.push_back(hash_key(probe));
        std::size_t d = cells.size();
        while (d-- > 0) {
            if (++pick[d] < options[d].size()) break;
            pick[d] = 0;
        }
        if (d == static_cast<std::size_t>(-1)) break;
    }
}

// How a greedy scan finds the kept states that might be closer than eps:
// `query` lists the bucket keys to inspect (false means inspect everything),
// `insert` the keys a kept state is filed under.
class CandidateIndex {
public:
    CandidateIndex(const BowenContext& ctx, std::size_t n, double eps) : ctx_(ctx), eps_(eps) {
        anchored_ = ctx.kind() == BowenContext::Kind::measures && ctx.metric() == MetricKind::prokhorov;
        // When heaviest atoms outweigh everything else by more than eps, a
        // pair at d_P < eps has its heaviest atoms within eps of each other.
        heavy_pairs_ = anchored_ && 2.0 * ctx.min_heaviest_weight() - 1.0 > eps;
        std::size_t per_time = 0;
        if (anchored_) {
            per_time = anchor_dims();
        } else {
            values_.clear();
            periodic_.clear();
            ctx.features(0, 0, eps, values_, periodic_);
            per_time = values_.size();
        }
        if (per_time == 0) {
            disabled_ = true;
            return;
        }
        // Times n-1, 0, n-2, 1, ... while the key stays within the dimension cap.
        for (std::size_t lo = 0, hi = n; lo < hi && (times_.size() + 1) * per_time <= kMaxFeatureDims;) {
            times_.push_back(times_.size() % 2 == 0 ? --hi : lo++);
        }
        if (times_.empty()) times_.push_back(n - 1);
    }

    bool query(std::size_t i, std::vector<std::uint64_t>& keys) {
        if (disabled_) return false;
        cells_.clear();
        if (anchored_) {
            // d_P < eps forces an atom of the other measure within eps of any
            // atom heavier than eps.
            for (std::size_t k : times_) {
                const Atom& heavy = heaviest(i, k);
                if (!(heavy.weight > eps_)) return false;
                point_cells(heavy.point);
            }
        } else {
            // Lipschitz features of states within eps differ by less than eps.
            values_.clear();
            periodic_.clear();
            for (std::size_t k : times_) ctx_.features(i, k, eps_, values_, periodic_);
            if (values_.empty()) return false;
            bucketize(values_, periodic_, std::min(values_.size(), kMaxFeatureDims), eps_, cells_);
        }
        neighbour_keys(cells_, keys);
        return true;
    }

    void insert(std::size_t i, std::vector<std::uint64_t>& keys) {
        keys.clear();
        if (disabled_) return;
        if (!anchored_) {
            values_.clear();
            periodic_.clear();
            for (std::size_t k : times_) ctx_.features(i, k, eps_, values_, periodic_);
            if (values_.empty()) return;
            cells_.clear();
            bucketize(values_, periodic_, std::min(values_.size(), kMaxFeatureDims), eps_, cells_);
            keys.push_back(cell_key(cells_));
            return;
        }
        if (heavy_pairs_) {
            cells_.clear();
            for (std::size_t k : times_) point_cells(heaviest(i, k).point);
            keys.push_back(cell_key(cells_));
            return;
        }
        // Every combination of atom cells across the indexed times.
        std::vector<std::vector<std::vector<AxisCell>>> per_time;
        for (std::size_t k : times_) {
            auto& options = per_time.emplace_back();
            for (const auto& a : ctx_.state_atoms(i, k)) {
                cells_.clear();
                point_cells(a.point);
                options.push_back(cells_);
            }
        }
        std::vector<std::size_t> pick(per_time.size(), 0);
        for (;;) {
            cells_.clear();
            for (std::size_t t = 0; t < per_time.size(); ++t)
                cells_.insert(cells_.end(), per_time[t][pick[t]].begin(), per_time[t][pick[t]].end());
            const auto key = cell_key(cells_);
            if (std::find(keys.begin(), keys.end(), key) == keys.end()) keys.push_back(key);
            std::size_t t = per_time.size();
            while (t-- > 0) {
                if (++pick[t] < per_time[t].size()) break;
                pick[t] = 0;
            }
            if (t == static_cast<std::size_t>(-1)) break;
        }
    }

private:
    const Atom& heaviest(std::size_t i, std::size_t k) const {
        const auto atoms = ctx_.state_atoms(i, k);
        const Atom* heavy = &atoms[0];
        for (const auto& a : atoms)
            if (a.weight > heavy->weight) heavy = &a;
        return *heavy;
    }

    std::size_t anchor_dims() const {
        switch (ctx_.space().kind()) {
            case SpaceKind::finite: return eps_ <= 1.0 ? 1 : 0;
            case SpaceKind::circle:
            case SpaceKind::interval: return 1;
            case SpaceKind::square: return 2;
            case SpaceKind::solid_torus: return 3;
        }
        return 0;
    }

    void point_cells(const Point& p) {
        values_.clear();
        periodic_.clear();
        point_features(ctx_.space(), p, eps_, values_, periodic_);
        bucketize(values_, periodic_, values_.size(), eps_, cells_);
    }

    const BowenContext& ctx_;
    double eps_;
    std::vector<std::size_t> times_;
    bool anchored_ = false;
    bool heavy_pairs_ = false;
    bool disabled_ = false;
    std::vector<double> values_;
    std::vector<bool> periodic_;
    std::vector<AxisCell> cells_;
};

}  // namespace

std::vector<std::size_t> separated_set(const BowenContext& ctx, std::size_t n, double eps) {
    if (!(eps > 0.0) || !std::isfinite(eps)) throw ParameterError("eps must be > 0");
    if (n == 0 || n > ctx.horizon()) throw ParameterError("n must lie in [1, horizon]");

    CandidateIndex index(ctx, n, eps);
    std::unordered_map<std::uint64_t, std::vector<std::uint32_t>> buckets;
    std::vector<std::size_t> kept;
    std::vector<std::uint64_t> keys;
    std::vector<std::size_t> stamp(ctx.size(), static_cast<std::size_t>(-1));
    for (std::size_t i = 0; i < ctx.size(); ++i) {
        bool accept = true;
        if (index.query(i, keys)) {
            for (auto key : keys) {
                auto it = buckets.find(key);
                if (it == buckets.end()) continue;
                for (std::uint32_t j : it->second) {
                    if (stamp[j] == i) continue;
                    stamp[j] = i;
                    if (!ctx.separated(i, j, n, eps)) {
                        accept = false;
                        break;
                    }
                }
                if (!accept) break;
            }
        } else {
            for (std::size_t j : kept) {
                if (!ctx.separated(i, j, n, eps)) {
                    accept = false;
                    break;
                }
            }
        }
        if (accept) {
            kept.push_back(i);
            index.insert(i, keys);
            for (auto key : keys) buckets[key].push_back(static_cast<std::uint32_t>(i));
        }
    }
    return kept;
}

std::size_t separated_count(const BowenContext& ctx, std::size_t n, double eps) {
    return separated_set(ctx, n, eps).size();
}

EntropyEstimate entropy_estimate(const BowenContext& ctx, std::vector<double> eps_list,
                                 std::vector<std::size_t> n_range, std::size_t threads) {
    if (eps_list.empty()) throw ParameterError("eps_list: need at least one value");
    for (double e : eps_list)
        if (!(e > 0.0) || !std::isfinite(e)) throw ParameterError("eps_list: values must be > 0");
    std::sort(eps_list.begin(), eps_list.end());
    eps_list.erase(std::unique(eps_list.begin(), eps_list.end()), eps_list.end());
    std::sort(n_range.begin(), n_range.end());
    n_range.erase(std::unique(n_range.begin(), n_range.end()), n_range.end());
    if (n_range.size() < 4) throw ParameterError("n_range: need ≥ 4 points");
    if (n_range.front() == 0 || n_range.back() > ctx.horizon()) {
        throw ParameterError("n_range: values must lie in [1, " + std::to_string(ctx.horizon()) + "]");
    }
    if (auto r = ctx.resolution(); r && *r > eps_list.front() / 4.0) {
        throw EstimateInvalid("sample covering radius " + std::to_string(*r) + " is coarser than min(eps)/4 = " +
                              std::to_string(eps_list.front() / 4.0) + "; use a finer sample or larger eps");
    }

    const std::size_t ne = eps_list.size(), nn = n_range.size();
    std::vector<std::size_t> raw(ne * nn);
    parallel_for(ne * nn, threads, [&](std::size_t cell) {
        raw[cell] = separated_count(ctx, n_range[cell % nn], eps_list[cell / nn]);
    });

    EntropyEstimate est;
    est.eps_list = eps_list;
    est.n_values = n_range;
    est.sample_size = ctx.size();
    est.sample = ctx.description();
    est.counts.assign(ne, std::vector<std::size_t>(nn, 0));
    est.saturated.assign(ne, std::vector<bool>(nn, false));
    // A set separated for (n', eps') is separated for n >= n', eps <= eps'.
    for (std::size_t e = ne; e-- > 0;) {
        for (std::size_t t = 0; t < nn; ++t) {
            std::size_t c = raw[e * nn + t];
            if (t > 0) c = std::max(c, est.counts[e][t - 1]);
            if (e + 1 < ne) c = std::max(c, est.counts[e + 1][t]);
            est.counts[e][t] = c;
        }
    }
    const double limit = kSaturationFraction * static_cast<double>(ctx.size());
    est.slopes.assign(ne, std::nullopt);
    est.windows.assign(ne, {});
    est.oscillation.assign(ne, 0.0);
    for (std::size_t e = 0; e < ne; ++e) {
        std::vector<double> xs, ys;
        for (std::size_t t = 0; t < nn; ++t) {
            const bool sat = !ctx.exhaustive() && static_cast<double>(est.counts[e][t]) >= limit;
            est.saturated[e][t] = sat;
            if (sat) continue;
            est.windows[e].push_back(n_range[t]);
            xs.push_back(static_cast<double>(n_range[t]));
            ys.push_back(std::log(static_cast<double>(est.counts[e][t])));
        }
        if (xs.size() < 3) continue;
        const double k = static_cast<double>(xs.size());
        double mx = 0.0, my = 0.0;
        for (std::size_t i = 0; i < xs.size(); ++i) mx += xs[i], my += ys[i];
        mx /= k;
        my /= k;
        double sxy = 0.0, sxx = 0.0;
        for (std::size_t i = 0; i < xs.size(); ++i) {
            sxy += (xs[i] - mx) * (ys[i] - my);
            sxx += (xs[i] - mx) * (xs[i] - mx);
        }
        const double slope = sxy / sxx;
        est.slopes[e] = slope;
        double osc = 0.0;
        for (std::size_t i = 0; i + 1 < xs.size(); ++i)
            osc = std::max(osc, std::fabs((ys[i + 1] - ys[i]) / (xs[i + 1] - xs[i]) - slope));
        est.oscillation[e] = osc;
    }
    for (std::size_t e = 0; e < ne; ++e) {
        if (est.slopes[e]) {
            est.h_estimate = *est.slopes[e];
            est.h_eps = eps_list[e];
            return est;
        }
    }
    throw EstimateInvalid("every eps is saturated (counts >= 0.9 x " + std::to_string(ctx.size()) +
                          " samples in all but < 3 cells); use a finer sample or larger eps");
}

std::vector<Point> grid_sample(const ModelSpace& space, std::size_t per_axis) {
    std::vector<Point> out;
    switch (space.kind()) {
        case SpaceKind::finite:
            for (std::size_t i = 0; i < space.size(); ++i) out.push_back(Point::index(i));
            return out;
        case SpaceKind::circle:
            if (per_axis < 1) throw ParameterError("sample_per_axis must be >= 1");
            for (std::size_t i = 0; i < per_axis; ++i) out.push_back(Point(static_cast<double>(i) / per_axis));
            return out;
        case SpaceKind::interval:
            if (per_axis < 2) throw ParameterError("sample_per_axis must be >= 2 on the interval");
            for (std::size_t i = 0; i < per_axis; ++i) out.push_back(Point(static_cast<double>(i) / (per_axis - 1)));
            return out;
        case SpaceKind::square:
            if (per_axis < 2) throw ParameterError("sample_per_axis must be >= 2 on the square");
            if (per_axis > 4096) throw ParameterError("sample_per_axis too large for the square");
            for (std::size_t i = 0; i < per_axis; ++i)
                for (std::size_t j = 0; j < per_axis; ++j)
                    out.push_back(Point(static_cast<double>(i) / (per_axis - 1), static_cast<double>(j) / (per_axis - 1)));
            return out;
        case SpaceKind::solid_torus: break;
    }
    throw UnsupportedSpace("no sample grid for " + space.name());
}

EntropyEstimate entropy_base(const SystemMap& system, std::vector<double> eps_list, std::vector<std::size_t> n_range,
                             std::size_t per_axis, std::size_t threads) {
    if (n_range.empty()) throw ParameterError("n_range: need ≥ 4 points");
    const std::size_t horizon = *std::max_element(n_range.begin(), n_range.end());
    auto ctx = BowenContext::points(system, grid_sample(system.space(), per_axis), std::max<std::size_t>(1, horizon));
    if (!system.space().is_finite()) {
        ctx.set_resolution(covering_radius(system.space(), per_axis));
        ctx.set_description("grid of " + std::to_string(ctx.size()) + " points on " + system.space().name() +
                            " (" + std::to_string(per_axis) + " per axis)");
    }
    return entropy_estimate(ctx, std::move(eps_list), std::move(n_range), threads);
}

std::size_t default_embed_per_axis(std::size_t n_embed) {
    if (n_embed == 0) throw ParameterError("n_embed must be >= 1");
    std::size_t m = 1;
    auto fits = [&](std::size_t v) {
        double p = 1.0;
        for (std::size_t k = 0; k < n_embed; ++k) p *= static_cast<double>(v);
        return p <= 65536.0;
    };
    while (m < (1u << 14) && fits(m + 1)) ++m;
    if (n_embed >= 2 && m % 2 == 0) --m;
    return m;
}

EntropyEstimate entropy_embedded_Dn(const SystemMap& system, std::size_t n_embed, MetricKind metric,
                                    std::vector<double> eps_list, std::vector<std::size_t> n_range,
                                    std::size_t sample_per_axis, std::size_t threads) {
    require_continuum(system, "entropy_embedded_Dn");
    if (n_embed == 0) throw ParameterError("n_embed must be >= 1");
    if (metric == MetricKind::weak_star) throw ParameterError("metric: use wasserstein_1 or prokhorov");
    if (n_range.empty()) throw ParameterError("n_range: need ≥ 4 points");
    const std::size_t m = sample_per_axis ? sample_per_axis : default_embed_per_axis(n_embed);
    const auto grid = grid_sample(system.space(), m);
    double total = 1.0;
    for (std::size_t k = 0; k < n_embed; ++k) total *= static_cast<double>(grid.size());
    if (total > 65536.0) {
        throw ParameterError("sample_per_axis: " + std::to_string(grid.size()) + "^" + std::to_string(n_embed) +
                             " tuples exceed the 2^16 cap");
    }
    std::vector<AtomicMeasure> sample;
    sample.reserve(static_cast<std::size_t>(total));
    std::vector<std::size_t> idx(n_embed, 0);
    std::vector<Point> tuple(n_embed);
    for (;;) {
        for (std::size_t k = 0; k < n_embed; ++k) tuple[k] = grid[idx[k]];
        sample.push_back(dyadic_embed(system.space(), tuple));
        std::size_t k = n_embed;
        while (k-- > 0) {
            if (++idx[k] < grid.size()) break;
            idx[k] = 0;
        }
        if (k == static_cast<std::size_t>(-1)) break;
    }
    const std::size_t horizon = std::max<std::size_t>(1, *std::max_element(n_range.begin(), n_range.end()));
    auto ctx = BowenContext::measures(system, std::move(sample), metric, horizon);
    ctx.set_resolution(covering_radius(system.space(), m));
    ctx.set_description("dyadic embeddings of " + std::to_string(n_embed) + "-tuples over a grid of " +
                        std::to_string(grid.size()) + " points on " + system.space().name() + " (" +
                        std::to_string(ctx.size()) + " measures, " + to_string(metric) + ")");
    return entropy_estimate(ctx, std::move(eps_list), std::move(n_range), threads);
}

EntropyEstimate entropy_product(const SystemMap& a, const SystemMap& b, std::vector<double> eps_list,
                                std::vector<std::size_t> n_range, std::size_t per_axis, std::size_t threads) {
    require_continuum(a, "entropy_product");
    require_continuum(b, "entropy_product");
    if (n_range.empty()) throw ParameterError("n_range: need ≥ 4 points");
    const auto ga = grid_sample(a.space(), per_axis), gb = grid_sample(b.space(), per_axis);
    if (static_cast<double>(ga.size()) * static_cast<double>(gb.size()) > 16777216.0) {
        throw ParameterError("sample_per_axis: product sample exceeds 2^24 pairs");
    }
    std::vector<std::pair<Point, Point>> sample;
    sample.reserve(ga.size() * gb.size());
    for (const auto& x : ga)
        for (const auto& y : gb) sample.push_back({x, y});
    const std::size_t horizon = std::max<std::size_t>(1, *std::max_element(n_range.begin(), n_range.end()));
    auto ctx = BowenContext::product(a, b, std::move(sample), horizon);
    ctx.set_resolution(std::max(covering_radius(a.space(), per_axis), covering_radius(b.space(), per_axis)));
    ctx.set_description("product grid of " + std::to_string(ga.size()) + " x " + std::to_string(gb.size()) +
                        " points on " + a.space().name() + " x " + b.space().name());
    return entropy_estimate(ctx, std::move(eps_list), std::move(n_range), threads);
}

}  // namespace pushforward
