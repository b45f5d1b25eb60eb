#include "pushforward/metrics.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cstdint>
#include <cmath>
#include <limits>
#include <string>

#include "pushforward/errors.hpp"

namespace pushforward {

namespace {

void check_pair(const AtomicMeasure& mu, const AtomicMeasure& nu) {
    if (!(mu.space() == nu.space())) {
        throw SpaceMismatch("measures live on " + mu.space().name() + " and " + nu.space().name());
    }
    if (mu.escaped_mass() > 0.0 || nu.escaped_mass() > 0.0 || mu.size() == 0 || nu.size() == 0) {
        throw ParameterError("distances need probability measures (no escaped mass)");
    }
}

std::vector<double> weights_of(const AtomicMeasure& mu) {
    std::vector<double> w;
    w.reserve(mu.size());
    for (const auto& a : mu.atoms()) w.push_back(a.weight);
    return w;
}

std::vector<double> distance_matrix(const AtomicMeasure& mu, const AtomicMeasure& nu) {
    std::vector<double> d(mu.size() * nu.size());
    const auto& space = mu.space();
    for (std::size_t i = 0; i < mu.size(); ++i)
        for (std::size_t j = 0; j < nu.size(); ++j)
            d[i * nu.size() + j] = space.distance(mu[i].point, nu[j].point);
    return d;
}

// Per-axis hat parameters for one level.
struct AxisHat {
    double center;
    double width;
};

std::vector<AxisHat> axis_hats(const ModelSpace& space, std::size_t axis, std::size_t level) {
    auto [lo, hi] = space.axis_range(axis);
    const double len = hi - lo;
    const std::size_t cells = std::size_t{1} << level;
    const double width = len / static_cast<double>(cells);
    const std::size_t count = space.periodic_axis(axis) ? cells : cells + 1;
    std::vector<AxisHat> hats;
    hats.reserve(count);
    for (std::size_t j = 0; j < count; ++j) hats.push_back({lo + width * static_cast<double>(j), width});
    return hats;
}

// Multi-indices of per-axis levels with the given sum, lexicographic.
void level_splits(std::size_t dims, std::size_t total, std::vector<std::size_t>& prefix,
                  std::vector<std::vector<std::size_t>>& out) {
    if (prefix.size() + 1 == dims) {
        prefix.push_back(total);
        out.push_back(prefix);
        prefix.pop_back();
        return;
    }
    for (std::size_t l = 0; l <= total; ++l) {
        prefix.push_back(l);
        level_splits(dims, total - l, prefix, out);
        prefix.pop_back();
    }
}

}  // namespace

WassersteinResult wasserstein(const AtomicMeasure& mu, const AtomicMeasure& nu, double p) {
    check_pair(mu, nu);
    if (!(p >= 1.0) || !std::isfinite(p)) throw ParameterError("Wasserstein order p must be >= 1");
    auto cost = distance_matrix(mu, nu);
    if (p != 1.0) {
        for (double& c : cost) c = std::pow(c, p);
    }
    const auto a = weights_of(mu);
    const auto b = weights_of(nu);
    WassersteinResult r;
    r.plan = solve_transport(a, b, cost);
    r.plan.cost = std::max(0.0, r.plan.cost);
    r.value = p == 1.0 ? r.plan.cost : std::pow(r.plan.cost, 1.0 / p);
    return r;
}

double wasserstein1_line(std::span<const Atom> a, std::span<const Atom> b, bool periodic) {
    // Signed mass events; h is F - G on each gap between event points.
    std::vector<std::pair<double, double>> ev;
    ev.reserve(a.size() + b.size());
    std::size_t i = 0, j = 0;
    while (i < a.size() || j < b.size()) {
        if (j == b.size() || (i < a.size() && a[i].point[0] <= b[j].point[0])) {
            ev.push_back({a[i].point[0], a[i].weight});
            ++i;
        } else {
            ev.push_back({b[j].point[0], -b[j].weight});
            ++j;
        }
    }
    std::vector<std::pair<double, double>> gaps;  // (h, length)
    gaps.reserve(ev.size());
    double h = 0.0;
    for (std::size_t k = 0; k + 1 < ev.size(); ++k) {
        h += ev[k].second;
        const double len = ev[k + 1].first - ev[k].first;
        if (len > 0.0) gaps.push_back({h, len});
    }
    if (!periodic) {
        double w = 0.0;
        for (auto [v, len] : gaps) w += std::fabs(v) * len;
        return w;
    }
    // Circle: the wrap gap carries h = 0, and the best shift c is a
    // length-weighted median of h.
    const double wrap = 1.0 - (ev.back().first - ev.front().first);
    if (wrap > 0.0) gaps.push_back({0.0, wrap});
    std::sort(gaps.begin(), gaps.end());
    double half = 0.0;
    for (auto [v, len] : gaps) half += len;
    half *= 0.5;
    double acc = 0.0, c = gaps.empty() ? 0.0 : gaps.back().first;
    for (auto [v, len] : gaps) {
        acc += len;
        if (acc >= half) {
            c = v;
            break;
        }
    }
    double w = 0.0;
    for (auto [v, len] : gaps) w += std::fabs(v - c) * len;
    return w;
}

double prokhorov(const AtomicMeasure& mu, const AtomicMeasure& nu) {
    check_pair(mu, nu);
    return prokhorov(mu.space(), mu.atoms(), nu.atoms());
}

namespace {

// Max flow through the bipartite graph whose edges join atoms at distance
// <= threshold (or < threshold when `strict`). Small supports use the
// min-cut formula min_S a(A \ S) + b(N(S)) over subsets S of the smaller side.
double matched_mass(std::span<const double> a, std::span<const double> b, std::span<const double> d,
                    double threshold, bool strict) {
    const std::size_t m = a.size(), n = b.size();
    auto allowed = [&](std::size_t i, std::size_t j) {
        const double v = d[i * n + j];
        return strict ? v < threshold : v <= threshold;
    };
    const bool rows_small = m <= 10 && n <= 64;
    const bool cols_small = n <= 10 && m <= 64;
    if (!rows_small && !cols_small) {
        std::vector<unsigned char> mask(m * n);
        for (std::size_t i = 0; i < m; ++i)
            for (std::size_t j = 0; j < n; ++j) mask[i * n + j] = allowed(i, j);
        return bipartite_max_flow(a, b, mask);
    }
    const bool by_rows = rows_small && (!cols_small || m <= n);
    const std::size_t side = by_rows ? m : n, other = by_rows ? n : m;
    std::span<const double> ws = by_rows ? a : b, wo = by_rows ? b : a;
    std::array<std::uint64_t, 10> nb{};
    double total = 0.0;
    for (std::size_t i = 0; i < side; ++i) {
        total += ws[i];
        for (std::size_t j = 0; j < other; ++j)
            if (by_rows ? allowed(i, j) : allowed(j, i)) nb[i] |= std::uint64_t{1} << j;
    }
    std::array<std::uint64_t, 1024> reach{};
    std::array<double, 1024> inside{};
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t s = 0; s < (std::size_t{1} << side); ++s) {
        if (s > 0) {
            const auto low = static_cast<std::size_t>(std::countr_zero(s));
            reach[s] = reach[s & (s - 1)] | nb[low];
            inside[s] = inside[s & (s - 1)] + ws[low];
        }
        double cut = total - inside[s];
        for (std::uint64_t r = reach[s]; r; r &= r - 1) cut += wo[static_cast<std::size_t>(std::countr_zero(r))];
        best = std::min(best, cut);
    }
    return best;
}

struct PairData {
    std::vector<double> a, b, d;
};

PairData pair_data(const ModelSpace& space, std::span<const Atom> mu, std::span<const Atom> nu) {
    PairData p;
    p.d.resize(mu.size() * nu.size());
    for (const auto& x : mu) p.a.push_back(x.weight);
    for (const auto& y : nu) p.b.push_back(y.weight);
    for (std::size_t i = 0; i < mu.size(); ++i)
        for (std::size_t j = 0; j < nu.size(); ++j) p.d[i * nu.size() + j] = space.distance(mu[i].point, nu[j].point);
    return p;
}

}  // namespace

double prokhorov(const ModelSpace& space, std::span<const Atom> mu, std::span<const Atom> nu) {
    const PairData p = pair_data(space, mu, nu);
    std::vector<double> t(p.d.begin(), p.d.end());
    t.push_back(0.0);
    std::sort(t.begin(), t.end());
    t.erase(std::unique(t.begin(), t.end()), t.end());

    auto gap = [&](std::size_t k) { return 1.0 - matched_mass(p.a, p.b, p.d, t[k], false); };
    auto next = [&](std::size_t k) {
        return k + 1 < t.size() ? t[k + 1] : std::numeric_limits<double>::infinity();
    };

    // The predicate "gap(k) <= t_{k+1}" is monotone in k; it holds at the
    // last index where every pair is allowed.
    std::size_t lo = 0, hi = t.size() - 1;
    double hi_gap = std::max(0.0, gap(hi));
    while (lo < hi) {
        const std::size_t mid = lo + (hi - lo) / 2;
        const double g = gap(mid);
        if (g <= next(mid)) {
            hi = mid;
            hi_gap = std::max(0.0, g);
        } else {
            lo = mid + 1;
        }
    }
    return std::min(1.0, std::max(t[hi], hi_gap));
}

bool prokhorov_less_than(const ModelSpace& space, std::span<const Atom> mu, std::span<const Atom> nu, double eps) {
    // d_P = min_k max(t_k, gap_k) and gap is nonincreasing, so d_P < eps
    // exactly when the gap at the largest level below eps is below eps.
    if (mu.size() <= 10 && nu.size() <= 10) {
        const bool rows = mu.size() <= nu.size();
        const auto side = rows ? mu : nu, other = rows ? nu : mu;
        std::array<std::uint64_t, 10> nb{};
        double total = 0.0;
        for (std::size_t i = 0; i < side.size(); ++i) {
            total += side[i].weight;
            for (std::size_t j = 0; j < other.size(); ++j)
                if (space.distance(side[i].point, other[j].point) < eps) nb[i] |= std::uint64_t{1} << j;
        }
        std::array<std::uint64_t, 1024> reach;
        std::array<double, 1024> inside;
        reach[0] = 0;
        inside[0] = 0.0;
        double flow = std::numeric_limits<double>::infinity();
        for (std::size_t s = 0; s < (std::size_t{1} << side.size()); ++s) {
            if (s > 0) {
                const auto low = static_cast<std::size_t>(std::countr_zero(s));
                reach[s] = reach[s & (s - 1)] | nb[low];
                inside[s] = inside[s & (s - 1)] + side[low].weight;
            }
            double cut = total - inside[s];
            for (std::uint64_t r = reach[s]; r; r &= r - 1) cut += other[static_cast<std::size_t>(std::countr_zero(r))].weight;
            flow = std::min(flow, cut);
        }
        return 1.0 - flow < eps;
    }
    const PairData p = pair_data(space, mu, nu);
    return 1.0 - matched_mass(p.a, p.b, p.d, eps, true) < eps;
}

WeakStarBasis::WeakStarBasis(const ModelSpace& space, std::size_t terms) : space_(space) {
    if (terms == 0) throw ParameterError("weak-* truncation N must be >= 1");
    if (space.is_finite()) {
        const std::size_t n = std::min(terms, space.size());
        for (std::size_t i = 0; i < n; ++i) {
            std::vector<double> values(space.size(), 0.0);
            values[i] = 1.0;
            functions_.push_back(TestFunction::table(space, std::move(values)));
        }
        tail_ = terms >= space.size() ? 0.0 : std::ldexp(1.0, -static_cast<int>(terms));
        return;
    }
    const std::size_t dims = space.dim();
    for (std::size_t total = 0; functions_.size() < terms; ++total) {
        std::vector<std::vector<std::size_t>> splits;
        std::vector<std::size_t> prefix;
        level_splits(dims, total, prefix, splits);
        for (const auto& levels : splits) {
            std::vector<std::vector<AxisHat>> per_axis;
            for (std::size_t k = 0; k < dims; ++k) per_axis.push_back(axis_hats(space, k, levels[k]));
            std::vector<std::size_t> idx(dims, 0);
            while (functions_.size() < terms) {
                std::vector<PiecewiseLinear> factors;
                for (std::size_t k = 0; k < dims; ++k) {
                    auto [lo, hi] = space.axis_range(k);
                    const auto& h = per_axis[k][idx[k]];
                    factors.push_back(PiecewiseLinear::hat(h.center, h.width, lo, hi, space.periodic_axis(k)));
                }
                functions_.push_back(TestFunction::product(space, std::move(factors)));
                // Odometer over centers, last axis fastest.
                std::size_t k = dims;
                while (k-- > 0) {
                    if (++idx[k] < per_axis[k].size()) break;
                    idx[k] = 0;
                }
                if (k == static_cast<std::size_t>(-1)) break;
            }
            if (functions_.size() >= terms) break;
        }
    }
    tail_ = std::ldexp(1.0, -static_cast<int>(terms));
}

WeakStarDistance weak_star(const AtomicMeasure& mu, const AtomicMeasure& nu, const WeakStarBasis& basis) {
    check_pair(mu, nu);
    if (!(basis.space() == mu.space())) throw SpaceMismatch("weak-* basis built for another space");
    WeakStarDistance r;
    for (std::size_t i = 0; i < basis.size(); ++i) {
        const double diff = integrate(basis[i], mu) - integrate(basis[i], nu);
        r.value += std::ldexp(std::fabs(diff), -static_cast<int>(i + 1));
    }
    r.tail_bound = basis.tail_bound();
    return r;
}

MetricKind parse_metric(const std::string& name) {
    if (name == "wasserstein" || name == "wasserstein_1" || name == "w1") return MetricKind::wasserstein;
    if (name == "prokhorov") return MetricKind::prokhorov;
    if (name == "weak_star") return MetricKind::weak_star;
    throw ParameterError("unknown metric '" + name + "'");
}

std::string to_string(MetricKind kind) {
    switch (kind) {
        case MetricKind::wasserstein: return "wasserstein";
        case MetricKind::prokhorov: return "prokhorov";
        case MetricKind::weak_star: return "weak_star";
    }
    return "?";
}

}  // namespace pushforward
