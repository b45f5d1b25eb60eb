// One PASS/FAIL line per acceptance criterion; nonzero exit if any fails.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include "pushforward/dynamics.hpp"
#include "pushforward/entropy.hpp"
#include "pushforward/errors.hpp"
#include "pushforward/measures.hpp"
#include "pushforward/metrics.hpp"
#include "pushforward/random.hpp"
#include "pushforward/spaces.hpp"

using namespace pushforward;

namespace {

// Tolerances and budgets, as stated by the criteria.
constexpr double kChangeOfVariablesTol = 1e-12;
constexpr double kEmbeddingTol = 1e-9;
constexpr double kW1OracleTol = 1e-9;
constexpr double kProkhorovOracleTol = 1e-6;
constexpr double kLipschitzSlack = 1e-9;
constexpr double kAttractorSup = 0.01;
constexpr double kInvariantResidual = 1e-10;
constexpr double kPeriodicWeakStar = 0.25;
constexpr double kLog2 = 0.69314718055994530942;

struct Outcome {
    bool pass = true;
    std::string detail;
    double budget_seconds = 0.0;  // 0: no runtime bound
};

class Detail {
public:
    template <class T>
    Detail& operator<<(const T& v) {
        s_ << v;
        return *this;
    }
    std::string str() const { return s_.str(); }

private:
    std::ostringstream s_;
};

std::vector<double> random_simplex(Rng& rng, std::size_t n) {
    std::vector<double> w(n);
    double total = 0.0;
    for (auto& x : w) {
        x = -std::log(1.0 - uniform01(rng));
        total += x;
    }
    for (auto& x : w) x /= total;
    return w;
}

PiecewiseLinear random_factor(Rng& rng, double lo, double hi, bool periodic) {
    std::vector<double> knots{lo, hi};
    for (int i = 0; i < 5; ++i) knots.push_back(lo + (hi - lo) * uniform01(rng));
    std::sort(knots.begin(), knots.end());
    knots.erase(std::unique(knots.begin(), knots.end()), knots.end());
    std::vector<double> values(knots.size());
    for (auto& v : values) v = uniform01(rng);
    if (periodic) values.back() = values.front();
    return PiecewiseLinear(knots, values, periodic);
}

TestFunction random_function(const ModelSpace& space, Rng& rng) {
    if (space.is_finite()) {
        std::vector<double> t(space.size());
        for (auto& v : t) v = uniform01(rng);
        return TestFunction::table(space, t);
    }
    std::vector<PiecewiseLinear> factors;
    for (std::size_t k = 0; k < space.dim(); ++k) {
        const auto [lo, hi] = space.axis_range(k);
        factors.push_back(random_factor(rng, lo, hi, space.periodic_axis(k)));
    }
    return TestFunction::product(space, factors);
}

// ---------------------------------------------------------------- 1, 2

Outcome adjoint_identity() {
    Outcome out{.budget_seconds = 5.0};
    const auto space = ModelSpace::finite(4);
    Rng rng(derive_seed(1, 0));
    std::size_t mismatches = 0, transpose_bad = 0;
    for (std::size_t code = 0; code < 256; ++code) {
        std::vector<std::size_t> table(4);
        for (std::size_t i = 0, c = code; i < 4; ++i, c /= 4) table[i] = c % 4;
        const auto system = SystemMap::finite_table(table);
        const auto m = matrix_of(system);
        for (std::size_t i = 0; i < 4; ++i)
            for (std::size_t j = 0; j < 4; ++j)
                if (m.phi(i, j) != m.t(j, i)) ++transpose_bad;
        for (int trial = 0; trial < 100; ++trial) {
            const auto p = random_simplex(rng, 4);
            const auto via_matrix = apply_matrix(m, p);
            const auto via_atoms = push_forward(system, AtomicMeasure::from_simplex(space, p)).to_simplex();
            if (via_matrix != via_atoms) ++mismatches;
        }
    }
    out.pass = mismatches == 0 && transpose_bad == 0;
    out.detail = (Detail() << "256 maps x 100 vectors, " << mismatches << " inexact, " << transpose_bad
                           << " transpose mismatches")
                     .str();
    return out;
}

Outcome worked_example() {
    Outcome out;
    const auto system = SystemMap::finite_doubling(4);
    const auto m = matrix_of(system);
    const std::vector<std::vector<int>> phi{{1, 0, 1, 0}, {0, 0, 0, 0}, {0, 1, 0, 1}, {0, 0, 0, 0}};
    bool ok = m.phi_rows() == phi;
    Rng rng(derive_seed(2, 0));
    for (int trial = 0; trial < 100 && ok; ++trial) {
        const auto p = random_simplex(rng, 4);
        const std::vector<double> expected{p[0] + p[2], 0.0, p[1] + p[3], 0.0};
        ok = apply_matrix(m, p) == expected;
    }
    out.pass = ok;
    out.detail = "phi rows [[1,0,1,0],[0,0,0,0],[0,1,0,1],[0,0,0,0]], (p0+p2, 0, p1+p3, 0) on 100 vectors";
    return out;
}

// ---------------------------------------------------------------- 3, 4, 5

std::vector<SystemMap> builtin_systems(Rng& rng) {
    std::vector<std::size_t> table(8);
    for (auto& t : table) t = uniform_index(rng, 8);
    return {SystemMap::finite_table(table),
            SystemMap::cycle(6),
            SystemMap::finite_doubling(8),
            SystemMap::shift(6),
            SystemMap::identity(ModelSpace::square()),
            SystemMap::rotation((std::sqrt(5.0) - 1.0) / 2.0),
            SystemMap::circle_doubling(2),
            SystemMap::circle_doubling(3),
            SystemMap::contraction(0.5, 0.5),
            SystemMap::square_attractor(),
            SystemMap::solenoid(0.25)};
}

Outcome change_of_variables() {
    Outcome out;
    Rng rng(derive_seed(3, 0));
    double worst = 0.0;
    const auto systems = builtin_systems(rng);
    for (const auto& system : systems) {
        for (int trial = 0; trial < 100; ++trial) {
            const auto mu = random_measure(system.space(), rng);
            const auto f = random_function(system.space(), rng);
            double direct = 0.0;  // sum of w f(T x); points where T is undefined carry no mass forward
            for (const auto& a : mu.atoms())
                if (auto y = system.try_evaluate(a.point)) direct += a.weight * f(*y);
            worst = std::max(worst, std::abs(direct - integrate(f, push_forward(system, mu))));
        }
    }
    out.pass = worst <= kChangeOfVariablesTol;
    out.detail = (Detail() << systems.size() << " systems x 100, max error " << worst).str();
    return out;
}

Outcome isometric_embedding() {
    Outcome out;
    Rng rng(derive_seed(4, 0));
    double worst = 0.0;
    const std::vector<ModelSpace> spaces{ModelSpace::finite(7), ModelSpace::circle(), ModelSpace::interval(),
                                         ModelSpace::square(), ModelSpace::solid_torus()};
    for (const auto& space : spaces) {
        for (int i = 0; i < 1000; ++i) {
            const auto x = random_point(space, rng);
            const auto y = random_point(space, rng);
            const double w = wasserstein(AtomicMeasure::dirac(space, x), AtomicMeasure::dirac(space, y)).value;
            worst = std::max(worst, std::abs(w - space.distance(x, y)));
        }
    }
    out.pass = worst <= kEmbeddingTol;
    out.detail = (Detail() << "5 spaces x 1000 pairs, max |W1 - d| " << worst).str();
    return out;
}

// Weights in {k/8}: split each measure into eight unit atoms and minimise
// over all pairings (optimal plans between uniform measures are permutations).
double w1_brute(const ModelSpace& space, const AtomicMeasure& mu, const AtomicMeasure& nu) {
    std::vector<Point> a, b;
    for (const auto& atom : mu.atoms())
        for (long k = std::lround(atom.weight * 8); k > 0; --k) a.push_back(atom.point);
    for (const auto& atom : nu.atoms())
        for (long k = std::lround(atom.weight * 8); k > 0; --k) b.push_back(atom.point);
    std::vector<int> perm(8);
    std::iota(perm.begin(), perm.end(), 0);
    double best = INFINITY;
    do {
        double cost = 0.0;
        for (int i = 0; i < 8; ++i) cost += space.distance(a[i], b[perm[i]]);
        best = std::min(best, cost);
    } while (std::next_permutation(perm.begin(), perm.end()));
    return best / 8.0;
}

// Over every subset A of either support, on each interval between successive
// distances, the largest excess mu(A) - nu(A^alpha); the metric is the first
// alpha not below that excess.
double prokhorov_brute(const ModelSpace& space, const AtomicMeasure& mu, const AtomicMeasure& nu) {
    std::vector<double> levels{0.0};
    for (const auto& a : mu.atoms())
        for (const auto& b : nu.atoms()) levels.push_back(space.distance(a.point, b.point));
    std::sort(levels.begin(), levels.end());
    levels.erase(std::unique(levels.begin(), levels.end()), levels.end());

    auto excess = [&](const AtomicMeasure& p, const AtomicMeasure& q, double reach) {
        double worst = 0.0;
        for (std::size_t mask = 1; mask < (std::size_t{1} << p.size()); ++mask) {
            double pa = 0.0, qa = 0.0;
            for (std::size_t i = 0; i < p.size(); ++i)
                if (mask >> i & 1) pa += p[i].weight;
            for (const auto& b : q.atoms()) {
                for (std::size_t i = 0; i < p.size(); ++i) {
                    if ((mask >> i & 1) && space.distance(p[i].point, b.point) <= reach) {
                        qa += b.weight;
                        break;
                    }
                }
            }
            worst = std::max(worst, pa - qa);
        }
        return worst;
    };
    double best = INFINITY;
    for (std::size_t k = 0; k < levels.size(); ++k) {
        // alpha in (levels[k], levels[k+1]]: the open alpha-neighbourhood reaches distance levels[k].
        const double f = std::max(excess(mu, nu, levels[k]), excess(nu, mu, levels[k]));
        const double upper = k + 1 < levels.size() ? levels[k + 1] : INFINITY;
        if (f <= upper) best = std::min(best, std::max(levels[k], f));
    }
    return best;
}

AtomicMeasure eighths_measure(const ModelSpace& space, Rng& rng) {
    const std::size_t atoms = 1 + uniform_index(rng, 4);
    std::vector<int> cuts{0, 8};
    while (cuts.size() < atoms + 1) {
        const int c = 1 + static_cast<int>(uniform_index(rng, 7));
        if (std::find(cuts.begin(), cuts.end(), c) == cuts.end()) cuts.push_back(c);
    }
    std::sort(cuts.begin(), cuts.end());
    std::vector<Atom> out;
    for (std::size_t i = 0; i < atoms; ++i)
        out.push_back({random_point(space, rng), (cuts[i + 1] - cuts[i]) / 8.0});
    return AtomicMeasure(space, out);
}

Outcome metric_oracles() {
    Outcome out{.budget_seconds = 30.0};
    Rng rng(derive_seed(5, 0));
    const std::vector<ModelSpace> spaces{ModelSpace::finite(5), ModelSpace::circle(), ModelSpace::interval(),
                                         ModelSpace::square()};
    double w_err = 0.0, p_err = 0.0;
    for (int trial = 0; trial < 200; ++trial) {
        const auto& space = spaces[trial % spaces.size()];
        const auto mu = eighths_measure(space, rng);
        const auto nu = eighths_measure(space, rng);
        w_err = std::max(w_err, std::abs(wasserstein(mu, nu).value - w1_brute(space, mu, nu)));
        p_err = std::max(p_err, std::abs(prokhorov(mu, nu) - prokhorov_brute(space, mu, nu)));
    }
    out.pass = w_err <= kW1OracleTol && p_err <= kProkhorovOracleTol;
    out.detail = (Detail() << "200 cases each, max W1 error " << w_err << ", max Prokhorov error " << p_err).str();
    return out;
}

// ---------------------------------------------------------------- 6, 7, 8

Outcome lipschitz_transfer() {
    Outcome out;
    Rng rng(derive_seed(6, 0));
    const auto contraction = SystemMap::contraction(0.5, 0.5);
    double worst_excess = -INFINITY;
    for (int trial = 0; trial < 200; ++trial) {
        const auto mu = random_measure(contraction.space(), rng);
        const auto nu = random_measure(contraction.space(), rng);
        const double before = wasserstein(mu, nu).value;
        const double after = wasserstein(push_forward(contraction, mu), push_forward(contraction, nu)).value;
        worst_excess = std::max(worst_excess, after - 0.5 * before);
    }
    const auto rotation = SystemMap::rotation((std::sqrt(5.0) - 1.0) / 2.0);
    double worst_ratio = 0.0;
    for (int trial = 0; trial < 20; ++trial) {
        auto mu = random_measure(rotation.space(), rng);
        auto nu = random_measure(rotation.space(), rng);
        const double d0 = prokhorov(mu, nu);
        for (int n = 1; n <= 100; ++n) {
            mu = push_forward(rotation, mu);
            nu = push_forward(rotation, nu);
            worst_ratio = std::max(worst_ratio, prokhorov(mu, nu) / d0);
        }
    }
    out.pass = worst_excess <= kLipschitzSlack && worst_ratio <= 1.0 + kLipschitzSlack;
    out.detail = (Detail() << "contraction max W1(Phi mu, Phi nu) - W1(mu, nu)/2 = " << worst_excess
                           << "; rotation max Prokhorov ratio over n <= 100 = " << worst_ratio)
                     .str();
    return out;
}

Outcome point_attractor() {
    Outcome out;
    Rng rng(derive_seed(7, 0));
    const auto system = SystemMap::contraction(0.5, 0.5);
    const auto target = AtomicMeasure::dirac(system.space(), Point(0.5));
    double worst = -INFINITY;
    for (int trial = 0; trial < 100; ++trial) {
        auto mu = random_measure(system.space(), rng);
        const double d0 = wasserstein(mu, target).value;
        for (int n = 1; n <= 60; ++n) {
            mu = push_forward(system, mu);
            worst = std::max(worst, wasserstein(mu, target).value - std::ldexp(d0, -n));
        }
    }
    out.pass = worst <= kLipschitzSlack;
    out.detail = (Detail() << "100 measures, n <= 60, max W1(Phi^n mu, delta_p) - 2^-n W1(mu, delta_p) = " << worst)
                     .str();
    return out;
}

Outcome uniform_attractor() {
    Outcome out{.budget_seconds = 10.0};
    Rng rng(derive_seed(8, 0));
    const auto system = SystemMap::square_attractor();
    const auto lambda = AttractorDescriptor::square_lambda();
    constexpr std::size_t n = 1000;
    double worst = 0.0, oracle_gap = 0.0;
    for (int trial = 0; trial < 20; ++trial) {
        const auto mu = random_measure_with(system.space(), rng, 50);
        const auto last = iterate(system, mu, n, n).steps.back().measure;
        const double sup = attractor_distance(last, lambda).sup_distance;
        double closed_form = 0.0;
        for (const auto& a : mu.atoms()) {
            const double x = a.point[0], y = a.point[1];
            closed_form = std::max(closed_form, std::min(1.0 - x, std::pow((1.0 + x) / 2.0, n) * y));
        }
        worst = std::max(worst, sup);
        oracle_gap = std::max(oracle_gap, std::abs(sup - closed_form));
    }
    out.pass = worst <= kAttractorSup && oracle_gap <= 1e-9;
    out.detail = (Detail() << "20 measures of 50 atoms, n = 1000, max sup distance " << worst
                           << ", |sup - closed form| <= " << oracle_gap)
                     .str();
    return out;
}

// ---------------------------------------------------------------- 9, 10, 11

std::vector<std::size_t> range(std::size_t lo, std::size_t hi) {
    std::vector<std::size_t> r;
    for (auto n = lo; n <= hi; ++n) r.push_back(n);
    return r;
}

Outcome base_entropy() {
    Outcome out{.budget_seconds = 120.0};
    const std::vector<double> eps{1.0 / 64, 1.0 / 32, 1.0 / 16};
    const auto doubling = entropy_base(SystemMap::circle_doubling(2), eps, range(2, 10), 1 << 14);
    const auto rotation = entropy_base(SystemMap::rotation((std::sqrt(5.0) - 1.0) / 2.0), eps, range(2, 10), 1 << 14);
    out.pass = doubling.h_estimate >= 0.6 && doubling.h_estimate <= 0.8 && rotation.h_estimate <= 0.05;
    out.detail = (Detail() << "doubling h = " << doubling.h_estimate << " (log 2 = " << kLog2
                           << "), golden rotation h = " << rotation.h_estimate)
                     .str();
    return out;
}

Outcome entropy_lift() {
    Outcome out{.budget_seconds = 600.0};
    const auto doubling = SystemMap::circle_doubling(2);
    const double base = entropy_base(doubling, {1.0 / 64, 1.0 / 32, 1.0 / 16}, range(2, 10), 1 << 14).h_estimate;

    // The embedded chain: Prokhorov metric, eps in {0.1, 0.125}, n = 1..4, default grids.
    const std::vector<double> eps{0.1, 0.125};
    std::vector<double> h;
    for (std::size_t k = 1; k <= 3; ++k)
        h.push_back(entropy_embedded_Dn(doubling, k, MetricKind::prokhorov, eps, range(1, 4)).h_estimate);

    // D_1 under W1 is the circle itself: identical counts to the base grid.
    const auto w1_copy = entropy_embedded_Dn(doubling, 1, MetricKind::wasserstein, eps, range(1, 4));
    const auto base_same = entropy_base(doubling, eps, range(1, 4), default_embed_per_axis(1));
    const bool copy_ok = w1_copy.counts == base_same.counts;

    const bool d1_ok = std::abs(h[0] - base) <= 0.05;
    const bool d2_ok = h[1] >= 1.1 && h[1] <= 1.7;
    bool growth_ok = true;
    std::ostringstream ratios;
    for (std::size_t k = 1; k < h.size(); ++k) {
        const double target = static_cast<double>(k + 1) / static_cast<double>(k);
        const double r = h[k] / h[k - 1];
        growth_ok = growth_ok && r >= 0.8 * target && r <= 1.2 * target;
        ratios << (k > 1 ? ", " : "") << r << " in [" << 0.8 * target << ", " << 1.2 * target << "]";
    }
    out.pass = d1_ok && d2_ok && growth_ok && copy_ok;
    out.detail = (Detail() << "h(D1) = " << h[0] << " vs base " << base << ", h(D2) = " << h[1] << ", h(D3) = " << h[2]
                           << "; ratios " << ratios.str() << "; W1 D1 counts equal base counts: "
                           << (copy_ok ? "yes" : "no"))
                     .str();
    return out;
}

Outcome goodwin_law() {
    Outcome out;
    const std::vector<double> eps{0.125, 0.25};
    const auto doubling = SystemMap::circle_doubling(2);
    const auto rotation = SystemMap::rotation((std::sqrt(5.0) - 1.0) / 2.0);
    const double dr = entropy_product(doubling, rotation, eps, range(1, 6), 256).h_estimate;
    const double dd = entropy_product(doubling, doubling, eps, range(1, 6), 256).h_estimate;
    out.pass = std::abs(dr - kLog2) <= 0.2 * kLog2 && std::abs(dd - 2 * kLog2) <= 0.2 * 2 * kLog2;
    out.detail = (Detail() << "doubling x rotation h = " << dr << " (log 2 +- 20%), doubling x doubling h = " << dd
                           << " (2 log 2 +- 20%)")
                     .str();
    return out;
}

// ---------------------------------------------------------------- 12, 13

Outcome fixed_point_periodicity() {
    Outcome out;
    Rng rng(derive_seed(12, 0));
    double worst_residual = 0.0;
    std::size_t off_cycle = 0, failures = 0;
    for (int trial = 0; trial < 500; ++trial) {
        std::vector<std::size_t> table(8);
        for (auto& t : table) t = uniform_index(rng, 8);
        try {
            const auto q = invariant_measure_finite(matrix_of(SystemMap::finite_table(table))).weights;
            std::vector<double> image(8, 0.0);
            for (std::size_t i = 0; i < 8; ++i) image[table[i]] += q[i];
            double residual = 0.0;
            for (std::size_t i = 0; i < 8; ++i) residual += std::abs(image[i] - q[i]);
            worst_residual = std::max(worst_residual, residual);
            for (std::size_t i = 0; i < 8; ++i) {
                if (q[i] == 0.0) continue;
                bool periodic = false;
                for (std::size_t k = 1, x = table[i]; k <= 8 && !periodic; ++k, x = table[x]) periodic = x == i;
                if (!periodic) ++off_cycle;
            }
        } catch (const ConvergenceFailure&) {
            ++failures;
        }
    }

    // Truncated shift: i -> i + 1, the last index escapes.
    const auto shift = SystemMap::shift(8);
    std::vector<double> uniform(8, 1.0 / 8);
    auto mu = AtomicMeasure::from_simplex(shift.space(), uniform);
    bool steps_ok = true;
    for (std::size_t n = 0; n < 8 && steps_ok; ++n) {
        std::size_t lowest = 8;
        for (const auto& a : mu.atoms()) lowest = std::min(lowest, a.point.as_index());
        steps_ok = lowest == n;
        mu = push_forward(shift, mu);
    }
    steps_ok = steps_ok && mu.size() == 0;
    bool no_vector = false;
    try {
        invariant_measure_finite(matrix_of(shift));
    } catch (const ConvergenceFailure&) {
        no_vector = true;
    }
    out.pass = worst_residual <= kInvariantResidual && off_cycle == 0 && failures == 0 && steps_ok && no_vector;
    out.detail = (Detail() << "500 maps on finite(8): max residual " << worst_residual << ", " << off_cycle
                           << " off-cycle atoms, " << failures << " failures; shift min index +1 per step: "
                           << (steps_ok ? "yes" : "no") << ", no invariant vector: " << (no_vector ? "yes" : "no"))
                     .str();
    return out;
}

Outcome periodic_density() {
    Outcome out;
    Rng rng(derive_seed(13, 0));
    const auto system = SystemMap::circle_doubling(2);
    const GridPartition grid(system.space(), 1.0 / 16);
    const WeakStarBasis basis(system.space());
    std::vector<AtomicMeasure> targets{quantize_uniform(grid)};
    for (int i = 0; i < 50; ++i) targets.push_back(quantize(random_measure(system.space(), rng), grid));
    double worst = 0.0;
    bool periodic_ok = true;
    for (const auto& target : targets) {
        const auto approx = dense_periodic_measure(system, target, grid);
        const auto& orbit = approx.orbit;
        // Step by step: the points are k/(2^p - 1), so T^p(q) itself drifts by 2^p ulps.
        for (std::size_t i = 0; i < orbit.size(); ++i) {
            const double step = system.space().distance(system.evaluate(orbit[i]), orbit[(i + 1) % orbit.size()]);
            periodic_ok = periodic_ok && step <= 1e-12;
        }
        for (const auto& a : approx.measure.atoms())
            periodic_ok = periodic_ok && std::find(orbit.begin(), orbit.end(), a.point) != orbit.end();
        const auto d = weak_star(approx.measure, target, basis);
        worst = std::max(worst, d.value + d.tail_bound);
    }
    out.pass = periodic_ok && worst <= kPeriodicWeakStar;
    out.detail = (Detail() << targets.size() << " quantized targets on the 2^-4 grid, max weak-* distance (with tail) "
                           << worst << ", measures on one periodic orbit: " << (periodic_ok ? "yes" : "no"))
                     .str();
    return out;
}

// ---------------------------------------------------------------- 14

std::string slurp(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

Outcome determinism() {
    Outcome out;
#if defined(PUSHFORWARD_LAB_EXE) && defined(PUSHFORWARD_ACCEPTANCE_CONFIGS)
    namespace fs = std::filesystem;
    std::vector<fs::path> configs;
    for (const auto& e : fs::directory_iterator(PUSHFORWARD_ACCEPTANCE_CONFIGS))
        if (e.path().extension() == ".toml") configs.push_back(e.path());
    std::sort(configs.begin(), configs.end());
    const fs::path work = fs::temp_directory_path() / "pushforward_acceptance";
    std::size_t differing = 0, failed_runs = 0;
    std::string bad;
    for (const auto& config : configs) {
        std::vector<std::string> csvs;
        for (const char* threads : {"1", "4"}) {
            const fs::path dir = work / threads;
            fs::remove_all(dir);
            fs::create_directories(dir);
            const std::string cmd = std::string("\"") + PUSHFORWARD_LAB_EXE + "\" \"" + config.string() +
                                    "\" --threads " + threads + " --out-dir \"" + dir.string() + "\" 2>/dev/null";
            if (std::system(cmd.c_str()) != 0) ++failed_runs;
            std::string csv;
            for (const auto& e : fs::directory_iterator(dir))
                if (e.path().extension() == ".csv") csv += slurp(e.path());
            csvs.push_back(csv);
        }
        if (csvs[0].empty() || csvs[0] != csvs[1]) {
            ++differing;
            bad += " " + config.filename().string();
        }
    }
    fs::remove_all(work);
    out.pass = !configs.empty() && differing == 0 && failed_runs == 0;
    out.detail = (Detail() << configs.size() << " configs at --threads 1 and 4, " << differing
                           << " differing or empty CSVs" << bad << ", " << failed_runs << " failed runs")
                     .str();
#else
    out.pass = false;
    out.detail = "the CLI was not built (configure with -DPUSHFORWARD_BUILD_CLI=ON)";
#endif
    return out;
}

}  // namespace

int main() {
    const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria{
        {"adjoint identity", adjoint_identity},
        {"worked example", worked_example},
        {"change of variables", change_of_variables},
        {"isometric embedding", isometric_embedding},
        {"metric oracles", metric_oracles},
        {"Lipschitz transfer", lipschitz_transfer},
        {"point-attractor transfer", point_attractor},
        {"uniform-attractor transfer", uniform_attractor},
        {"base entropy", base_entropy},
        {"entropy lift", entropy_lift},
        {"product entropy", goodwin_law},
        {"fixed point <-> periodicity", fixed_point_periodicity},
        {"periodic density", periodic_density},
        {"determinism", determinism},
    };
    int failed = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        const auto start = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = criteria[i].second();
        } catch (const std::exception& e) {
            o.pass = false;
            o.detail = std::string("threw: ") + e.what();
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        if (o.budget_seconds > 0 && secs > o.budget_seconds) {
            o.pass = false;
            o.detail += (Detail() << " [over the " << o.budget_seconds << " s budget]").str();
        }
        if (!o.pass) ++failed;
        std::printf("criterion %2zu %s  %-28s %8.2f s  %s\n", i + 1, o.pass ? "PASS" : "FAIL", criteria[i].first,
                    secs, o.detail.c_str());
        std::fflush(stdout);
    }
    std::printf("%zu/%zu criteria pass\n", criteria.size() - failed, criteria.size());
    return failed == 0 ? 0 : 1;
}
