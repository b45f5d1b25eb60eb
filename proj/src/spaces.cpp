#include "pushforward/spaces.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "pushforward/errors.hpp"

namespace pushforward {

namespace {

constexpr std::size_t kMaxGridBoxes = std::size_t{1} << 24;

// Antiderivative of sqrt(1 - t^2).
double half_disk_primitive(double x) noexcept {
    x = std::clamp(x, -1.0, 1.0);
    return 0.5 * (x * std::sqrt(1.0 - x * x) + std::asin(x));
}

}  // namespace

Point Point::from_coords(std::span<const double> coords) {
    switch (coords.size()) {
        case 1: return Point(coords[0]);
        case 2: return Point(coords[0], coords[1]);
        case 3: return Point(coords[0], coords[1], coords[2]);
        default:
            throw InvalidPoint("point must have 1, 2 or 3 coordinates, got " +
                               std::to_string(coords.size()));
    }
}

std::partial_ordering operator<=>(const Point& a, const Point& b) {
    if (a.dim_ != b.dim_) return a.dim_ <=> b.dim_;
    for (std::size_t k = 0; k < a.dim_; ++k) {
        if (auto c = a.c_[k] <=> b.c_[k]; c != 0) return c;
    }
    return std::partial_ordering::equivalent;
}

std::string to_string(const Point& p) {
    std::ostringstream os;
    os.precision(17);
    os << '(';
    for (std::size_t k = 0; k < p.dim(); ++k) {
        if (k) os << ", ";
        os << p[k];
    }
    os << ')';
    return os.str();
}

double wrap_unit(double x) noexcept {
    double r = x - std::floor(x);
    return r >= 1.0 ? 0.0 : r;
}

double circle_distance(double a, double b) noexcept {
    double diff = std::fabs(wrap_unit(a) - wrap_unit(b));
    return std::min(diff, 1.0 - diff);
}

ModelSpace ModelSpace::finite(std::size_t n) {
    if (n == 0) throw ParameterError("finite space needs at least one point");
    return ModelSpace(SpaceKind::finite, n);
}

std::size_t ModelSpace::dim() const noexcept {
    switch (kind_) {
        case SpaceKind::square: return 2;
        case SpaceKind::solid_torus: return 3;
        default: return 1;
    }
}

double ModelSpace::diameter() const noexcept {
    switch (kind_) {
        case SpaceKind::finite: return size_ > 1 ? 1.0 : 0.0;
        case SpaceKind::circle: return 0.5;
        case SpaceKind::interval: return 1.0;
        case SpaceKind::square: return std::numbers::sqrt2;
        case SpaceKind::solid_torus: return 2.0;
    }
    return 0.0;
}

std::string ModelSpace::name() const {
    switch (kind_) {
        case SpaceKind::finite: return "finite(" + std::to_string(size_) + ")";
        case SpaceKind::circle: return "circle";
        case SpaceKind::interval: return "interval";
        case SpaceKind::square: return "square";
        case SpaceKind::solid_torus: return "solid_torus";
    }
    return "?";
}

std::pair<double, double> ModelSpace::axis_range(std::size_t axis) const {
    if (axis >= dim()) throw DimensionError("axis out of range for " + name());
    switch (kind_) {
        case SpaceKind::finite: return {0.0, static_cast<double>(size_)};
        case SpaceKind::solid_torus:
            return axis == 0 ? std::pair{0.0, 1.0} : std::pair{-1.0, 1.0};
        default: return {0.0, 1.0};
    }
}

bool ModelSpace::periodic_axis(std::size_t axis) const noexcept {
    return axis == 0 && (kind_ == SpaceKind::circle || kind_ == SpaceKind::solid_torus);
}

bool ModelSpace::contains(const Point& p) const noexcept {
    if (p.dim() != dim()) return false;
    for (double c : p.coords()) {
        if (!std::isfinite(c)) return false;
    }
    switch (kind_) {
        case SpaceKind::finite:
            return p[0] >= 0.0 && p[0] < static_cast<double>(size_) && p[0] == std::floor(p[0]);
        case SpaceKind::circle: return p[0] >= 0.0 && p[0] < 1.0;
        case SpaceKind::interval: return p[0] >= 0.0 && p[0] <= 1.0;
        case SpaceKind::square: return p[0] >= 0.0 && p[0] <= 1.0 && p[1] >= 0.0 && p[1] <= 1.0;
        case SpaceKind::solid_torus:
            return p[0] >= 0.0 && p[0] < 1.0 && p[1] * p[1] + p[2] * p[2] <= 1.0 + kTolerance;
    }
    return false;
}

void ModelSpace::validate(const Point& p) const {
    if (p.dim() != dim()) {
        throw InvalidPoint("point " + to_string(p) + " has dimension " + std::to_string(p.dim()) +
                           ", " + name() + " expects " + std::to_string(dim()));
    }
    if (!contains(p)) throw InvalidPoint("point " + to_string(p) + " is not in " + name());
}

Point ModelSpace::canonical(Point p) const {
    if (kind_ == SpaceKind::circle || kind_ == SpaceKind::solid_torus) p[0] = wrap_unit(p[0]);
    return p;
}

double ModelSpace::distance(const Point& a, const Point& b) const {
    if (a.dim() != dim() || b.dim() != dim()) {
        throw InvalidPoint("distance on " + name() + " between points of dimension " +
                           std::to_string(a.dim()) + " and " + std::to_string(b.dim()));
    }
    switch (kind_) {
        case SpaceKind::finite: return a[0] == b[0] ? 0.0 : 1.0;
        case SpaceKind::circle: return circle_distance(a[0], b[0]);
        case SpaceKind::interval: return std::fabs(a[0] - b[0]);
        case SpaceKind::square: return std::hypot(a[0] - b[0], a[1] - b[1]);
        case SpaceKind::solid_torus:
            return std::max(circle_distance(a[0], b[0]), std::hypot(a[1] - b[1], a[2] - b[2]));
    }
    return 0.0;
}

double distance(const ModelSpace& space, const Point& a, const Point& b) {
    return space.distance(a, b);
}

// ---------------------------------------------------------------------------
// SystemMap

std::string to_string(MapKind kind) {
    switch (kind) {
        case MapKind::finite_table: return "finite_table";
        case MapKind::cycle: return "cycle";
        case MapKind::finite_doubling: return "finite_doubling";
        case MapKind::shift: return "shift";
        case MapKind::identity: return "identity";
        case MapKind::rotation: return "rotation";
        case MapKind::circle_doubling: return "circle_doubling";
        case MapKind::contraction: return "contraction";
        case MapKind::square_attractor: return "square_attractor";
        case MapKind::solenoid: return "solenoid";
    }
    return "?";
}

SystemMap SystemMap::finite_table(std::vector<std::size_t> table) {
    auto space = ModelSpace::finite(table.size());
    SystemMap m(space, MapKind::finite_table);
    m.table_.reserve(table.size());
    for (std::size_t i = 0; i < table.size(); ++i) {
        if (table[i] >= table.size()) {
            throw ParameterError("finite_table entry " + std::to_string(i) + " maps outside [0, " +
                                 std::to_string(table.size()) + ")");
        }
        m.table_.push_back(static_cast<std::int64_t>(table[i]));
    }
    m.lipschitz_ = 1.0;
    return m;
}

SystemMap SystemMap::cycle(std::size_t n) {
    std::vector<std::size_t> t(n);
    for (std::size_t i = 0; i < n; ++i) t[i] = (i + 1) % n;
    auto m = finite_table(std::move(t));
    m.kind_ = MapKind::cycle;
    return m;
}

SystemMap SystemMap::finite_doubling(std::size_t n) {
    std::vector<std::size_t> t(n);
    for (std::size_t i = 0; i < n; ++i) t[i] = (2 * i) % n;
    auto m = finite_table(std::move(t));
    m.kind_ = MapKind::finite_doubling;
    return m;
}

SystemMap SystemMap::shift(std::size_t n) {
    SystemMap m(ModelSpace::finite(n), MapKind::shift);
    m.table_.resize(n);
    for (std::size_t i = 0; i + 1 < n; ++i) m.table_[i] = static_cast<std::int64_t>(i + 1);
    m.table_[n - 1] = -1;
    m.lipschitz_ = 1.0;
    return m;
}

SystemMap SystemMap::identity(const ModelSpace& space) {
    SystemMap m(space, MapKind::identity);
    if (space.is_finite()) {
        m.table_.resize(space.size());
        for (std::size_t i = 0; i < space.size(); ++i) m.table_[i] = static_cast<std::int64_t>(i);
    }
    m.lipschitz_ = 1.0;
    return m;
}

SystemMap SystemMap::rotation(double alpha) {
    if (!std::isfinite(alpha)) throw ParameterError("rotation alpha must be finite");
    SystemMap m(ModelSpace::circle(), MapKind::rotation);
    m.alpha_ = wrap_unit(alpha);
    m.lipschitz_ = 1.0;
    return m;
}

SystemMap SystemMap::circle_doubling(int degree) {
    if (degree < 1) throw ParameterError("circle_doubling degree must be >= 1");
    SystemMap m(ModelSpace::circle(), MapKind::circle_doubling);
    m.degree_ = degree;
    m.lipschitz_ = static_cast<double>(degree);
    return m;
}

SystemMap SystemMap::contraction(double c, double fixed_point) {
    if (!(c >= 0.0 && c < 1.0)) throw ParameterError("contraction factor must lie in [0, 1)");
    if (!(fixed_point >= 0.0 && fixed_point <= 1.0)) {
        throw ParameterError("contraction fixed point must lie in [0, 1]");
    }
    SystemMap m(ModelSpace::interval(), MapKind::contraction);
    m.factor_ = c;
    m.fixed_point_ = fixed_point;
    m.lipschitz_ = c;
    return m;
}

SystemMap SystemMap::square_attractor() {
    return SystemMap(ModelSpace::square(), MapKind::square_attractor);
}

SystemMap SystemMap::solenoid(double lambda) {
    if (!(lambda > 0.0 && lambda < 0.5)) throw ParameterError("solenoid lambda must lie in (0, 1/2)");
    SystemMap m(ModelSpace::solid_torus(), MapKind::solenoid);
    m.factor_ = lambda;
    return m;
}

std::vector<std::pair<std::string, double>> SystemMap::parameters() const {
    switch (kind_) {
        case MapKind::finite_table:
        case MapKind::cycle:
        case MapKind::finite_doubling:
        case MapKind::shift: return {{"n", static_cast<double>(space_.size())}};
        case MapKind::identity:
            if (space_.is_finite()) return {{"n", static_cast<double>(space_.size())}};
            return {};
        case MapKind::rotation: return {{"alpha", alpha_}};
        case MapKind::circle_doubling: return {{"d", static_cast<double>(degree_)}};
        case MapKind::contraction: return {{"c", factor_}, {"p", fixed_point_}};
        case MapKind::square_attractor: return {};
        case MapKind::solenoid: return {{"lambda", factor_}};
    }
    return {};
}

Point SystemMap::apply(const Point& x) const {
    switch (kind_) {
        case MapKind::finite_table:
        case MapKind::cycle:
        case MapKind::finite_doubling:
        case MapKind::shift: return Point::index(static_cast<std::size_t>(table_[x.as_index()]));
        case MapKind::identity: return x;
        case MapKind::rotation: return Point(wrap_unit(x[0] + alpha_));
        case MapKind::circle_doubling: return Point(wrap_unit(degree_ * x[0]));
        case MapKind::contraction:
            return Point(std::clamp(fixed_point_ + factor_ * (x[0] - fixed_point_), 0.0, 1.0));
        case MapKind::square_attractor: return Point(x[0], (0.5 + 0.5 * x[0]) * x[1]);
        case MapKind::solenoid: {
            const double angle = 2.0 * std::numbers::pi * x[0];
            return Point(wrap_unit(2.0 * x[0]), factor_ * x[1] + 0.5 * std::cos(angle),
                         factor_ * x[2] + 0.5 * std::sin(angle));
        }
    }
    return x;
}

std::optional<Point> SystemMap::try_evaluate(const Point& x) const {
    space_.validate(x);
    if (!table_.empty() && table_[x.as_index()] < 0) return std::nullopt;
    Point y = apply(x);
    if (!space_.contains(y)) {
        throw Error(name() + " mapped " + to_string(x) + " outside " + space_.name() + " to " +
                    to_string(y));
    }
    return y;
}

Point SystemMap::evaluate(const Point& x) const {
    auto y = try_evaluate(x);
    if (!y) throw EscapedPoint(name() + ": point " + to_string(x) + " has no image in the window");
    return *y;
}

Point SystemMap::iterate(Point x, std::size_t n) const {
    for (std::size_t k = 0; k < n; ++k) x = evaluate(x);
    return x;
}

// ---------------------------------------------------------------------------
// GridPartition

double disk_box_area(double x0, double x1, double y0, double y1) noexcept {
    const double a = std::max(x0, -1.0);
    const double b = std::min(x1, 1.0);
    if (!(a < b) || !(y0 < y1)) return 0.0;
    std::vector<double> cuts{a, b};
    for (double y : {y0, y1}) {
        if (std::fabs(y) < 1.0) {
            const double r = std::sqrt(1.0 - y * y);
            for (double c : {-r, r}) {
                if (c > a && c < b) cuts.push_back(c);
            }
        }
    }
    std::sort(cuts.begin(), cuts.end());
    double area = 0.0;
    for (std::size_t k = 0; k + 1 < cuts.size(); ++k) {
        const double lo = cuts[k];
        const double hi = cuts[k + 1];
        if (!(lo < hi)) continue;
        const double mid = 0.5 * (lo + hi);
        const double s = std::sqrt(std::max(0.0, 1.0 - mid * mid));
        const bool upper_is_line = y1 < s;
        const bool lower_is_line = y0 > -s;
        const double upper_mid = upper_is_line ? y1 : s;
        const double lower_mid = lower_is_line ? y0 : -s;
        if (upper_mid <= lower_mid) continue;
        const double arc = half_disk_primitive(hi) - half_disk_primitive(lo);
        const double upper = upper_is_line ? y1 * (hi - lo) : arc;
        const double lower = lower_is_line ? y0 * (hi - lo) : -arc;
        area += upper - lower;
    }
    return std::max(0.0, area);
}

GridPartition::GridPartition(const ModelSpace& space, double delta) : space_(space), delta_(delta) {
    if (!(delta > 0.0) || !std::isfinite(delta)) throw ParameterError("grid delta must be > 0");

    if (space.is_finite()) {
        const std::size_t n = space.size();
        if (delta > 1.0) {
            per_axis_[0] = 1;
            box_to_cell_.assign(1, 0);
            reps_.push_back(Point::index(0));
            mass_.push_back(1.0);
        } else {
            per_axis_[0] = n;
            box_to_cell_.resize(n);
            for (std::size_t i = 0; i < n; ++i) {
                box_to_cell_[i] = static_cast<std::int64_t>(i);
                reps_.push_back(Point::index(i));
                mass_.push_back(1.0 / static_cast<double>(n));
            }
        }
        inradius_ = 1.0;
        return;
    }

    std::size_t total = 1;
    for (std::size_t axis = 0; axis < space.dim(); ++axis) {
        auto [lo, hi] = space.axis_range(axis);
        // Cell diameter is side * sqrt(2) on the square and the torus disk,
        // side otherwise; it must stay strictly below delta.
        const bool planar = space.kind() == SpaceKind::square || (space.kind() == SpaceKind::solid_torus && axis > 0);
        const double spread = (hi - lo) * (planar ? std::numbers::sqrt2 : 1.0);
        std::size_t m = 1;
        while (spread / static_cast<double>(m) >= delta) {
            m *= 2;
            if (m > kMaxGridBoxes) throw ParameterError("grid delta too small: more than 2^24 boxes per axis");
        }
        per_axis_[axis] = m;
        total *= per_axis_[axis];
        if (total > kMaxGridBoxes) throw ParameterError("grid delta too small: more than 2^24 boxes");
    }

    box_to_cell_.assign(total, -1);
    inradius_ = std::numeric_limits<double>::infinity();
    for (std::size_t box = 0; box < total; ++box) {
        Point center = box_center(box);
        double mass = 1.0;
        double depth = std::numeric_limits<double>::infinity();
        std::array<double, 3> lo{}, hi{};
        std::size_t rest = box;
        for (std::size_t axis = space.dim(); axis-- > 0;) {
            const std::size_t m = per_axis_[axis];
            const std::size_t idx = rest % m;
            rest /= m;
            auto [a, b] = space.axis_range(axis);
            const double side = (b - a) / static_cast<double>(m);
            lo[axis] = a + side * static_cast<double>(idx);
            hi[axis] = lo[axis] + side;
            if (space.kind() != SpaceKind::solid_torus || axis == 0) mass *= 1.0 / static_cast<double>(m);
        }
        Point rep = center;
        if (space.kind() == SpaceKind::solid_torus) {
            const double area = disk_box_area(lo[1], hi[1], lo[2], hi[2]);
            if (area <= 0.0) continue;
            mass *= area / std::numbers::pi;
            if (center[1] * center[1] + center[2] * center[2] >= 1.0) {
                // Walk from the box point nearest the origin toward the center,
                // stopping halfway between |q| and the unit circle.
                const double qx = std::clamp(0.0, lo[1], hi[1]);
                const double qy = std::clamp(0.0, lo[2], hi[2]);
                const double target = 0.5 * (1.0 + std::hypot(qx, qy));
                double t_lo = 0.0, t_hi = 1.0;
                for (int it = 0; it < 80; ++it) {
                    const double t = 0.5 * (t_lo + t_hi);
                    const double px = qx + t * (center[1] - qx);
                    const double py = qy + t * (center[2] - qy);
                    (std::hypot(px, py) <= target ? t_lo : t_hi) = t;
                }
                rep[1] = qx + t_lo * (center[1] - qx);
                rep[2] = qy + t_lo * (center[2] - qy);
                depth = std::min(depth, 1.0 - std::hypot(rep[1], rep[2]));
            }
        }
        for (std::size_t axis = 0; axis < space.dim(); ++axis) {
            depth = std::min({depth, rep[axis] - lo[axis], hi[axis] - rep[axis]});
        }
        inradius_ = std::min(inradius_, depth);
        box_to_cell_[box] = static_cast<std::int64_t>(reps_.size());
        reps_.push_back(rep);
        mass_.push_back(mass);
    }
}

Point GridPartition::box_center(std::size_t box) const {
    std::array<double, 3> c{};
    std::size_t rest = box;
    for (std::size_t axis = space_.dim(); axis-- > 0;) {
        const std::size_t m = per_axis_[axis];
        const std::size_t idx = rest % m;
        rest /= m;
        auto [a, b] = space_.axis_range(axis);
        const double side = (b - a) / static_cast<double>(m);
        c[axis] = a + side * (static_cast<double>(idx) + 0.5);
    }
    return Point::from_coords(std::span<const double>(c.data(), space_.dim()));
}

std::size_t GridPartition::box_of(const Point& p) const {
    if (space_.is_finite()) return per_axis_[0] == 1 ? 0 : p.as_index();
    std::size_t box = 0;
    for (std::size_t axis = 0; axis < space_.dim(); ++axis) {
        const std::size_t m = per_axis_[axis];
        auto [a, b] = space_.axis_range(axis);
        const double scaled = (p[axis] - a) / (b - a) * static_cast<double>(m);
        auto idx = static_cast<std::size_t>(std::max(0.0, std::floor(scaled)));
        idx = std::min(idx, m - 1);
        box = box * m + idx;
    }
    return box;
}

std::size_t GridPartition::cell_of(const Point& p) const {
    space_.validate(p);
    std::int64_t cell = box_to_cell_[box_of(p)];
    if (cell < 0) {
        // Only reachable for torus points within tolerance outside the disk.
        Point q = p;
        const double r = std::hypot(p[1], p[2]);
        q[1] *= (1.0 - 1e-9) / r;
        q[2] *= (1.0 - 1e-9) / r;
        cell = box_to_cell_[box_of(q)];
        if (cell < 0) throw InvalidPoint("no grid cell for " + to_string(p));
    }
    return static_cast<std::size_t>(cell);
}

GridPartition build_grid(const ModelSpace& space, double delta) { return GridPartition(space, delta); }

}  // namespace pushforward
