#pragma once

#include <array>
#include <compare>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace pushforward {

/// Absolute tolerance used for real comparisons throughout the library.
inline constexpr double kTolerance = 1e-12;

/// A point of one of the built-in model spaces.
///
/// Coordinates live in a small inline array: one coordinate for the circle,
/// the interval and finite spaces (where it holds the integer index), two for
/// the square and three (phi, x, y) for the solid torus.
class Point {
public:
    Point() = default;
    explicit Point(double a) : c_{a, 0.0, 0.0}, dim_(1) {}
    Point(double a, double b) : c_{a, b, 0.0}, dim_(2) {}
    Point(double a, double b, double c) : c_{a, b, c}, dim_(3) {}

    static Point index(std::size_t i) { return Point(static_cast<double>(i)); }
    static Point from_coords(std::span<const double> coords);

    std::size_t dim() const noexcept { return dim_; }
    double operator[](std::size_t k) const { return c_[k]; }
    double& operator[](std::size_t k) { return c_[k]; }
    std::span<const double> coords() const noexcept { return {c_.data(), dim_}; }
    std::size_t as_index() const { return static_cast<std::size_t>(c_[0]); }

    friend bool operator==(const Point& a, const Point& b) = default;
    friend std::partial_ordering operator<=>(const Point& a, const Point& b);

private:
    std::array<double, 3> c_{};
    std::uint8_t dim_ = 0;
};

std::string to_string(const Point& p);

enum class SpaceKind { finite, circle, interval, square, solid_torus };

/// Descriptor of a compact model metric space with an exact distance.
///
/// The finite space carries the discrete metric (1 between distinct points).
/// The circle is [0,1) mod 1 with arc distance, the interval and square use
/// Euclidean distance, and the solid torus S^1 x D^2 uses
/// max(arc distance on phi, Euclidean distance on the disk part).
class ModelSpace {
public:
    static ModelSpace finite(std::size_t n);
    static ModelSpace circle() { return ModelSpace(SpaceKind::circle, 0); }
    static ModelSpace interval() { return ModelSpace(SpaceKind::interval, 0); }
    static ModelSpace square() { return ModelSpace(SpaceKind::square, 0); }
    static ModelSpace solid_torus() { return ModelSpace(SpaceKind::solid_torus, 0); }

    SpaceKind kind() const noexcept { return kind_; }
    bool is_finite() const noexcept { return kind_ == SpaceKind::finite; }
    /// Number of points of a finite space; 0 for continuum models.
    std::size_t size() const noexcept { return size_; }
    std::size_t dim() const noexcept;
    double diameter() const noexcept;
    std::string name() const;

    /// Lower/upper bound of a coordinate axis; periodic axes span [0,1).
    std::pair<double, double> axis_range(std::size_t axis) const;
    bool periodic_axis(std::size_t axis) const noexcept;

    bool contains(const Point& p) const noexcept;
    /// Throws InvalidPoint naming the violated constraint.
    void validate(const Point& p) const;
    /// Wraps periodic coordinates into [0,1); other coordinates unchanged.
    Point canonical(Point p) const;

    double distance(const Point& a, const Point& b) const;

    friend bool operator==(const ModelSpace&, const ModelSpace&) = default;

private:
    ModelSpace(SpaceKind kind, std::size_t size) : kind_(kind), size_(size) {}

    SpaceKind kind_;
    std::size_t size_;
};

double distance(const ModelSpace& space, const Point& a, const Point& b);

/// Arc distance on R/Z.
double circle_distance(double a, double b) noexcept;

/// Reduces x into [0,1).
double wrap_unit(double x) noexcept;

enum class MapKind {
    finite_table,
    cycle,
    finite_doubling,
    shift,
    identity,
    rotation,
    circle_doubling,
    contraction,
    square_attractor,
    solenoid,
};

std::string to_string(MapKind kind);

/// A built-in dynamical system T on a model space.
///
/// Finite maps are stored as index tables; the shift is the only partial map
/// (the last index has no image) and reports escapes instead of wrapping.
class SystemMap {
public:
    static SystemMap finite_table(std::vector<std::size_t> table);
    static SystemMap cycle(std::size_t n);
    /// T(x_i) = x_{2i mod n}.
    static SystemMap finite_doubling(std::size_t n);
    /// i -> i+1 on finite(n); n-1 has no image.
    static SystemMap shift(std::size_t n);
    static SystemMap identity(const ModelSpace& space);
    static SystemMap rotation(double alpha);
    /// x -> d x mod 1 on the circle.
    static SystemMap circle_doubling(int degree);
    /// x -> p + c (x - p) on the interval.
    static SystemMap contraction(double c, double fixed_point);
    /// (x, y) -> (x, (1/2 + x/2) y) on the unit square.
    static SystemMap square_attractor();
    /// (phi, x, y) -> (2 phi, lambda x + cos(2 pi phi)/2, lambda y + sin(2 pi phi)/2).
    static SystemMap solenoid(double lambda);

    const ModelSpace& space() const noexcept { return space_; }
    MapKind kind() const noexcept { return kind_; }
    std::string name() const { return to_string(kind_); }
    std::optional<double> lipschitz() const noexcept { return lipschitz_; }
    /// Named real parameters in a fixed order, for config echo and summaries.
    std::vector<std::pair<std::string, double>> parameters() const;

    bool is_total() const noexcept { return kind_ != MapKind::shift; }
    /// Image table of a finite map; -1 marks a missing image.
    const std::vector<std::int64_t>& table() const noexcept { return table_; }

    double alpha() const noexcept { return alpha_; }
    int degree() const noexcept { return degree_; }
    double contraction_factor() const noexcept { return factor_; }
    double fixed_point() const noexcept { return fixed_point_; }
    double lambda() const noexcept { return factor_; }

    /// The image T(x); throws EscapedPoint when x leaves the shift window.
    Point evaluate(const Point& x) const;
    /// The image T(x), or nullopt when the map is undefined at x.
    std::optional<Point> try_evaluate(const Point& x) const;
    /// T^n(x); throws EscapedPoint on escape.
    Point iterate(Point x, std::size_t n) const;

private:
    SystemMap(ModelSpace space, MapKind kind) : space_(space), kind_(kind) {}
    Point apply(const Point& x) const;

    ModelSpace space_;
    MapKind kind_;
    std::vector<std::int64_t> table_;
    double alpha_ = 0.0;
    int degree_ = 0;
    double factor_ = 0.0;
    double fixed_point_ = 0.0;
    std::optional<double> lipschitz_;
};

/// Measurable partition of a model space into cells of diameter < delta.
///
/// Continuum spaces are cut into dyadic half-open boxes (the final box along a
/// non-periodic axis is closed). Each axis of length L gets the smallest power
/// of two m with L/m < delta (L sqrt(2)/m < delta for the square and the
/// torus disk); the representative of a cell is its box center. Disk axes of the solid torus cover [-1,1]^2 and keep only boxes
/// that meet the disk. Finite spaces get singleton cells when delta <= 1.
class GridPartition {
public:
    GridPartition(const ModelSpace& space, double delta);

    const ModelSpace& space() const noexcept { return space_; }
    double delta() const noexcept { return delta_; }
    std::size_t size() const noexcept { return reps_.size(); }
    std::size_t boxes_per_axis(std::size_t axis) const { return per_axis_.at(axis); }

    const Point& representative(std::size_t cell) const { return reps_.at(cell); }
    const std::vector<Point>& representatives() const noexcept { return reps_; }
    /// Cell containing p (validated).
    std::size_t cell_of(const Point& p) const;
    /// Mass of the cell under the normalized reference measure (Lebesgue on
    /// continuum spaces, counting measure on finite ones), in closed form.
    double uniform_mass(std::size_t cell) const { return mass_.at(cell); }
    /// Radius of a ball around every representative that stays in its cell.
    double inradius() const noexcept { return inradius_; }

private:
    std::size_t box_of(const Point& p) const;
    Point box_center(std::size_t box) const;

    ModelSpace space_;
    double delta_;
    std::array<std::size_t, 3> per_axis_{1, 1, 1};
    std::vector<std::int64_t> box_to_cell_;
    std::vector<Point> reps_;
    std::vector<double> mass_;
    double inradius_ = 0.0;
};

GridPartition build_grid(const ModelSpace& space, double delta);

/// Area of [x0,x1] x [y0,y1] intersected with the closed unit disk.
double disk_box_area(double x0, double x1, double y0, double y1) noexcept;

}  // namespace pushforward
