#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "pushforward/spaces.hpp"

namespace pushforward {

struct Atom {
    Point point;
    double weight = 0.0;

    friend bool operator==(const Atom&, const Atom&) = default;
};

/// Finitely supported probability measure sum_i w_i delta_{x_i}.
///
/// Construction validates every point, drops zero weights, merges atoms
/// closer than kTolerance (weights add, the merged point is the weighted
/// average) and sorts atoms lexicographically, so equal measures have equal
/// atom lists. Mass that left a partial map's window is carried in
/// escaped_mass(); atom weights plus escaped mass sum to 1.
class AtomicMeasure {
public:
    AtomicMeasure(const ModelSpace& space, std::vector<Atom> atoms, double escaped_mass = 0.0);

    static AtomicMeasure dirac(const ModelSpace& space, const Point& x);
    /// Measure with the given weights on indices 0..n-1 of finite(n).
    static AtomicMeasure from_simplex(const ModelSpace& space, std::span<const double> weights);

    const ModelSpace& space() const noexcept { return space_; }
    std::span<const Atom> atoms() const noexcept { return atoms_; }
    std::size_t size() const noexcept { return atoms_.size(); }
    const Atom& operator[](std::size_t i) const { return atoms_[i]; }
    double escaped_mass() const noexcept { return escaped_; }
    double total_weight() const noexcept;
    /// Weights as a dense vector over the indices of a finite space.
    std::vector<double> to_simplex() const;

    friend bool operator==(const AtomicMeasure&, const AtomicMeasure&) = default;

private:
    ModelSpace space_;
    std::vector<Atom> atoms_;
    double escaped_ = 0.0;
};

/// Phi(mu) = mu o T^{-1}: every atom (x, w) moves to (T(x), w). Atoms whose
/// image is undefined (shift overflow) are added to the escaped mass.
AtomicMeasure push_forward(const SystemMap& system, const AtomicMeasure& mu);

/// The 0/1 matrix [T] (row i has its one in column T(i)) and its transpose,
/// the matrix of the push-forward acting on weight vectors.
class PushForwardMatrix {
public:
    explicit PushForwardMatrix(std::vector<std::int64_t> images);

    std::size_t n() const noexcept { return n_; }
    /// False for partial maps, whose rows without an image are zero.
    bool total() const noexcept { return total_; }
    int t(std::size_t i, std::size_t j) const { return t_[i * n_ + j]; }
    int phi(std::size_t i, std::size_t j) const { return phi_[i * n_ + j]; }
    std::vector<std::vector<int>> t_rows() const;
    std::vector<std::vector<int>> phi_rows() const;
    /// phi_matrix * p without simplex checks.
    std::vector<double> multiply(std::span<const double> p) const;

private:
    std::size_t n_;
    bool total_ = true;
    std::vector<std::uint8_t> t_;
    std::vector<std::uint8_t> phi_;
};

/// Throws UnsupportedSpace unless the system lives on a finite space.
PushForwardMatrix matrix_of(const SystemMap& system);

/// q = phi_matrix p for p in the simplex.
std::vector<double> apply_matrix(const PushForwardMatrix& m, std::span<const double> p);

/// Piecewise-linear function of one coordinate with values in [0,1].
/// Periodic functions have knots spanning [0,1] with equal end values.
class PiecewiseLinear {
public:
    PiecewiseLinear(std::vector<double> knots, std::vector<double> values, bool periodic = false);

    static PiecewiseLinear constant(double value, double lo, double hi, bool periodic = false);
    /// max(0, 1 - dist(x, center)/width) on [lo,hi] (arc distance when periodic).
    static PiecewiseLinear hat(double center, double width, double lo, double hi, bool periodic);

    double operator()(double x) const;
    std::span<const double> knots() const noexcept { return knots_; }
    std::span<const double> values() const noexcept { return values_; }
    bool periodic() const noexcept { return periodic_; }

private:
    std::vector<double> knots_;
    std::vector<double> values_;
    bool periodic_;
};

/// A continuous function X -> [0,1]: a value table on finite spaces, a
/// product of per-axis piecewise-linear factors on continuum spaces.
class TestFunction {
public:
    static TestFunction constant(const ModelSpace& space, double value);
    static TestFunction table(const ModelSpace& space, std::vector<double> values);
    static TestFunction product(const ModelSpace& space, std::vector<PiecewiseLinear> factors);

    const ModelSpace& space() const noexcept { return space_; }
    double operator()(const Point& x) const;

private:
    TestFunction(const ModelSpace& space) : space_(space) {}

    ModelSpace space_;
    std::vector<double> table_;
    std::vector<PiecewiseLinear> factors_;
};

/// sum_i w_i f(x_i).
double integrate(const TestFunction& f, const AtomicMeasure& mu);

/// sum_i mu(P_i) delta_{p_i} over the grid cells, empty cells dropped.
AtomicMeasure quantize(const AtomicMeasure& mu, const GridPartition& grid);
/// Quantization of the normalized reference measure using closed-form cell masses.
AtomicMeasure quantize_uniform(const GridPartition& grid);

/// sum_i 2^{i-1}/(2^n - 1) delta_{x_i}; coinciding points merge.
AtomicMeasure dyadic_embed(const ModelSpace& space, std::span<const Point> points);
/// The weights 2^{i-1}/(2^n - 1), i = 1..n.
std::vector<double> dyadic_weights(std::size_t n);

/// Uniform measure on {x, T x, ..., T^{k-1} x}; throws NotPeriodic unless
/// T^k x returns within 1e-9 of x.
AtomicMeasure periodic_orbit_measure(const SystemMap& system, const Point& x, std::size_t period);

inline constexpr double kPeriodTolerance = 1e-9;

}  // namespace pushforward
