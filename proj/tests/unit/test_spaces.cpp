#include <algorithm>
#include <cmath>
#include <vector>

#include "doctest.h"
#include "pushforward/errors.hpp"
#include "pushforward/random.hpp"
#include "pushforward/spaces.hpp"

using namespace pushforward;

namespace {

std::vector<ModelSpace> all_spaces() {
    return {ModelSpace::finite(5), ModelSpace::circle(), ModelSpace::interval(), ModelSpace::square(),
            ModelSpace::solid_torus()};
}

}  // namespace

TEST_CASE("distance examples") {
    CHECK(distance(ModelSpace::circle(), Point(0.1), Point(0.9)) == doctest::Approx(0.2).epsilon(1e-12));
    const auto f5 = ModelSpace::finite(5);
    CHECK(distance(f5, Point::index(2), Point::index(2)) == 0.0);
    CHECK(distance(f5, Point::index(2), Point::index(4)) == 1.0);
    CHECK(distance(ModelSpace::interval(), Point(0.25), Point(0.75)) == 0.5);
    CHECK(distance(ModelSpace::square(), Point(0.0, 0.0), Point(0.3, 0.4)) == doctest::Approx(0.5));
    // Torus: max of the arc part and the disk part.
    const auto t = ModelSpace::solid_torus();
    CHECK(distance(t, Point(0.05, 0.0, 0.0), Point(0.95, 0.0, 0.0)) == doctest::Approx(0.1));
    CHECK(distance(t, Point(0.0, 0.0, 0.0), Point(0.1, 0.6, 0.8)) == doctest::Approx(1.0));
}

TEST_CASE("invalid points are rejected") {
    CHECK_THROWS_AS(ModelSpace::circle().validate(Point(1.0)), InvalidPoint);
    CHECK_THROWS_AS(ModelSpace::interval().validate(Point(-0.1)), InvalidPoint);
    CHECK_THROWS_AS(ModelSpace::square().validate(Point(0.5)), InvalidPoint);
    CHECK_THROWS_AS(ModelSpace::solid_torus().validate(Point(0.0, 0.8, 0.8)), InvalidPoint);
    CHECK_THROWS_AS(ModelSpace::finite(3).validate(Point::index(3)), InvalidPoint);
    CHECK_THROWS_AS(distance(ModelSpace::square(), Point(0.1), Point(0.2, 0.2)), InvalidPoint);
}

TEST_CASE("metric axioms on random triples") {
    for (const auto& space : all_spaces()) {
        Rng rng(derive_seed(7, space.dim() * 31 + space.size()));
        for (int i = 0; i < 10000; ++i) {
            const Point a = random_point(space, rng), b = random_point(space, rng), c = random_point(space, rng);
            const double ab = space.distance(a, b), ba = space.distance(b, a);
            CHECK(ab >= 0.0);
            CHECK(ab == ba);
            CHECK(space.distance(a, a) == 0.0);
            CHECK(space.distance(a, c) <= ab + space.distance(b, c) + 1e-12);
            if (!(a == b)) CHECK(ab > 0.0);
        }
    }
}

TEST_CASE("evaluate examples") {
    CHECK(SystemMap::circle_doubling(2).evaluate(Point(0.3))[0] == doctest::Approx(0.6).epsilon(1e-15));
    CHECK(SystemMap::rotation(0.0).evaluate(Point(0.37))[0] == 0.37);
    CHECK(SystemMap::rotation(0.25).evaluate(Point(0.9))[0] == doctest::Approx(0.15));
    const Point y = SystemMap::square_attractor().evaluate(Point(0.5, 0.8));
    CHECK(y[0] == 0.5);
    CHECK(y[1] == doctest::Approx(0.6).epsilon(1e-15));
    CHECK(SystemMap::contraction(0.5, 0.0).evaluate(Point(1.0))[0] == 0.5);
    CHECK(SystemMap::finite_doubling(4).evaluate(Point::index(3)).as_index() == 2);
    CHECK(SystemMap::cycle(3).evaluate(Point::index(2)).as_index() == 0);
}

TEST_CASE("shift reports escape instead of wrapping") {
    const auto s = SystemMap::shift(4);
    CHECK(s.evaluate(Point::index(2)).as_index() == 3);
    CHECK_FALSE(s.try_evaluate(Point::index(3)).has_value());
    CHECK_THROWS_AS(s.evaluate(Point::index(3)), EscapedPoint);
    CHECK_FALSE(s.is_total());
}

TEST_CASE("parameter validation") {
    CHECK_THROWS_AS(SystemMap::solenoid(0.5), ParameterError);
    CHECK_THROWS_AS(SystemMap::circle_doubling(0), ParameterError);
    CHECK_THROWS_AS(SystemMap::contraction(1.5, 0.0), ParameterError);
    CHECK_THROWS_AS(SystemMap::finite_table({0, 3}), ParameterError);
    CHECK_THROWS_AS(build_grid(ModelSpace::circle(), 0.0), ParameterError);
}

TEST_CASE("declared Lipschitz constants") {
    CHECK(SystemMap::rotation(0.3).lipschitz().value() == 1.0);
    CHECK(SystemMap::circle_doubling(3).lipschitz().value() == 3.0);
    CHECK(SystemMap::contraction(0.5, 0.2).lipschitz().value() == 0.5);
    CHECK_FALSE(SystemMap::square_attractor().lipschitz().has_value());
}

TEST_CASE("square attractor and solenoid map into their spaces") {
    Rng rng(11);
    const auto sq = SystemMap::square_attractor();
    const auto sol = SystemMap::solenoid(0.3);
    for (int i = 0; i < 10000; ++i) {
        const Point p = random_point(ModelSpace::square(), rng);
        CHECK(ModelSpace::square().contains(sq.evaluate(p)));
        const Point q = random_point(ModelSpace::solid_torus(), rng);
        const Point r = sol.evaluate(q);
        CHECK(std::hypot(r[1], r[2]) < 1.0);
        CHECK(ModelSpace::solid_torus().contains(r));
    }
}

TEST_CASE("grid examples") {
    CHECK(build_grid(ModelSpace::interval(), 1.5).size() == 1);
    CHECK(build_grid(ModelSpace::interval(), 2.0).size() == 1);
    CHECK(build_grid(ModelSpace::finite(6), 0.5).size() == 6);
    const auto g = build_grid(ModelSpace::circle(), 0.25);
    REQUIRE(g.size() == 8);
    for (std::size_t c = 0; c < 8; ++c) {
        CHECK(g.representative(c)[0] == doctest::Approx((c + 0.5) / 8.0));
        CHECK(g.uniform_mass(c) == doctest::Approx(0.125));
    }
}

TEST_CASE("grid partition invariants") {
    const std::vector<double> deltas{0.9, 0.3, 0.11};
    for (const auto& space : all_spaces()) {
        for (double delta : deltas) {
            const auto g = build_grid(space, delta);
            double mass = 0.0;
            for (std::size_t c = 0; c < g.size(); ++c) {
                CHECK(g.cell_of(g.representative(c)) == c);
                CHECK(space.contains(g.representative(c)));
                mass += g.uniform_mass(c);
            }
            CHECK(mass == doctest::Approx(1.0).epsilon(1e-9));
            // Points sharing a cell are closer than delta; every point has one cell.
            Rng rng(derive_seed(3, static_cast<std::uint64_t>(delta * 1000)));
            std::vector<std::vector<Point>> members(g.size());
            for (int i = 0; i < 3000; ++i) {
                const Point p = random_point(space, rng);
                const std::size_t c = g.cell_of(p);
                REQUIRE(c < g.size());
                members[c].push_back(p);
            }
            double widest = 0.0;
            for (const auto& cell : members)
                for (std::size_t i = 0; i < cell.size(); ++i)
                    for (std::size_t j = i + 1; j < cell.size(); ++j)
                        widest = std::max(widest, space.distance(cell[i], cell[j]));
            CHECK(widest < delta);
            // The inradius ball around each representative stays in its cell.
            if (!space.is_finite()) {
                for (std::size_t c = 0; c < g.size(); ++c) {
                    Point q = g.representative(c);
                    q[space.dim() - 1] += 0.99 * g.inradius();
                    if (space.contains(q)) CHECK(g.cell_of(q) == c);
                }
            }
        }
    }
}

TEST_CASE("disk box area") {
    CHECK(disk_box_area(-1, 1, -1, 1) == doctest::Approx(M_PI));
    CHECK(disk_box_area(0, 1, 0, 1) == doctest::Approx(M_PI / 4));
    CHECK(disk_box_area(0.8, 1, 0.8, 1) == 0.0);
}
