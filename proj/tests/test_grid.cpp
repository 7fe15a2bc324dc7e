#include <cmath>
#include <stdexcept>

#include "biwave/grid.hpp"
#include "doctest.h"

using namespace biwave;

TEST_CASE("unit square grid geometry") {
  const Grid g = build_grid(2, {1.0, 1.0}, {17, 17}, {0.5, 0.5});
  CHECK(g.dim == 2);
  CHECK(g.n_nodes == 289);
  CHECK(g.n_interior() == 225);
  CHECK(g.n_boundary() == 64);
  CHECK(g.h[0] == doctest::Approx(0.0625).epsilon(1e-15));
  CHECK(g.cell == doctest::Approx(0.0625 * 0.0625).epsilon(1e-15));
  CHECK(g.diam == doctest::Approx(std::sqrt(2.0)).epsilon(1e-15));
  // For the centered observation point, (x - x0) . n = 1/2 on every edge.
  CHECK(g.c0 == doctest::Approx(0.5).epsilon(1e-15));
}

TEST_CASE("index round trips and boundary classification") {
  const Grid g = build_grid(2, {1.0, 2.0}, {9, 17}, {0.5, 1.0});
  for (int ix = 0; ix < g.n[0]; ++ix)
    for (int iy = 0; iy < g.n[1]; ++iy) {
      const int node = g.index(ix, iy);
      const auto m = g.multi_index(node);
      REQUIRE(m[0] == ix);
      REQUIRE(m[1] == iy);
      const auto x = g.coord(node);
      REQUIRE(x[0] == doctest::Approx(ix * g.h[0]).epsilon(1e-15));
      REQUIRE(x[1] == doctest::Approx(iy * g.h[1]).epsilon(1e-15));
      const bool edge = ix == 0 || ix == g.n[0] - 1 || iy == 0 || iy == g.n[1] - 1;
      REQUIRE(g.is_boundary(node) == edge);
    }
  CHECK(g.n_interior() + g.n_boundary() == g.n_nodes);
}

TEST_CASE("boundary weights integrate the perimeter") {
  const Grid g = build_grid(2, {1.0, 1.0}, {17, 33}, {0.5, 0.5});
  double perimeter = 0;
  int corners = 0;
  for (const auto& b : g.boundary) {
    perimeter += b.weight;
    if (b.corner) ++corners;
    const double len = std::hypot(b.normal[0], b.normal[1]);
    CHECK(len == doctest::Approx(1.0).epsilon(1e-15));
  }
  CHECK(corners == 4);
  CHECK(perimeter == doctest::Approx(4.0).epsilon(1e-13));
}

TEST_CASE("tau weights reproduce the tensor trapezoid rule") {
  const Grid g = build_grid(2, {1.0, 1.0}, {9, 9}, {0.5, 0.5});
  // Trapezoid integrates constants exactly: sum tau * cell = area.
  CHECK(g.tau.sum() * g.cell == doctest::Approx(1.0).epsilon(1e-14));
  // And bilinears: integral of x*y over the unit square is 1/4.
  double s = 0;
  for (int node = 0; node < g.n_nodes; ++node) {
    const auto x = g.coord(node);
    s += g.tau[node] * x[0] * x[1];
  }
  CHECK(s * g.cell == doctest::Approx(0.25).epsilon(1e-14));
}

TEST_CASE("1d grid specializations") {
  const Grid g = build_grid(1, {1.0, 0.0}, {17, 1}, {0.5, 0.0});
  CHECK(g.n_nodes == 17);
  CHECK(g.n[1] == 1);
  CHECK(g.n_interior() == 15);
  CHECK(g.n_boundary() == 2);
  CHECK(g.cell == doctest::Approx(g.h[0]).epsilon(1e-15));
  CHECK(g.diam == doctest::Approx(1.0).epsilon(1e-15));
  for (const auto& b : g.boundary) CHECK(b.weight == 1.0);  // counting measure
  CHECK(g.c0 == doctest::Approx(0.5).epsilon(1e-15));
}

TEST_CASE("minimal observation time") {
  const Grid g = build_grid(2, {1.0, 1.0}, {17, 17}, {0.5, 0.5});
  CHECK(min_observation_time(g, 1.0) == doctest::Approx(2.0 * std::sqrt(2.0)).epsilon(1e-15));
  CHECK(min_observation_time(g, 4.0) == doctest::Approx(std::sqrt(2.0)).epsilon(1e-15));
  CHECK_THROWS_AS(min_observation_time(g, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(min_observation_time(g, -1.0), std::invalid_argument);
}

TEST_CASE("grid nesting predicate") {
  const Grid c = build_grid(2, {1.0, 1.0}, {17, 17}, {0.5, 0.5});
  const Grid f = build_grid(2, {1.0, 1.0}, {33, 33}, {0.5, 0.5});
  const Grid off = build_grid(2, {1.0, 1.0}, {32, 32}, {0.5, 0.5});
  const Grid stretched = build_grid(2, {2.0, 1.0}, {33, 33}, {0.5, 0.5});
  CHECK(grids_nested(c, f));
  CHECK(grids_nested(c, c));
  CHECK_FALSE(grids_nested(c, off));
  CHECK_FALSE(grids_nested(c, stretched));
}

TEST_CASE("grid validation") {
  CHECK_THROWS_AS(build_grid(3, {1, 1}, {9, 9}, {0.5, 0.5}), std::invalid_argument);
  CHECK_THROWS_AS(build_grid(2, {1, 1}, {4, 9}, {0.5, 0.5}), std::invalid_argument);
  CHECK_THROWS_AS(build_grid(2, {0, 1}, {9, 9}, {0.0, 0.5}), std::invalid_argument);
  CHECK_THROWS_AS(build_grid(2, {1, 1}, {9, 9}, {1.5, 0.5}), std::invalid_argument);
  CHECK_THROWS_AS(build_grid(2, {1, 1}, {9, 9}, {-0.1, 0.5}), std::invalid_argument);
}
