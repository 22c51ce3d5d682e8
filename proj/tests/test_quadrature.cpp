#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numbers>

#include "deoq/quadrature.hpp"

using namespace deoq::quad;

namespace {

constexpr double kPi = std::numbers::pi;

double sum_weights(const Rule& r) {
  double s = 0.0;
  for (double w : r.weights) s += w;
  return s;
}

double arc_length(const std::vector<Arc>& arcs) {
  double s = 0.0;
  for (const Arc& a : arcs) s += a.hi - a.lo;
  return s;
}

ConvexPolygon square(double x0, double y0, double half) {
  return {{x0 - half, y0 - half}, {x0 + half, y0 - half}, {x0 + half, y0 + half}, {x0 - half, y0 + half}};
}

}  // namespace

TEST_SUITE("quadrature") {
  TEST_CASE("Gauss-Legendre integrates polynomials exactly") {
    for (int n : {1, 2, 5, 21, 41}) {
      const Rule r = gauss_legendre(n);
      REQUIRE(r.size() == static_cast<std::size_t>(n));
      CHECK(sum_weights(r) == doctest::Approx(2.0).epsilon(1e-14));
      for (int k = 0; k <= 2 * n - 1; ++k) {
        const double exact = k % 2 ? 0.0 : 2.0 / (k + 1);
        CHECK(std::abs(integrate(r, [k](double x) { return std::pow(x, k); }) - exact) < 1e-13);
      }
    }
  }

  TEST_CASE("Gauss-Hermite moments") {
    for (int n : {1, 3, 8, 21}) {
      const Rule r = gauss_hermite(n);
      CHECK(sum_weights(r) == doctest::Approx(std::sqrt(kPi)).epsilon(1e-13));
      // int u^(2m) exp(-u^2) du = Gamma(m + 1/2)
      for (int m = 0; 2 * m <= std::min(2 * n - 1, 20); ++m) {
        const double exact = std::tgamma(m + 0.5);
        const double got = integrate(r, [m](double u) { return std::pow(u, 2 * m); });
        CHECK(got == doctest::Approx(exact).epsilon(1e-11));
        CHECK(std::abs(integrate(r, [m](double u) { return std::pow(u, 2 * m + 1); })) < 1e-10 * (1 + exact));
      }
    }
  }

  TEST_CASE("invalid rule orders throw") {
    CHECK_THROWS(gauss_legendre(0));
    CHECK_THROWS(gauss_hermite(0));
  }

  TEST_CASE("composite rule respects breaks and panel width") {
    const std::vector<double> breaks{0.0, 0.3, 2.0};
    const Rule r = composite(breaks, 0.25, gauss_legendre(4));
    CHECK(sum_weights(r) == doctest::Approx(2.0).epsilon(1e-14));
    CHECK(integrate(r, [](double x) { return std::exp(x); }) ==
          doctest::Approx(std::exp(2.0) - 1.0).epsilon(1e-12));
    // |x - 0.3| is integrated exactly because 0.3 is a break
    CHECK(integrate(r, [](double x) { return std::abs(x - 0.3); }) ==
          doctest::Approx(0.045 + 0.5 * 1.7 * 1.7).epsilon(1e-13));
  }

  TEST_CASE("circle arcs inside a polygon") {
    const ConvexPolygon big = square(0.0, 0.0, 2.0);
    CHECK(arc_length(circle_arcs(big, 1.0)) == doctest::Approx(2 * kPi));
    CHECK(circle_arcs(big, 3.0).empty());
    // a circle through the corner region: radius between 2 and 2 sqrt 2
    const double r = 2.5;
    const double cut = std::acos(2.0 / r);
    CHECK(arc_length(circle_arcs(big, r)) == doctest::Approx(2 * kPi - 8 * cut).epsilon(1e-12));
    // square away from the origin: arcs span the visible angle only
    const ConvexPolygon off = square(3.0, 0.0, 1.0);
    const double len = arc_length(circle_arcs(off, 3.0));
    CHECK(len == doctest::Approx(2 * std::asin(1.0 / 3.0)).epsilon(1e-12));
  }

  TEST_CASE("radial breaks of an offset square") {
    const auto breaks = radial_breaks(square(3.0, 0.0, 1.0));
    REQUIRE(!breaks.empty());
    CHECK(breaks.front().radius == doctest::Approx(2.0));
    CHECK(breaks.back().radius == doctest::Approx(std::hypot(4.0, 1.0)));
    for (std::size_t i = 1; i < breaks.size(); ++i) {
      CHECK(breaks[i].radius >= breaks[i - 1].radius);
    }
  }

  TEST_CASE("polar nodes reproduce area and moments") {
    PolarOptions opt;
    opt.radial_order = 21;
    opt.angular_order = 21;
    opt.max_radial_width = 0.25;
    opt.length_scale = 0.5;
    for (const ConvexPolygon& poly : {square(0.0, 0.0, 1.0), square(2.0, 1.0, 0.5)}) {
      const auto nodes = polar_nodes(poly, [](double, double) { return 1.0; }, opt);
      double area = 0.0;
      for (const auto& n : nodes) area += n.mass;
      const double side = poly[1].x - poly[0].x;
      CHECK(area == doctest::Approx(side * side).epsilon(1e-10));
    }
    // Gaussian over a large box: mass 1, sin^2 moment 1/2, sin 2 theta moment 0
    const ConvexPolygon box = square(0.0, 0.0, 8.0);
    const auto g = polar_nodes(
        box, [](double x, double y) { return std::exp(-(x * x + y * y) / 2.0) / (2 * kPi); }, opt);
    double m = 0.0, az = 0.0, as = 0.0;
    for (const auto& n : g) {
      m += n.mass;
      az += n.amp_zero;
      as += n.amp_sup;
    }
    CHECK(m == doctest::Approx(1.0).epsilon(1e-10));
    CHECK(az == doctest::Approx(0.5).epsilon(1e-10));
    CHECK(std::abs(as) < 1e-12);
  }

  TEST_CASE("polar nodes of a tilted density") {
    PolarOptions opt;
    opt.max_radial_width = 0.25;
    opt.length_scale = 0.3;
    // Gaussian centred at (1, 1): the sin 2 theta moment is positive
    const auto nodes = polar_nodes(
        square(1.0, 1.0, 2.5),
        [](double x, double y) {
          const double dx = x - 1.0, dy = y - 1.0;
          return std::exp(-(dx * dx + dy * dy) / (2 * 0.09)) / (2 * kPi * 0.09);
        },
        opt);
    double m = 0.0, as = 0.0;
    for (const auto& n : nodes) {
      m += n.mass;
      as += n.amp_sup;
    }
    CHECK(m == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(as > 0.8);
    CHECK(as <= 1.0);
  }
}
