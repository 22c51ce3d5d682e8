#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <vector>

#include "deoq/disorder.hpp"
#include "deoq/error.hpp"
#include "deoq/quadrature.hpp"

using namespace deoq;

namespace {

const TimeGrid kShort{200.0, 2001};

double late_swing(const ProbabilityTrace& tr, double lo, double hi) {
  double mn = 1.0, mx = 0.0;
  for (std::size_t k = 0; k < tr.times.size(); ++k) {
    if (tr.times[k] < lo || tr.times[k] > hi) continue;
    mn = std::min(mn, tr.values[k]);
    mx = std::max(mx, tr.values[k]);
  }
  return mx - mn;
}

double max_diff(const std::vector<double>& a, const std::vector<double>& b) {
  double m = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) m = std::max(m, std::abs(a[k] - b[k]));
  return m;
}

}  // namespace

TEST_SUITE("disorder") {
  TEST_CASE("no disorder reproduces the closed forms") {
    const ExchangeParams p;
    for (auto init : {InitialState::zero, InitialState::superposition}) {
      const auto tr = disorder_average_quadrature(p, {}, init, kShort);
      REQUIRE(tr.values.size() == kShort.points);
      for (std::size_t k = 0; k < tr.times.size(); ++k) {
        CHECK(std::abs(tr.values[k] - return_probability(init, p, 0.0, tr.times[k])) < 1e-12);
      }
    }
  }

  TEST_CASE("trace metadata and invariants") {
    const auto spec = NoiseSpec::symmetric(0.3, 0.1);
    for (auto init : {InitialState::zero, InitialState::superposition}) {
      const auto tr = disorder_average_quadrature({}, spec, init, kShort);
      CHECK(tr.method == AverageMethod::quadrature);
      CHECK(tr.initial == init);
      CHECK(tr.noise == spec);
      CHECK(tr.std_errors.empty());
      CHECK(tr.times.front() == 0.0);
      CHECK(tr.times.back() == 200.0);
      CHECK(std::abs(tr.values.front() - (init == InitialState::zero ? 1.0 : 0.5)) < 1e-9);
      for (double v : tr.values) {
        CHECK(v >= 0.0);
        CHECK(v <= 1.0);
      }
      CHECK_FALSE(tr.convergence_warning);
      CHECK(tr.refinement_change < kConvergenceTolerance);
    }
  }

  TEST_CASE("field noise alone oscillates and settles below 1") {
    const auto tr =
        disorder_average_quadrature({}, NoiseSpec::symmetric(0.75, 0.0), InitialState::zero, kShort);
    const double early = late_swing(tr, 0.0, 10.0);
    CHECK(early > 0.3);
    CHECK(late_swing(tr, 150.0, 200.0) < 0.25 * early);
    double tail = 0.0;
    for (std::size_t k = 1500; k < tr.values.size(); ++k) tail += tr.values[k];
    tail /= static_cast<double>(tr.values.size() - 1500);
    CHECK(tail < 0.95);
    CHECK(tail > 0.25);
  }

  TEST_CASE("field noise alone leaves a slow tail that grows with its width") {
    // with fixed couplings the splitting has a minimum at d = 0; once the field
    // spread reaches it the oscillation decays only like t^-1/2
    const TimeGrid g{160.0, 3201};
    std::vector<double> times;
    for (int k = 0; k < 14; ++k) times.push_back(150.0 + 0.5 * k);
    double swing[2];
    int i = 0;
    for (double se : {0.1, 0.3}) {
      const auto spec = NoiseSpec::symmetric(se, 0.0);
      const auto q = disorder_average_quadrature({}, spec, InitialState::zero, g);
      const auto [mean, err] = monte_carlo_points({}, spec, InitialState::zero, times, 200000, 23);
      double lo = 1.0, hi = 0.0;
      for (std::size_t k = 0; k < times.size(); ++k) {
        const double v = q.values[3000 + 10 * k];
        CHECK(std::abs(v - mean[k]) < 4.5 * err[k]);
        lo = std::min(lo, v);
        hi = std::max(hi, v);
      }
      swing[i++] = hi - lo;
    }
    CHECK(swing[0] < 0.01);
    CHECK(swing[1] > 0.05);
  }

  TEST_CASE("quadrature agrees with Monte Carlo") {
    const std::vector<NoiseSpec> specs{NoiseSpec::symmetric(0.1, 0.1), NoiseSpec::symmetric(0.5, 0.2),
                                       NoiseSpec::symmetric(0.0, 0.3), {0.2, 0.05, 0.0, 0.5, 1.5}};
    const TimeGrid g{200.0, 20001};
    std::vector<std::size_t> idx;
    std::vector<double> times;
    for (std::size_t k = 37; k < g.points; k += 800) {
      idx.push_back(k);
      times.push_back(g.at(k));
    }
    for (const auto& spec : specs) {
      for (auto init : {InitialState::zero, InitialState::superposition}) {
        const auto q = disorder_average_quadrature({}, spec, init, g);
        const auto [mean, err] = monte_carlo_points({}, spec, init, times, 200000, 17);
        for (std::size_t i = 0; i < times.size(); ++i) {
          CHECK(std::abs(q.values[idx[i]] - mean[i]) < 4.5 * err[i] + 1e-12);
        }
      }
    }
  }

  TEST_CASE("single noiseless Monte Carlo sample is the closed form") {
    const auto tr = disorder_average_mc({}, {}, InitialState::zero, kShort, 1, 5);
    for (std::size_t k = 0; k < tr.times.size(); ++k) {
      CHECK(tr.values[k] == return_probability_zero({}, 0.0, tr.times[k]));
    }
    CHECK(tr.method == AverageMethod::monte_carlo);
    CHECK(tr.std_errors.size() == tr.values.size());
  }

  TEST_CASE("Monte Carlo is reproducible and seed-dependent") {
    const auto spec = NoiseSpec::symmetric(0.2, 0.1);
    const auto a = disorder_average_mc({}, spec, InitialState::superposition, kShort, 10000, 9);
    const auto b = disorder_average_mc({}, spec, InitialState::superposition, kShort, 10000, 9);
    const auto c = disorder_average_mc({}, spec, InitialState::superposition, kShort, 10000, 10);
    CHECK(a.values == b.values);
    CHECK(a.std_errors == b.std_errors);
    CHECK(a.values != c.values);
  }

  TEST_CASE("swapping the two couplings") {
    const ExchangeParams p;
    ExchangeParams swapped = p;
    std::swap(swapped.j1, swapped.j2);
    const NoiseSpec spec{0.3, 0.1, 0.2, p.j1, p.j2};
    const NoiseSpec flipped{0.3, 0.2, 0.1, p.j2, p.j1};
    // the zero-state average depends on c^2 only; the superposition one on c d,
    // which changes sign, so it mirrors about 1/2
    const auto a = disorder_average_quadrature(p, spec, InitialState::zero, kShort);
    const auto b = disorder_average_quadrature(swapped, flipped, InitialState::zero, kShort);
    CHECK(max_diff(a.values, b.values) < 1e-7);
    const auto c = disorder_average_quadrature(p, spec, InitialState::superposition, kShort);
    auto d = disorder_average_quadrature(swapped, flipped, InitialState::superposition, kShort);
    for (double& v : d.values) v = 1.0 - v;
    CHECK(max_diff(c.values, d.values) < 1e-7);
  }

  TEST_CASE("late-time swing shrinks with charge noise and with field noise on top of it") {
    const TimeGrid g{160.0, 3201};
    for (double se : {0.0, 0.2}) {
      double prev = 2.0;
      for (double sj : {0.0, 0.05, 0.1, 0.2}) {
        const auto tr = disorder_average_quadrature({}, NoiseSpec::symmetric(se, sj),
                                                    InitialState::zero, g);
        const double s = late_swing(tr, 140.0, 160.0);
        CHECK(s <= prev + 1e-6);
        prev = s;
      }
    }
    for (double sj : {0.05, 0.1}) {
      double prev = 2.0;
      for (double se : {0.0, 0.1, 0.3, 0.6}) {
        const auto tr = disorder_average_quadrature({}, NoiseSpec::symmetric(se, sj),
                                                    InitialState::zero, g);
        const double s = late_swing(tr, 140.0, 160.0);
        CHECK(s <= prev + 1e-6);
        prev = s;
      }
    }
  }

  TEST_CASE("three-variable density matches direct integration") {
    const NoiseSpec spec = NoiseSpec::symmetric(0.2, 0.15);
    const double jp = 0.5;
    const std::vector<double> breaks{0.0, 6.0};
    const auto rule = quad::composite(breaks, 0.05, quad::gauss_legendre(20));
    for (auto [d, delta] : {std::pair{-0.5, -1.0}, {-0.2, -0.8}, {-0.9, -1.3}, {0.1, -0.6}}) {
      // j1 = (s + delta)/2, j2 = (s - delta)/2, delta_e = d - j' + s/2; Jacobian 1/2
      const double direct = quad::integrate(rule, [&](double s) {
        const double j1 = 0.5 * (s + delta), j2 = 0.5 * (s - delta);
        if (j1 < 0.0 || j2 < 0.0) return 0.0;
        return 0.5 * pdf_delta_e(d - jp + 0.5 * s, spec.sigma_e) *
               pdf_exchange(j1, spec.j01, spec.sigma_j1) * pdf_exchange(j2, spec.j02, spec.sigma_j2);
      });
      CHECK(detuning_difference_density(d, delta, jp, spec) ==
            doctest::Approx(direct).epsilon(1e-8));
    }
  }

  TEST_CASE("spectral measure mass is close to one") {
    for (const auto& spec : {NoiseSpec::symmetric(0.1, 0.0), NoiseSpec::symmetric(0.0, 0.2),
                             NoiseSpec::symmetric(0.3, 0.3), NoiseSpec{0.0, 0.1, 0.2, 0.5, 1.5}}) {
      const auto m = spectral_measure({}, spec, {}, 200.0);
      CHECK(m.total_mass == doctest::Approx(1.0).epsilon(1e-6));
      CHECK(!m.nodes.empty());
    }
  }

  TEST_CASE("invalid inputs are rejected") {
    CHECK_THROWS_AS(disorder_average_quadrature({}, {-0.1, 0.0, 0.0}, InitialState::zero, kShort),
                    InvalidParameter);
    CHECK_THROWS_AS(disorder_average_quadrature({}, {}, InitialState::zero, TimeGrid{200.0, 1}),
                    InvalidParameter);
    QuadratureSpec bad;
    bad.radial_order = 0;
    CHECK_THROWS_AS(disorder_average_quadrature({}, {}, InitialState::zero, kShort, bad),
                    InvalidParameter);
    CHECK_THROWS_AS(disorder_average_mc({}, {}, InitialState::zero, kShort, 0, 1), InvalidParameter);
  }
}
