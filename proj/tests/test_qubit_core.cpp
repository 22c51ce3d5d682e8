#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include <Eigen/Eigenvalues>

#include "deoq/error.hpp"
#include "deoq/qubit_core.hpp"

using namespace deoq;

namespace {

constexpr double kPi = std::numbers::pi;

double max_abs(const Eigen::MatrixXcd& m) { return m.cwiseAbs().maxCoeff(); }

// exp(-iHt) through a Hermitian eigendecomposition.
ComplexMatrix2 eigen_propagator(const ComplexMatrix2& h, double t) {
  Eigen::SelfAdjointEigenSolver<ComplexMatrix2> es(h);
  Eigen::Vector2cd phase;
  for (int k = 0; k < 2; ++k) phase(k) = std::exp(Complex(0.0, -es.eigenvalues()(k) * t));
  return es.eigenvectors() * phase.asDiagonal() * es.eigenvectors().adjoint();
}

ComplexMatrix2 random_hermitian(std::mt19937_64& rng, double scale) {
  std::uniform_real_distribution<double> u(-scale, scale);
  ComplexMatrix2 h;
  const Complex off(u(rng), u(rng));
  h << u(rng), off, std::conj(off), u(rng);
  return h;
}

}  // namespace

TEST_SUITE("qubit-core") {
  TEST_CASE("logical hamiltonian at default parameters") {
    const ComplexMatrix2 h = build_logical_hamiltonian({});
    CHECK(h(0, 0).real() == doctest::Approx(-5.375).epsilon(1e-12));
    CHECK(h(1, 1).real() == doctest::Approx(-5.875).epsilon(1e-12));
    CHECK(h(0, 1).real() == doctest::Approx(std::sqrt(3.0) / 4.0).epsilon(1e-12));
    CHECK(h(1, 0) == h(0, 1));
    CHECK(max_abs(h - h.adjoint()) == 0.0);
  }

  TEST_CASE("all couplings off give the zero matrix") {
    CHECK(max_abs(build_logical_hamiltonian({0.0, 0.0, 0.0, 0.0})) == 0.0);
  }

  TEST_CASE("equal couplings decouple the logical states") {
    for (double jp : {-1.0, 0.0, 0.7}) {
      const ComplexMatrix2 h = build_logical_hamiltonian({jp, 1.0, 1.0, 3.0}, 0.4);
      CHECK(h(0, 1) == Complex(0.0));
      CHECK(h(1, 0) == Complex(0.0));
    }
  }

  TEST_CASE("field difference enters antisymmetrically on the diagonal") {
    const ComplexMatrix2 h0 = build_logical_hamiltonian({}, 0.0);
    const ComplexMatrix2 h1 = build_logical_hamiltonian({}, 0.3);
    CHECK(h1(0, 0).real() - h0(0, 0).real() == doctest::Approx(-0.15));
    CHECK(h1(1, 1).real() - h0(1, 1).real() == doctest::Approx(0.15));
  }

  TEST_CASE("invalid parameters are rejected with the field name") {
    try {
      build_logical_hamiltonian({0.5, -0.1, 1.5, 10.0});
      FAIL("expected InvalidParameter");
    } catch (const InvalidParameter& e) {
      CHECK(e.field() == "j1");
    }
    CHECK_THROWS_AS(build_logical_hamiltonian({NAN, 0.5, 1.5, 10.0}), InvalidParameter);
    CHECK_THROWS_AS(build_logical_hamiltonian({}, INFINITY), InvalidParameter);
  }

  TEST_CASE("pure Zeeman three-spin hamiltonian") {
    const Matrix8 h = build_full_hamiltonian({0.0, 0.0, 0.0, 2.0});
    CHECK(h(0, 0).real() == doctest::Approx(3.0));
    CHECK(h(7, 7).real() == doctest::Approx(-3.0));
    Matrix8 off = h;
    off.diagonal().setZero();
    CHECK(max_abs(off) == 0.0);
  }

  TEST_CASE("three-spin hamiltonian is exactly hermitian") {
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> u(0.0, 3.0);
    for (int i = 0; i < 20; ++i) {
      const Matrix8 h = build_full_hamiltonian({u(rng) - 1.5, u(rng), u(rng), 4.0 * u(rng)});
      CHECK(max_abs(h - h.adjoint()) == 0.0);
    }
  }

  TEST_CASE("projection onto the logical basis matches the 2x2 model") {
    const auto [l0, l1] = logical_basis_vectors();
    const ExchangeParams p;
    const Matrix8 h = build_full_hamiltonian(p);
    const ComplexMatrix2 ref = build_logical_hamiltonian(p);
    const Vector8* basis[2] = {&l0, &l1};
    for (int i = 0; i < 2; ++i) {
      for (int j = 0; j < 2; ++j) {
        CHECK(std::abs(basis[i]->dot(h * *basis[j]) - ref(i, j)) < 1e-12);
      }
    }
  }

  TEST_CASE("logical basis vectors") {
    const auto [l0, l1] = logical_basis_vectors();
    CHECK(std::abs(l0.squaredNorm() - 1.0) < 1e-15);
    CHECK(std::abs(l1.squaredNorm() - 1.0) < 1e-15);
    CHECK(std::abs(l0.dot(l1)) < 1e-15);
    // index 3 = up, down, down
    CHECK(l0(3).real() == doctest::Approx(1.0 / std::sqrt(2.0)).epsilon(1e-14));
    // total S_z = -1/2: exactly two spins down in every populated state
    for (int k = 0; k < 8; ++k) {
      const int downs = ((k >> 2) & 1) + ((k >> 1) & 1) + (k & 1);
      if (downs != 2) {
        CHECK(l0(k) == Complex(0.0));
        CHECK(l1(k) == Complex(0.0));
      }
    }
  }

  TEST_CASE("coefficients at default parameters") {
    const Coefficients k = coefficients({});
    CHECK(k.a == doctest::Approx(5.375));
    CHECK(k.b == doctest::Approx(5.875));
    CHECK(k.c == doctest::Approx(-0.4330127019).epsilon(1e-9));
    CHECK(k.d == doctest::Approx(-0.5));
    CHECK(k.beta == doctest::Approx(0.5));
  }

  TEST_CASE("coefficients with equal couplings or a compensating field") {
    const Coefficients sym = coefficients({0.5, 1.0, 1.0, 10.0}, 0.2);
    CHECK(sym.c == 0.0);
    CHECK(sym.beta == doctest::Approx(std::abs(sym.d) / 2.0));
    const Coefficients shifted = coefficients({}, 0.5);
    CHECK(std::abs(shifted.d) < 1e-15);
    CHECK(shifted.beta == doctest::Approx(0.4330127019).epsilon(1e-9));
  }

  TEST_CASE("propagator at t = 0 is the identity") {
    std::mt19937_64 rng(3);
    for (int i = 0; i < 10; ++i) {
      const ComplexMatrix2 u = propagator(random_hermitian(rng, 2.0), 0.0);
      CHECK(max_abs(u - ComplexMatrix2::Identity()) < 1e-15);
    }
  }

  TEST_CASE("propagator is unitary and matches the eigendecomposition") {
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> tu(0.0, 100.0);
    for (int i = 0; i < 500; ++i) {
      const ComplexMatrix2 h = random_hermitian(rng, 3.0);
      const double t = i == 0 ? 1.7 : tu(rng);
      const ComplexMatrix2 u = propagator(h, t);
      CHECK(max_abs(u.adjoint() * u - ComplexMatrix2::Identity()) < 1e-12);
      CHECK(max_abs(u - eigen_propagator(h, t)) < 1e-10);
    }
  }

  TEST_CASE("propagator near and at degeneracy") {
    for (double gap : {0.0, 1e-12, 1e-9, 2e-9, 1e-6}) {
      ComplexMatrix2 h;
      h << 0.3 + gap / 2.0, 0.0, 0.0, 0.3 - gap / 2.0;
      for (double t : {0.5, 50.0}) {
        const ComplexMatrix2 u = propagator(h, t);
        CHECK(max_abs(u - eigen_propagator(h, t)) < 1e-10);
        CHECK(max_abs(u.adjoint() * u - ComplexMatrix2::Identity()) < 1e-12);
      }
    }
  }

  TEST_CASE("propagator rejects non-hermitian input and negative time") {
    ComplexMatrix2 h;
    h << 1.0, 0.5, 0.2, -1.0;
    CHECK_THROWS_AS(propagator(h, 1.0), InvalidParameter);
    CHECK_THROWS_AS(propagator(build_logical_hamiltonian({}), -1.0), InvalidParameter);
  }

  TEST_CASE("evolution at the half period") {
    const ComplexMatrix2 h = build_logical_hamiltonian({});
    CHECK(evolve(QubitState::zero(), h, 0.0).probability_zero() == doctest::Approx(1.0));
    CHECK(evolve(QubitState::zero(), h, kPi).probability_zero() ==
          doctest::Approx(0.25).epsilon(1e-12));
    CHECK(evolve(QubitState::superposition(), h, kPi).probability_zero() ==
          doctest::Approx(0.5 + std::sqrt(3.0) / 4.0).epsilon(1e-12));
    const QubitState psi = evolve(QubitState::superposition(), h, 12.3);
    CHECK(psi.amplitudes().squaredNorm() == doctest::Approx(1.0).epsilon(1e-12));
  }

  TEST_CASE("qubit state normalization is enforced") {
    CHECK_THROWS_AS(QubitState(1.0, 1.0), InvalidParameter);
    CHECK_NOTHROW(QubitState(Complex(0.6, 0.0), Complex(0.0, 0.8)));
  }

  TEST_CASE("closed forms match evolution on a fine grid") {
    std::mt19937_64 rng(9);
    std::normal_distribution<double> n(0.0, 0.3);
    for (int r = 0; r < 10; ++r) {
      ExchangeParams p;
      p.j1 = std::abs(0.5 + n(rng));
      p.j2 = std::abs(1.5 + n(rng));
      const double de = n(rng);
      const ComplexMatrix2 h = build_logical_hamiltonian(p, de);
      for (int i = 0; i < 1000; ++i) {
        const double t = 0.2 * i;
        CHECK(std::abs(evolve(QubitState::zero(), h, t).probability_zero() -
                       return_probability_zero(p, de, t)) < 1e-10);
        CHECK(std::abs(evolve(QubitState::superposition(), h, t).probability_zero() -
                       return_probability_superposition(p, de, t)) < 1e-10);
      }
    }
  }

  TEST_CASE("closed-form special values") {
    const ExchangeParams p;
    CHECK(return_probability_zero(p, 0.0, 0.0) == 1.0);
    CHECK(return_probability_zero(p, 0.0, kPi) == doctest::Approx(0.25).epsilon(1e-12));
    CHECK(return_probability_superposition(p, 0.0, 0.0) == 0.5);
    CHECK(return_probability_superposition(p, 0.0, kPi) ==
          doctest::Approx(0.9330127019).epsilon(1e-9));
    const ExchangeParams sym{0.5, 1.0, 1.0, 10.0};
    for (double t : {0.3, 7.0, 123.0}) {
      CHECK(return_probability_zero(sym, 0.1, t) == 1.0);
      CHECK(return_probability_superposition(sym, 0.1, t) == 0.5);
    }
    // fully degenerate: d = 0 and c = 0
    const ExchangeParams flat{1.0, 1.0, 1.0, 0.0};
    CHECK(return_probability_zero(flat, 0.0, 5.0) == 1.0);
    CHECK(return_probability_superposition(flat, 0.0, 5.0) == 0.5);
  }

  TEST_CASE("zeeman shift leaves return probabilities unchanged") {
    ExchangeParams p;
    ExchangeParams q = p;
    q.ez += 37.25;
    for (double t : {0.0, 1.1, 9.9, 150.0}) {
      CHECK(return_probability_zero(p, 0.2, t) == return_probability_zero(q, 0.2, t));
      CHECK(return_probability_superposition(p, 0.2, t) ==
            return_probability_superposition(q, 0.2, t));
    }
  }

  TEST_CASE("return probabilities are periodic and bounded") {
    std::mt19937_64 rng(21);
    std::uniform_real_distribution<double> u(0.0, 2.0);
    for (int r = 0; r < 20; ++r) {
      const ExchangeParams p{u(rng) - 1.0, u(rng), u(rng), 10.0 * u(rng)};
      const double de = u(rng) - 1.0;
      const double beta = coefficients(p, de).beta;
      if (beta < 1e-3) continue;
      const double period = kPi / beta;
      for (double t : {0.37, 2.9, 11.0}) {
        for (auto s : {InitialState::zero, InitialState::superposition}) {
          const double v = return_probability(s, p, de, t);
          CHECK(v >= 0.0);
          CHECK(v <= 1.0);
          CHECK(std::abs(return_probability(s, p, de, t + period) - v) < 1e-10);
        }
      }
    }
  }

  TEST_CASE("initial state names round-trip") {
    for (auto s : {InitialState::zero, InitialState::superposition}) {
      CHECK(initial_state_from_string(to_string(s)) == s);
    }
    CHECK_THROWS_AS(initial_state_from_string("one"), InvalidParameter);
  }
}
