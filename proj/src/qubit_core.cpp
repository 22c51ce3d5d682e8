#include "deoq/qubit_core.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <string>

#include "deoq/error.hpp"

namespace deoq {

namespace {

const double kSqrt3 = std::sqrt(3.0);

void require_finite(double v, const char* field) {
  if (!std::isfinite(v)) throw InvalidParameter(field, "must be finite");
}

using Matrix2 = Eigen::Matrix2cd;

Matrix8 kron3(const Matrix2& a, const Matrix2& b, const Matrix2& c) {
  Matrix8 out;
  for (int i = 0; i < 8; ++i) {
    for (int j = 0; j < 8; ++j) {
      out(i, j) = a(i >> 2, j >> 2) * b((i >> 1) & 1, (j >> 1) & 1) * c(i & 1, j & 1);
    }
  }
  return out;
}

// sigma_a . sigma_b for spins (a, b) of the three-spin register.
Matrix8 heisenberg(int a, int b, const std::array<Matrix2, 3>& paulis) {
  Matrix8 sum = Matrix8::Zero();
  const Matrix2 id = Matrix2::Identity();
  for (const auto& s : paulis) {
    std::array<Matrix2, 3> ops{id, id, id};
    ops[a] = s;
    ops[b] = s;
    sum += kron3(ops[0], ops[1], ops[2]);
  }
  return sum;
}

// 2 sin(gap t / 2) / gap, continuous at gap = 0.
double divided_difference_magnitude(double gap, double t) {
  const double x = 0.5 * gap * t;
  if (std::abs(x) < 1e-8) return t * (1.0 - x * x / 6.0);
  return 2.0 * std::sin(x) / gap;
}

}  // namespace

void ExchangeParams::validate() const {
  require_finite(j_prime, "j_prime");
  require_finite(j1, "j1");
  require_finite(j2, "j2");
  require_finite(ez, "ez");
  if (j1 < 0.0) throw InvalidParameter("j1", "must be non-negative");
  if (j2 < 0.0) throw InvalidParameter("j2", "must be non-negative");
}

std::string_view to_string(InitialState s) {
  return s == InitialState::zero ? "zero" : "superposition";
}

InitialState initial_state_from_string(std::string_view s) {
  if (s == "zero") return InitialState::zero;
  if (s == "superposition") return InitialState::superposition;
  throw InvalidParameter("initial", "expected 'zero' or 'superposition', got '" +
                                        std::string(s) + "'");
}

QubitState::QubitState(Complex c0, Complex c1) : amps_(c0, c1) {
  const double n = std::norm(c0) + std::norm(c1);
  if (!std::isfinite(n) || std::abs(n - 1.0) > 1e-12) {
    throw InvalidParameter("state", "amplitudes must be normalized");
  }
}

QubitState QubitState::superposition() {
  const double h = 1.0 / std::sqrt(2.0);
  return {h, h};
}

QubitState QubitState::initial(InitialState s) {
  return s == InitialState::zero ? zero() : superposition();
}

ComplexMatrix2 build_logical_hamiltonian(const ExchangeParams& p, double delta_e) {
  p.validate();
  require_finite(delta_e, "delta_e");
  const double off = -kSqrt3 / 4.0 * (p.j1 - p.j2);
  ComplexMatrix2 h;
  h << -p.ez / 2.0 - 0.75 * p.j_prime - delta_e / 2.0, off,
      off, -p.ez / 2.0 + 0.25 * p.j_prime - 0.5 * (p.j1 + p.j2) + delta_e / 2.0;
  return h;
}

Matrix8 build_full_hamiltonian(const ExchangeParams& p) {
  p.validate();
  Matrix2 sx, sy, sz;
  sx << 0, 1, 1, 0;
  sy << 0, Complex(0, -1), Complex(0, 1), 0;
  sz << 1, 0, 0, -1;
  const Matrix2 id = Matrix2::Identity();
  const std::array<Matrix2, 3> paulis{sx, sy, sz};

  Matrix8 h = 0.5 * p.ez * (kron3(sz, id, id) + kron3(id, sz, id) + kron3(id, id, sz));
  h += 0.25 * p.j_prime * heisenberg(0, 1, paulis);
  h += 0.25 * p.j1 * heisenberg(0, 2, paulis);
  h += 0.25 * p.j2 * heisenberg(1, 2, paulis);
  return h;
}

std::pair<Vector8, Vector8> logical_basis_vectors() {
  // Basis index 4*b1 + 2*b2 + b3, b = 1 for spin down.
  constexpr int up_dn_dn = 3;
  constexpr int dn_up_dn = 5;
  constexpr int dn_dn_up = 6;
  Vector8 zero = Vector8::Zero();
  Vector8 one = Vector8::Zero();
  zero(up_dn_dn) = 1.0 / std::sqrt(2.0);
  zero(dn_up_dn) = -1.0 / std::sqrt(2.0);
  one(up_dn_dn) = 1.0 / std::sqrt(6.0);
  one(dn_up_dn) = 1.0 / std::sqrt(6.0);
  one(dn_dn_up) = -std::sqrt(2.0 / 3.0);
  return {zero, one};
}

Coefficients coefficients_unchecked(double j_prime, double ez, double j1, double j2,
                                    double delta_e) noexcept {
  Coefficients k;
  k.a = ez / 2.0 + 0.75 * j_prime;
  k.b = ez / 2.0 - 0.25 * j_prime + 0.5 * (j1 + j2);
  k.c = kSqrt3 / 4.0 * (j1 - j2);
  // a - b collapses algebraically; evaluating it directly avoids losing the
  // detuning to cancellation against a large Zeeman energy.
  k.d = j_prime - 0.5 * (j1 + j2) + delta_e;
  k.beta = 0.5 * std::hypot(k.d, 2.0 * k.c);
  return k;
}

Coefficients coefficients(const ExchangeParams& p, double delta_e) {
  p.validate();
  require_finite(delta_e, "delta_e");
  return coefficients_unchecked(p.j_prime, p.ez, p.j1, p.j2, delta_e);
}

ComplexMatrix2 propagator(const ComplexMatrix2& h, double t) {
  if (!std::isfinite(t) || t < 0.0) throw InvalidParameter("t", "must be finite and >= 0");
  const double scale = std::max(1.0, h.cwiseAbs().maxCoeff());
  if (!h.allFinite() || (h - h.adjoint()).cwiseAbs().maxCoeff() > 1e-12 * scale) {
    throw InvalidParameter("hamiltonian", "must be Hermitian");
  }

  // Eigenvalues e1 >= e2 of the Hermitian 2x2; lambda_k = -i e_k.
  const double h00 = h(0, 0).real();
  const double h11 = h(1, 1).real();
  const double mean = 0.5 * (h00 + h11);
  const double half_gap = std::hypot(0.5 * (h00 - h11), std::abs(h(0, 1)));
  const double e1 = mean + half_gap;
  const double gap = 2.0 * half_gap;

  const Complex minus_i(0.0, -1.0);
  const Complex lambda1 = minus_i * e1;
  const Complex exp1 = std::polar(1.0, -e1 * t);
  const ComplexMatrix2 id = ComplexMatrix2::Identity();
  const ComplexMatrix2 shifted = minus_i * h - lambda1 * id;

  if (gap < kDegeneracyThreshold) {
    return exp1 * (id + t * shifted);
  }
  // (e^{lambda1 t} - e^{lambda2 t}) / (lambda1 - lambda2), evaluated as
  // 2 sin(gap t/2)/gap * e^{-i mean t} to avoid cancellation for small gaps.
  const Complex divided = divided_difference_magnitude(gap, t) * std::polar(1.0, -mean * t);
  return exp1 * id + divided * shifted;
}

QubitState evolve(const QubitState& psi0, const ComplexMatrix2& h, double t) {
  return QubitState(QubitState::Unchecked{}, propagator(h, t) * psi0.amplitudes());
}

double return_probability(InitialState s, const Coefficients& k, double t) noexcept {
  const double r2 = k.d * k.d + 4.0 * k.c * k.c;
  if (r2 == 0.0) return s == InitialState::zero ? 1.0 : 0.5;
  const double sn = std::sin(k.beta * t);
  const double s2 = sn * sn;
  double p;
  if (s == InitialState::zero) {
    p = 1.0 - (4.0 * k.c * k.c / r2) * s2;
  } else {
    p = 0.5 * (1.0 + (4.0 * k.c * k.d / r2) * s2);
  }
  return std::clamp(p, 0.0, 1.0);
}

double return_probability(InitialState s, const ExchangeParams& p, double delta_e, double t) {
  if (!std::isfinite(t) || t < 0.0) throw InvalidParameter("t", "must be finite and >= 0");
  return return_probability(s, coefficients(p, delta_e), t);
}

double return_probability_zero(const ExchangeParams& p, double delta_e, double t) {
  return return_probability(InitialState::zero, p, delta_e, t);
}

double return_probability_superposition(const ExchangeParams& p, double delta_e, double t) {
  return return_probability(InitialState::superposition, p, delta_e, t);
}

}  // namespace deoq
