#pragma once

// Noise-free quantum mechanics of the double-dot exchange-only qubit (DEOQ):
// the three-spin Hamiltonian, its projection onto the logical subspace, the
// closed-form 2x2 propagator and the analytic return probabilities.
//
// Units: energies in j0, times in hbar/j0, hbar = 1.

#include <complex>
#include <string_view>
#include <utility>

#include <Eigen/Dense>

namespace deoq {

using Complex = std::complex<double>;
using ComplexMatrix2 = Eigen::Matrix2cd;
using Matrix8 = Eigen::Matrix<Complex, 8, 8>;
using Vector8 = Eigen::Matrix<Complex, 8, 1>;

struct ExchangeParams {
  double j_prime = 0.5;  // intra-dot exchange j'
  double j1 = 0.5;
  double j2 = 1.5;
  double ez = 10.0;  // Zeeman energy

  /// Throws InvalidParameter on non-finite fields or negative j1/j2.
  void validate() const;

  friend bool operator==(const ExchangeParams&, const ExchangeParams&) = default;
};

enum class InitialState { zero, superposition };

std::string_view to_string(InitialState s);
/// Accepts "zero" and "superposition"; throws InvalidParameter otherwise.
InitialState initial_state_from_string(std::string_view s);

/// Normalized amplitude pair (c0, c1) on the logical basis {|0>, |1>}.
class QubitState {
 public:
  /// Throws InvalidParameter unless |c0|^2 + |c1|^2 = 1 within 1e-12.
  QubitState(Complex c0, Complex c1);

  static QubitState zero() { return {1.0, 0.0}; }
  static QubitState one() { return {0.0, 1.0}; }
  static QubitState superposition();
  static QubitState initial(InitialState s);

  Complex c0() const { return amps_(0); }
  Complex c1() const { return amps_(1); }
  const Eigen::Vector2cd& amplitudes() const { return amps_; }
  double probability_zero() const { return std::norm(amps_(0)); }

 private:
  struct Unchecked {};
  QubitState(Unchecked, const Eigen::Vector2cd& v) : amps_(v) {}
  friend QubitState evolve(const QubitState&, const ComplexMatrix2&, double);

  Eigen::Vector2cd amps_;
};

/// Coefficients of the analytic return probabilities. `d` is the detuning
/// a - b + delta_e and `beta` = sqrt(d^2 + 4c^2) / 2.
struct Coefficients {
  double a = 0.0;
  double b = 0.0;
  double c = 0.0;
  double d = 0.0;
  double beta = 0.0;
};

/// Logical-basis Hamiltonian. delta_e is a local field difference between the
/// dots; it enters antisymmetrically as -delta_e/2 on H00 and +delta_e/2 on H11.
ComplexMatrix2 build_logical_hamiltonian(const ExchangeParams& p, double delta_e = 0.0);

/// H = (Ez/2) sum_i sz_i + (j'/4) s1.s2 + (j1/4) s1.s3 + (j2/4) s2.s3 on
/// spin1 (x) spin2 (x) spin3. Basis index = 4*b1 + 2*b2 + b3 with b = 0 for up.
Matrix8 build_full_hamiltonian(const ExchangeParams& p);

/// |0> = |S>|dn>, |1> = sqrt(1/3)|T0>|dn> - sqrt(2/3)|T->|up>, as 8-vectors.
std::pair<Vector8, Vector8> logical_basis_vectors();

Coefficients coefficients(const ExchangeParams& p, double delta_e = 0.0);

/// Builds Coefficients from (j1, j2, delta_e) without validation; used in the
/// disorder-averaging hot loops.
Coefficients coefficients_unchecked(double j_prime, double ez, double j1, double j2,
                                    double delta_e) noexcept;

/// Below this gap between the eigenvalues of H (in j0) the propagator uses
/// the first-order degenerate limit.
inline constexpr double kDegeneracyThreshold = 1e-9;

/// U(t) = exp(-iHt) from the two-term Cayley-Hamilton expansion.
/// Throws InvalidParameter if h is not Hermitian or t is negative/non-finite.
ComplexMatrix2 propagator(const ComplexMatrix2& h, double t);

QubitState evolve(const QubitState& psi0, const ComplexMatrix2& h, double t);

/// P_|0>(t) starting from |0>.
double return_probability_zero(const ExchangeParams& p, double delta_e, double t);
/// P_|0>(t) starting from (|0> + |1>)/sqrt(2).
double return_probability_superposition(const ExchangeParams& p, double delta_e, double t);

double return_probability(InitialState s, const ExchangeParams& p, double delta_e, double t);
double return_probability(InitialState s, const Coefficients& k, double t) noexcept;

}  // namespace deoq
