#include "deoq/noise.hpp"

#include <numbers>

#include "deoq/error.hpp"

namespace deoq {

namespace {

void require(double v, const char* field) {
  if (!std::isfinite(v) || v < 0.0) throw InvalidParameter(field, "must be finite and >= 0");
}

}  // namespace

void NoiseSpec::validate() const {
  require(sigma_e, "sigma_e");
  require(sigma_j1, "sigma_j1");
  require(sigma_j2, "sigma_j2");
  require(j01, "j01");
  require(j02, "j02");
}

double erf(double x) { return std::erf(x); }

double pdf_delta_e(double delta_e, double sigma_e) {
  if (!(sigma_e > 0.0) || !std::isfinite(sigma_e)) {
    throw InvalidParameter("sigma_e", "density requires sigma_e > 0");
  }
  const double z = delta_e / (2.0 * sigma_e);
  return std::exp(-z * z) / (2.0 * sigma_e * std::sqrt(std::numbers::pi));
}

double pdf_exchange(double j, double j0, double sigma) {
  if (!(sigma > 0.0) || !std::isfinite(sigma)) {
    throw InvalidParameter("sigma_j", "density requires sigma_j > 0");
  }
  if (!(j0 >= 0.0)) throw InvalidParameter("j0", "mean must be >= 0");
  if (j < 0.0) return 0.0;
  const double z = (j - j0) / sigma;
  // 1 + erf(a) == erfc(-a), accurate for large a.
  const double norm = 2.0 / std::erfc(-j0 / (sigma * std::numbers::sqrt2));
  return norm * std::exp(-0.5 * z * z) / (sigma * std::sqrt(2.0 * std::numbers::pi));
}

}  // namespace deoq
