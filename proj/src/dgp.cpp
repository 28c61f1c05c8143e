#include "lateci/dgp.hpp"

#include <cmath>

#include <fmt/format.h>

#include "lateci/errors.hpp"
#include "lateci/inference.hpp"
#include "lateci/random.hpp"

namespace lateci {

void DgpParams::validate() const {
  if (n < 2) throw ConfigError(fmt::format("sample size must be at least 2, got {}", n));
  if (!std::isfinite(pi) || !std::isfinite(treatment_shift) || !std::isfinite(sign_scale)) {
    throw ConfigError("design parameters must be finite");
  }
}

Dataset dgp_generate(const DgpParams& params, std::uint64_t seed) {
  params.validate();
  const std::size_t n = params.n;
  Rng rng(seed);
  std::vector<double> y(n);
  std::vector<int> a(n), z(n);
  Eigen::MatrixXd x(static_cast<Eigen::Index>(n), 1);
  for (std::size_t i = 0; i < n; ++i) {
    const double u = rng.normal();
    const double xi = rng.normal();
    const int zi = rng.bernoulli(0.5) ? 1 : 0;
    const double push = params.pi * zi * (xi > 0.0 ? 1.0 : 0.0);
    const int ai = push + u > 0.0 ? 1 : 0;
    const double sign_u = u > 0.0 ? 1.0 : (u < 0.0 ? -1.0 : 0.0);
    y[i] = params.sign_scale * sign_u + params.treatment_shift * ai;
    a[i] = ai;
    z[i] = zi;
    x(static_cast<Eigen::Index>(i), 0) = xi;
  }
  return Dataset(std::move(y), std::move(a), std::move(z), std::move(x));
}

double oracle_treatment_mean(const DgpParams& params, int z, double x) {
  // P(U > -pi z 1{x > 0}) = Phi(pi z 1{x > 0})
  return normal_cdf(params.pi * z * (x > 0.0 ? 1.0 : 0.0));
}

double oracle_outcome_mean(const DgpParams& params, int z, double x) {
  // E sign(U) = 0 and U is independent of (Z, X).
  return params.treatment_shift * oracle_treatment_mean(params, z, x);
}

NuisancePredictions oracle_predictions(const Dataset& data, const DgpParams& params) {
  const std::size_t n = data.n();
  NuisancePredictions out;
  out.g1.resize(n);
  out.g0.resize(n);
  out.r1.resize(n);
  out.r0.resize(n);
  out.m1.assign(n, 0.5);
  for (std::size_t i = 0; i < n; ++i) {
    const double xi = data.p() ? data.x()(static_cast<Eigen::Index>(i), 0) : 0.0;
    out.r1[i] = oracle_treatment_mean(params, 1, xi);
    out.r0[i] = oracle_treatment_mean(params, 0, xi);
    out.g1[i] = oracle_outcome_mean(params, 1, xi);
    out.g0[i] = oracle_outcome_mean(params, 0, xi);
  }
  return out;
}

}  // namespace lateci
