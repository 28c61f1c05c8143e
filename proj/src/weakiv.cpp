#include "lateci/weakiv.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>

#include "lateci/errors.hpp"
#include "lateci/inference.hpp"

namespace lateci {

Cholesky2 cholesky_psd(const Cov2& sigma) {
  const double s11 = sigma.s11, s12 = sigma.s12, s22 = sigma.s22;
  if (!std::isfinite(s11) || !std::isfinite(s12) || !std::isfinite(s22)) {
    throw ConfigError("covariance entries must be finite");
  }
  const double det = s11 * s22 - s12 * s12;
  const double tol = 1e-12 * std::max({std::abs(s11) * std::abs(s22), s12 * s12, 1e-300});
  if (s11 < 0.0 || s22 < 0.0 || det < -tol) {
    throw ConfigError(fmt::format("covariance [[{}, {}], [{}, {}]] is not positive semidefinite", s11,
                                  s12, s12, s22));
  }
  Cholesky2 f;
  f.l11 = std::sqrt(s11);
  if (f.l11 > 0.0) {
    f.l21 = s12 / f.l11;
    f.l22 = std::sqrt(std::max(s22 - f.l21 * f.l21, 0.0));
  } else {
    if (s12 != 0.0) throw ConfigError("covariance has zero variance but nonzero covariance");
    f.l22 = std::sqrt(s22);
  }
  return f;
}

std::pair<double, double> sample_bivariate_normal(const Cholesky2& f, Rng& rng) {
  const double e1 = rng.normal();
  const double e2 = rng.normal();
  return {f.l11 * e1, f.l21 * e1 + f.l22 * e2};
}

std::pair<double, double> sample_bivariate_normal(const Cov2& sigma, Rng& rng) {
  return sample_bivariate_normal(cholesky_psd(sigma), rng);
}

void WeakIVConfig::validate() const {
  if (!std::isfinite(c_a) || !std::isfinite(c_b)) throw ConfigError("c_a and c_b must be finite");
  if (c_a == 0.0) throw ConfigError("c_a must be nonzero");
  cholesky_psd(sigma);
}

WeakLimitSampler::WeakLimitSampler(const WeakIVConfig& config)
    : config_(config), factor_((config.validate(), cholesky_psd(config.sigma))) {}

double WeakLimitSampler::draw(Rng& rng) const {
  const double ca = config_.c_a;
  const double cb = config_.c_b;
  for (;;) {
    const auto [na, nb] = sample_bivariate_normal(factor_, rng);
    const double den = ca * ca + ca * na;
    if (den == 0.0) continue;
    return (ca * nb - cb * na) / den;
  }
}

std::vector<double> WeakLimitSampler::draws(std::size_t count, std::uint64_t seed) const {
  Rng rng(seed);
  std::vector<double> out(count);
  for (auto& v : out) v = draw(rng);
  return out;
}

double sample_weak_limit(const WeakIVConfig& config, Rng& rng) {
  return WeakLimitSampler(config).draw(rng);
}

WeakIVCalibration estimate_weakiv_config(const DgpParams& params, std::size_t oracle_draws,
                                         std::uint64_t seed) {
  params.validate();
  if (oracle_draws < 2) throw ConfigError("calibration needs at least 2 draws");
  Rng rng(seed);
  const double shift = params.treatment_shift;
  const double r_pos = oracle_treatment_mean(params, 1, 1.0);  // Phi(pi)
  const double r_base = oracle_treatment_mean(params, 0, 0.0);  // 1/2

  // Welford accumulators for the contrasts and the full scores.
  double n_acc = 0.0;
  double mean_ca = 0.0, m2_ca = 0.0;
  double mean_a = 0.0, mean_b = 0.0, c_aa = 0.0, c_ab = 0.0, c_bb = 0.0;
  for (std::size_t i = 0; i < oracle_draws; ++i) {
    const double u = rng.normal();
    const double x = rng.normal();
    const int z = rng.bernoulli(0.5) ? 1 : 0;
    const bool x_pos = x > 0.0;
    const int a = params.pi * z * (x_pos ? 1.0 : 0.0) + u > 0.0 ? 1 : 0;
    const double sign_u = u > 0.0 ? 1.0 : (u < 0.0 ? -1.0 : 0.0);
    const double y = params.sign_scale * sign_u + shift * a;

    const double r1 = x_pos ? r_pos : r_base;
    const double r0 = r_base;
    const double contrast = r1 - r0;
    const double rz = z ? r1 : r0;
    const double sgn = z ? 2.0 : -2.0;  // (2Z - 1) / m with m = 1/2
    const double psi_a = sgn * (a - rz) + contrast;
    const double psi_b = sgn * (y - shift * rz) + shift * contrast;

    n_acc += 1.0;
    const double d_ca = contrast - mean_ca;
    mean_ca += d_ca / n_acc;
    m2_ca += d_ca * (contrast - mean_ca);

    const double da = psi_a - mean_a;
    const double db = psi_b - mean_b;
    mean_a += da / n_acc;
    mean_b += db / n_acc;
    c_aa += da * (psi_a - mean_a);
    c_ab += da * (psi_b - mean_b);
    c_bb += db * (psi_b - mean_b);
  }

  const double draws = static_cast<double>(oracle_draws);
  const double root_n = std::sqrt(static_cast<double>(params.n));
  WeakIVCalibration cal;
  cal.draws = oracle_draws;
  cal.config.c_a = root_n * mean_ca;
  cal.config.c_b = root_n * shift * mean_ca;
  cal.config.sigma = Cov2{c_aa / (draws - 1.0), c_ab / (draws - 1.0), c_bb / (draws - 1.0)};

  const double var_ca = m2_ca / (draws - 1.0);
  cal.se_c_a = root_n * std::sqrt(var_ca / draws);
  cal.se_c_b = std::abs(shift) * cal.se_c_a;
  // Normal-theory standard errors of sample (co)variances.
  const auto& s = cal.config.sigma;
  cal.se_s11 = std::sqrt(2.0 * s.s11 * s.s11 / draws);
  cal.se_s22 = std::sqrt(2.0 * s.s22 * s.s22 / draws);
  cal.se_s12 = std::sqrt((s.s11 * s.s22 + s.s12 * s.s12) / draws);

  cal.c_a_vanishes = std::abs(cal.config.c_a) <= 3.0 * cal.se_c_a;
  cal.c_b_vanishes = std::abs(cal.config.c_b) <= 3.0 * cal.se_c_b;
  return cal;
}

double ks_distance(std::span<const double> sample1, std::span<const double> sample2) {
  if (sample1.empty() || sample2.empty()) throw ConfigError("ks_distance: empty sample");
  std::vector<double> s1(sample1.begin(), sample1.end());
  std::vector<double> s2(sample2.begin(), sample2.end());
  std::sort(s1.begin(), s1.end());
  std::sort(s2.begin(), s2.end());
  const double n1 = static_cast<double>(s1.size());
  const double n2 = static_cast<double>(s2.size());
  std::size_t i = 0, j = 0;
  double d = 0.0;
  while (i < s1.size() && j < s2.size()) {
    // Advance past every copy of the smallest remaining value so ties are
    // compared only after both CDFs have jumped.
    const double v = std::min(s1[i], s2[j]);
    while (i < s1.size() && s1[i] == v) ++i;
    while (j < s2.size() && s2[j] == v) ++j;
    d = std::max(d, std::abs(static_cast<double>(i) / n1 - static_cast<double>(j) / n2));
  }
  return d;
}

}  // namespace lateci
