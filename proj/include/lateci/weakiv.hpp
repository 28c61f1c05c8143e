#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "lateci/dgp.hpp"
#include "lateci/random.hpp"

namespace lateci {

// Symmetric 2x2 covariance of (N_a, N_b).
struct Cov2 {
  double s11 = 1.0;
  double s12 = 0.0;
  double s22 = 1.0;
};

// Lower-triangular L with L L^T = Sigma. Semidefinite matrices are allowed;
// a zero pivot forces the corresponding column to zero.
struct Cholesky2 {
  double l11 = 0.0;
  double l21 = 0.0;
  double l22 = 0.0;
};

// Throws ConfigError if Sigma is not positive semidefinite.
Cholesky2 cholesky_psd(const Cov2& sigma);

std::pair<double, double> sample_bivariate_normal(const Cov2& sigma, Rng& rng);
std::pair<double, double> sample_bivariate_normal(const Cholesky2& factor, Rng& rng);

/// Constants of the drifting weak-instrument sequence: E psi_a = c_a /
/// sqrt(n), E psi_b = c_b / sqrt(n), Cov(psi_a, psi_b) -> sigma.
struct WeakIVConfig {
  double c_a = 1.0;
  double c_b = 1.0;
  Cov2 sigma;

  // Throws ConfigError when c_a == 0, values are non-finite or sigma is
  // not PSD.
  void validate() const;
};

/// Draws from the limit law of phi_hat - phi under weak instruments,
///   (c_b + N_b) / (c_a + N_a) - c_b / c_a
///     = (c_a N_b - c_b N_a) / (c_a^2 + c_a N_a),   (N_a, N_b) ~ N(0, sigma),
/// where (N_a, N_b) is the limit of sqrt(n) (P_n - E)(psi_a, psi_b).
/// Writing the denominator as c_a^2 - c_a N_a instead gives the same law
/// only when sigma is diagonal.
/// A draw whose denominator is exactly zero is discarded and redrawn.
class WeakLimitSampler {
 public:
  explicit WeakLimitSampler(const WeakIVConfig& config);

  double draw(Rng& rng) const;
  std::vector<double> draws(std::size_t count, std::uint64_t seed) const;

  const WeakIVConfig& config() const { return config_; }

 private:
  WeakIVConfig config_;
  Cholesky2 factor_;
};

double sample_weak_limit(const WeakIVConfig& config, Rng& rng);

struct WeakIVCalibration {
  WeakIVConfig config;
  double se_c_a = 0.0;
  double se_c_b = 0.0;
  double se_s11 = 0.0;
  double se_s12 = 0.0;
  double se_s22 = 0.0;
  // |c| within three standard errors of zero: the drifting sequence does
  // not satisfy the nonzero-constant requirement.
  bool c_a_vanishes = false;
  bool c_b_vanishes = false;
  std::size_t draws = 0;
};

/// Monte Carlo calibration of (c_a, c_b, sigma) for the simulation design
/// at sample size params.n, using the exact nuisances.
///
/// c_a and c_b average the conditional means E(psi | X) = r(1,X) - r(0,X)
/// and g(1,X) - g(0,X); the residual terms of psi have conditional mean
/// zero and only add noise. sigma is the sample covariance of the full
/// oracle scores.
WeakIVCalibration estimate_weakiv_config(const DgpParams& params,
                                         std::size_t oracle_draws,
                                         std::uint64_t seed);

// Two-sample Kolmogorov-Smirnov statistic sup |F1 - F2| by merged sort.
double ks_distance(std::span<const double> sample1,
                   std::span<const double> sample2);

}  // namespace lateci
