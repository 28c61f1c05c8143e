#include "lateci/scores.hpp"

#include <fmt/format.h>

#include "lateci/errors.hpp"

namespace lateci {

ScoreSample compute_scores(const Dataset& data, const NuisancePredictions& preds) {
  const std::size_t n = data.n();
  if (preds.g1.size() != n || preds.g0.size() != n || preds.r1.size() != n ||
      preds.r0.size() != n || preds.m1.size() != n) {
    throw ConfigError(fmt::format("nuisance predictions do not have length {}", n));
  }
  ScoreSample s;
  s.psi_a.resize(n);
  s.psi_b.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double m1 = preds.m1[i];
    if (!(m1 > 0.0 && m1 < 1.0)) {
      throw PositivityError(fmt::format("unit {}: propensity {} is outside (0, 1)", i, m1));
    }
    const double y = data.y()[i];
    const double a = data.a()[i];
    if (data.z()[i] == 1) {
      s.psi_b[i] = (y - preds.g1[i]) / m1 + preds.g1[i] - preds.g0[i];
      s.psi_a[i] = (a - preds.r1[i]) / m1 + preds.r1[i] - preds.r0[i];
    } else {
      const double m0 = 1.0 - m1;
      s.psi_b[i] = -(y - preds.g0[i]) / m0 + preds.g1[i] - preds.g0[i];
      s.psi_a[i] = -(a - preds.r0[i]) / m0 + preds.r1[i] - preds.r0[i];
    }
  }
  return s;
}

double functional_oracle(const DgpParams& params) {
  // g(z, x) = treatment_shift * r(z, x), so the outcome contrast is
  // treatment_shift times the treatment contrast.
  return params.treatment_shift;
}

}  // namespace lateci
