#pragma once

#include <cstddef>
#include <vector>

#include "lateci/data.hpp"
#include "lateci/dgp.hpp"
#include "lateci/nuisance.hpp"

namespace lateci {

// Per-unit influence-function scores. psi_b carries the outcome contrast
// and psi_a the treatment contrast; the functional is E psi_b / E psi_a.
struct ScoreSample {
  std::vector<double> psi_a;
  std::vector<double> psi_b;

  std::size_t size() const { return psi_a.size(); }
};

// psi_b = (2Z - 1) / m(Z | X) * (Y - g(Z, X)) + g(1, X) - g(0, X), and
// psi_a likewise with A and r, where m(0 | X) = 1 - m1. Throws
// PositivityError if some m1 is outside (0, 1).
ScoreSample compute_scores(const Dataset& data, const NuisancePredictions& preds);

// True value of the identified functional under the simulation design. Y(1) - Y(0)
// equals treatment_shift for every unit, so the ratio of intent-to-treat
// contrasts is treatment_shift whenever pi != 0; at pi = 0 the ratio is
// 0/0 and the continuous extension treatment_shift is returned.
double functional_oracle(const DgpParams& params);

}  // namespace lateci
