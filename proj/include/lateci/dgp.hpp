#pragma once

#include <cstddef>
#include <cstdint>

#include "lateci/data.hpp"
#include "lateci/nuisance.hpp"

namespace lateci {

/// Parameters of the simulation design
///
///   U, X ~ N(0, 1), Z ~ Bernoulli(0.5),
///   A = 1{pi * Z * 1{X > 0} + U > 0},
///   Y = sign_scale * sign(U) + treatment_shift * A.
///
/// The published design is sign_scale = 2, treatment_shift = 0.
struct DgpParams {
  double pi = 5.0;
  std::size_t n = 1500;
  double treatment_shift = 0.0;
  double sign_scale = 2.0;

  void validate() const;
};

// Deterministic given (params, seed). X has a single column.
Dataset dgp_generate(const DgpParams& params, std::uint64_t seed);

// E(A | Z = z, X = x) under the design.
double oracle_treatment_mean(const DgpParams& params, int z, double x);
// E(Y | Z = z, X = x) under the design.
double oracle_outcome_mean(const DgpParams& params, int z, double x);

// Exact nuisances (true g, r and m = 0.5) evaluated on a dataset.
NuisancePredictions oracle_predictions(const Dataset& data,
                                       const DgpParams& params);

}  // namespace lateci
