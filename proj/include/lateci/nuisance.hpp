#pragma once

#include <array>
#include <cstddef>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "lateci/data.hpp"

namespace lateci {

/// Out-of-fold nuisance predictions for every unit.
///
/// g1/g0 estimate E(Y | Z=z, X), r1/r0 estimate E(A | Z=z, X) and m1
/// estimates P(Z=1 | X). m1 is clipped to [eps, 1 - eps].
struct NuisancePredictions {
  std::vector<double> g1;
  std::vector<double> g0;
  std::vector<double> r1;
  std::vector<double> r0;
  std::vector<double> m1;
  // Set when any fold needed the OLS ridge fallback or hit logistic
  // separation.
  bool warnings = false;

  std::size_t size() const { return g1.size(); }
};

struct LinearModel {
  double intercept = 0.0;
  Eigen::VectorXd slopes;
  bool ridge_used = false;

  double predict(const Eigen::Ref<const Eigen::RowVectorXd>& row) const {
    return intercept + (slopes.size() ? row.dot(slopes) : 0.0);
  }
};

// Least squares with intercept. Features are centered before solving; a
// rank-deficient centered Gram matrix gets a ridge of 1e-8 * trace / p.
LinearModel fit_ols(const Eigen::MatrixXd& features,
                    const Eigen::VectorXd& targets);

struct LogisticModel {
  double intercept = 0.0;
  Eigen::VectorXd slopes;
  double clip_eps = 0.01;
  int iterations = 0;
  // Labels were all equal; probability() returns the clipped label mean.
  bool constant_fallback = false;
  double constant = 0.0;
  bool separation = false;

  double linear_predictor(const Eigen::Ref<const Eigen::RowVectorXd>& row) const {
    return intercept + (slopes.size() ? row.dot(slopes) : 0.0);
  }
  // Fitted probability clipped to [clip_eps, 1 - clip_eps].
  double probability(const Eigen::Ref<const Eigen::RowVectorXd>& row) const;
};

// Maximum likelihood by iteratively reweighted least squares (Newton with
// step halving): at most 100 iterations, stop when the max-abs gradient of
// the mean log-likelihood is below 1e-8.
LogisticModel fit_logistic(const Eigen::MatrixXd& features,
                           std::span<const int> labels, double clip_eps = 0.01);

enum class CellTarget { outcome, treatment };

// Means of the outcome or treatment in the four cells (z, x1 > 0). Cells
// with no training rows fall back to the marginal mean. Without covariates
// every unit falls into the x1 <= 0 half.
struct CellModel {
  std::array<double, 4> means{};
  std::array<std::size_t, 4> counts{};
  double marginal = 0.0;

  static int cell_of(int z, double x1) { return 2 * z + (x1 > 0.0 ? 1 : 0); }
  double predict(int z, double x1) const;
};

CellModel fit_cell_mean(const Dataset& data, std::span<const std::size_t> rows,
                        CellTarget target);

enum class OutcomeLearner { ols_linear, cell_mean };
enum class TreatmentLearner { logistic, cell_mean };

struct PropensitySpec {
  enum class Kind { known_constant, known_function, logistic };
  Kind kind = Kind::known_constant;
  double value = 0.5;
  // P(Z = 1 | X = x) for Kind::known_function.
  std::function<double(std::span<const double>)> function;

  static PropensitySpec known(double p) { return {Kind::known_constant, p, {}}; }
  static PropensitySpec estimated() { return {Kind::logistic, 0.5, {}}; }
};

struct LearnerSpec {
  OutcomeLearner g = OutcomeLearner::ols_linear;
  TreatmentLearner r = TreatmentLearner::logistic;
  PropensitySpec m = PropensitySpec::known(0.5);
  int folds = 5;
  double clip_eps = 0.01;

  // Throws ConfigError when folds < 2, clip_eps outside (0, 0.5), or a
  // known propensity is outside (0, 1).
  void validate() const;
};

std::string to_string(OutcomeLearner learner);
std::string to_string(TreatmentLearner learner);

/// Cross-fitting driver.
///
/// For each fold k the learners are trained on every unit outside k and
/// predict for the units in k. The outcome regression includes z as a
/// feature (OLS) or as a cell index (cell means) so a single fit yields
/// predictions at both instrument levels. Throws DegenerateFoldError when a
/// training complement contains a single instrument level.
NuisancePredictions cross_fit(const Dataset& data, const LearnerSpec& spec,
                              const FoldAssignment& folds);

}  // namespace lateci
