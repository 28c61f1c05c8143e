#include "lateci/nuisance.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>

#include "lateci/errors.hpp"

namespace lateci {

namespace {

double clip(double p, double eps) { return std::clamp(p, eps, 1.0 - eps); }

double sigmoid(double t) {
  if (t >= 0.0) return 1.0 / (1.0 + std::exp(-t));
  const double e = std::exp(t);
  return e / (1.0 + e);
}

// log(1 + exp(t)) without overflow.
double softplus(double t) { return t > 0.0 ? t + std::log1p(std::exp(-t)) : std::log1p(std::exp(t)); }

}  // namespace

LinearModel fit_ols(const Eigen::MatrixXd& features, const Eigen::VectorXd& targets) {
  const Eigen::Index n = features.rows();
  const Eigen::Index p = features.cols();
  if (n < 1) throw ConfigError("fit_ols: no rows");
  if (targets.size() != n) throw ConfigError("fit_ols: feature and target lengths differ");

  LinearModel model;
  const double y_mean = targets.mean();
  if (p == 0) {
    model.intercept = y_mean;
    model.slopes.resize(0);
    return model;
  }
  const Eigen::RowVectorXd x_mean = features.colwise().mean();
  const Eigen::MatrixXd xc = features.rowwise() - x_mean;
  const Eigen::VectorXd yc = targets.array() - y_mean;
  Eigen::MatrixXd gram = xc.transpose() * xc;
  const Eigen::VectorXd rhs = xc.transpose() * yc;

  Eigen::LDLT<Eigen::MatrixXd> ldlt(gram);
  const Eigen::VectorXd d = ldlt.vectorD();
  const double d_max = d.cwiseAbs().maxCoeff();
  const bool singular = ldlt.info() != Eigen::Success || d_max == 0.0 ||
                        d.minCoeff() <= 1e-12 * d_max;
  if (singular) {
    const double trace = gram.trace();
    const double lambda = 1e-8 * (trace > 0.0 ? trace / static_cast<double>(p) : 1.0);
    gram.diagonal().array() += lambda;
    model.slopes = gram.llt().solve(rhs);
    model.ridge_used = true;
  } else {
    model.slopes = ldlt.solve(rhs);
  }
  model.intercept = y_mean - x_mean.dot(model.slopes);
  return model;
}

double LogisticModel::probability(const Eigen::Ref<const Eigen::RowVectorXd>& row) const {
  if (constant_fallback) return clip(constant, clip_eps);
  return clip(sigmoid(linear_predictor(row)), clip_eps);
}

LogisticModel fit_logistic(const Eigen::MatrixXd& features, std::span<const int> labels,
                           double clip_eps) {
  const Eigen::Index n = features.rows();
  const Eigen::Index p = features.cols();
  if (n < 1) throw ConfigError("fit_logistic: no rows");
  if (static_cast<Eigen::Index>(labels.size()) != n) {
    throw ConfigError("fit_logistic: feature and label lengths differ");
  }

  LogisticModel model;
  model.clip_eps = clip_eps;
  model.slopes = Eigen::VectorXd::Zero(p);

  Eigen::VectorXd y(n);
  for (Eigen::Index i = 0; i < n; ++i) y(i) = labels[static_cast<std::size_t>(i)];
  const double mean = y.mean();
  if (mean == 0.0 || mean == 1.0) {
    model.constant_fallback = true;
    model.constant = mean;
    const double q = clip(mean, clip_eps);
    model.intercept = std::log(q / (1.0 - q));
    return model;
  }

  // Design with a leading intercept column.
  Eigen::MatrixXd design(n, p + 1);
  design.col(0).setOnes();
  design.rightCols(p) = features;

  Eigen::VectorXd beta = Eigen::VectorXd::Zero(p + 1);
  beta(0) = std::log(mean / (1.0 - mean));

  auto neg_loglik = [&](const Eigen::VectorXd& b) {
    const Eigen::VectorXd eta = design * b;
    double total = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) total += softplus(eta(i)) - y(i) * eta(i);
    return total / static_cast<double>(n);
  };

  constexpr int kMaxIter = 100;
  constexpr double kGradTol = 1e-8;
  double objective = neg_loglik(beta);
  bool converged = false;
  int iter = 0;
  for (; iter < kMaxIter; ++iter) {
    const Eigen::VectorXd eta = design * beta;
    Eigen::VectorXd prob(n), weight(n);
    for (Eigen::Index i = 0; i < n; ++i) {
      prob(i) = sigmoid(eta(i));
      weight(i) = prob(i) * (1.0 - prob(i));
    }
    const Eigen::VectorXd grad = design.transpose() * (y - prob) / static_cast<double>(n);
    if (grad.cwiseAbs().maxCoeff() < kGradTol) {
      converged = true;
      break;
    }
    Eigen::MatrixXd hessian = design.transpose() * weight.asDiagonal() * design / static_cast<double>(n);
    hessian.diagonal().array() += 1e-10 * (1.0 + hessian.diagonal().maxCoeff());
    const Eigen::VectorXd step = hessian.ldlt().solve(grad);

    double scale = 1.0;
    Eigen::VectorXd candidate = beta + step;
    double cand_obj = neg_loglik(candidate);
    while (cand_obj > objective && scale > 1e-10) {
      scale *= 0.5;
      candidate = beta + scale * step;
      cand_obj = neg_loglik(candidate);
    }
    if (cand_obj > objective) break;
    beta = candidate;
    objective = cand_obj;
  }
  model.iterations = iter;
  model.intercept = beta(0);
  model.slopes = beta.tail(p);

  // Separation shows up as an unbounded linear predictor on training rows.
  const double max_eta = (design * beta).cwiseAbs().maxCoeff();
  model.separation = !converged || max_eta > 30.0;
  return model;
}

double CellModel::predict(int z, double x1) const {
  const int cell = cell_of(z, x1);
  return counts[static_cast<std::size_t>(cell)] ? means[static_cast<std::size_t>(cell)] : marginal;
}

CellModel fit_cell_mean(const Dataset& data, std::span<const std::size_t> rows, CellTarget target) {
  if (rows.empty()) throw ConfigError("fit_cell_mean: empty slice");
  CellModel model;
  std::array<double, 4> sums{};
  double total = 0.0;
  const bool has_x = data.p() > 0;
  for (std::size_t i : rows) {
    const double v = target == CellTarget::outcome ? data.y()[i] : static_cast<double>(data.a()[i]);
    const double x1 = has_x ? data.x()(static_cast<Eigen::Index>(i), 0) : 0.0;
    const auto cell = static_cast<std::size_t>(CellModel::cell_of(data.z()[i], x1));
    sums[cell] += v;
    ++model.counts[cell];
    total += v;
  }
  model.marginal = total / static_cast<double>(rows.size());
  for (std::size_t c = 0; c < 4; ++c) {
    model.means[c] = model.counts[c] ? sums[c] / static_cast<double>(model.counts[c]) : model.marginal;
  }
  return model;
}

void LearnerSpec::validate() const {
  if (folds < 2) throw ConfigError(fmt::format("fold count must be at least 2, got {}", folds));
  if (!(clip_eps > 0.0 && clip_eps < 0.5)) {
    throw ConfigError(fmt::format("propensity clip must lie in (0, 0.5), got {}", clip_eps));
  }
  if (m.kind == PropensitySpec::Kind::known_constant && !(m.value > 0.0 && m.value < 1.0)) {
    throw ConfigError(fmt::format("known propensity must lie in (0, 1), got {}", m.value));
  }
  if (m.kind == PropensitySpec::Kind::known_function && !m.function) {
    throw ConfigError("known propensity function is empty");
  }
}

std::string to_string(OutcomeLearner learner) {
  return learner == OutcomeLearner::ols_linear ? "ols" : "cellmean";
}

std::string to_string(TreatmentLearner learner) {
  return learner == TreatmentLearner::logistic ? "logit" : "cellmean";
}

namespace {

Eigen::MatrixXd rows_of(const Eigen::MatrixXd& m, std::span<const std::size_t> rows) {
  Eigen::MatrixXd out(static_cast<Eigen::Index>(rows.size()), m.cols());
  for (std::size_t i = 0; i < rows.size(); ++i) out.row(static_cast<Eigen::Index>(i)) = m.row(static_cast<Eigen::Index>(rows[i]));
  return out;
}

// [z, x] design for the outcome and treatment regressions.
Eigen::MatrixXd instrument_design(const Dataset& data, std::span<const std::size_t> rows) {
  Eigen::MatrixXd out(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(data.p() + 1));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto r = static_cast<Eigen::Index>(i);
    out(r, 0) = data.z()[rows[i]];
    out.row(r).tail(static_cast<Eigen::Index>(data.p())) = data.x().row(static_cast<Eigen::Index>(rows[i]));
  }
  return out;
}

Eigen::RowVectorXd with_instrument(const Dataset& data, std::size_t i, int z) {
  Eigen::RowVectorXd row(static_cast<Eigen::Index>(data.p() + 1));
  row(0) = z;
  row.tail(static_cast<Eigen::Index>(data.p())) = data.x().row(static_cast<Eigen::Index>(i));
  return row;
}

}  // namespace

NuisancePredictions cross_fit(const Dataset& data, const LearnerSpec& spec, const FoldAssignment& folds) {
  spec.validate();
  const std::size_t n = data.n();
  if (folds.n() != n) {
    throw ConfigError(fmt::format("fold assignment covers {} units, dataset has {}", folds.n(), n));
  }

  NuisancePredictions out;
  out.g1.assign(n, 0.0);
  out.g0.assign(n, 0.0);
  out.r1.assign(n, 0.0);
  out.r0.assign(n, 0.0);
  out.m1.assign(n, 0.0);

  const bool has_x = data.p() > 0;
  auto x1_of = [&](std::size_t i) { return has_x ? data.x()(static_cast<Eigen::Index>(i), 0) : 0.0; };

  for (int k = 0; k < folds.k; ++k) {
    const auto test = folds.members(k);
    const auto train = folds.complement(k);
    if (test.empty()) continue;

    std::size_t z_ones = 0;
    for (std::size_t i : train) z_ones += static_cast<std::size_t>(data.z()[i]);
    if (z_ones == 0 || z_ones == train.size()) {
      throw DegenerateFoldError(fmt::format(
          "training data for fold {} contains a single instrument level (z={})", k, z_ones ? 1 : 0));
    }

    if (spec.g == OutcomeLearner::ols_linear) {
      Eigen::VectorXd yt(static_cast<Eigen::Index>(train.size()));
      for (std::size_t j = 0; j < train.size(); ++j) yt(static_cast<Eigen::Index>(j)) = data.y()[train[j]];
      const LinearModel model = fit_ols(instrument_design(data, train), yt);
      out.warnings |= model.ridge_used;
      for (std::size_t i : test) {
        out.g1[i] = model.predict(with_instrument(data, i, 1));
        out.g0[i] = model.predict(with_instrument(data, i, 0));
      }
    } else {
      const CellModel model = fit_cell_mean(data, train, CellTarget::outcome);
      for (std::size_t i : test) {
        out.g1[i] = model.predict(1, x1_of(i));
        out.g0[i] = model.predict(0, x1_of(i));
      }
    }

    if (spec.r == TreatmentLearner::logistic) {
      std::vector<int> at(train.size());
      for (std::size_t j = 0; j < train.size(); ++j) at[j] = data.a()[train[j]];
      const LogisticModel model = fit_logistic(instrument_design(data, train), at, spec.clip_eps);
      out.warnings |= model.separation;
      for (std::size_t i : test) {
        out.r1[i] = model.probability(with_instrument(data, i, 1));
        out.r0[i] = model.probability(with_instrument(data, i, 0));
      }
    } else {
      const CellModel model = fit_cell_mean(data, train, CellTarget::treatment);
      for (std::size_t i : test) {
        out.r1[i] = model.predict(1, x1_of(i));
        out.r0[i] = model.predict(0, x1_of(i));
      }
    }

    switch (spec.m.kind) {
      case PropensitySpec::Kind::known_constant:
        for (std::size_t i : test) out.m1[i] = clip(spec.m.value, spec.clip_eps);
        break;
      case PropensitySpec::Kind::known_function:
        for (std::size_t i : test) {
          const Eigen::RowVectorXd row = data.x().row(static_cast<Eigen::Index>(i));
          out.m1[i] = clip(spec.m.function(std::span<const double>(row.data(), static_cast<std::size_t>(row.size()))),
                           spec.clip_eps);
        }
        break;
      case PropensitySpec::Kind::logistic: {
        std::vector<int> zt(train.size());
        for (std::size_t j = 0; j < train.size(); ++j) zt[j] = data.z()[train[j]];
        const LogisticModel model = fit_logistic(rows_of(data.x(), train), zt, spec.clip_eps);
        out.warnings |= model.separation;
        for (std::size_t i : test) out.m1[i] = model.probability(data.x().row(static_cast<Eigen::Index>(i)));
        break;
      }
    }
  }
  return out;
}

}  // namespace lateci
