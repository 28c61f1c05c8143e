#include "lateci/simulation.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <fstream>
#include <limits>
#include <thread>

#include <fmt/format.h>

#include "lateci/errors.hpp"
#include "lateci/random.hpp"
#include "lateci/scores.hpp"

namespace lateci {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
}  // namespace

std::string to_string(Setting setting) {
  switch (setting) {
    case Setting::weak: return "weak";
    case Setting::strong: return "strong";
    case Setting::custom: return "custom";
  }
  return "unknown";
}

void StudySpec::validate() const {
  if (reps < 1) throw ConfigError("reps must be at least 1");
  if (!(alpha > 0.0 && alpha < 1.0)) throw ConfigError(fmt::format("alpha must lie in (0, 1), got {}", alpha));
  if (n_grid.empty()) throw ConfigError("sample-size grid is empty");
  for (std::size_t n : n_grid) {
    if (n < 2) throw ConfigError(fmt::format("sample size must be at least 2, got {}", n));
    if (n < static_cast<std::size_t>(learner.folds)) {
      throw ConfigError(fmt::format("sample size {} is smaller than the fold count {}", n, learner.folds));
    }
    if (n >= (std::size_t{1} << 32)) throw ConfigError("sample size too large");
  }
  if (reps >= (std::size_t{1} << 32)) throw ConfigError("too many replications");
  if (setting == Setting::custom && !std::isfinite(custom_pi)) throw ConfigError("custom pi must be finite");
  learner.validate();
}

double StudySpec::pi_for(std::size_t n) const {
  switch (setting) {
    case Setting::weak: return 0.15 / std::sqrt(static_cast<double>(n));
    case Setting::strong: return 5.0;
    case Setting::custom: return custom_pi;
  }
  return custom_pi;
}

DgpParams StudySpec::params_for(std::size_t n) const {
  DgpParams p;
  p.pi = pi_for(n);
  p.n = n;
  return p;
}

ReplicationResult run_replication(const DgpParams& params, const StudySpec& spec, std::size_t rep_id) {
  ReplicationResult r;
  r.setting = spec.setting;
  r.n = params.n;
  r.rep_id = rep_id;
  r.truth = functional_oracle(params);
  try {
    const std::uint64_t seed = replication_seed(spec.seed, params.n, rep_id);
    const Dataset data = dgp_generate(params, seed);
    const FoldAssignment folds = make_folds(data.n(), spec.learner.folds, stream_seed(seed, 1));
    const NuisancePredictions preds = cross_fit(data, spec.learner, folds);
    const ScoreSample scores = compute_scores(data, preds);

    const QuadCoefficients q = quad_coefficients(scores, spec.alpha);
    if (q.degenerate) throw DegenerateDataError("all scores are zero");
    const ConfidenceSet set = invert_score_test(q);
    r.set_tag = set.tag();
    r.covered_score = set.contains(r.truth);
    r.diam_score = set.diameter();
    r.trivial_empty = classify_quadratic(q) == QuadraticCase::constant && q.c > 0.0;
    r.dn0 = dn_statistic(scores.psi_a, 0.0);

    const DrmlResult drml = drml_estimate(scores, spec.alpha);
    r.phi_hat = drml.phi_hat;
    r.sigma_hat = drml.sigma_hat();
    r.covered_wald = drml.contains(r.truth);
    r.diam_wald = drml.diameter();
    r.ok = true;
  } catch (const DegenerateDataError& e) {
    r.ok = false;
    r.error = e.what();
  }
  return r;
}

std::vector<ReplicationResult> run_study(const StudySpec& spec) {
  spec.validate();
  struct Task {
    std::size_t n;
    std::size_t rep;
  };
  std::vector<Task> tasks;
  tasks.reserve(spec.n_grid.size() * spec.reps);
  for (std::size_t n : spec.n_grid) {
    for (std::size_t rep = 0; rep < spec.reps; ++rep) tasks.push_back({n, rep});
  }
  std::vector<ReplicationResult> results(tasks.size());

  unsigned threads = spec.threads ? spec.threads : std::max(1u, std::thread::hardware_concurrency());
  threads = static_cast<unsigned>(std::min<std::size_t>(threads, tasks.size()));
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t t = next++; t < tasks.size(); t = next++) {
      results[t] = run_replication(spec.params_for(tasks[t].n), spec, tasks[t].rep);
    }
  };
  if (threads <= 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    pool.reserve(threads);
    for (unsigned i = 0; i < threads; ++i) pool.emplace_back(worker);
  }
  return results;
}

double extended_median(std::vector<double> values) {
  if (values.empty()) return kNaN;
  std::sort(values.begin(), values.end());
  const std::size_t m = values.size();
  if (m % 2 == 1) return values[m / 2];
  const double lo = values[m / 2 - 1];
  const double hi = values[m / 2];
  if (std::isinf(hi)) return kInf;
  return 0.5 * (lo + hi);
}

std::vector<SummaryRow> aggregate(const std::vector<ReplicationResult>& results) {
  if (results.empty()) throw ConfigError("no replication results to aggregate");
  std::vector<SummaryRow> rows;
  auto row_for = [&](Setting s, std::size_t n) -> std::size_t {
    for (std::size_t i = 0; i < rows.size(); ++i) {
      if (rows[i].setting == s && rows[i].n == n) return i;
    }
    SummaryRow row;
    row.setting = s;
    row.n = n;
    rows.push_back(row);
    return rows.size() - 1;
  };

  struct Acc {
    std::vector<double> diam_score, diam_wald, ratios;
    std::size_t covered_score = 0, covered_wald = 0, infinite = 0;
  };
  std::vector<Acc> accs;
  for (const auto& r : results) {
    const std::size_t idx = row_for(r.setting, r.n);
    if (accs.size() < rows.size()) accs.resize(rows.size());
    SummaryRow& row = rows[idx];
    Acc& acc = accs[idx];
    if (!r.ok) {
      ++row.failed;
      continue;
    }
    ++row.reps;
    acc.covered_score += r.covered_score;
    acc.covered_wald += r.covered_wald;
    acc.diam_score.push_back(r.diam_score);
    acc.diam_wald.push_back(r.diam_wald);
    if (std::isinf(r.diam_score)) ++acc.infinite;
    if (std::isfinite(r.diam_score) && std::isfinite(r.diam_wald) && r.diam_wald > 0.0) {
      acc.ratios.push_back(r.diam_score / r.diam_wald);
    }
  }
  for (std::size_t i = 0; i < rows.size(); ++i) {
    SummaryRow& row = rows[i];
    const Acc& acc = accs[i];
    if (row.reps == 0) {
      row.coverage_score = row.coverage_wald = row.se_score = row.se_wald = kNaN;
      row.median_diam_score = row.median_diam_wald = row.frac_infinite = row.median_ratio = kNaN;
      continue;
    }
    const auto reps = static_cast<double>(row.reps);
    row.coverage_score = static_cast<double>(acc.covered_score) / reps;
    row.coverage_wald = static_cast<double>(acc.covered_wald) / reps;
    row.se_score = std::sqrt(row.coverage_score * (1.0 - row.coverage_score) / reps);
    row.se_wald = std::sqrt(row.coverage_wald * (1.0 - row.coverage_wald) / reps);
    row.median_diam_score = extended_median(acc.diam_score);
    row.median_diam_wald = extended_median(acc.diam_wald);
    row.frac_infinite = static_cast<double>(acc.infinite) / reps;
    row.median_ratio = extended_median(acc.ratios);
  }
  return rows;
}

namespace {

std::string num(double v) { return fmt::format("{:.17g}", v); }

}  // namespace

void write_replications_csv(const std::string& path, const std::vector<ReplicationResult>& results) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError(fmt::format("cannot write '{}'", path));
  out << "setting,n,rep_id,status,covered_score,covered_wald,diam_score,diam_wald,set_tag,dn0,phi_hat\n";
  for (const auto& r : results) {
    if (r.ok) {
      out << fmt::format("{},{},{},ok,{},{},{},{},{},{},{}\n", to_string(r.setting), r.n, r.rep_id,
                         int(r.covered_score), int(r.covered_wald), num(r.diam_score), num(r.diam_wald),
                         to_string(r.set_tag), num(r.dn0), num(r.phi_hat));
    } else {
      out << fmt::format("{},{},{},failed,,,,,,,\n", to_string(r.setting), r.n, r.rep_id);
    }
  }
}

void write_summary_csv(const std::string& path, const std::vector<SummaryRow>& rows) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError(fmt::format("cannot write '{}'", path));
  out << "setting,n,coverage_score,coverage_wald,se_score,se_wald,median_diam_score,median_diam_wald,"
         "frac_infinite,median_ratio\n";
  for (const auto& r : rows) {
    out << fmt::format("{},{},{},{},{},{},{},{},{},{}\n", to_string(r.setting), r.n, num(r.coverage_score),
                       num(r.coverage_wald), num(r.se_score), num(r.se_wald), num(r.median_diam_score),
                       num(r.median_diam_wald), num(r.frac_infinite), num(r.median_ratio));
  }
}

}  // namespace lateci
