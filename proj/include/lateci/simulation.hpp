#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "lateci/dgp.hpp"
#include "lateci/inference.hpp"
#include "lateci/nuisance.hpp"

namespace lateci {

enum class Setting { weak, strong, custom };

std::string to_string(Setting setting);

struct StudySpec {
  Setting setting = Setting::strong;
  double custom_pi = 0.0;
  std::vector<std::size_t> n_grid{1500};
  std::size_t reps = 1000;
  double alpha = 0.05;
  std::uint64_t seed = 0;
  LearnerSpec learner;
  // Worker threads; 0 picks the hardware concurrency.
  unsigned threads = 0;

  void validate() const;
  // pi = 0.15 / sqrt(n) (weak), 5 (strong) or custom_pi.
  double pi_for(std::size_t n) const;
  DgpParams params_for(std::size_t n) const;
};

struct ReplicationResult {
  Setting setting = Setting::strong;
  std::size_t n = 0;
  std::size_t rep_id = 0;
  bool ok = false;
  std::string error;
  double truth = 0.0;
  bool covered_score = false;
  bool covered_wald = false;
  double diam_score = 0.0;
  double diam_wald = 0.0;
  SetTag set_tag = SetTag::empty;
  double dn0 = 0.0;
  double phi_hat = 0.0;
  double sigma_hat = 0.0;
  // a = b = 0 and c > 0: the one case where the diameter criterion on
  // D_n(0) does not apply.
  bool trivial_empty = false;
};

// One replication: draws data with seed replication_seed(spec.seed, n,
// rep_id), cross-fits with spec.learner, and evaluates both intervals
// against functional_oracle. Degenerate-data errors are recorded in the
// result rather than thrown.
ReplicationResult run_replication(const DgpParams& params,
                                  const StudySpec& spec, std::size_t rep_id);

// Every (n, rep) of the study, in grid order regardless of scheduling.
std::vector<ReplicationResult> run_study(const StudySpec& spec);

struct SummaryRow {
  Setting setting = Setting::strong;
  std::size_t n = 0;
  std::size_t reps = 0;
  std::size_t failed = 0;
  double coverage_score = 0.0;
  double coverage_wald = 0.0;
  double se_score = 0.0;
  double se_wald = 0.0;
  double median_diam_score = 0.0;
  double median_diam_wald = 0.0;
  double frac_infinite = 0.0;
  // Median of diam_score / diam_wald over replications where both are
  // finite; NaN when there are none.
  double median_ratio = 0.0;
};

// Median over the extended reals; +inf sorts above every finite value.
double extended_median(std::vector<double> values);

// One row per (setting, n) in order of first appearance. Failed
// replications are excluded from every statistic.
std::vector<SummaryRow> aggregate(const std::vector<ReplicationResult>& results);

void write_replications_csv(const std::string& path,
                            const std::vector<ReplicationResult>& results);
void write_summary_csv(const std::string& path,
                       const std::vector<SummaryRow>& rows);

}  // namespace lateci
