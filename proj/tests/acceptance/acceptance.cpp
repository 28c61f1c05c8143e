// Acceptance harness: one [PASS]/[FAIL] line per criterion, nonzero exit on
// any failure. Pass criterion ids (C1 ... C9) as arguments to run a subset.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <limits>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <fmt/format.h>

#include "lateci/cli.hpp"
#include "lateci/errors.hpp"
#include "lateci/inference.hpp"
#include "lateci/random.hpp"
#include "lateci/simulation.hpp"
#include "lateci/weakiv.hpp"
#include "../score_generators.hpp"

using namespace lateci;
namespace fs = std::filesystem;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

struct Verdict {
  bool pass;
  std::string detail;
};

StudySpec acceptance_spec(Setting setting, std::vector<std::size_t> n_grid, std::size_t reps, std::uint64_t seed) {
  StudySpec spec;
  spec.setting = setting;
  spec.n_grid = std::move(n_grid);
  spec.reps = reps;
  spec.alpha = 0.05;
  spec.seed = seed;
  spec.threads = 0;
  spec.learner.g = OutcomeLearner::cell_mean;
  spec.learner.r = TreatmentLearner::cell_mean;
  spec.learner.m = PropensitySpec::known(0.5);
  return spec;
}

// Shared between C3, C4 and C5.
std::vector<ReplicationResult>& strong_runs() {
  static std::vector<ReplicationResult> r = run_study(acceptance_spec(Setting::strong, {2000}, 500, 4));
  return r;
}
std::vector<ReplicationResult>& weak_runs() {
  static std::vector<ReplicationResult> r = run_study(acceptance_spec(Setting::weak, {2000}, 500, 5));
  return r;
}

std::size_t failures(const std::vector<ReplicationResult>& rs) {
  return static_cast<std::size_t>(std::count_if(rs.begin(), rs.end(), [](const auto& r) { return !r.ok; }));
}

Verdict c1_inversion_oracle() {
  Rng rng(1001);
  std::size_t disagreements = 0, band = 0, checked = 0;
  for (int sample = 0; sample < 1000; ++sample) {
    const auto s = testing::random_scores(rng, 50);
    const auto q = quad_coefficients(s, 0.05);
    const auto set = invert_score_test(q);
    for (int i = 0; i < 2001; ++i) {
      const double theta = -10.0 + 20.0 * i / 2000.0;
      if (testing::in_boundary_band(q, theta)) {
        ++band;
        continue;
      }
      ++checked;
      disagreements += set.contains(theta) != (std::abs(score_statistic(s, theta)) <= q.z_crit);
    }
  }
  return {disagreements == 0, fmt::format("{} disagreements over {} grid checks ({} boundary-band points skipped)",
                                          disagreements, checked, band)};
}

Verdict c2_case_coverage() {
  std::set<SetTag> tags;
  std::set<QuadraticCase> cases;
  std::size_t evaluated = 0;
  bool total = true;
  auto visit = [&](const QuadCoefficients& q) {
    try {
      cases.insert(classify_quadratic(q));
      tags.insert(invert_score_test(q).tag());
      ++evaluated;
    } catch (...) {
      total = false;
    }
  };

  // Constructed inputs, one or more per branch.
  for (auto [a, b, c] : std::vector<std::tuple<double, double, double>>{
           {1, 0, -1}, {-1, 0, 1}, {1, 0, 1}, {-1, 0, -1}, {0, 2, -4}, {0, -2, -4},
           {1, -2, 1}, {-1, 2, -1}, {0, 0, 1}, {0, 0, -1}, {0, 0, 0}}) {
    visit(QuadCoefficients::from_abc(a, b, c));
  }
  // Fuzz: continuous draws, small integers (which hit the zero branches) and
  // values inside the zero tolerance.
  Rng rng(2002);
  for (int i = 0; i < 1000000; ++i) {
    double v[3];
    for (double& x : v) {
      switch (rng.uniform_index(4)) {
        case 0: x = 10.0 * rng.normal(); break;
        case 1: x = static_cast<double>(rng.uniform_index(5)) - 2.0; break;
        case 2: x = 1e-14 * rng.normal(); break;
        default: x = std::ldexp(rng.normal(), static_cast<int>(rng.uniform_index(200)) - 100); break;
      }
    }
    visit(QuadCoefficients::from_abc(v[0], v[1], v[2]));
  }
  // Data-driven samples through the score path.
  for (int i = 0; i < 2000; ++i) visit(quad_coefficients(testing::random_scores(rng, 50), 0.05));

  const bool all_tags = tags.size() == 7;
  const bool both_half_lines = cases.count(QuadraticCase::linear_left) && cases.count(QuadraticCase::linear_right);
  const bool all_cases = cases.size() == 9;
  return {total && all_tags && both_half_lines && all_cases,
          fmt::format("{} inputs classified without error; {}/7 set forms and {}/9 branches reached "
                      "(left and right half-lines: {})",
                      evaluated, tags.size(), cases.size(), both_half_lines ? "yes" : "no")};
}

Verdict c3_infinite_diameter() {
  const double z2 = std::pow(critical_value(0.05), 2);
  std::size_t violations = 0, trivial = 0, checked = 0;
  for (const auto* runs : {&strong_runs(), &weak_runs()}) {
    for (const auto& r : *runs) {
      if (!r.ok) continue;
      ++checked;
      if (r.trivial_empty) {
        ++trivial;
        continue;
      }
      violations += std::isinf(r.diam_score) != (r.dn0 <= z2);
    }
  }
  const std::size_t failed = failures(strong_runs()) + failures(weak_runs());
  return {violations == 0 && trivial == 0 && failed == 0,
          fmt::format("{} violations, {} a=b=0/c>0 cases, {} failed replications over {} checked", violations,
                      trivial, failed, checked)};
}

Verdict c4_strong_coverage() {
  const auto row = aggregate(strong_runs()).at(0);
  const bool ok = row.failed == 0 && row.coverage_score >= 0.92 && row.coverage_score <= 0.98 &&
                  row.coverage_wald >= 0.92 && row.coverage_wald <= 0.98;
  return {ok, fmt::format("score coverage {:.3f} (se {:.3f}), Wald coverage {:.3f} (se {:.3f}); band [0.92, 0.98]",
                          row.coverage_score, row.se_score, row.coverage_wald, row.se_wald)};
}

Verdict c5_weak_behavior() {
  const auto row = aggregate(weak_runs()).at(0);
  const bool ok = row.failed == 0 && row.coverage_score >= 0.92 && row.coverage_score <= 0.98 &&
                  row.coverage_wald < 0.90 && row.frac_infinite > 0.5;
  return {ok, fmt::format("score coverage {:.3f}, Wald coverage {:.3f}, infinite score sets {:.3f}, "
                          "median score diameter {}",
                          row.coverage_score, row.coverage_wald, row.frac_infinite, row.median_diam_score)};
}

Verdict c6_ratio_convergence() {
  const auto runs = run_study(acceptance_spec(Setting::strong, {1500, 12000}, 300, 6));
  std::map<std::size_t, std::vector<double>> dev, ratio;
  for (const auto& r : runs) {
    if (!r.ok || !std::isfinite(r.diam_score) || !(r.diam_wald > 0.0)) continue;
    const double q = r.diam_score / r.diam_wald;
    ratio[r.n].push_back(q);
    dev[r.n].push_back(std::abs(q - 1.0));
  }
  const double dev_small = extended_median(dev[1500]);
  const double dev_large = extended_median(dev[12000]);
  const double ratio_large = extended_median(ratio[12000]);
  const bool ok = failures(runs) == 0 && dev_large < dev_small && ratio_large >= 0.98 && ratio_large <= 1.02;
  return {ok, fmt::format("median |ratio - 1|: {:.5f} at n=1500, {:.5f} at n=12000; median ratio at n=12000 {:.5f}",
                          dev_small, dev_large, ratio_large)};
}

Verdict c7_weak_limit() {
  const std::size_t n = 5000;
  auto spec = acceptance_spec(Setting::weak, {n}, 2000, 7);
  const DgpParams params = spec.params_for(n);
  const auto cal = estimate_weakiv_config(params, 10000000, 77);

  std::vector<double> errors;
  // psi_b = 4 psi_a exactly when no unit has A = 1 with U < 0; the Gaussian
  // limit has no such atom.
  std::size_t atom = 0;
  for (const auto& r : run_study(spec)) {
    if (!r.ok) continue;
    errors.push_back(r.phi_hat - r.truth);
    atom += std::abs(r.phi_hat - 2.0 * params.sign_scale) <= 1e-9;
  }
  const WeakLimitSampler sampler(cal.config);
  const auto draws = sampler.draws(100000, 777);
  const double ks = ks_distance(errors, draws);

  const auto tail_draws = sampler.draws(10000000, 7777);
  std::vector<double> tails;
  for (double t : {10.0, 100.0, 1000.0}) {
    const auto exceed =
        std::count_if(tail_draws.begin(), tail_draws.end(), [t](double v) { return std::abs(v) > t; });
    tails.push_back(t * static_cast<double>(exceed) / static_cast<double>(tail_draws.size()));
  }
  const auto [lo, hi] = std::minmax_element(tails.begin(), tails.end());
  const double spread = *lo > 0.0 ? *hi / *lo : kInf;

  const bool ok = errors.size() >= 2000 && ks < 0.05 && spread < 3.0;
  return {ok, fmt::format("c_a={:.4f} (se {:.1e}), c_b={:.4f}{}, Sigma=[{:.4f}, {:.4f}, {:.4f}]; KS {:.4f} over {} "
                          "replications ({:.3f} of them exactly at the atom phi_hat = 4); t P(|V|>t) = {:.4f}, {:.4f}, {:.4f} "
                          "(max/min {:.3f})",
                          cal.config.c_a, cal.se_c_a, cal.config.c_b,
                          cal.c_b_vanishes ? " (vanishes)" : "", cal.config.sigma.s11, cal.config.sigma.s12,
                          cal.config.sigma.s22, ks, errors.size(),
                          static_cast<double>(atom) / static_cast<double>(errors.size()), tails[0], tails[1], tails[2], spread)};
}

Verdict c8_equivariance() {
  Rng rng(8008);
  const std::vector<double> kappas{-10.0, -2.5, -0.3, 0.7, 4.0, 25.0};
  const std::vector<double> lambdas{0.01, 0.3, 2.0, 50.0};
  double worst = 0.0;
  std::size_t tag_mismatch = 0, comparisons = 0;
  auto compare = [&](const ConfidenceSet& got, const ConfidenceSet& want, double floor) {
    ++comparisons;
    if (got.tag() != want.tag()) {
      ++tag_mismatch;
      return;
    }
    const auto [g1, g2] = got.endpoints();
    const auto [w1, w2] = want.endpoints();
    for (auto [g, w] : {std::pair{g1, w1}, std::pair{g2, w2}}) {
      if (std::isnan(g) && std::isnan(w)) continue;
      if (std::isinf(g) || std::isinf(w)) {
        if (g != w) worst = kInf;
        continue;
      }
      worst = std::max(worst, std::abs(g - w) / std::max({std::abs(g), std::abs(w), floor}));
    }
  };
  for (int sample = 0; sample < 1000; ++sample) {
    const auto s = testing::random_scores(rng, 50);
    const auto base = invert_score_test(quad_coefficients(s, 0.05));
    for (double kappa : kappas) {
      ScoreSample t = s;
      for (std::size_t i = 0; i < s.size(); ++i) t.psi_b[i] = s.psi_b[i] + kappa * s.psi_a[i];
      compare(invert_score_test(quad_coefficients(t, 0.05)), base.affine(1.0, kappa), std::max(1.0, std::abs(kappa)));
    }
    for (double lambda : lambdas) {
      ScoreSample t = s;
      for (auto& v : t.psi_b) v *= lambda;
      compare(invert_score_test(quad_coefficients(t, 0.05)), base.affine(lambda, 0.0), lambda);
    }
  }
  return {tag_mismatch == 0 && worst <= 1e-10,
          fmt::format("{} comparisons, {} set-form mismatches, worst relative endpoint error {:.2e}", comparisons,
                      tag_mismatch, worst)};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

Verdict c9_determinism() {
  const fs::path root = fs::path(LATECI_TEST_TMPDIR);
  fs::create_directories(root);
  auto simulate = [&](const std::string& name, const std::string& threads) {
    std::ostringstream out, err;
    const auto dir = (root / name).string();
    const int code = cli::run({"simulate", "--setting", "weak", "--n", "500,1000", "--reps", "40", "--seed", "9",
                               "--threads", threads, "--out-dir", dir},
                              out, err);
    return code;
  };
  const int code1 = simulate("det_a", "1");
  const int code2 = simulate("det_b", "1");
  const int code3 = simulate("det_c", "4");
  bool bytes = code1 == 0 && code2 == 0 && code3 == 0;
  for (const char* file : {"replications.csv", "summary.csv"}) {
    const auto a = slurp(root / "det_a" / file);
    bytes = bytes && !a.empty() && a == slurp(root / "det_b" / file) && a == slurp(root / "det_c" / file);
  }

  auto spec = acceptance_spec(Setting::strong, {400, 800}, 25, 99);
  spec.threads = 1;
  const auto serial = run_study(spec);
  spec.threads = 8;
  const auto parallel = run_study(spec);
  std::size_t differ = serial.size() == parallel.size() ? 0 : 1;
  for (std::size_t i = 0; i < std::min(serial.size(), parallel.size()); ++i) {
    const auto& x = serial[i];
    const auto& y = parallel[i];
    const bool same = x.ok == y.ok && x.rep_id == y.rep_id && x.n == y.n && x.phi_hat == y.phi_hat &&
                      x.dn0 == y.dn0 && x.diam_score == y.diam_score && x.diam_wald == y.diam_wald &&
                      x.set_tag == y.set_tag && x.covered_score == y.covered_score;
    differ += !same;
  }
  return {bytes && differ == 0,
          fmt::format("simulate CSVs byte-identical across runs and thread counts: {}; {} of {} replications "
                      "differ between 1 and 8 threads",
                      bytes ? "yes" : "no", differ, serial.size())};
}

}  // namespace

int main(int argc, char** argv) {
  const std::vector<std::pair<std::string, std::pair<std::string, std::function<Verdict()>>>> criteria{
      {"C1", {"quadratic inversion matches the grid oracle", c1_inversion_oracle}},
      {"C2", {"every case branch is reached and classification is total", c2_case_coverage}},
      {"C3", {"infinite diameter iff D_n(0) <= z^2", c3_infinite_diameter}},
      {"C4", {"strong-instrument coverage", c4_strong_coverage}},
      {"C5", {"weak-instrument behavior", c5_weak_behavior}},
      {"C6", {"diameter ratio converges to one", c6_ratio_convergence}},
      {"C7", {"weak-instrument limiting distribution", c7_weak_limit}},
      {"C8", {"shift and scale equivariance", c8_equivariance}},
      {"C9", {"determinism", c9_determinism}},
  };
  std::set<std::string> selected(argv + 1, argv + argc);
  int failed = 0;
  for (const auto& [id, entry] : criteria) {
    if (!selected.empty() && !selected.count(id)) continue;
    const auto start = std::chrono::steady_clock::now();
    Verdict v;
    try {
      v = entry.second();
    } catch (const std::exception& e) {
      v = {false, fmt::format("exception: {}", e.what())};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    fmt::print("[{}] {} {}: {} ({:.1f} s)\n", v.pass ? "PASS" : "FAIL", id, entry.first, v.detail, secs);
    std::fflush(stdout);
    failed += !v.pass;
  }
  return failed == 0 ? 0 : 1;
}
