#include "lateci/cli.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <limits>
#include <optional>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <fmt/ostream.h>

#include "lateci/data.hpp"
#include "lateci/errors.hpp"
#include "lateci/inference.hpp"
#include "lateci/nuisance.hpp"
#include "lateci/scores.hpp"
#include "lateci/simulation.hpp"
#include "lateci/weakiv.hpp"

namespace lateci::cli {

namespace {

std::string num(double v) { return fmt::format("{:.17g}", v); }

struct DataFlags {
  std::string data;
  CsvSchema schema;
  std::string propensity = "logit";
  std::string g = "ols";
  std::string r = "logit";
  double alpha = 0.05;
  int folds = 5;
  std::uint64_t seed = 0;
  double clip = 0.01;
  std::string out;
};

void add_data_flags(CLI::App* cmd, DataFlags& f) {
  cmd->add_option("--data", f.data, "Input CSV")->required();
  cmd->add_option("--outcome", f.schema.outcome, "Outcome column")->capture_default_str();
  cmd->add_option("--treatment", f.schema.treatment, "Binary treatment column")->capture_default_str();
  cmd->add_option("--instrument", f.schema.instrument, "Binary instrument column")->capture_default_str();
  cmd->add_option("--covariates", f.schema.covariates, "Covariate columns")->delimiter(',');
  cmd->add_option("--propensity", f.propensity, "known:VALUE or logit")->capture_default_str();
  cmd->add_option("--g", f.g, "Outcome learner")->check(CLI::IsMember({"ols", "cellmean"}))->capture_default_str();
  cmd->add_option("--r", f.r, "Treatment learner")->check(CLI::IsMember({"logit", "cellmean"}))->capture_default_str();
  cmd->add_option("--alpha", f.alpha, "Significance level")->capture_default_str();
  cmd->add_option("--folds", f.folds, "Cross-fitting folds")->capture_default_str();
  cmd->add_option("--seed", f.seed, "Fold assignment seed")->capture_default_str();
  cmd->add_option("--clip", f.clip, "Propensity clipping epsilon")->capture_default_str();
}

PropensitySpec parse_propensity(const std::string& text) {
  if (text == "logit") return PropensitySpec::estimated();
  const std::string prefix = "known:";
  if (text.rfind(prefix, 0) == 0) {
    const std::string value = text.substr(prefix.size());
    try {
      std::size_t used = 0;
      const double p = std::stod(value, &used);
      if (used == value.size()) return PropensitySpec::known(p);
    } catch (const std::exception&) {
    }
  }
  throw ConfigError(fmt::format("--propensity must be 'logit' or 'known:VALUE', got '{}'", text));
}

LearnerSpec learner_from(const std::string& g, const std::string& r, int folds, double clip,
                         PropensitySpec m) {
  LearnerSpec spec;
  spec.g = g == "ols" ? OutcomeLearner::ols_linear : OutcomeLearner::cell_mean;
  spec.r = r == "logit" ? TreatmentLearner::logistic : TreatmentLearner::cell_mean;
  spec.folds = folds;
  spec.clip_eps = clip;
  spec.m = std::move(m);
  spec.validate();
  return spec;
}

struct Fitted {
  Dataset data;
  ScoreSample scores;
  bool warnings;
};

Fitted fit_scores(const DataFlags& f) {
  LearnerSpec spec = learner_from(f.g, f.r, f.folds, f.clip, parse_propensity(f.propensity));
  critical_value(f.alpha);
  Dataset data = load_csv(f.data, f.schema);
  if (static_cast<std::size_t>(f.folds) > data.n()) {
    throw ConfigError(fmt::format("--folds {} exceeds the {} rows", f.folds, data.n()));
  }
  const FoldAssignment folds = make_folds(data.n(), f.folds, f.seed);
  const NuisancePredictions preds = cross_fit(data, spec, folds);
  ScoreSample scores = compute_scores(data, preds);
  return {std::move(data), std::move(scores), preds.warnings};
}

int cmd_analyze(const DataFlags& f, std::ostream& out, std::ostream& err) {
  const Fitted fit = fit_scores(f);
  if (fit.warnings) fmt::print(err, "warning: a nuisance fit used a ridge or separation fallback\n");

  const QuadCoefficients q = quad_coefficients(fit.scores, f.alpha);
  if (q.degenerate) throw DegenerateDataError("all scores are zero; the score statistic is undefined");
  const ConfidenceSet set = invert_score_test(q);
  const InstrumentDiagnostic diag = instrument_diagnostic(fit.scores.psi_a, f.alpha);

  std::optional<DrmlResult> drml;
  std::string drml_error;
  try {
    drml = drml_estimate(fit.scores, f.alpha);
  } catch (const WeakDenominatorError& e) {
    drml_error = e.what();
  }

  constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
  const double phi = drml ? drml->phi_hat : kNaN;
  const double sigma = drml ? drml->sigma_hat() : kNaN;
  const double lo = drml ? drml->wald_lo : kNaN;
  const double hi = drml ? drml->wald_hi : kNaN;
  const double ratio = drml && set.bounded() && drml->diameter() > 0.0 ? set.diameter() / drml->diameter() : kNaN;
  const auto [set_lo, set_hi] = set.endpoints();

  fmt::print(out, "n                      {}\n", fit.data.n());
  fmt::print(out, "alpha                  {}\n", f.alpha);
  if (drml) {
    fmt::print(out, "DRML estimate          {:.6g}\n", phi);
    fmt::print(out, "sigma_hat              {:.6g}\n", sigma);
    fmt::print(out, "Wald interval          [{:.6g}, {:.6g}]\n", lo, hi);
  } else {
    fmt::print(out, "DRML estimate          undefined ({})\n", drml_error);
  }
  fmt::print(out, "score confidence set   {} {}\n", to_string(set.tag()), set.describe());
  fmt::print(out, "D_n(0)                 {:.6g}\n", diag.dn0);
  fmt::print(out, "weak instrument        {}\n", diag.weak ? "yes (score set unbounded)" : "no");
  fmt::print(out, "a, b, c, delta         {:.6g}, {:.6g}, {:.6g}, {:.6g}\n", q.a, q.b, q.c, q.delta);
  fmt::print(out, "zero tolerance         {:g}\n", kZeroTolerance);
  if (std::isfinite(ratio)) fmt::print(out, "diameter ratio         {:.6g}\n", ratio);

  if (!f.out.empty()) {
    std::ofstream csv(f.out, std::ios::binary);
    if (!csv) throw ConfigError(fmt::format("cannot write '{}'", f.out));
    csv << "n,alpha,phi_hat,sigma_hat,wald_lo,wald_hi,set_tag,set_lo,set_hi,dn0,weak_instrument,a,b,c,delta,"
           "diam_ratio\n";
    csv << fmt::format("{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}\n", fit.data.n(), num(f.alpha), num(phi),
                       num(sigma), num(lo), num(hi), to_string(set.tag()), num(set_lo), num(set_hi), num(diag.dn0),
                       int(diag.weak), num(q.a), num(q.b), num(q.c), num(q.delta), num(ratio));
  }
  if (!drml) {
    fmt::print(err, "error: {}\n", drml_error);
    return kDegenerate;
  }
  return kOk;
}

struct ScanFlags {
  DataFlags data;
  double theta_min = -10.0;
  double theta_max = 10.0;
  std::size_t points = 2001;
  bool dump_scores = false;
};

std::string scores_path(const std::string& out) {
  std::filesystem::path p(out);
  p.replace_extension();
  return p.string() + ".scores.csv";
}

int cmd_scan(const ScanFlags& f, std::ostream& out, std::ostream& err) {
  if (!std::isfinite(f.theta_min) || !std::isfinite(f.theta_max) || !(f.theta_min < f.theta_max)) {
    throw ConfigError("--theta-min and --theta-max must be finite with min < max");
  }
  if (f.points < 2) throw ConfigError("--grid-points must be at least 2");
  if (f.data.out.empty()) throw ConfigError("--out is required");

  const Fitted fit = fit_scores(f.data);
  const QuadCoefficients q = quad_coefficients(fit.scores, f.data.alpha);
  if (q.degenerate) throw DegenerateDataError("all scores are zero; the score statistic is undefined");
  const ConfidenceSet set = invert_score_test(q);

  std::ofstream csv(f.data.out, std::ios::binary);
  if (!csv) throw ConfigError(fmt::format("cannot write '{}'", f.data.out));
  csv << "theta,s_n,member_quadratic,member_statistic\n";
  std::size_t mismatches = 0;
  std::size_t in_band = 0;
  const double step = (f.theta_max - f.theta_min) / static_cast<double>(f.points - 1);
  for (std::size_t i = 0; i < f.points; ++i) {
    const double theta = i + 1 == f.points ? f.theta_max : f.theta_min + step * static_cast<double>(i);
    const bool by_quadratic = set.contains(theta);
    double s = std::numeric_limits<double>::quiet_NaN();
    bool by_statistic = by_quadratic;
    bool defined = true;
    try {
      s = score_statistic(fit.scores, theta);
      by_statistic = std::abs(s) <= q.z_crit;
    } catch (const DegenerateDataError&) {
      defined = false;
    }
    const double band =
        1e-6 * (std::abs(q.a) * theta * theta + std::abs(q.b) * std::abs(theta) + std::abs(q.c) + 1.0);
    if (!defined || std::abs(q.evaluate(theta)) <= band) {
      ++in_band;
    } else if (by_quadratic != by_statistic) {
      ++mismatches;
    }
    csv << fmt::format("{},{},{},{}\n", num(theta), num(s), int(by_quadratic), int(by_statistic));
  }
  if (f.dump_scores) {
    const std::string path = scores_path(f.data.out);
    std::ofstream sc(path, std::ios::binary);
    if (!sc) throw ConfigError(fmt::format("cannot write '{}'", path));
    sc << "psi_a,psi_b\n";
    for (std::size_t i = 0; i < fit.scores.size(); ++i) {
      sc << fmt::format("{},{}\n", num(fit.scores.psi_a[i]), num(fit.scores.psi_b[i]));
    }
    fmt::print(err, "scores written to {}\n", path);
  }
  fmt::print(out, "score confidence set   {} {}\n", to_string(set.tag()), set.describe());
  fmt::print(out, "grid points            {}\n", f.points);
  fmt::print(out, "boundary-band points   {}\n", in_band);
  fmt::print(out, "mismatches             {}\n", mismatches);
  return kOk;
}

struct SimulateFlags {
  std::string setting = "strong";
  std::optional<double> pi;
  std::vector<std::size_t> n{1500, 4500, 7500, 10500, 12000};
  long long reps = 1000;
  double alpha = 0.05;
  std::uint64_t seed = 0;
  std::string g = "ols";
  std::string r = "cellmean";
  std::string propensity = "known:0.5";
  int folds = 5;
  unsigned threads = 0;
  std::string out_dir;
};

int cmd_simulate(const SimulateFlags& f, std::ostream& out, std::ostream& err) {
  StudySpec spec;
  if (f.setting == "weak") {
    spec.setting = Setting::weak;
  } else if (f.setting == "strong") {
    spec.setting = Setting::strong;
  } else {
    spec.setting = Setting::custom;
  }
  if (spec.setting == Setting::custom) {
    if (!f.pi) throw ConfigError("--setting custom requires --pi");
    spec.custom_pi = *f.pi;
  } else if (f.pi) {
    throw ConfigError("--pi is only valid with --setting custom");
  }
  if (f.reps < 1) throw ConfigError(fmt::format("--reps must be at least 1, got {}", f.reps));
  spec.reps = static_cast<std::size_t>(f.reps);
  spec.n_grid = f.n;
  spec.alpha = f.alpha;
  spec.seed = f.seed;
  spec.threads = f.threads;
  spec.learner = learner_from(f.g, f.r, f.folds, 0.01, parse_propensity(f.propensity));
  spec.validate();

  std::error_code ec;
  std::filesystem::create_directories(f.out_dir, ec);
  if (ec) throw ConfigError(fmt::format("cannot create '{}': {}", f.out_dir, ec.message()));

  std::vector<ReplicationResult> results;
  for (std::size_t n : spec.n_grid) {
    StudySpec one = spec;
    one.n_grid = {n};
    fmt::print(err, "[simulate] setting={} n={} pi={:.6g} reps={}\n", to_string(spec.setting), n,
               spec.pi_for(n), spec.reps);
    auto part = run_study(one);
    const auto failed = std::count_if(part.begin(), part.end(), [](const auto& r) { return !r.ok; });
    if (failed) fmt::print(err, "[simulate] n={}: {} replication(s) failed\n", n, failed);
    results.insert(results.end(), part.begin(), part.end());
  }
  const auto rows = aggregate(results);
  const auto dir = std::filesystem::path(f.out_dir);
  write_replications_csv((dir / "replications.csv").string(), results);
  write_summary_csv((dir / "summary.csv").string(), rows);

  fmt::print(out, "{:>8} {:>7} {:>10} {:>10} {:>12} {:>12} {:>8} {:>8}\n", "setting", "n", "cov_score",
             "cov_wald", "med_diam_sc", "med_diam_wd", "frac_inf", "ratio");
  for (const auto& r : rows) {
    fmt::print(out, "{:>8} {:>7} {:>10.4f} {:>10.4f} {:>12.5g} {:>12.5g} {:>8.3f} {:>8.4f}\n", to_string(r.setting),
               r.n, r.coverage_score, r.coverage_wald, r.median_diam_score, r.median_diam_wald, r.frac_infinite,
               r.median_ratio);
  }
  return kOk;
}

struct WeakLimitFlags {
  double ca = 1.0;
  double cb = 1.0;
  double s11 = 1.0;
  double s12 = 0.0;
  double s22 = 1.0;
  long long samples = 100000;
  std::uint64_t seed = 0;
  std::string out;
};

int cmd_weakiv_limit(const WeakLimitFlags& f, std::ostream& out, std::ostream&) {
  WeakIVConfig cfg;
  cfg.c_a = f.ca;
  cfg.c_b = f.cb;
  cfg.sigma = Cov2{f.s11, f.s12, f.s22};
  cfg.validate();
  if (f.samples < 1) throw ConfigError("--samples must be at least 1");
  const auto draws = WeakLimitSampler(cfg).draws(static_cast<std::size_t>(f.samples), f.seed);

  std::ofstream csv(f.out, std::ios::binary);
  if (!csv) throw ConfigError(fmt::format("cannot write '{}'", f.out));
  csv << "draw\n";
  for (double v : draws) csv << num(v) << '\n';

  std::vector<double> sorted = draws;
  const auto mid = sorted.begin() + static_cast<std::ptrdiff_t>(sorted.size() / 2);
  std::nth_element(sorted.begin(), mid, sorted.end());
  fmt::print(out, "draws                  {}\n", draws.size());
  fmt::print(out, "median                 {:.6g}\n", *mid);
  return kOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Weak-instrument-robust inference for the local average treatment effect", "lateci"};
  app.require_subcommand(1);

  DataFlags analyze;
  auto* analyze_cmd = app.add_subcommand("analyze", "Score confidence set and DRML Wald interval for a CSV");
  add_data_flags(analyze_cmd, analyze);
  analyze_cmd->add_option("--out", analyze.out, "CSV row with every reported quantity");

  ScanFlags scan;
  auto* scan_cmd = app.add_subcommand("scan", "Grid check of the closed-form set against |S_n| <= z");
  add_data_flags(scan_cmd, scan.data);
  scan_cmd->add_option("--theta-min", scan.theta_min)->capture_default_str();
  scan_cmd->add_option("--theta-max", scan.theta_max)->capture_default_str();
  scan_cmd->add_option("--grid-points", scan.points)->capture_default_str();
  scan_cmd->add_flag("--dump-scores", scan.dump_scores, "Also write psi_a, psi_b to <out>.scores.csv");
  scan_cmd->add_option("--out", scan.data.out, "Grid CSV")->required();

  SimulateFlags sim;
  auto* sim_cmd = app.add_subcommand("simulate", "Monte Carlo coverage and length study");
  sim_cmd->add_option("--setting", sim.setting)
      ->check(CLI::IsMember({"weak", "strong", "custom"}))
      ->capture_default_str();
  sim_cmd->add_option("--pi", sim.pi, "Instrument strength (custom setting)");
  sim_cmd->add_option("--n", sim.n, "Sample sizes")->delimiter(',');
  sim_cmd->add_option("--reps", sim.reps)->capture_default_str();
  sim_cmd->add_option("--alpha", sim.alpha)->capture_default_str();
  sim_cmd->add_option("--seed", sim.seed)->capture_default_str();
  sim_cmd->add_option("--g", sim.g)->check(CLI::IsMember({"ols", "cellmean"}))->capture_default_str();
  sim_cmd->add_option("--r", sim.r)->check(CLI::IsMember({"logit", "cellmean"}))->capture_default_str();
  sim_cmd->add_option("--propensity", sim.propensity)->capture_default_str();
  sim_cmd->add_option("--folds", sim.folds)->capture_default_str();
  sim_cmd->add_option("--threads", sim.threads, "Worker threads (0 = all cores)")->capture_default_str();
  sim_cmd->add_option("--out-dir", sim.out_dir)->required();

  WeakLimitFlags wl;
  auto* wl_cmd = app.add_subcommand("weakiv-limit", "Draws from the weak-instrument limit of the DRML error");
  wl_cmd->add_option("--ca", wl.ca)->capture_default_str();
  wl_cmd->add_option("--cb", wl.cb)->capture_default_str();
  wl_cmd->add_option("--s11", wl.s11)->capture_default_str();
  wl_cmd->add_option("--s12", wl.s12)->capture_default_str();
  wl_cmd->add_option("--s22", wl.s22)->capture_default_str();
  wl_cmd->add_option("--samples", wl.samples)->capture_default_str();
  wl_cmd->add_option("--seed", wl.seed)->capture_default_str();
  wl_cmd->add_option("--out", wl.out)->required();

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kOk : kUsage;
  }

  try {
    if (*analyze_cmd) return cmd_analyze(analyze, out, err);
    if (*scan_cmd) return cmd_scan(scan, out, err);
    if (*sim_cmd) return cmd_simulate(sim, out, err);
    if (*wl_cmd) return cmd_weakiv_limit(wl, out, err);
  } catch (const ConfigError& e) {
    fmt::print(err, "error: {}\n", e.what());
    return kUsage;
  } catch (const ParseError& e) {
    fmt::print(err, "error: {}\n", e.what());
    return kUsage;
  } catch (const DomainError& e) {
    fmt::print(err, "error: {}\n", e.what());
    return kUsage;
  } catch (const DegenerateDataError& e) {
    fmt::print(err, "error: {}\n", e.what());
    return kDegenerate;
  }
  return kUsage;
}

}  // namespace lateci::cli
