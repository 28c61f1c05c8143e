#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "lateci/data.hpp"
#include "lateci/dgp.hpp"
#include "lateci/errors.hpp"
#include "lateci/inference.hpp"
#include "lateci/nuisance.hpp"
#include "lateci/scores.hpp"
#include "lateci/simulation.hpp"
#include "lateci/weakiv.hpp"

namespace py = pybind11;
using namespace lateci;

namespace {

template <class T>
std::vector<T> to_vector(std::span<const T> s) {
  return {s.begin(), s.end()};
}

py::tuple set_as_tuple(const ConfidenceSet& set) {
  const auto [lo, hi] = set.endpoints();
  return py::make_tuple(to_string(set.tag()), lo, hi);
}

LearnerSpec make_learner(const std::string& g, const std::string& r, std::optional<double> propensity, int folds,
                         double clip) {
  LearnerSpec spec;
  if (g == "ols") {
    spec.g = OutcomeLearner::ols_linear;
  } else if (g == "cellmean") {
    spec.g = OutcomeLearner::cell_mean;
  } else {
    throw ConfigError("g must be 'ols' or 'cellmean'");
  }
  if (r == "logit") {
    spec.r = TreatmentLearner::logistic;
  } else if (r == "cellmean") {
    spec.r = TreatmentLearner::cell_mean;
  } else {
    throw ConfigError("r must be 'logit' or 'cellmean'");
  }
  spec.m = propensity ? PropensitySpec::known(*propensity) : PropensitySpec::estimated();
  spec.folds = folds;
  spec.clip_eps = clip;
  spec.validate();
  return spec;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Weak-instrument-robust confidence sets for the local average treatment effect";

  auto base = py::register_exception<Error>(m, "LateciError", PyExc_RuntimeError);
  py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
  py::register_exception<ParseError>(m, "ParseError", base.ptr());
  py::register_exception<DomainError>(m, "DomainError", PyExc_ValueError);
  py::register_exception<DegenerateDataError>(m, "DegenerateDataError", base.ptr());

  py::class_<Dataset>(m, "Dataset")
      .def(py::init<std::vector<double>, std::vector<int>, std::vector<int>, Eigen::MatrixXd>(), py::arg("y"),
           py::arg("a"), py::arg("z"), py::arg("x"))
      .def_property_readonly("n", &Dataset::n)
      .def_property_readonly("p", &Dataset::p)
      .def_property_readonly("y", [](const Dataset& d) { return to_vector(d.y()); })
      .def_property_readonly("a", [](const Dataset& d) { return to_vector(d.a()); })
      .def_property_readonly("z", [](const Dataset& d) { return to_vector(d.z()); })
      .def_property_readonly("x", [](const Dataset& d) { return Eigen::MatrixXd(d.x()); });

  py::class_<ScoreSample>(m, "ScoreSample")
      .def(py::init<>())
      .def(py::init([](std::vector<double> a, std::vector<double> b) { return ScoreSample{std::move(a), std::move(b)}; }),
           py::arg("psi_a"), py::arg("psi_b"))
      .def_readwrite("psi_a", &ScoreSample::psi_a)
      .def_readwrite("psi_b", &ScoreSample::psi_b)
      .def("__len__", &ScoreSample::size);

  py::class_<QuadCoefficients>(m, "QuadCoefficients")
      .def_static("from_abc", &QuadCoefficients::from_abc)
      .def_readonly("a", &QuadCoefficients::a)
      .def_readonly("b", &QuadCoefficients::b)
      .def_readonly("c", &QuadCoefficients::c)
      .def_readonly("delta", &QuadCoefficients::delta)
      .def_readonly("z_crit", &QuadCoefficients::z_crit)
      .def_readonly("degenerate", &QuadCoefficients::degenerate)
      .def("evaluate", &QuadCoefficients::evaluate);

  py::class_<DrmlResult>(m, "DrmlResult")
      .def_readonly("phi_hat", &DrmlResult::phi_hat)
      .def_readonly("sigma2_hat", &DrmlResult::sigma2_hat)
      .def_readonly("wald_lo", &DrmlResult::wald_lo)
      .def_readonly("wald_hi", &DrmlResult::wald_hi)
      .def_property_readonly("sigma_hat", &DrmlResult::sigma_hat);

  m.def("normal_quantile", &normal_quantile, py::arg("p"));
  m.def("critical_value", &critical_value, py::arg("alpha"));
  m.def("make_folds", [](std::size_t n, int k, std::uint64_t seed) { return make_folds(n, k, seed).fold_of; },
        py::arg("n"), py::arg("k"), py::arg("seed"));
  m.def("score_statistic", &score_statistic, py::arg("scores"), py::arg("theta"));
  m.def("quad_coefficients", &quad_coefficients, py::arg("scores"), py::arg("alpha") = 0.05);
  m.def(
      "invert_score_test", [](const QuadCoefficients& q) { return set_as_tuple(invert_score_test(q)); },
      py::arg("q"), "Solution set of a t^2 + b t + c <= 0 as (tag, first endpoint, second endpoint).");
  m.def(
      "score_confidence_set", [](const ScoreSample& s, double alpha) { return set_as_tuple(score_confidence_set(s, alpha)); },
      py::arg("scores"), py::arg("alpha") = 0.05);
  m.def("drml_estimate", [](const ScoreSample& s, double alpha) { return drml_estimate(s, alpha); },
        py::arg("scores"), py::arg("alpha") = 0.05);
  m.def("dn_statistic", [](const std::vector<double>& psi_a, double theta) { return dn_statistic(psi_a, theta); },
        py::arg("psi_a"), py::arg("theta") = 0.0);

  m.def(
      "cross_fit_scores",
      [](const Dataset& data, const std::string& g, const std::string& r, std::optional<double> propensity, int folds,
         std::uint64_t seed, double clip) {
        const LearnerSpec spec = make_learner(g, r, propensity, folds, clip);
        return compute_scores(data, cross_fit(data, spec, make_folds(data.n(), folds, seed)));
      },
      py::arg("data"), py::arg("g") = "ols", py::arg("r") = "logit", py::arg("propensity") = py::none(),
      py::arg("folds") = 5, py::arg("seed") = 0, py::arg("clip") = 0.01,
      "Cross-fitted influence-function scores; propensity=None estimates P(Z=1|X) by logistic regression.");

  m.def(
      "dgp_generate",
      [](double pi, std::size_t n, std::uint64_t seed, double treatment_shift) {
        DgpParams p;
        p.pi = pi;
        p.n = n;
        p.treatment_shift = treatment_shift;
        return dgp_generate(p, seed);
      },
      py::arg("pi"), py::arg("n"), py::arg("seed"), py::arg("treatment_shift") = 0.0);

  m.def(
      "simulate",
      [](const std::string& setting, std::vector<std::size_t> n_grid, std::size_t reps, std::uint64_t seed,
         double alpha, double pi, const std::string& g, const std::string& r, unsigned threads) {
        StudySpec spec;
        spec.setting = setting == "weak" ? Setting::weak : setting == "strong" ? Setting::strong : Setting::custom;
        if (setting != "weak" && setting != "strong" && setting != "custom") {
          throw ConfigError("setting must be 'weak', 'strong' or 'custom'");
        }
        spec.custom_pi = pi;
        spec.n_grid = std::move(n_grid);
        spec.reps = reps;
        spec.seed = seed;
        spec.alpha = alpha;
        spec.threads = threads;
        spec.learner = make_learner(g, r, 0.5, 5, 0.01);
        py::list out;
        for (const auto& row : aggregate(run_study(spec))) {
          py::dict d;
          d["setting"] = to_string(row.setting);
          d["n"] = row.n;
          d["reps"] = row.reps;
          d["failed"] = row.failed;
          d["coverage_score"] = row.coverage_score;
          d["coverage_wald"] = row.coverage_wald;
          d["se_score"] = row.se_score;
          d["se_wald"] = row.se_wald;
          d["median_diam_score"] = row.median_diam_score;
          d["median_diam_wald"] = row.median_diam_wald;
          d["frac_infinite"] = row.frac_infinite;
          d["median_ratio"] = row.median_ratio;
          out.append(d);
        }
        return out;
      },
      py::arg("setting") = "strong", py::arg("n_grid") = std::vector<std::size_t>{1500}, py::arg("reps") = 100,
      py::arg("seed") = 0, py::arg("alpha") = 0.05, py::arg("pi") = 0.0, py::arg("g") = "ols",
      py::arg("r") = "cellmean", py::arg("threads") = 0u, "Coverage study; returns one summary dict per n.");

  m.def(
      "weak_limit_draws",
      [](double ca, double cb, double s11, double s12, double s22, std::size_t count, std::uint64_t seed) {
        return WeakLimitSampler(WeakIVConfig{ca, cb, Cov2{s11, s12, s22}}).draws(count, seed);
      },
      py::arg("ca"), py::arg("cb"), py::arg("s11") = 1.0, py::arg("s12") = 0.0, py::arg("s22") = 1.0,
      py::arg("count") = 10000, py::arg("seed") = 0);
  m.def("ks_distance",
        [](const std::vector<double>& x, const std::vector<double>& y) { return ks_distance(x, y); });
}
