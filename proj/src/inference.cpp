#include "lateci/inference.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include <fmt/format.h>

#include "lateci/errors.hpp"

namespace lateci {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

template <std::size_t N>
double horner(const double (&coef)[N], double x) {
  double acc = coef[N - 1];
  for (std::size_t i = N - 1; i-- > 0;) acc = acc * x + coef[i];
  return acc;
}

// Wichura (1988), algorithm AS 241 (PPND16), valid for 0 < p <= 0.5.
double ppnd16_lower(double p) {
  static constexpr double a[] = {3.3871328727963666080e0,  1.3314166789178437745e+2,
                                 1.9715909503065514427e+3, 1.3731693765509461125e+4,
                                 4.5921953931549871457e+4, 6.7265770927008700853e+4,
                                 3.3430575583588128105e+4, 2.5090809287301226727e+3};
  static constexpr double b[] = {1.0,
                                 4.2313330701600911252e+1, 6.8718700749205790830e+2,
                                 5.3941960214247511077e+3, 2.1213794301586595867e+4,
                                 3.9307895800092710610e+4, 2.8729085735721942674e+4,
                                 5.2264952788528545610e+3};
  static constexpr double c[] = {1.42343711074968357734e0,  4.63033784615654529590e0,
                                 5.76949722146069140550e0,  3.64784832476320460504e0,
                                 1.27045825245236838258e0,  2.41780725177450611770e-1,
                                 2.27238449892691845833e-2, 7.74545014278341407640e-4};
  static constexpr double d[] = {1.0,
                                 2.05319162663775882187e0,  1.67638483018380384940e0,
                                 6.89767334985100004550e-1, 1.48103976427480074590e-1,
                                 1.51986665636164571966e-2, 5.47593808499534494600e-4,
                                 1.05075007164441684324e-9};
  static constexpr double e[] = {6.65790464350110377720e0,  5.46378491116411436990e0,
                                 1.78482653991729133580e0,  2.96560571828504891230e-1,
                                 2.65321895265761230930e-2, 1.24266094738807843860e-3,
                                 2.71155556874348757815e-5, 2.01033439929228813265e-7};
  static constexpr double f[] = {1.0,
                                 5.99832206555887937690e-1, 1.36929880922735805310e-1,
                                 1.48753612908506148525e-2, 7.86869131145613259100e-4,
                                 1.84631831751005468180e-5, 1.42151175831644588870e-7,
                                 2.04426310338993978564e-15};
  const double q = p - 0.5;
  if (std::abs(q) <= 0.425) {
    const double r = 0.180625 - q * q;
    return q * horner(a, r) / horner(b, r);
  }
  double r = std::sqrt(-std::log(p));
  double val;
  if (r <= 5.0) {
    r -= 1.6;
    val = horner(c, r) / horner(d, r);
  } else {
    r -= 5.0;
    val = horner(e, r) / horner(f, r);
  }
  return -val;
}

struct Moments {
  double mean_a = 0.0;
  double mean_b = 0.0;
  double aa = 0.0;
  double ab = 0.0;
  double bb = 0.0;
};

Moments moments(const ScoreSample& s) {
  Moments m;
  const std::size_t n = s.size();
  for (std::size_t i = 0; i < n; ++i) {
    const double a = s.psi_a[i];
    const double b = s.psi_b[i];
    m.mean_a += a;
    m.mean_b += b;
    m.aa += a * a;
    m.ab += a * b;
    m.bb += b * b;
  }
  const double inv = 1.0 / static_cast<double>(n);
  m.mean_a *= inv;
  m.mean_b *= inv;
  m.aa *= inv;
  m.ab *= inv;
  m.bb *= inv;
  return m;
}

void check_sample(const ScoreSample& s) {
  if (s.psi_a.size() != s.psi_b.size()) throw ConfigError("psi_a and psi_b differ in length");
  if (s.size() < 2) throw ConfigError(fmt::format("need at least 2 scores, got {}", s.size()));
}

// Roots of a t^2 + b t + c with delta > 0, smaller first. Uses the
// cancellation-free pairing q / a, c / q.
std::pair<double, double> roots(double a, double b, double c, double delta) {
  const double sd = std::sqrt(delta);
  const double q = -0.5 * (b + std::copysign(sd, b));
  const double r1 = q / a;
  const double r2 = c / q;
  return {std::min(r1, r2), std::max(r1, r2)};
}

}  // namespace

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

double normal_quantile(double p) {
  if (!(p > 0.0 && p < 1.0)) {
    throw DomainError(fmt::format("normal_quantile: p = {} is outside (0, 1)", p));
  }
  if (p > 0.5) return -normal_quantile(1.0 - p);
  double x = ppnd16_lower(p);
  // One Halley step on Phi(x) - p.
  const double err = normal_cdf(x) - p;
  const double u = err * std::sqrt(2.0 * std::numbers::pi) * std::exp(0.5 * x * x);
  x -= u / (1.0 + 0.5 * x * u);
  return x;
}

double critical_value(double alpha) {
  if (!(alpha > 0.0 && alpha < 1.0)) {
    throw ConfigError(fmt::format("alpha must lie in (0, 1), got {}", alpha));
  }
  return normal_quantile(1.0 - alpha / 2.0);
}

double score_statistic(const ScoreSample& scores, double theta) {
  check_sample(scores);
  const std::size_t n = scores.size();
  double mean = 0.0;
  double second = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double r = scores.psi_b[i] - theta * scores.psi_a[i];
    mean += r;
    second += r * r;
  }
  mean /= static_cast<double>(n);
  second /= static_cast<double>(n);
  if (second == 0.0) {
    throw DegenerateDataError(fmt::format("score residuals are identically zero at theta = {}", theta));
  }
  return std::sqrt(static_cast<double>(n)) * mean / std::sqrt(second);
}

QuadCoefficients QuadCoefficients::from_abc(double a, double b, double c) {
  QuadCoefficients q;
  q.a = a;
  q.b = b;
  q.c = c;
  q.delta = b * b - 4.0 * a * c;
  q.a_scale = std::max(std::abs(a), 1.0);
  q.delta_scale = std::max({b * b, 4.0 * std::abs(a * c), 1.0});
  return q;
}

QuadCoefficients quad_coefficients(const ScoreSample& scores, double alpha) {
  check_sample(scores);
  const double z = critical_value(alpha);
  const double z2 = z * z;
  const auto n = static_cast<double>(scores.size());
  const Moments m = moments(scores);

  QuadCoefficients q;
  q.n = scores.size();
  q.z_crit = z;
  q.a = n * m.mean_a * m.mean_a - z2 * m.aa;
  q.b = -2.0 * n * m.mean_a * m.mean_b + 2.0 * z2 * m.ab;
  q.c = n * m.mean_b * m.mean_b - z2 * m.bb;
  q.delta = q.b * q.b - 4.0 * q.a * q.c;
  q.a_scale = std::max({n * m.mean_a * m.mean_a, z2 * m.aa, 1.0});
  q.delta_scale = std::max({q.b * q.b, 4.0 * std::abs(q.a * q.c), 1.0});
  q.degenerate = m.aa == 0.0 && m.bb == 0.0;
  return q;
}

std::string to_string(SetTag tag) {
  switch (tag) {
    case SetTag::finite_interval: return "FiniteInterval";
    case SetTag::two_rays: return "TwoRays";
    case SetTag::empty: return "EmptySet";
    case SetTag::whole_line: return "WholeLine";
    case SetTag::left_ray: return "LeftRay";
    case SetTag::right_ray: return "RightRay";
    case SetTag::point: return "Point";
  }
  return "Unknown";
}

namespace {
template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;
}  // namespace

bool ConfidenceSet::contains(double theta) const {
  return std::visit(
      overloaded{[&](const FiniteInterval& s) { return s.lo <= theta && theta <= s.hi; },
                 [&](const TwoRays& s) { return theta <= s.left_hi || theta >= s.right_lo; },
                 [](const EmptySet&) { return false; },
                 [](const WholeLine&) { return true; },
                 [&](const LeftRay& s) { return theta <= s.hi; },
                 [&](const RightRay& s) { return theta >= s.lo; },
                 [&](const Point& s) { return theta == s.value; }},
      v_);
}

double ConfidenceSet::diameter() const {
  return std::visit(overloaded{[](const FiniteInterval& s) { return s.hi - s.lo; },
                               [](const TwoRays&) { return kInf; },
                               [](const EmptySet&) { return 0.0; },
                               [](const WholeLine&) { return kInf; },
                               [](const LeftRay&) { return kInf; },
                               [](const RightRay&) { return kInf; },
                               [](const Point&) { return 0.0; }},
                    v_);
}

std::pair<double, double> ConfidenceSet::endpoints() const {
  using P = std::pair<double, double>;
  return std::visit(overloaded{[](const FiniteInterval& s) { return P{s.lo, s.hi}; },
                               [](const TwoRays& s) { return P{s.left_hi, s.right_lo}; },
                               [](const EmptySet&) { return P{kNaN, kNaN}; },
                               [](const WholeLine&) { return P{-kInf, kInf}; },
                               [](const LeftRay& s) { return P{-kInf, s.hi}; },
                               [](const RightRay& s) { return P{s.lo, kInf}; },
                               [](const Point& s) { return P{s.value, s.value}; }},
                    v_);
}

ConfidenceSet ConfidenceSet::affine(double scale, double shift) const {
  if (!(scale > 0.0)) throw ConfigError("affine image needs a positive scale");
  auto f = [&](double t) { return scale * t + shift; };
  return std::visit(
      overloaded{[&](const FiniteInterval& s) -> ConfidenceSet { return FiniteInterval{f(s.lo), f(s.hi)}; },
                 [&](const TwoRays& s) -> ConfidenceSet { return TwoRays{f(s.left_hi), f(s.right_lo)}; },
                 [](const EmptySet& s) -> ConfidenceSet { return s; },
                 [](const WholeLine& s) -> ConfidenceSet { return s; },
                 [&](const LeftRay& s) -> ConfidenceSet { return LeftRay{f(s.hi)}; },
                 [&](const RightRay& s) -> ConfidenceSet { return RightRay{f(s.lo)}; },
                 [&](const Point& s) -> ConfidenceSet { return Point{f(s.value)}; }},
      v_);
}

std::string ConfidenceSet::describe() const {
  return std::visit(
      overloaded{[](const FiniteInterval& s) { return fmt::format("[{:.6g}, {:.6g}]", s.lo, s.hi); },
                 [](const TwoRays& s) {
                   return fmt::format("(-inf, {:.6g}] U [{:.6g}, inf)", s.left_hi, s.right_lo);
                 },
                 [](const EmptySet&) { return std::string("{}"); },
                 [](const WholeLine&) { return std::string("(-inf, inf)"); },
                 [](const LeftRay& s) { return fmt::format("(-inf, {:.6g}]", s.hi); },
                 [](const RightRay& s) { return fmt::format("[{:.6g}, inf)", s.lo); },
                 [](const Point& s) { return fmt::format("{{{:.6g}}}", s.value); }},
      v_);
}

QuadraticCase classify_quadratic(const QuadCoefficients& q, double tol) {
  const bool a_zero = std::abs(q.a) <= tol * q.a_scale;
  const bool d_zero = std::abs(q.delta) <= tol * q.delta_scale;
  if (!d_zero && !a_zero) {
    if (q.delta > 0.0) return q.a > 0.0 ? QuadraticCase::interval : QuadraticCase::two_rays;
    return q.a > 0.0 ? QuadraticCase::empty : QuadraticCase::whole_line;
  }
  if (!d_zero) {
    // a = 0 makes delta = b^2; b = 0 here only through the tolerance band
    // on a, and the inequality is then the constant c <= 0.
    if (q.b > 0.0) return QuadraticCase::linear_left;
    if (q.b < 0.0) return QuadraticCase::linear_right;
    return QuadraticCase::constant;
  }
  if (a_zero) return QuadraticCase::constant;
  return q.a > 0.0 ? QuadraticCase::single_point : QuadraticCase::double_root_negative;
}

ConfidenceSet invert_score_test(const QuadCoefficients& q, double tol) {
  switch (classify_quadratic(q, tol)) {
    case QuadraticCase::interval: {
      const auto [lo, hi] = roots(q.a, q.b, q.c, q.delta);
      return FiniteInterval{lo, hi};
    }
    case QuadraticCase::two_rays: {
      // With a < 0 the labelled roots satisfy r2 <= r1; the set is
      // (-inf, r2] U [r1, inf).
      const auto [r2, r1] = roots(q.a, q.b, q.c, q.delta);
      return TwoRays{r2, r1};
    }
    case QuadraticCase::empty: return EmptySet{};
    case QuadraticCase::whole_line: return WholeLine{};
    case QuadraticCase::linear_left: return LeftRay{-q.c / q.b};
    case QuadraticCase::linear_right: return RightRay{-q.c / q.b};
    case QuadraticCase::single_point: return Point{-q.b / (2.0 * q.a)};
    case QuadraticCase::double_root_negative: return WholeLine{};
    case QuadraticCase::constant:
      if (q.c <= 0.0) return WholeLine{};
      return EmptySet{};
  }
  return EmptySet{};
}

ConfidenceSet score_confidence_set(const ScoreSample& scores, double alpha) {
  const QuadCoefficients q = quad_coefficients(scores, alpha);
  if (q.degenerate) throw DegenerateDataError("all scores are zero; the score statistic is undefined");
  return invert_score_test(q);
}

double DrmlResult::sigma_hat() const { return std::sqrt(sigma2_hat); }

DrmlResult drml_estimate(const ScoreSample& scores, double alpha, double tol) {
  check_sample(scores);
  const double z = critical_value(alpha);
  const Moments m = moments(scores);
  const double rms_a = std::sqrt(m.aa);
  if (rms_a == 0.0 || !(std::abs(m.mean_a) > tol * rms_a)) {
    throw WeakDenominatorError(fmt::format(
        "mean of psi_a ({:.3g}) is numerically zero; the ratio estimator is undefined, use the score "
        "confidence set",
        m.mean_a));
  }
  const std::size_t n = scores.size();
  DrmlResult r;
  r.alpha = alpha;
  r.n = n;
  r.phi_hat = m.mean_b / m.mean_a;
  double resid2 = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double e = scores.psi_b[i] - r.phi_hat * scores.psi_a[i];
    resid2 += e * e;
  }
  resid2 /= static_cast<double>(n);
  r.sigma2_hat = resid2 / (m.mean_a * m.mean_a);
  const double half = z * std::sqrt(r.sigma2_hat / static_cast<double>(n));
  r.wald_lo = r.phi_hat - half;
  r.wald_hi = r.phi_hat + half;
  return r;
}

double dn_statistic(std::span<const double> psi_a, double theta) {
  const std::size_t n = psi_a.size();
  if (n < 1) throw ConfigError("dn_statistic: empty sample");
  double mean = 0.0;
  double second = 0.0;
  for (double v : psi_a) {
    mean += v;
    second += (v - theta) * (v - theta);
  }
  mean /= static_cast<double>(n);
  second /= static_cast<double>(n);
  // psi_a identically equal to theta: the numerator vanishes too.
  if (second == 0.0) return 0.0;
  return static_cast<double>(n) * (mean - theta) * (mean - theta) / second;
}

InstrumentDiagnostic instrument_diagnostic(std::span<const double> psi_a, double alpha) {
  const double z = critical_value(alpha);
  InstrumentDiagnostic d;
  d.dn0 = dn_statistic(psi_a, 0.0);
  d.weak = d.dn0 <= z * z;
  return d;
}

}  // namespace lateci
