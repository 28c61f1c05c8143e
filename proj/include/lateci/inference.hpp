#pragma once

#include <cstddef>
#include <limits>
#include <utility>
#include <span>
#include <string>
#include <type_traits>
#include <variant>

#include "lateci/scores.hpp"

namespace lateci {

// Inverse standard normal CDF (Wichura's AS 241 followed by one Halley
// refinement against erfc). Throws DomainError unless 0 < p < 1.
double normal_quantile(double p);
double normal_cdf(double x);

// z_{1 - alpha / 2}. Throws ConfigError unless 0 < alpha < 1.
double critical_value(double alpha);

// sqrt(n) P_n[psi_b - theta psi_a] / sqrt(P_n[(psi_b - theta psi_a)^2]),
// with the raw (uncentered) second moment in the denominator. Throws
// DegenerateDataError when that moment is zero.
double score_statistic(const ScoreSample& scores, double theta);

/// Coefficients of the inequality a theta^2 + b theta + c <= 0, which holds
/// exactly when |S_n(theta)| <= z.
struct QuadCoefficients {
  double a = 0.0;
  double b = 0.0;
  double c = 0.0;
  double delta = 0.0;
  std::size_t n = 0;
  double z_crit = 0.0;
  // Magnitudes against which a and delta are compared when deciding
  // whether they vanish.
  double a_scale = 1.0;
  double delta_scale = 1.0;
  // Every score is zero: the statistic is undefined for all theta.
  bool degenerate = false;

  // Coefficients supplied directly; scales are max(|a|, 1) and
  // max(b^2, 4|ac|, 1).
  static QuadCoefficients from_abc(double a, double b, double c);

  double evaluate(double theta) const { return (a * theta + b) * theta + c; }
};

QuadCoefficients quad_coefficients(const ScoreSample& scores, double alpha);

enum class SetTag {
  finite_interval,
  two_rays,
  empty,
  whole_line,
  left_ray,
  right_ray,
  point
};

std::string to_string(SetTag tag);

struct FiniteInterval {
  double lo;
  double hi;
};
// (-inf, left_hi] U [right_lo, inf)
struct TwoRays {
  double left_hi;
  double right_lo;
};
struct EmptySet {};
struct WholeLine {};
// (-inf, hi]
struct LeftRay {
  double hi;
};
// [lo, inf)
struct RightRay {
  double lo;
};
struct Point {
  double value;
};

class ConfidenceSet {
 public:
  using Variant = std::variant<FiniteInterval, TwoRays, EmptySet, WholeLine,
                               LeftRay, RightRay, Point>;

  // Implicit from any alternative, so each case reads as its set.
  template <class Alt>
    requires std::is_constructible_v<Variant, Alt>
  ConfidenceSet(Alt alt) : v_(std::move(alt)) {}  // NOLINT(google-explicit-constructor)

  SetTag tag() const { return static_cast<SetTag>(v_.index()); }
  const Variant& variant() const { return v_; }

  bool contains(double theta) const;
  // hi - lo for intervals, 0 for points and the empty set, +inf otherwise.
  double diameter() const;
  bool bounded() const { return diameter() < std::numeric_limits<double>::infinity(); }

  // Finite endpoints as (first, second); missing ends are -inf / +inf and
  // the empty set reports NaN. For two rays these are (left_hi, right_lo).
  std::pair<double, double> endpoints() const;

  // Image under theta -> scale * theta + shift, for scale > 0.
  ConfidenceSet affine(double scale, double shift) const;

  std::string describe() const;

 private:
  Variant v_;
};

// Which branch of the sign(a) x sign(delta) classification applies.
enum class QuadraticCase {
  interval,          // delta > 0, a > 0
  two_rays,          // delta > 0, a < 0
  empty,             // delta < 0, a > 0
  whole_line,        // delta < 0, a < 0
  linear_left,       // delta != 0, a = 0, b > 0
  linear_right,      // delta != 0, a = 0, b < 0
  single_point,      // delta = 0, a > 0
  double_root_negative,  // delta = 0, a < 0: a (theta - r)^2 <= 0 everywhere
  constant           // delta = 0, a = 0
};

inline constexpr double kZeroTolerance = 1e-12;

QuadraticCase classify_quadratic(const QuadCoefficients& q,
                                 double tol = kZeroTolerance);

// Closed-form solution set of a theta^2 + b theta + c <= 0. Total: every
// finite coefficient triple maps to a set.
ConfidenceSet invert_score_test(const QuadCoefficients& q,
                                double tol = kZeroTolerance);

// quad_coefficients + invert_score_test; throws DegenerateDataError when
// every score is zero.
ConfidenceSet score_confidence_set(const ScoreSample& scores, double alpha);

struct DrmlResult {
  double phi_hat = 0.0;
  double sigma2_hat = 0.0;
  double wald_lo = 0.0;
  double wald_hi = 0.0;
  double alpha = 0.05;
  std::size_t n = 0;

  double sigma_hat() const;
  double diameter() const { return wald_hi - wald_lo; }
  bool contains(double theta) const { return wald_lo <= theta && theta <= wald_hi; }
};

// phi_hat = P_n psi_b / P_n psi_a,
// sigma2_hat = P_n (psi_b - phi_hat psi_a)^2 / (P_n psi_a)^2,
// Wald interval phi_hat -/+ z sigma_hat / sqrt(n). Throws
// WeakDenominatorError when |P_n psi_a| <= tol * sqrt(P_n psi_a^2).
DrmlResult drml_estimate(const ScoreSample& scores, double alpha,
                         double tol = kZeroTolerance);

// n (P_n psi_a - theta)^2 / P_n (psi_a - theta)^2.
double dn_statistic(std::span<const double> psi_a, double theta);

struct InstrumentDiagnostic {
  double dn0 = 0.0;
  bool weak = false;  // dn0 <= z^2: the score set has infinite diameter
};

InstrumentDiagnostic instrument_diagnostic(std::span<const double> psi_a,
                                           double alpha);

}  // namespace lateci
