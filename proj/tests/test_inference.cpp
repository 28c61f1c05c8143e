#include <doctest.h>

#include <cmath>
#include <limits>

#include "lateci/errors.hpp"
#include "lateci/inference.hpp"
#include "lateci/random.hpp"
#include "score_generators.hpp"

using namespace lateci;
using lateci::testing::in_boundary_band;
using lateci::testing::random_scores;
using lateci::testing::rel_close;

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
const double kZ975 = 1.959963984540054;

ScoreSample scores(std::vector<double> a, std::vector<double> b) { return {std::move(a), std::move(b)}; }
}  // namespace

TEST_CASE("normal_quantile reference values") {
  // Reference values from 30-digit arbitrary precision sqrt(2) erfinv(2p - 1).
  CHECK(normal_quantile(0.5) == 0.0);
  CHECK(std::abs(normal_quantile(0.975) - 1.95996398454005423552) < 1e-12);
  CHECK(std::abs(normal_quantile(0.01) - -2.32634787404084110089) < 1e-12);
  CHECK(std::abs(normal_quantile(0.2) - -0.84162123357291420518) < 1e-12);
  CHECK(std::abs(normal_quantile(0.999) - 3.09023230616781354154) < 1e-12);
  CHECK(std::abs(normal_quantile(1e-10) - -6.36134090240405620470) < 1e-12);
}

TEST_CASE("normal_quantile symmetry and inverse of the CDF") {
  // Dyadic p keeps 1 - p exact, so the symmetry must hold bit for bit.
  for (int k = 1; k < 128; ++k) {
    const double p = k / 128.0;
    CHECK(normal_quantile(p) == -normal_quantile(1.0 - p));
    CHECK(std::abs(normal_cdf(normal_quantile(p)) - p) < 1e-15);
  }
  CHECK_THROWS_AS(normal_quantile(0.0), DomainError);
  CHECK_THROWS_AS(normal_quantile(1.0), DomainError);
  CHECK_THROWS_AS(normal_quantile(-0.2), DomainError);
  CHECK_THROWS_AS(normal_quantile(std::nan("")), DomainError);
  CHECK(critical_value(0.05) == normal_quantile(0.975));
  CHECK_THROWS_AS(critical_value(1.0), ConfigError);
}

TEST_CASE("score_statistic hand examples") {
  CHECK(score_statistic(scores({0, 0}, {1, -1}), 5.0) == 0.0);
  for (double theta : {-3.0, 0.0, 2.5}) {
    CHECK(score_statistic(scores({0, 0}, {1, 1}), theta) == doctest::Approx(std::sqrt(2.0)));
  }
  CHECK_THROWS_AS(score_statistic(scores({1, 2}, {2, 4}), 2.0), DegenerateDataError);
}

TEST_CASE("score_statistic matches a second implementation") {
  Rng rng(17);
  for (int trial = 0; trial < 50; ++trial) {
    const auto s = random_scores(rng, 40);
    for (double theta = -10.0; theta <= 10.0; theta += 0.37) {
      long double num = 0, den = 0;
      for (std::size_t i = 0; i < s.size(); ++i) {
        const long double r = s.psi_b[i] - static_cast<long double>(theta) * s.psi_a[i];
        num += r;
        den += r * r;
      }
      const double oracle = static_cast<double>(std::sqrt(40.0L) * (num / 40) / std::sqrt(den / 40));
      CHECK(std::abs(score_statistic(s, theta) - oracle) <= 1e-12 * std::max(1.0, std::abs(oracle)));
    }
  }
}

TEST_CASE("quad_coefficients hand examples") {
  const auto q = quad_coefficients(scores({1, 1}, {0, 0}), 0.05);
  CHECK(q.a == doctest::Approx(2.0 - kZ975 * kZ975).epsilon(1e-14));
  CHECK(q.b == 0.0);
  CHECK(q.c == 0.0);
  CHECK(q.z_crit == doctest::Approx(kZ975).epsilon(1e-15));
  CHECK_FALSE(q.degenerate);

  const auto zero = quad_coefficients(scores({0, 0, 0}, {0, 0, 0}), 0.05);
  CHECK(zero.a == 0.0);
  CHECK(zero.b == 0.0);
  CHECK(zero.c == 0.0);
  CHECK(zero.degenerate);
  CHECK_THROWS_AS(score_confidence_set(scores({0, 0, 0}, {0, 0, 0}), 0.05), DegenerateDataError);
}

TEST_CASE("closed-form set agrees with a grid scan of |S_n| <= z") {
  Rng rng(100);
  for (int trial = 0; trial < 20; ++trial) {
    const auto s = random_scores(rng, 100);
    const auto q = quad_coefficients(s, 0.05);
    const auto set = invert_score_test(q);
    for (int i = 0; i < 2001; ++i) {
      const double theta = -10.0 + 0.01 * i;
      if (in_boundary_band(q, theta)) continue;
      CHECK(set.contains(theta) == (std::abs(score_statistic(s, theta)) <= q.z_crit));
    }
  }
}

TEST_CASE("invert_score_test cases") {
  auto inv = [](double a, double b, double c) { return invert_score_test(QuadCoefficients::from_abc(a, b, c)); };

  const auto interval = inv(1, 0, -1);
  REQUIRE(interval.tag() == SetTag::finite_interval);
  CHECK(std::get<FiniteInterval>(interval.variant()).lo == -1.0);
  CHECK(std::get<FiniteInterval>(interval.variant()).hi == 1.0);
  CHECK(interval.diameter() == 2.0);

  const auto rays = inv(-1, 0, 1);
  REQUIRE(rays.tag() == SetTag::two_rays);
  CHECK(std::get<TwoRays>(rays.variant()).left_hi == -1.0);
  CHECK(std::get<TwoRays>(rays.variant()).right_lo == 1.0);
  CHECK(rays.contains(-5.0));
  CHECK_FALSE(rays.contains(0.0));
  CHECK(rays.diameter() == kInf);

  const auto left = inv(0, 2, -4);
  REQUIRE(left.tag() == SetTag::left_ray);
  CHECK(std::get<LeftRay>(left.variant()).hi == 2.0);
  const auto right = inv(0, -2, -4);
  REQUIRE(right.tag() == SetTag::right_ray);
  CHECK(std::get<RightRay>(right.variant()).lo == -2.0);

  const auto point = inv(1, -2, 1);
  REQUIRE(point.tag() == SetTag::point);
  CHECK(std::get<Point>(point.variant()).value == 1.0);
  CHECK(point.diameter() == 0.0);
  CHECK(point.contains(1.0));
  CHECK_FALSE(point.contains(1.0 + 1e-12));

  CHECK(inv(0, 0, -1).tag() == SetTag::whole_line);
  CHECK(inv(0, 0, 1).tag() == SetTag::empty);
  CHECK(inv(0, 0, 0).tag() == SetTag::whole_line);
  CHECK(inv(1, 0, 1).tag() == SetTag::empty);
  CHECK(inv(-1, 0, -1).tag() == SetTag::whole_line);
  CHECK(inv(1, 0, 1).diameter() == 0.0);
}

TEST_CASE("a double root with a < 0 gives the whole line") {
  // -(t - 1)^2 <= 0 for every t.
  const auto q = QuadCoefficients::from_abc(-1, 2, -1);
  CHECK(classify_quadratic(q) == QuadraticCase::double_root_negative);
  CHECK(invert_score_test(q).tag() == SetTag::whole_line);

  // Exactly proportional scores reach this case through the data path.
  ScoreSample s;
  Rng rng(3);
  for (int i = 0; i < 30; ++i) {
    s.psi_a.push_back(rng.normal());
    s.psi_b.push_back(4.0 * s.psi_a.back());
  }
  const auto qs = quad_coefficients(s, 0.05);
  const auto set = invert_score_test(qs);
  const auto diag = instrument_diagnostic(s.psi_a, 0.05);
  CHECK(diag.weak == (set.diameter() == kInf));
  for (double theta : {-7.0, 0.0, 3.9, 4.1, 9.0}) {
    CHECK(set.contains(theta) == (std::abs(score_statistic(s, theta)) <= qs.z_crit));
  }
}

TEST_CASE("zero classification uses the configured tolerance") {
  auto q = QuadCoefficients::from_abc(1e-13, 2, -4);
  CHECK(classify_quadratic(q) == QuadraticCase::linear_left);
  CHECK(classify_quadratic(q, 1e-14) == QuadraticCase::interval);
  // a inside the band with b == 0: the inequality is the constant c <= 0.
  CHECK(invert_score_test(QuadCoefficients::from_abc(1e-13, 0, 1e20)).tag() == SetTag::empty);
}

TEST_CASE("roots are ordered") {
  Rng rng(8);
  for (int i = 0; i < 10000; ++i) {
    const auto q = QuadCoefficients::from_abc(rng.normal() * 10, rng.normal() * 10, rng.normal() * 10);
    const auto set = invert_score_test(q);
    if (auto* iv = std::get_if<FiniteInterval>(&set.variant())) CHECK(iv->lo <= iv->hi);
    if (auto* tr = std::get_if<TwoRays>(&set.variant())) CHECK(tr->left_hi <= tr->right_lo);
  }
}

TEST_CASE("drml_estimate hand examples") {
  const auto exact = drml_estimate(scores({1, 3}, {2, 6}), 0.05);
  CHECK(exact.phi_hat == 2.0);
  CHECK(exact.sigma2_hat == 0.0);
  CHECK(exact.wald_lo == 2.0);
  CHECK(exact.wald_hi == 2.0);

  const auto r = drml_estimate(scores({1, 1}, {3, 1}), 0.05);
  CHECK(r.phi_hat == 2.0);
  CHECK(r.sigma2_hat == doctest::Approx(1.0));
  CHECK(r.wald_hi - r.phi_hat == doctest::Approx(kZ975 / std::sqrt(2.0)));
  CHECK(r.phi_hat - r.wald_lo == doctest::Approx(kZ975 / std::sqrt(2.0)));

  CHECK_THROWS_AS(drml_estimate(scores({1, -1}, {3, 1}), 0.05), WeakDenominatorError);
  CHECK_THROWS_AS(drml_estimate(scores({0, 0}, {3, 1}), 0.05), WeakDenominatorError);
}

TEST_CASE("Wald interval is symmetric with diameter 2 z sigma / sqrt(n)") {
  Rng rng(12);
  for (int trial = 0; trial < 200; ++trial) {
    const auto s = random_scores(rng, 60);
    DrmlResult r;
    try {
      r = drml_estimate(s, 0.1);
    } catch (const WeakDenominatorError&) {
      continue;
    }
    const double z = critical_value(0.1);
    CHECK(rel_close(r.wald_hi - r.phi_hat, r.phi_hat - r.wald_lo, 1e-12, std::abs(r.phi_hat)));
    CHECK(rel_close(r.diameter(), 2 * z * r.sigma_hat() / std::sqrt(60.0), 1e-12, std::abs(r.phi_hat)));
  }
}

TEST_CASE("dn_statistic") {
  const std::vector<double> ones{1, 1, 1};
  CHECK(dn_statistic(ones, 1.0) == 0.0);
  const std::vector<double> two_zero{2, 0};
  CHECK(dn_statistic(two_zero, 0.0) == doctest::Approx(1.0));
  CHECK(dn_statistic(ones, 0.0) == doctest::Approx(3.0));
  CHECK_THROWS_AS(dn_statistic(std::vector<double>{}, 0.0), ConfigError);
}

TEST_CASE("infinite diameter iff D_n(0) <= z^2") {
  Rng rng(55);
  int infinite = 0;
  for (int trial = 0; trial < 2000; ++trial) {
    const auto s = random_scores(rng, 50);
    const auto q = quad_coefficients(s, 0.05);
    if (classify_quadratic(q) == QuadraticCase::constant && q.c > 0) continue;
    const auto set = invert_score_test(q);
    const bool inf = set.diameter() == kInf;
    infinite += inf;
    CHECK(inf == instrument_diagnostic(s.psi_a, 0.05).weak);
  }
  CHECK(infinite > 100);
}

TEST_CASE("shift and scale equivariance") {
  Rng rng(2);
  for (int trial = 0; trial < 200; ++trial) {
    const auto s = random_scores(rng, 50);
    const auto base = invert_score_test(quad_coefficients(s, 0.05));
    for (double kappa : {-3.0, 0.5, 7.0}) {
      ScoreSample shifted = s;
      for (std::size_t i = 0; i < s.size(); ++i) shifted.psi_b[i] += kappa * s.psi_a[i];
      const auto moved = invert_score_test(quad_coefficients(shifted, 0.05));
      const auto expect = base.affine(1.0, kappa);
      REQUIRE(moved.tag() == expect.tag());
      const auto [e1, e2] = expect.endpoints();
      const auto [m1, m2] = moved.endpoints();
      CHECK(rel_close(m1, e1, 1e-10, std::abs(kappa)));
      CHECK(rel_close(m2, e2, 1e-10, std::abs(kappa)));
    }
    for (double lambda : {0.25, 3.0}) {
      ScoreSample scaled = s;
      for (auto& v : scaled.psi_b) v *= lambda;
      const auto moved = invert_score_test(quad_coefficients(scaled, 0.05));
      const auto expect = base.affine(lambda, 0.0);
      REQUIRE(moved.tag() == expect.tag());
      const auto [e1, e2] = expect.endpoints();
      const auto [m1, m2] = moved.endpoints();
      CHECK(rel_close(m1, e1, 1e-10));
      CHECK(rel_close(m2, e2, 1e-10));
    }
  }
}

TEST_CASE("ConfidenceSet endpoints, membership and affine images") {
  const ConfidenceSet e = EmptySet{};
  CHECK(std::isnan(e.endpoints().first));
  CHECK_FALSE(e.contains(0.0));
  const ConfidenceSet w = WholeLine{};
  CHECK(w.contains(1e300));
  const ConfidenceSet l = LeftRay{2.0};
  CHECK(l.contains(2.0));
  CHECK_FALSE(l.contains(2.0000001));
  CHECK(l.endpoints().first == -kInf);
  const auto moved = ConfidenceSet(FiniteInterval{1.0, 2.0}).affine(2.0, 1.0);
  CHECK(moved.endpoints() == std::pair<double, double>{3.0, 5.0});
  CHECK_THROWS_AS(l.affine(-1.0, 0.0), ConfigError);
  CHECK(to_string(SetTag::two_rays) == "TwoRays");
}
