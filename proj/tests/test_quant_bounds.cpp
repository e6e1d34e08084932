#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <vector>

#include <doctest.h>

#include "oracle.hpp"
#include "rdq/quant_bounds.hpp"

using rdq::CertKind;
using rdq::ErrorSequence;
using rdq::QuantQuery;
using rdq::RegularityCertificate;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
const double kMc = std::log(2.0) / std::log(3.0);

RegularityCertificate cert(CertKind kind, double m, double c, double delta0,
                           double k) {
  RegularityCertificate out;
  out.kind = kind;
  out.m = m;
  out.constant = c;
  out.delta0 = delta0;
  out.k = k;
  return out;
}

QuantQuery lower_query(RegularityCertificate sub, double n, double p = 1.0,
                       double sigma_p = 1.0) {
  QuantQuery q;
  q.n = n;
  q.cert_sub = sub;
  q.p = p;
  q.sigma_p = sigma_p;
  return q;
}

QuantQuery upper_query(RegularityCertificate super, double n,
                       double beta = kInf) {
  QuantQuery q;
  q.n = n;
  q.cert_super = super;
  q.beta = beta;
  return q;
}

// n-th quantization error of the ternary self-similar measure, exact for
// every codebook size (midpoint codewords on the deepest full level).
double ternary_exact_vn(long long n) {
  int level = 0;
  while ((2LL << level) <= n) ++level;
  double pow2 = static_cast<double>(1LL << level);
  double pow18 = std::pow(18.0, level);
  return (1.0 / pow18) * 0.125 *
         (2.0 * pow2 - n + (n - pow2) / 9.0);
}

}  // namespace

TEST_CASE("lower bound on uniform interval equals 1/(12 n^2)") {
  auto sub = cert(CertKind::sub, 1.0, 2.0, kInf, 2.0);
  for (double n : {1.0, 2.0, 3.0, 10.0, 100.0, 4096.0}) {
    CHECK(rdq::lower_bound_ln(lower_query(sub, n)) ==
          doctest::Approx(1.0 / (12.0 * n * n)).epsilon(1e-13));
  }

  // Brute force cross-check: optimal quantizers of a uniform atom grid have
  // error 1/(12 n^2) - 1/(12 N^2) when n divides N.
  const int N = 2520;
  std::vector<double> atoms(N);
  for (int j = 0; j < N; ++j) atoms[j] = (j + 0.5) / N;
  for (int n : {1, 2, 3, 4}) {
    double discrete = rdq_test::optimal_discrete_quantizer_mse(atoms, n);
    double ln = rdq::lower_bound_ln(lower_query(sub, n));
    CHECK(ln <= discrete + 1.0 / (12.0 * N * N) + 1e-12);
    CHECK(discrete + 1.0 / (12.0 * N * N) ==
          doctest::Approx(1.0 / (12.0 * n * n)).epsilon(1e-10));
  }
}

TEST_CASE("lower bound crossover region is flat") {
  auto sub = cert(CertKind::sub, 1.0, 2.0, 0.1, 2.0);
  double l1 = rdq::lower_bound_ln(lower_query(sub, 1.0));
  CHECK(l1 == doctest::Approx((1.0 / 3.0) * 0.01).epsilon(1e-12));
  for (double n : {2.0, 3.0, 4.0}) {
    CHECK(rdq::lower_bound_ln(lower_query(sub, n)) == l1);
  }
  CHECK(rdq::lower_bound_ln(lower_query(sub, 6.0)) < l1);

  double prev = kInf;
  for (int n = 1; n <= 100; ++n) {
    double ln = rdq::lower_bound_ln(lower_query(sub, n));
    CHECK(ln <= prev);
    prev = ln;
  }
}

TEST_CASE("lower bound on the ternary self-similar set") {
  auto sub = cert(CertKind::sub, kMc, 2.0, kInf, 2.0);
  for (double n : {1.0, 10.0, 1000.0}) {
    double expected = kMc / (kMc + 2.0) * std::pow(2.0, -2.0 / kMc) *
                      std::pow(n, -2.0 / kMc);
    CHECK(rdq::lower_bound_ln(lower_query(sub, n)) ==
          doctest::Approx(expected).epsilon(1e-12));
    CHECK(expected ==
          doctest::Approx(kMc / (kMc + 2.0) / 9.0 * std::pow(n, -2.0 / kMc))
              .epsilon(1e-12));
  }
}

TEST_CASE("lower bound rejects bad queries") {
  auto sub = cert(CertKind::sub, 1.0, 2.0, kInf, 2.0);
  QuantQuery q = lower_query(sub, 4.0);
  q.cert_sub.reset();
  CHECK_THROWS_AS(rdq::lower_bound_ln(q), std::domain_error);
  q = lower_query(cert(CertKind::super, 1.0, 2.0, kInf, 2.0), 4.0);
  CHECK_THROWS_AS(rdq::lower_bound_ln(q), std::domain_error);
  q = lower_query(cert(CertKind::sub, 0.0, 2.0, kInf, 2.0), 4.0);
  CHECK_THROWS_AS(rdq::lower_bound_ln(q), std::domain_error);
  q = lower_query(sub, 0.5);
  CHECK_THROWS_AS(rdq::lower_bound_ln(q), std::domain_error);
  q = lower_query(sub, 4.0, 0.5);
  CHECK_THROWS_AS(rdq::lower_bound_ln(q), std::domain_error);
  q = lower_query(sub, 4.0, 1.0, 0.0);
  CHECK_THROWS_AS(rdq::lower_bound_ln(q), std::domain_error);
}

TEST_CASE("upper bound on the ternary self-similar set") {
  auto super = cert(CertKind::super, kMc, 0.5, 1.0, 2.0);
  for (double n : {1.0, 7.0, 512.0}) {
    double expected =
        std::tgamma(1.0 + 2.0 / kMc) * 9.0 * std::pow(n, -2.0 / kMc);
    CHECK(rdq::upper_bound_un(upper_query(super, n, 1.0)) ==
          doctest::Approx(expected).epsilon(1e-12));
  }
}

TEST_CASE("upper bound branch selection") {
  // beta below delta0: identical to the unbounded form.
  auto bounded = cert(CertKind::super, 2.0, 0.3, 1.0, 2.0);
  auto global = cert(CertKind::super, 2.0, 0.3, kInf, 2.0);
  for (double n : {1.0, 5.0, 40.0}) {
    CHECK(rdq::upper_bound_un(upper_query(bounded, n, 0.5)) ==
          rdq::upper_bound_un(upper_query(global, n)));
  }

  // beta above delta0 adds the exponentially small excess term.
  double u10 = rdq::upper_bound_un(upper_query(bounded, 10.0, 2.0));
  CHECK(u10 ==
        doctest::Approx(1.0 / 3.0 + 3.0 * std::exp(-3.0)).epsilon(1e-12));

  double prev = kInf;
  for (int n = 1; n <= 100; ++n) {
    double un = rdq::upper_bound_un(upper_query(bounded, n, 2.0));
    CHECK(un <= prev);
    prev = un;
  }

  // Unbounded distortion over a bounded support certificate is rejected.
  CHECK_THROWS_AS(rdq::upper_bound_un(upper_query(bounded, 10.0, kInf)),
                  std::domain_error);
  QuantQuery q = upper_query(global, 4.0);
  q.cert_super.reset();
  CHECK_THROWS_AS(rdq::upper_bound_un(q), std::domain_error);
  CHECK_THROWS_AS(rdq::upper_bound_un(
                      upper_query(cert(CertKind::sub, 1.0, 1.0, kInf, 2.0), 4.0)),
                  std::domain_error);
}

TEST_CASE("lower bound never exceeds upper bound") {
  // Ternary self-similar pair.
  auto cantor_sub = cert(CertKind::sub, kMc, 2.0, kInf, 2.0);
  auto cantor_super = cert(CertKind::super, kMc, 0.5, 1.0, 2.0);
  // Uniform interval pair.
  auto interval_sub = cert(CertKind::sub, 1.0, 2.0, kInf, 2.0);
  auto interval_super = cert(CertKind::super, 1.0, 1.0, 1.0, 2.0);
  for (long long n = 1; n <= (1 << 14); ++n) {
    double nd = static_cast<double>(n);
    CHECK(rdq::lower_bound_ln(lower_query(cantor_sub, nd)) <=
          rdq::upper_bound_un(upper_query(cantor_super, nd, 1.0)));
    CHECK(rdq::lower_bound_ln(lower_query(interval_sub, nd)) <=
          rdq::upper_bound_un(upper_query(interval_super, nd, 1.0)));
  }

  // The analytic sandwich also holds around the exact ternary errors.
  for (long long n : {1LL, 2LL, 3LL, 4LL, 100LL, 4096LL}) {
    double vn = ternary_exact_vn(n);
    double nd = static_cast<double>(n);
    CHECK(rdq::lower_bound_ln(lower_query(cantor_sub, nd)) <= vn);
    CHECK(vn <= rdq::upper_bound_un(upper_query(cantor_super, nd, 1.0)));
  }
}

TEST_CASE("bounds reach their coefficient scalings") {
  // n^{pk/m} L_n equals the lower coefficient exactly once delta0 = inf.
  auto sub = cert(CertKind::sub, 1.0, 2.0, kInf, 2.0);
  double n = 1e6;
  double scaled = rdq::lower_bound_ln(lower_query(sub, n, 1.0, 2.0)) * n * n;
  double target = 0.25 * 0.25 / 3.0;
  CHECK(std::abs(scaled - target) <= 1e-10 * target);

  // n^{k/m} U_n approaches Gamma(1+k/m) b^{-k/m}; the excess term is dead
  // by n = 1e6.
  auto super = cert(CertKind::super, 2.0, 0.3, 1.0, 2.0);
  double scaled_u = rdq::upper_bound_un(upper_query(super, n, 2.0)) * n;
  CHECK(std::abs(scaled_u - 1.0 / 0.3) <= 1e-6 / 0.3);
}

TEST_CASE("dimension bounds from certificates") {
  auto sphere_sub = cert(CertKind::sub, 3.0, 1.0, 1.0, 2.0);
  auto sphere_super = cert(CertKind::super, 3.0, 0.5, 1.0, 2.0);
  auto both = rdq::quant_dimension_bounds(sphere_sub, sphere_super, 1.0);
  REQUIRE(both.lower.has_value());
  REQUIRE(both.upper.has_value());
  REQUIRE(both.equal.has_value());
  CHECK(*both.lower == 3.0);
  CHECK(*both.upper == 3.0);
  CHECK(*both.equal == 3.0);

  auto sub_only = rdq::quant_dimension_bounds(
      cert(CertKind::sub, 2.0, 1.0, kInf, 2.0), std::nullopt, 2.0);
  REQUIRE(sub_only.lower.has_value());
  CHECK(*sub_only.lower == 1.0);
  CHECK_FALSE(sub_only.upper.has_value());
  CHECK_FALSE(sub_only.equal.has_value());

  auto cantor = rdq::quant_dimension_bounds(
      cert(CertKind::sub, kMc, 2.0, kInf, 2.0),
      cert(CertKind::super, kMc, 0.5, 1.0, 2.0), 1.0);
  REQUIRE(cantor.equal.has_value());
  CHECK(*cantor.equal == kMc);

  // p > 1 pins the dimension only with finite entropy.
  auto loose = rdq::quant_dimension_bounds(sphere_sub, sphere_super, 2.0);
  CHECK_FALSE(loose.equal.has_value());
  auto pinned = rdq::quant_dimension_bounds(sphere_sub, sphere_super, 2.0, true);
  REQUIRE(pinned.equal.has_value());
  CHECK(*pinned.equal == 3.0);

  CHECK_THROWS_AS(rdq::quant_dimension_bounds(std::nullopt, std::nullopt, 1.0),
                  std::domain_error);
  CHECK_THROWS_AS(rdq::quant_dimension_bounds(sphere_super, std::nullopt, 1.0),
                  std::domain_error);
  CHECK_THROWS_AS(rdq::quant_dimension_bounds(std::nullopt, sphere_sub, 1.0),
                  std::domain_error);
}

TEST_CASE("coefficient bounds on the uniform circle") {
  const double pi = std::numbers::pi;
  // Surface dimension constant of the unit circle: c = 1/pi, so the lower
  // coefficient chain gives r^2 pi^2 / 3 at r = 1.
  QuantQuery q = lower_query(cert(CertKind::sub, 1.0, 1.0 / pi, kInf, 2.0), 1.0);
  auto bounds = rdq::coefficient_bounds(q, 1.0);
  CHECK(bounds.lower_applicable);
  CHECK(bounds.lower == doctest::Approx(pi * pi / 3.0).epsilon(1e-12));
  CHECK_FALSE(bounds.upper_applicable);
  CHECK_FALSE(bounds.improved_applicable);

  double k2 = std::pow(2.0 * std::sqrt(pi) * std::tgamma(1.5) / std::tgamma(1.0),
                       2.0);
  CHECK(k2 == doctest::Approx(pi * pi).epsilon(1e-14));
  CHECK(bounds.lower == doctest::Approx(k2 / 3.0).epsilon(1e-12));
}

TEST_CASE("coefficient bounds on the ternary self-similar set") {
  QuantQuery q;
  q.cert_sub = cert(CertKind::sub, kMc, 2.0, kInf, 2.0);
  q.cert_super = cert(CertKind::super, kMc, 0.5, 1.0, 2.0);
  auto bounds = rdq::coefficient_bounds(q, kMc);
  REQUIRE(bounds.lower_applicable);
  REQUIRE(bounds.upper_applicable);
  REQUIRE(bounds.improved_applicable);
  CHECK(bounds.upper ==
        doctest::Approx(9.0 * std::tgamma(1.0 + 2.0 / kMc)).epsilon(1e-12));
  CHECK(bounds.lower ==
        doctest::Approx(kMc / (kMc + 2.0) / 9.0).epsilon(1e-12));
  CHECK(bounds.improved == bounds.upper);
  CHECK(bounds.lower <= bounds.improved);

  q.omega = 0.9;
  q.has_omega = true;
  auto improved = rdq::coefficient_bounds(q, kMc);
  CHECK(improved.improved == doctest::Approx(0.9 * improved.upper).epsilon(1e-15));
  CHECK(improved.improved <= improved.upper);
  CHECK(improved.lower <= improved.improved);
}

TEST_CASE("coefficient bounds report inapplicable sides") {
  QuantQuery q;
  q.cert_sub = cert(CertKind::sub, 2.0, 1.0, kInf, 2.0);
  q.cert_super = cert(CertKind::super, 2.0, 1.0, kInf, 2.0);
  q.p = 2.0;

  auto at_lower = rdq::coefficient_bounds(q, 1.0);
  CHECK(at_lower.lower_applicable);
  CHECK_FALSE(at_lower.upper_applicable);
  CHECK(std::isnan(at_lower.upper));

  auto at_upper = rdq::coefficient_bounds(q, 2.0);
  CHECK_FALSE(at_upper.lower_applicable);
  CHECK(at_upper.upper_applicable);
  CHECK(std::isnan(at_upper.lower));

  auto nowhere = rdq::coefficient_bounds(q, 1.5);
  CHECK_FALSE(nowhere.lower_applicable);
  CHECK_FALSE(nowhere.upper_applicable);
  CHECK_FALSE(nowhere.improved_applicable);
}

TEST_CASE("dimension estimates from error sequences") {
  ErrorSequence harmonic;
  ErrorSequence quadratic;
  for (int j = 1; j <= 20; ++j) {
    double n = std::pow(2.0, j);
    harmonic.entries.push_back({n, 1.0 / n});
    quadratic.entries.push_back({n, 1.0 / (n * n)});
  }
  auto [h_lo, h_hi] = rdq::dimension_from_sequence(harmonic, 2.0);
  CHECK(h_lo == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(h_hi == doctest::Approx(2.0).epsilon(1e-12));
  auto [q_lo, q_hi] = rdq::dimension_from_sequence(quadratic, 2.0);
  CHECK(q_lo == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(q_hi == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("dimension estimates bracket the ternary set") {
  ErrorSequence seq;
  for (long long n = 1; n <= (1 << 12); ++n)
    seq.entries.push_back({static_cast<double>(n), ternary_exact_vn(n)});
  auto [lo, hi] = rdq::dimension_from_sequence(seq, 2.0);
  CHECK(lo > kMc - 0.05);
  CHECK(hi < kMc + 0.05);
  CHECK(lo <= hi);
  CHECK(hi < kMc);  // the exact errors sit above the pure power law
}

TEST_CASE("dimension estimates stay near m when the scaled error is bounded") {
  ErrorSequence seq;
  for (int j = 1; j <= 40; ++j) {
    double n = std::pow(2.0, j);
    seq.entries.push_back({n, 0.5 * std::pow(n, -2.0)});
  }
  auto [lo, hi] = rdq::dimension_from_sequence(seq, 2.0);
  CHECK(lo >= 1.0 - 0.05);
  CHECK(hi <= 1.0);
}

TEST_CASE("dimension estimates diverge past the cap") {
  ErrorSequence seq;
  for (double exp10 : {80.0, 85.0, 90.0, 95.0, 100.0}) {
    double n = std::pow(10.0, exp10);
    seq.entries.push_back({n, 1.0 / std::log(n + 2.0)});
  }
  auto [lo, hi] = rdq::dimension_from_sequence(seq, 2.0);
  CHECK(std::isinf(lo));
  CHECK(std::isinf(hi));

  auto [raw_lo, raw_hi] = rdq::dimension_from_sequence(seq, 2.0, 0.5, 1000.0);
  CHECK(std::isfinite(raw_lo));
  CHECK(std::isfinite(raw_hi));
  CHECK(raw_lo > 64.0);
}

TEST_CASE("dimension estimates validate their input") {
  ErrorSequence empty;
  CHECK_THROWS_AS(rdq::dimension_from_sequence(empty, 2.0),
                  std::invalid_argument);

  ErrorSequence unsorted;
  unsorted.entries = {{4.0, 0.5}, {2.0, 0.25}};
  CHECK_THROWS_AS(rdq::dimension_from_sequence(unsorted, 2.0),
                  std::invalid_argument);

  ErrorSequence big_tail;
  big_tail.entries = {{2.0, 0.5}, {4.0, 1.5}};
  CHECK_THROWS_AS(rdq::dimension_from_sequence(big_tail, 2.0),
                  std::domain_error);

  // Early entries may exceed 1; only the tail must be contracting.
  ErrorSequence big_head;
  big_head.entries = {{2.0, 1.5}, {4.0, 0.5}, {8.0, 0.25}, {16.0, 0.125}};
  CHECK_NOTHROW(rdq::dimension_from_sequence(big_head, 2.0));

  ErrorSequence fine;
  fine.entries = {{2.0, 0.5}, {4.0, 0.25}};
  CHECK_THROWS_AS(rdq::dimension_from_sequence(fine, 0.0), std::domain_error);
  CHECK_THROWS_AS(rdq::dimension_from_sequence(fine, 2.0, 0.0),
                  std::domain_error);
  CHECK_THROWS_AS(rdq::dimension_from_sequence(fine, 2.0, 1.5),
                  std::domain_error);
}
