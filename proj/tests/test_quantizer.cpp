#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>
#include <stdexcept>
#include <vector>

#include <doctest.h>
#include <json.hpp>

#include "rdq/quantizer.hpp"
#include "rdq/rng.hpp"
#include "rdq/spaces.hpp"

using rdq::Codebook;
using rdq::IntervalSpace;
using rdq::Point;
using rdq::SourceSampler;

namespace {

Point scalar(double v) { return Eigen::VectorXd::Constant(1, v); }

Codebook book_of(std::initializer_list<double> xs) {
  Codebook b;
  for (double x : xs) b.points.push_back(scalar(x));
  return b;
}

}  // namespace

TEST_CASE("nearest distortion closed forms") {
  IntervalSpace interval;

  // Single midpoint codeword on uniform [0,1]: E(X - 1/2)^2 = 1/12.
  auto est = rdq::nearest_distortion(book_of({0.5}), interval, {}, 200000, 11u);
  CHECK(est.samples == 200000);
  CHECK(std::abs(est.mean - 1.0 / 12.0) <= 3.0 * est.ci_halfwidth);
  CHECK(est.ci_halfwidth > 0.0);

  // Four equally spaced circle points against the closed form.
  rdq::SphereSpace circle(2, 1.0);
  Codebook four{circle.designed_codebook(4)};
  auto circ = rdq::nearest_distortion(four, circle, {}, 200000, 13u);
  CHECK(std::abs(circ.mean - rdq::circle_closed_forms(1.0, 4).upper_vn) <=
        3.0 * circ.ci_halfwidth);

  // Depth-3 cell centers cover the middle-third set within half a cell width,
  // so every sample sits within (3^-3 / 2)^2; the mean respects the
  // cell-diameter bound 3^-6.
  rdq::SelfSimilarSpace cantor(rdq::cantor_preset(), true);
  Codebook atoms{cantor.designed_codebook(8)};
  REQUIRE(atoms.n() == 8);
  auto cell = rdq::nearest_distortion(atoms, cantor, {}, 50000, 17u);
  CHECK(cell.mean <= std::pow(3.0, -6.0));

  // Identical output for any worker count.
  auto w1 = rdq::nearest_distortion(book_of({0.2, 0.7}), interval, {}, 100000, 19u, 1);
  auto w4 = rdq::nearest_distortion(book_of({0.2, 0.7}), interval, {}, 100000, 19u, 4);
  CHECK(w1.mean == w4.mean);
  CHECK(w1.ci_halfwidth == w4.ci_halfwidth);

  CHECK_THROWS_AS(rdq::nearest_distortion(Codebook{}, interval, {}, 100, 1u),
                  std::invalid_argument);
  CHECK_THROWS_AS(rdq::nearest_distortion(book_of({0.5}), interval, {}, 0, 1u),
                  std::domain_error);
}

TEST_CASE("random codebook estimates") {
  // Sphere d=3: expectation of the random-codebook construction is bounded
  // by U_n for the uniform reference law.
  rdq::SphereSpace sphere(3, 1.0);
  auto bounds = rdq::sphere_bounds(3, 1.0, 32.0, 1.0, 1.0, 0.5);
  auto est = rdq::random_codebook_estimate(sphere, {}, {}, 32, 4, 40000, 23u, 2);
  CHECK(est.mean - 3.0 * est.ci_halfwidth <= bounds.un);

  // One random codeword on a circle: mean squared chord is 2 r^2.
  rdq::SphereSpace circle(2, 1.5);
  auto chord = rdq::random_codebook_estimate(circle, {}, {}, 1, 3, 60000, 29u);
  CHECK(std::abs(chord.mean - 2.0 * 1.5 * 1.5) <= 3.0 * chord.ci_halfwidth);

  // Cantor: no codebook beats the exact optimum.
  rdq::SelfSimilarSpace cantor(rdq::cantor_preset(), true);
  auto two = rdq::random_codebook_estimate(cantor, {}, {}, 2, 4, 40000, 31u);
  CHECK(two.mean + 3.0 * two.ci_halfwidth >= rdq::cantor_exact_vn(2));

  // Same seed and trial count reuse the same codebooks, so doubling the
  // samples per trial shrinks the pooled CI by sqrt(2).
  IntervalSpace interval;
  auto narrow = rdq::random_codebook_estimate(interval, {}, {}, 4, 4, 20000, 37u);
  auto wide = rdq::random_codebook_estimate(interval, {}, {}, 4, 4, 40000, 37u);
  double ratio = narrow.ci_halfwidth / wide.ci_halfwidth;
  CHECK(ratio >= std::sqrt(2.0) * 0.9);
  CHECK(ratio <= std::sqrt(2.0) * 1.1);

  CHECK_THROWS_AS(rdq::random_codebook_estimate(interval, {}, {}, 0, 1, 100, 1u),
                  std::domain_error);
  CHECK_THROWS_AS(rdq::random_codebook_estimate(interval, {}, {}, 1, 0, 100, 1u),
                  std::domain_error);
}

TEST_CASE("lloyd refinement") {
  IntervalSpace interval;

  // Random start, uniform law: converges to the optimal 4-point quantizer.
  {
    rdq::RngStream rng(41u, 0u);
    Codebook init;
    for (int i = 0; i < 4; ++i) init.points.push_back(interval.sample_reference(rng));
    auto res = rdq::lloyd_refine(init, interval, {}, 30, 120000, 43u, 2);
    REQUIRE(res.book.n() == 4);
    CHECK(!res.collapsed);
    std::vector<double> pts;
    for (const auto& p : res.book.points) pts.push_back(p[0]);
    std::sort(pts.begin(), pts.end());
    for (int i = 0; i < 4; ++i)
      CHECK(std::abs(pts[i] - (2.0 * i + 1.0) / 8.0) <= 0.01);
    auto final_est = rdq::nearest_distortion(res.book, interval, {}, 200000, 47u);
    CHECK(std::abs(final_est.mean - 1.0 / 192.0) <= 0.02 / 192.0);
    // Monitored trace does not trend upward.
    CHECK(res.trace.back() <= res.trace.front() * (1.0 + 0.05));
  }

  // Circle with n=8 reaches the closed-form optimum.
  {
    rdq::SphereSpace circle(2, 1.0);
    rdq::RngStream rng(53u, 0u);
    Codebook init;
    for (int i = 0; i < 8; ++i) init.points.push_back(circle.sample_reference(rng));
    auto res = rdq::lloyd_refine(init, circle, {}, 40, 120000, 59u, 2);
    REQUIRE(res.book.n() == 8);
    auto final_est = rdq::nearest_distortion(res.book, circle, {}, 200000, 61u);
    double target = rdq::circle_closed_forms(1.0, 8).upper_vn;
    CHECK(std::abs(final_est.mean - target) <= 0.02 * target);
  }

  // One iteration from the optimal codebook stays put within MC noise.
  {
    Codebook opt{interval.designed_codebook(4)};
    auto res = rdq::lloyd_refine(opt, interval, {}, 1, 200000, 67u);
    REQUIRE(res.book.n() == 4);
    for (int i = 0; i < 4; ++i)
      CHECK(std::abs(res.book.points[i][0] - opt.points[i][0]) <= 2e-3);
    CHECK(std::abs(res.trace[0] - 1.0 / 192.0) <= 3e-4);
  }

  // Duplicated codewords collapse: the higher index never wins a tie.
  {
    auto res = rdq::lloyd_refine(book_of({0.5, 0.5}), interval, {}, 2, 20000, 71u);
    CHECK(res.collapsed);
    CHECK(res.book.n() == 1);
  }

  // Bit-exact across worker counts.
  {
    Codebook init = book_of({0.1, 0.55, 0.8});
    auto a = rdq::lloyd_refine(init, interval, {}, 5, 50000, 73u, 1);
    auto b = rdq::lloyd_refine(init, interval, {}, 5, 50000, 73u, 3);
    REQUIRE(a.book.n() == b.book.n());
    for (int i = 0; i < a.book.n(); ++i)
      CHECK(a.book.points[i][0] == b.book.points[i][0]);
    CHECK(a.trace == b.trace);
  }

  CHECK_THROWS_AS(rdq::lloyd_refine(Codebook{}, interval, {}, 1, 100, 1u),
                  std::invalid_argument);
  CHECK_THROWS_AS(rdq::lloyd_refine(book_of({0.5}), interval, {}, 0, 100, 1u),
                  std::domain_error);
}

TEST_CASE("vn estimates") {
  IntervalSpace interval;

  // Uniform law, n=8: optimal error 1/768.
  auto v8 = rdq::vn_estimate(interval, {}, 8, 400000, 79u, 2);
  CHECK(std::abs(v8.mean - 1.0 / 768.0) <= 0.02 / 768.0);

  // Middle-third set, n=4: designed cell centers achieve the exact optimum.
  rdq::SelfSimilarSpace cantor(rdq::cantor_preset(), true);
  auto v4 = rdq::vn_estimate(cantor, {}, 4, 300000, 83u, 2);
  CHECK(std::abs(v4.mean - rdq::cantor_exact_vn(4)) <=
        0.05 * rdq::cantor_exact_vn(4));

  // Complex projective line, n=4: estimate lands inside [L_4, U_4].
  rdq::GrassmannSpace cp1(rdq::Field::complex, 1, 2);
  auto g4 = rdq::vn_estimate(cp1, {}, 4, 250000, 89u, 2);
  auto gb = rdq::grassmann_bounds(cp1.params(), 4.0, 1.0, 1.0, 0.5, false);
  CHECK(g4.mean + 3.0 * g4.ci_halfwidth >= gb.ln);
  CHECK(g4.mean - 3.0 * g4.ci_halfwidth <= gb.un);

  // More codewords never hurt beyond noise.
  double prev_mean = std::numeric_limits<double>::infinity();
  double prev_ci = 0.0;
  for (int n : {2, 3, 4, 6}) {
    auto est = rdq::vn_estimate(interval, {}, n, 150000, 97u, 2);
    CHECK(est.mean <= prev_mean + 3.0 * std::hypot(prev_ci, est.ci_halfwidth));
    prev_mean = est.mean;
    prev_ci = est.ci_halfwidth;
  }

  CHECK_THROWS_AS(rdq::vn_estimate(interval, {}, 0, 1000, 1u), std::domain_error);
}

TEST_CASE("sandwich reports") {
  IntervalSpace interval;
  rdq::QuantQuery base;
  base.cert_sub = interval.lebesgue_certificate();
  base.p = 1.0;
  base.sigma_p = 1.0;

  // Tight case: uniform interval with p=1 has L_n = 1/(12 n^2) met by Lloyd.
  auto report = rdq::sandwich_report(interval, {}, base, {1.0, 2.0, 4.0, 8.0},
                                     800000, 101u, 2);
  REQUIRE(report.rows.size() == 4);
  CHECK(report.all_pass);
  for (const auto& r : report.rows) {
    CHECK(r.pass);
    double expect = 1.0 / (12.0 * r.n * r.n);
    CHECK(r.ln == doctest::Approx(expect).epsilon(1e-12));
    CHECK(std::abs(r.v_hat - expect) <= 0.02 * expect + 3.0 * r.v_ci);
    CHECK(std::isnan(r.un));
    CHECK(std::isnan(r.scaled_u));
    CHECK(r.scaled_l == doctest::Approx(r.n * r.n * r.ln).epsilon(1e-12));
  }

  // Exact-value override: the middle-third sandwich holds for every n with
  // zero Monte Carlo budget spent.
  {
    auto set = rdq::cantor_preset();
    rdq::SelfSimilarSpace space(set, true);
    auto [sub, super] = rdq::selfsimilar_certs(set, -1.0, false);
    rdq::QuantQuery q;
    q.cert_sub = sub;
    q.cert_super = super;
    q.beta = set.diam;
    std::vector<double> ns;
    for (double n = 1.0; n <= 4096.0; n += 1.0) ns.push_back(n);
    auto exact = rdq::sandwich_report(
        space, {}, q, ns, 1, 103u, 1,
        [](double n) { return rdq::cantor_exact_vn(static_cast<long long>(n)); });
    CHECK(exact.all_pass);
    CHECK(exact.rows.size() == 4096);
    for (const auto& r : exact.rows) {
      CHECK(r.v_ci == 0.0);
      CHECK(r.pass);
    }
    // Scaled columns oscillate inside the accumulation range.
    auto acc = rdq::cantor_accumulation();
    for (const auto& r : exact.rows) {
      CHECK(r.scaled_v >= acc.lo - 1e-12);
      CHECK(r.scaled_v <= acc.hi + 1e-12);
    }
  }

  // Sphere d=3 full pipeline over powers of two.
  {
    rdq::SphereSpace sphere(3, 1.0);
    auto [sub, super] = rdq::sphere_certificates(3, 1.0, std::sqrt(2.0), false);
    rdq::QuantQuery q;
    q.cert_sub = sub;
    q.cert_super = *super;
    q.beta = 2.0;
    std::vector<double> ns = {1.0, 2.0, 4.0, 8.0, 16.0, 32.0, 64.0, 128.0, 256.0};
    auto rep = rdq::sandwich_report(sphere, {}, q, ns, 900000, 107u, 2);
    CHECK(rep.all_pass);
  }

  // Determinism: identical inputs give byte-identical CSV, and worker count
  // does not leak into the result.
  auto again = rdq::sandwich_report(interval, {}, base, {1.0, 2.0, 4.0, 8.0},
                                    800000, 101u, 4);
  CHECK(rdq::report_to_csv(report) == rdq::report_to_csv(again));

  // CSV layout.
  std::string csv = rdq::report_to_csv(report);
  std::istringstream lines(csv);
  std::string header;
  std::getline(lines, header);
  CHECK(header == "space_id,n,L_n,U_n,v_hat,v_ci,scaled_L,scaled_U,scaled_v,pass");
  int rows = 0;
  std::string line;
  while (std::getline(lines, line)) {
    ++rows;
    CHECK(std::count(line.begin(), line.end(), ',') == 9);
    CHECK(line.substr(0, 9) == "interval,");
    CHECK(line.back() == '1');
  }
  CHECK(rows == 4);

  // JSON mirror parses and matches the CSV values.
  auto doc = nlohmann::json::parse(rdq::report_to_json(report));
  CHECK(doc["all_pass"].get<bool>());
  REQUIRE(doc["rows"].size() == 4);
  CHECK(doc["rows"][0]["space_id"] == "interval");
  CHECK(doc["rows"][0]["L_n"].get<double>() ==
        doctest::Approx(1.0 / 12.0).epsilon(1e-12));
  CHECK(doc["rows"][0]["U_n"].is_null());
  CHECK(doc["rows"][0]["pass"].get<bool>());

  // A query with no certificate at all fails the row.
  rdq::QuantQuery bare;
  auto none = rdq::sandwich_report(interval, {}, bare, {2.0}, 1, 109u, 1,
                                   [](double) { return 0.01; });
  CHECK(!none.all_pass);
  CHECK(!none.rows[0].pass);

  CHECK_THROWS_AS(rdq::sandwich_report(interval, {}, base, {}, 100, 1u),
                  std::invalid_argument);
  CHECK_THROWS_AS(
      rdq::sandwich_report(interval, {}, base, {2.5}, 100, 1u),
      std::domain_error);
}
