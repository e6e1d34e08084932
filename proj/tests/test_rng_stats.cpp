#include <cmath>
#include <vector>

#include "doctest.h"
#include "rdq/parallel.hpp"
#include "rdq/rng.hpp"
#include "rdq/stats.hpp"

using namespace rdq;

TEST_CASE("streams are reproducible and index-separated") {
  RngStream a(42u, 7), b(42u, 7), c(42u, 8);
  bool all_equal = true, any_diff = false;
  for (int i = 0; i < 64; ++i) {
    auto x = a.raw();
    all_equal = all_equal && (x == b.raw());
    any_diff = any_diff || (x != c.raw());
  }
  CHECK(all_equal);
  CHECK(any_diff);
}

TEST_CASE("uniform01 range and normal moments") {
  RngStream rng(1u, 0);
  RunningStat u, z;
  for (int i = 0; i < 200000; ++i) {
    double x = rng.uniform01();
    CHECK(x >= 0.0);
    CHECK(x < 1.0);
    u.add(x);
    z.add(rng.normal());
  }
  CHECK(std::abs(u.mean() - 0.5) < 5.0 * u.se());
  CHECK(std::abs(z.mean()) < 5.0 * z.se());
  CHECK(std::abs(z.variance() - 1.0) < 0.02);
}

TEST_CASE("gamma sampler moments") {
  RngStream rng(9u, 1);
  for (double shape : {0.7, 1.0, 3.5}) {
    RunningStat s;
    for (int i = 0; i < 200000; ++i) s.add(rng.gamma(shape));
    CHECK(std::abs(s.mean() - shape) < 5.0 * s.se());
    CHECK(std::abs(s.variance() - shape) / shape < 0.05);
  }
}

TEST_CASE("integer index is in range and covers values") {
  RngStream rng(3u, 0);
  std::vector<int> counts(7, 0);
  for (int i = 0; i < 7000; ++i) {
    auto v = rng.index(7);
    REQUIRE(v < 7);
    ++counts[static_cast<int>(v)];
  }
  for (int k : counts) CHECK(k > 800);
}

TEST_CASE("welford merge equals bulk accumulation") {
  RngStream rng(5u, 0);
  RunningStat whole, left, right;
  for (int i = 0; i < 5000; ++i) {
    double x = rng.normal() * 3.0 + 1.0;
    whole.add(x);
    (i % 2 == 0 ? left : right).add(x);
  }
  left.merge(right);
  CHECK(left.count() == whole.count());
  CHECK(left.mean() == doctest::Approx(whole.mean()).epsilon(1e-12));
  CHECK(left.variance() == doctest::Approx(whole.variance()).epsilon(1e-10));
}

TEST_CASE("binomial estimate matches normal SE in the middle, positive at edges") {
  auto mid = binomial_estimate(500000, 1000000);
  CHECK(mid.estimate == 0.5);
  CHECK(mid.ci_halfwidth == doctest::Approx(0.0005).epsilon(1e-3));
  auto edge = binomial_estimate(0, 1000);
  CHECK(edge.estimate == 0.0);
  CHECK(edge.ci_halfwidth > 0.0);
}

TEST_CASE("parallel_for result is independent of worker count") {
  auto run = [](int workers) {
    std::vector<double> out(257);
    parallel_for(out.size(), workers, [&](std::size_t i) {
      RngStream rng(11u, i);
      double s = 0.0;
      for (int j = 0; j < 100; ++j) s += rng.uniform01();
      out[i] = s;
    });
    return out;
  };
  auto a = run(1);
  auto b = run(4);
  CHECK(a == b);
}
