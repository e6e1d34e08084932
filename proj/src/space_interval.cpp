#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "rdq/spaces.hpp"

namespace rdq {

IntervalSpace::IntervalSpace(double k) : k_(k) {
  if (!(k > 0.0)) throw std::domain_error("IntervalSpace: k must be > 0");
}

std::string IntervalSpace::id() const { return "interval"; }

double IntervalSpace::distortion(const Point& x, const Point& y) const {
  double gap = std::abs(x[0] - y[0]);
  if (k_ == 2.0) return gap * gap;
  if (k_ == 1.0) return gap;
  return std::pow(gap, k_);
}

Point IntervalSpace::sample_reference(RngStream& rng) const {
  Point x(1);
  x[0] = rng.uniform01();
  return x;
}

bool IntervalSpace::contains(const Point& x) const {
  return x.size() == 1 && x[0] >= 0.0 && x[0] <= 1.0;
}

Point IntervalSpace::project(const Point& ambient) const {
  Point x(1);
  x[0] = std::clamp(ambient[0], 0.0, 1.0);
  return x;
}

std::vector<Point> IntervalSpace::designed_codebook(int n) const {
  std::vector<Point> points;
  points.reserve(static_cast<std::size_t>(n));
  for (int i = 1; i <= n; ++i) {
    Point x(1);
    x[0] = (2.0 * i - 1.0) / (2.0 * n);
    points.push_back(x);
  }
  return points;
}

RegularityCertificate IntervalSpace::lebesgue_certificate() const {
  // The ball {rho^{1/k} <= delta} is {|x-y| <= delta} for every k, so the
  // (m=1, c=2) Lebesgue law carries over with the space's exponent.
  RegularityCertificate cert;
  cert.kind = CertKind::sub;
  cert.m = 1.0;
  cert.constant = 2.0;
  cert.delta0 = std::numeric_limits<double>::infinity();
  cert.k = k_;
  return cert;
}

}  // namespace rdq
