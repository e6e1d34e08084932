#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

#include "rdq/spaces.hpp"

namespace rdq {

namespace {

constexpr double kThird = 1.0 / 3.0;

bool ternary_like(const SelfSimilarSet& set) {
  if (set.maps.size() != 2 || set.ambient_dim != 1) return false;
  return std::abs(set.maps[0].kappa - kThird) < 1e-15 &&
         std::abs(set.maps[1].kappa - kThird) < 1e-15;
}

long long floor_log2(long long n) {
  long long level = 0;
  while (level + 1 < 63 && (2LL << level) <= n) ++level;
  return level;
}

}  // namespace

SelfSimilarSet selfsimilar_build(const std::vector<Similarity>& maps, double diam) {
  if (maps.empty()) throw std::invalid_argument("selfsimilar_build: no maps");
  if (!(diam > 0.0) || !std::isfinite(diam))
    throw std::domain_error("selfsimilar_build: diam must be positive");

  SelfSimilarSet set;
  set.ambient_dim = static_cast<int>(maps[0].shift.size());
  if (set.ambient_dim < 1)
    throw std::invalid_argument("selfsimilar_build: maps need a shift vector");
  set.diam = diam;
  set.kappa_min = 1.0;
  set.maps = maps;
  for (auto& map : set.maps) {
    if (!(map.kappa > 0.0 && map.kappa < 1.0))
      throw std::domain_error("selfsimilar_build: kappa must be in (0,1)");
    if (static_cast<int>(map.shift.size()) != set.ambient_dim)
      throw std::invalid_argument("selfsimilar_build: inconsistent shift sizes");
    if (map.ortho.size() == 0)
      map.ortho = Eigen::MatrixXd::Identity(set.ambient_dim, set.ambient_dim);
    if (map.ortho.rows() != set.ambient_dim || map.ortho.cols() != set.ambient_dim)
      throw std::invalid_argument("selfsimilar_build: ortho shape mismatch");
    Eigen::MatrixXd gram = map.ortho.transpose() * map.ortho;
    gram -= Eigen::MatrixXd::Identity(set.ambient_dim, set.ambient_dim);
    if (gram.cwiseAbs().maxCoeff() > 1e-10)
      throw std::invalid_argument("selfsimilar_build: ortho part is not orthogonal");
    set.kappa_min = std::min(set.kappa_min, map.kappa);
  }

  if (set.maps.size() == 1) {
    set.m = 0.0;
    return set;
  }

  auto excess = [&](double m) {
    double total = 0.0;
    for (const auto& map : set.maps) total += std::pow(map.kappa, m);
    return total - 1.0;
  };
  double kappa_max = 0.0;
  for (const auto& map : set.maps) kappa_max = std::max(kappa_max, map.kappa);
  double lo = 0.0;
  double hi = std::log(static_cast<double>(set.maps.size())) / std::log(1.0 / kappa_max) + 1.0;
  while (excess(hi) >= 0.0) hi *= 2.0;
  for (int i = 0; i < 200 && hi - lo > 1e-14 * std::max(1.0, hi); ++i) {
    double mid = 0.5 * (lo + hi);
    if (excess(mid) >= 0.0)
      lo = mid;
    else
      hi = mid;
  }
  set.m = 0.5 * (lo + hi);
  return set;
}

std::pair<RegularityCertificate, RegularityCertificate> selfsimilar_certs(
    const SelfSimilarSet& set, double c_sub, bool ambient) {
  if (set.maps.empty()) throw std::invalid_argument("selfsimilar_certs: empty set");
  double c = c_sub;
  if (!(c > 0.0)) {
    if (!ternary_like(set))
      throw std::domain_error("selfsimilar_certs: c_sub required for this set");
    c = ambient ? 3.0 : 2.0;
  }

  RegularityCertificate sub;
  sub.kind = CertKind::sub;
  sub.m = set.m;
  sub.constant = c;
  sub.delta0 = std::numeric_limits<double>::infinity();
  sub.k = 2.0;

  RegularityCertificate super;
  super.kind = CertKind::super;
  super.m = set.m;
  super.constant = std::pow(set.kappa_min / set.diam, set.m);
  super.delta0 = set.diam;
  super.k = 2.0;
  return {sub, super};
}

SelfSimilarSet cantor_preset() {
  Similarity left;
  left.kappa = kThird;
  left.ortho = Eigen::MatrixXd::Identity(1, 1);
  left.shift = Eigen::VectorXd::Zero(1);
  Similarity right = left;
  right.shift[0] = 2.0 / 3.0;
  return selfsimilar_build({left, right}, 1.0);
}

double cantor_exact_vn(long long n) {
  if (n < 1) throw std::domain_error("cantor_exact_vn: n must be >= 1");
  long long level = floor_log2(n);
  double cells = std::ldexp(1.0, static_cast<int>(level));
  double weight = std::pow(18.0, -static_cast<double>(level)) / 8.0;
  double nd = static_cast<double>(n);
  return weight * (2.0 * cells - nd + (nd - cells) / 9.0);
}

CantorAccumulation cantor_accumulation() {
  double m = std::log(2.0) / std::log(3.0);
  double peak = 17.0 / (8.0 + 4.0 * m);
  CantorAccumulation out;
  out.lo = 1.0 / 8.0;
  out.hi = std::pow(peak, 2.0 / m) * (17.0 - 8.0 * peak) / 72.0;
  out.c2_exists = false;
  return out;
}

SelfSimilarSpace::SelfSimilarSpace(SelfSimilarSet set, bool cantor, double k)
    : set_(std::move(set)), cantor_(cantor), k_(k) {
  if (!(k > 0.0)) throw std::domain_error("SelfSimilarSpace: k must be > 0");
  if (set_.maps.empty()) throw std::invalid_argument("SelfSimilarSpace: empty set");
  if (cantor_ && !ternary_like(set_))
    throw std::domain_error("SelfSimilarSpace: cantor mode needs the ternary preset");
  if (cantor_) {
    depth_ = 52;
  } else {
    double kappa_max = 0.0;
    for (const auto& map : set_.maps) kappa_max = std::max(kappa_max, map.kappa);
    double needed = std::log(1e-16) / std::log(kappa_max);
    depth_ = std::clamp(static_cast<int>(std::ceil(needed)), 8, 64);
  }
}

std::string SelfSimilarSpace::id() const {
  if (cantor_) return "cantor";
  return "selfsimilar_" + std::to_string(set_.maps.size()) + "maps";
}

double SelfSimilarSpace::distortion(const Point& x, const Point& y) const {
  if (k_ == 2.0) return (x - y).squaredNorm();
  double gap = (x - y).norm();
  if (k_ == 1.0) return gap;
  return std::pow(gap, k_);
}

Point SelfSimilarSpace::sample_reference(RngStream& rng) const {
  if (cantor_) {
    std::uint64_t bits = rng.raw();
    double acc = 0.0;
    for (int i = 0; i < depth_; ++i) {
      double digit = 2.0 * static_cast<double>((bits >> i) & 1ull);
      acc = (acc + digit) / 3.0;
    }
    Point x(1);
    x[0] = acc;
    return x;
  }
  const auto& first = set_.maps[0];
  Eigen::MatrixXd lhs = Eigen::MatrixXd::Identity(set_.ambient_dim, set_.ambient_dim) -
                        first.kappa * first.ortho;
  Point x = lhs.colPivHouseholderQr().solve(first.shift);
  for (int i = 0; i < depth_; ++i) {
    const auto& map = set_.maps[rng.index(set_.maps.size())];
    x = map.kappa * (map.ortho * x) + map.shift;
  }
  return x;
}

bool SelfSimilarSpace::contains(const Point& x) const {
  if (x.size() != set_.ambient_dim) return false;
  if (!cantor_) return true;
  double v = x[0];
  if (v < -1e-12 || v > 1.0 + 1e-12) return false;
  v = std::clamp(v, 0.0, 1.0);
  // Peeling a ternary digit triples the rounding error, so stop after 18
  // levels and leave that much slack around the middle gap.
  constexpr double margin = 1e-7;
  for (int i = 0; i < 18; ++i) {
    if (v < 0.5) {
      if (v > kThird + margin) return false;
      v = std::min(1.0, 3.0 * v);
    } else {
      if (v < 2.0 * kThird - margin) return false;
      v = std::max(0.0, 3.0 * v - 2.0);
    }
  }
  return true;
}

Point SelfSimilarSpace::project(const Point& ambient) const {
  if (!cantor_) return ambient;
  double v = std::clamp(ambient[0], 0.0, 1.0);
  double digits[52];
  for (int i = 0; i < depth_; ++i) {
    if (v <= kThird) {
      digits[i] = 0.0;
      v *= 3.0;
    } else if (v >= 2.0 * kThird) {
      digits[i] = 2.0;
      v = 3.0 * v - 2.0;
    } else if (v < 0.5) {
      // Gap point nearer the left cell: its closest attractor point is that
      // cell's right endpoint, reached by all-2 digits from here on.
      digits[i] = 0.0;
      v = 1.0;
    } else {
      digits[i] = 2.0;
      v = 0.0;
    }
  }
  double acc = 0.0;
  for (int i = depth_ - 1; i >= 0; --i) acc = (acc + digits[i]) / 3.0;
  Point x(1);
  x[0] = acc;
  return x;
}

std::vector<Point> SelfSimilarSpace::designed_codebook(int n) const {
  std::vector<Point> points;
  if (!cantor_ || n < 1) return points;
  long long level = floor_log2(n);
  long long cells = 1LL << level;
  long long doubled = n - cells;
  double width = std::pow(3.0, -static_cast<double>(level));
  points.reserve(static_cast<std::size_t>(n));
  for (long long idx = 0; idx < cells; ++idx) {
    // Horner over the level digits, deepest (lowest bit) first, so the high
    // bit of idx ends up as the first ternary digit and cells come out in
    // spatial order.
    double left = 0.0;
    for (long long t = 0; t < level; ++t) {
      double digit = 2.0 * static_cast<double>((idx >> t) & 1LL);
      left = (left + digit) / 3.0;
    }
    if (idx < doubled) {
      Point lo(1), hi(1);
      lo[0] = left + width / 6.0;
      hi[0] = left + 5.0 * width / 6.0;
      points.push_back(lo);
      points.push_back(hi);
    } else {
      Point mid(1);
      mid[0] = left + width / 2.0;
      points.push_back(mid);
    }
  }
  return points;
}

}  // namespace rdq
