#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

#include "rdq/spaces.hpp"
#include "rdq/specials.hpp"

namespace rdq {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

void check_sphere(int d, double r) {
  if (d < 2) throw std::domain_error("sphere: d must be >= 2");
  if (!(r > 0.0) || !std::isfinite(r)) throw std::domain_error("sphere: r must be positive");
}

std::string format_real(double v) {
  std::ostringstream os;
  os << v;
  return os.str();
}

// Cap mass divided by delta^{d-1}, evaluated at the squared relative radius
// alpha = delta^2 / r^2 in (0, 1], times the sphere area a^{(d-1)}(r). Equals
// the unit-ball volume v^{(d-1)}(1) in the limit alpha -> 0.
double growth_function(int d, double alpha) {
  double half = 0.5 * (d - 1);
  return 0.5 * sphere_geometry(d, 1.0).area * regularized_beta(half, 0.5, alpha) /
         std::pow(alpha, half);
}

double log_vmf_normalizer(int d, double kappa) {
  if (kappa == 0.0) return 0.0;
  double nu = 0.5 * d - 1.0;
  return nu * (std::log(kappa) - std::log(2.0)) - std::lgamma(0.5 * d) -
         std::log(bessel_i(nu, kappa));
}

}  // namespace

double sphere_cap_measure(int d, double r, double delta, bool on_sphere_center) {
  check_sphere(d, r);
  if (!(delta > 0.0)) throw std::domain_error("sphere_cap_measure: delta must be > 0");
  double limit = on_sphere_center ? std::sqrt(2.0) * r : r;
  if (delta > limit) throw std::domain_error("sphere_cap_measure: delta out of range");
  double t = (delta / r) * (delta / r);
  double arg = on_sphere_center ? t * (1.0 - 0.25 * t) : t;
  arg = std::min(arg, 1.0);
  return 0.5 * regularized_beta(0.5 * (d - 1), 0.5, arg);
}

std::pair<RegularityCertificate, std::optional<RegularityCertificate>>
sphere_certificates(int d, double r, double delta0, bool ambient) {
  check_sphere(d, r);
  double limit = ambient ? r : std::sqrt(2.0) * r;
  if (!(delta0 > 0.0) || delta0 > limit)
    throw std::domain_error("sphere_certificates: delta0 out of range");

  double t0 = (delta0 / r) * (delta0 / r);
  double area = sphere_geometry(d, r).area;

  RegularityCertificate sub;
  sub.kind = CertKind::sub;
  sub.m = static_cast<double>(d - 1);
  sub.constant = growth_function(d, std::min(t0, 1.0)) / area;
  sub.delta0 = delta0;
  sub.k = 2.0;

  std::optional<RegularityCertificate> super;
  if (!ambient) {
    RegularityCertificate sup;
    sup.kind = CertKind::super;
    sup.m = static_cast<double>(d - 1);
    sup.constant = sphere_geometry(d - 1, 1.0).volume / area *
                   std::pow(1.0 - 0.25 * t0, 0.5 * (d - 1));
    sup.delta0 = delta0;
    sup.k = 2.0;
    super = sup;
  }
  return {sub, super};
}

VmfFunctionals vmf_functionals(const VonMisesFisher& v, int d, bool want_omega) {
  if (d < 2) throw std::domain_error("vmf_functionals: d must be >= 2");
  if (!(v.kappa >= 0.0) || !std::isfinite(v.kappa))
    throw std::domain_error("vmf_functionals: kappa must be finite and >= 0");
  if (want_omega && d < 4)
    throw std::domain_error("vmf_functionals: omega needs d >= 4");

  VmfFunctionals out;
  if (v.kappa == 0.0) {
    out.c_d = 1.0;
    out.entropy = 0.0;
    out.sigma1 = 1.0;
    out.omega = 1.0;
    out.omega_valid = want_omega;
    return out;
  }

  double log_c = log_vmf_normalizer(d, v.kappa);
  double resultant = bessel_i(0.5 * d, v.kappa) / bessel_i(0.5 * d - 1.0, v.kappa);
  out.c_d = std::exp(log_c);
  out.entropy = -log_c - v.kappa * resultant;
  out.sigma1 = std::exp(log_c + v.kappa);
  if (want_omega) {
    double shrink = static_cast<double>(d - 3) / static_cast<double>(d - 1);
    out.omega = std::exp(shrink * log_c - log_vmf_normalizer(d, v.kappa * shrink));
    out.omega_valid = true;
  }
  return out;
}

double vmf_log_density(const VonMisesFisher& v, int d, const Point& x) {
  if (d < 2) throw std::domain_error("vmf_log_density: d must be >= 2");
  if (v.mean_direction.size() != d || x.size() != d)
    throw std::invalid_argument("vmf_log_density: dimension mismatch");
  if (!(v.kappa >= 0.0)) throw std::domain_error("vmf_log_density: kappa must be >= 0");
  double norm = v.mean_direction.norm();
  if (!(norm > 0.0)) throw std::domain_error("vmf_log_density: zero mean direction");
  return log_vmf_normalizer(d, v.kappa) + v.kappa * v.mean_direction.dot(x) / norm;
}

Point vmf_sample(const VonMisesFisher& v, RngStream& rng) {
  int d = static_cast<int>(v.mean_direction.size());
  if (d < 2) throw std::domain_error("vmf_sample: d must be >= 2");
  if (!(v.kappa >= 0.0)) throw std::domain_error("vmf_sample: kappa must be >= 0");
  double norm = v.mean_direction.norm();
  if (!(norm > 0.0)) throw std::domain_error("vmf_sample: zero mean direction");

  double dm1 = static_cast<double>(d - 1);
  double b = dm1 / (2.0 * v.kappa + std::sqrt(4.0 * v.kappa * v.kappa + dm1 * dm1));
  double x0 = (1.0 - b) / (1.0 + b);
  double c = v.kappa * x0 + dm1 * std::log(1.0 - x0 * x0);

  double w = 0.0;
  for (;;) {
    double z = rng.beta(0.5 * dm1, 0.5 * dm1);
    w = (1.0 - (1.0 + b) * z) / (1.0 - (1.0 - b) * z);
    double u;
    do {
      u = rng.uniform01();
    } while (u <= 0.0);
    if (v.kappa * w + dm1 * std::log(1.0 - x0 * w) - c >= std::log(u)) break;
  }

  Eigen::VectorXd tangent(d - 1);
  double tnorm = 0.0;
  do {
    for (int i = 0; i < d - 1; ++i) tangent[i] = rng.normal();
    tnorm = tangent.norm();
  } while (!(tnorm > 0.0));
  tangent /= tnorm;

  Point x(d);
  x[0] = w;
  x.tail(d - 1) = std::sqrt(std::max(0.0, 1.0 - w * w)) * tangent;

  Eigen::VectorXd mu = v.mean_direction / norm;
  Eigen::VectorXd axis = Eigen::VectorXd::Unit(d, 0) - mu;
  double axis_sq = axis.squaredNorm();
  if (axis_sq > 1e-28) x -= axis * (2.0 * axis.dot(x) / axis_sq);
  x /= x.norm();
  return x;
}

SphereBounds sphere_bounds(int d, double r, double n, double p, double sigma_p,
                           double alpha) {
  check_sphere(d, r);
  if (!(n >= 1.0)) throw std::domain_error("sphere_bounds: n must be >= 1");
  if (!(p >= 1.0)) throw std::domain_error("sphere_bounds: p must be >= 1");
  if (!(sigma_p > 0.0)) throw std::domain_error("sphere_bounds: sigma_p must be > 0");
  if (!(alpha > 0.0 && alpha < 1.0))
    throw std::domain_error("sphere_bounds: alpha must be in (0,1)");

  double dm1 = static_cast<double>(d - 1);
  SphereBounds out;
  out.n0 = std::pow(2.0, 1.0 / p) / sigma_p;
  out.below_n0 = n < out.n0;
  if (out.below_n0) {
    out.ln = kNaN;
  } else {
    double u = std::min(1.0, 2.0 * std::exp(-p * (std::log(n) + std::log(sigma_p))));
    out.ln = dm1 / (dm1 + 2.0 * p) * r * r *
             inverse_regularized_beta(0.5 * dm1, 0.5, u);
  }

  double delta_n = std::sqrt(2.0) * r * std::exp(-alpha / dm1 * std::log(n));
  double tn = (delta_n / r) * (delta_n / r);
  double growth = sphere_geometry(d - 1, 1.0).volume / sphere_geometry(d, r).area *
                  std::pow(1.0 - 0.25 * tn, 0.5 * dm1);
  double exponent = std::log(n) + std::log(growth) + dm1 * std::log(delta_n);
  out.un = std::tgamma(1.0 + 2.0 / dm1) *
               std::exp(-2.0 / dm1 * (std::log(growth) + std::log(n))) +
           (4.0 * r * r - delta_n * delta_n) * std::exp(-std::exp(exponent));
  return out;
}

CircleClosedForms circle_closed_forms(double r, int n) {
  if (!(r > 0.0)) throw std::domain_error("circle_closed_forms: r must be > 0");
  if (n < 1) throw std::domain_error("circle_closed_forms: n must be >= 1");
  CircleClosedForms out;
  out.upper_vn = 2.0 * r * r * (1.0 - sinc(1.0 / n));
  out.c2_target = r * r * 9.869604401089358618834490999876 / 3.0;
  return out;
}

SphereSpace::SphereSpace(int d, double r) : geom_{d, r} { check_sphere(d, r); }

std::string SphereSpace::id() const {
  return "sphere_d" + std::to_string(geom_.d) + "_r" + format_real(geom_.r);
}

double SphereSpace::distortion(const Point& x, const Point& y) const {
  return (x - y).squaredNorm();
}

Point SphereSpace::sample_reference(RngStream& rng) const {
  Point x(geom_.d);
  double norm = 0.0;
  do {
    for (int i = 0; i < geom_.d; ++i) x[i] = rng.normal();
    norm = x.norm();
  } while (!(norm > 0.0));
  return x * (geom_.r / norm);
}

bool SphereSpace::contains(const Point& x) const {
  if (x.size() != geom_.d) return false;
  return std::abs(x.norm() - geom_.r) <= 1e-12 * std::max(1.0, geom_.r);
}

Point SphereSpace::project(const Point& ambient) const {
  double norm = ambient.norm();
  if (!(norm > 0.0)) return Eigen::VectorXd::Unit(geom_.d, 0) * geom_.r;
  return ambient * (geom_.r / norm);
}

std::vector<Point> SphereSpace::designed_codebook(int n) const {
  std::vector<Point> points;
  if (geom_.d != 2 || n < 1) return points;
  points.reserve(static_cast<std::size_t>(n));
  for (int j = 0; j < n; ++j) {
    double angle = 2.0 * 3.141592653589793238462643383280 * j / n;
    Point x(2);
    x[0] = geom_.r * std::cos(angle);
    x[1] = geom_.r * std::sin(angle);
    points.push_back(x);
  }
  return points;
}

}  // namespace rdq
