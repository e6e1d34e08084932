#include "rdq/rd_bounds.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace rdq {

namespace {

double log_sum_exp(double a, double b) {
  double hi = std::max(a, b);
  if (hi == -std::numeric_limits<double>::infinity()) return hi;
  return hi + std::log1p(std::exp(std::min(a, b) - hi));
}

}  // namespace

double f_shannon(double m, double k, double c, double D) {
  if (!(m > 0.0) || !(k > 0.0) || !(c > 0.0) || !(D > 0.0))
    throw std::domain_error("f_shannon: all arguments must be > 0");
  double q = m / k;
  return q * std::log(m / (k * D)) - std::log(c) - std::lgamma(1.0 + q) - q;
}

double rd_lower_explicit(const RDQuery& q) {
  validate_certificate(q.cert);
  if (q.cert.kind != CertKind::sub)
    throw std::domain_error("rd_lower_explicit: requires a sub certificate");
  if (q.cert.k != q.k)
    throw std::domain_error("rd_lower_explicit: certificate exponent mismatch");
  if (!(q.D > 0.0)) throw std::domain_error("rd_lower_explicit: D must be > 0");
  if (!std::isfinite(q.entropy))
    throw std::domain_error("rd_lower_explicit: entropy must be finite");
  double m = q.cert.m;
  double c = q.cert.constant;
  if (!(m > 0.0)) throw std::domain_error("rd_lower_explicit: requires m > 0");
  if (q.cert.global()) return q.entropy + f_shannon(m, q.k, c, q.D);
  // log of c (m/(kD))^{-m/k} Gamma(1+m/k) + exp(-m delta0^k / (kD)), kept in
  // log space so small D cannot underflow the sum.
  double ratio = m / (q.k * q.D);
  double a = std::log(c) + std::lgamma(1.0 + m / q.k) - (m / q.k) * std::log(ratio);
  double b = -ratio * std::pow(q.cert.delta0, q.k);
  return q.entropy - m / q.k - log_sum_exp(a, b);
}

NumericSlb rd_slb_numeric(double entropy,
                          const std::function<double(double)>& nu_estimator,
                          double D) {
  if (!(D > 0.0)) throw std::domain_error("rd_slb_numeric: D must be > 0");
  NumericSlb out;
  auto objective = [&](double t) {
    double s = std::exp(t);
    double nu = nu_estimator(s);
    if (!(nu > 0.0) || !std::isfinite(nu))
      return std::numeric_limits<double>::quiet_NaN();
    return s * D + std::log(nu);
  };

  double lo = std::log(1e-6 / D);
  double hi = std::log(1e6 / D);
  double best_t = std::numeric_limits<double>::quiet_NaN();
  double best_f = std::numeric_limits<double>::quiet_NaN();
  auto track = [&](double t, double f) {
    if (std::isnan(f)) {
      out.converged = false;
      return;
    }
    if (std::isnan(best_f) || f < best_f) {
      best_f = f;
      best_t = t;
    }
  };

  // Truncated majorants are bimodal in log s (a shallow basin at s -> 0
  // competes with the real dip near s = m/(kD)), so pick the basin with a
  // coarse scan before the golden-section contraction.
  const int grid = 48;
  int best_idx = -1;
  for (int i = 0; i <= grid; ++i) {
    double t = lo + (hi - lo) * i / grid;
    double f = objective(t);
    if (std::isnan(f)) {
      out.converged = false;
      continue;
    }
    if (best_idx < 0 || f < best_f) best_idx = i;
    track(t, f);
  }
  if (best_idx >= 0) {
    double step = (hi - lo) / grid;
    double cell_lo = lo + step * std::max(0, best_idx - 1);
    double cell_hi = lo + step * std::min(grid, best_idx + 1);
    lo = cell_lo;
    hi = cell_hi;
  }

  const double gr = 0.5 * (std::sqrt(5.0) - 1.0);
  double x1 = hi - gr * (hi - lo);
  double x2 = lo + gr * (hi - lo);
  double f1 = objective(x1);
  double f2 = objective(x2);
  track(x1, f1);
  track(x2, f2);
  for (int it = 0; it < 120; ++it) {
    if (std::isnan(f1) || std::isnan(f2)) {
      out.converged = false;
      break;
    }
    if (f1 < f2) {
      hi = x2;
      x2 = x1;
      f2 = f1;
      x1 = hi - gr * (hi - lo);
      f1 = objective(x1);
      track(x1, f1);
    } else {
      lo = x1;
      x1 = x2;
      f1 = f2;
      x2 = lo + gr * (hi - lo);
      f2 = objective(x2);
      track(x2, f2);
    }
  }

  // Quadratic refinement around the best point found.
  double h = 1e-4;
  double fm = objective(best_t - h);
  double f0 = objective(best_t);
  double fp = objective(best_t + h);
  if (!std::isnan(fm) && !std::isnan(f0) && !std::isnan(fp)) {
    track(best_t, f0);
    double denom = fm - 2.0 * f0 + fp;
    if (denom > 0.0) {
      double t_ref = best_t + h * 0.5 * (fm - fp) / denom;
      double f_ref = objective(t_ref);
      track(t_ref, f_ref);
    }
  } else {
    out.converged = false;
  }

  if (std::isnan(best_f)) {
    out.converged = false;
    out.rate = std::numeric_limits<double>::quiet_NaN();
    out.s_star = std::numeric_limits<double>::quiet_NaN();
    return out;
  }
  out.rate = entropy - best_f;
  out.s_star = std::exp(best_t);
  return out;
}

double rd_dimension_lower(const RegularityCertificate& cert) {
  validate_certificate(cert);
  if (cert.kind != CertKind::sub)
    throw std::domain_error("rd_dimension_lower: requires a sub certificate");
  return cert.m;
}

MultiLetterResult multi_letter_lower(const MultiLetterQuery& q) {
  if (q.ell < 1) throw std::domain_error("multi_letter_lower: ell must be >= 1");
  if (!(q.p >= 1.0)) throw std::domain_error("multi_letter_lower: p must be >= 1");
  if (!(q.sigma_p > 0.0) || !(q.m > 0.0) || !(q.c > 0.0) || !(q.k > 0.0) ||
      !(q.delta0 > 0.0) || !(q.D > 0.0))
    throw std::domain_error("multi_letter_lower: parameters must be > 0");

  double ell = static_cast<double>(q.ell);
  double quot = q.m / (q.p * q.k);  // m / (p k)
  double x = ell * quot;
  MultiLetterResult out;
  out.d_threshold =
      q.delta0 == std::numeric_limits<double>::infinity()
          ? std::numeric_limits<double>::infinity()
          : std::pow(q.delta0, q.k) / ell * (x / (x + 1.0));
  // log d_(ell) with Gamma^{1/ell}(1 + ell m/(pk)) kept in log space.
  double log_d = std::lgamma(1.0 + quot) + quot * std::log(ell) +
                 std::log(q.c) / q.p + std::log(q.sigma_p) -
                 std::lgamma(1.0 + x) / ell;
  out.rate = quot * std::log(x / ((x + 1.0) * q.D)) - log_d;
  out.limit = quot * (std::log(quot) - std::log(q.D) - 1.0) -
              std::lgamma(1.0 + quot) - std::log(q.c) / q.p -
              std::log(q.sigma_p);
  out.valid = q.D < out.d_threshold;
  if (!out.valid) out.rate = std::numeric_limits<double>::quiet_NaN();
  return out;
}

}  // namespace rdq
