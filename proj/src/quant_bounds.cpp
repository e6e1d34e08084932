#include "rdq/quant_bounds.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace rdq {

namespace {

void check_query(const QuantQuery& q) {
  if (!(q.n >= 1.0)) throw std::domain_error("quant query: n must be >= 1");
  if (!(q.p >= 1.0)) throw std::domain_error("quant query: p must be >= 1");
  if (!(q.sigma_p > 0.0))
    throw std::domain_error("quant query: sigma_p must be > 0");
  if (!(q.beta > 0.0)) throw std::domain_error("quant query: beta must be > 0");
  if (q.has_omega && !(q.omega > 0.0 && q.omega <= 1.0))
    throw std::domain_error("quant query: omega must lie in (0, 1]");
}

}  // namespace

double lower_bound_ln(const QuantQuery& q) {
  check_query(q);
  if (!q.cert_sub) throw std::domain_error("lower_bound_ln: sub certificate required");
  const auto& cert = *q.cert_sub;
  validate_certificate(cert);
  if (cert.kind != CertKind::sub)
    throw std::domain_error("lower_bound_ln: certificate kind must be sub");
  if (!(cert.m > 0.0)) throw std::domain_error("lower_bound_ln: requires m > 0");
  double m = cert.m;
  double k = cert.k;
  double log_main = -(k / m) * std::log(cert.constant) -
                    (q.p * k / m) * (std::log(q.sigma_p) + std::log(q.n));
  double capped = std::min(std::exp(log_main), std::pow(cert.delta0, k));
  return capped * m / (m + q.p * k);
}

double upper_bound_un(const QuantQuery& q) {
  check_query(q);
  if (!q.cert_super)
    throw std::domain_error("upper_bound_un: super certificate required");
  const auto& cert = *q.cert_super;
  validate_certificate(cert);
  if (cert.kind != CertKind::super)
    throw std::domain_error("upper_bound_un: certificate kind must be super");
  if (!(cert.m > 0.0)) throw std::domain_error("upper_bound_un: requires m > 0");
  double m = cert.m;
  double k = cert.k;
  double main = std::tgamma(1.0 + k / m) *
                std::exp(-(k / m) * (std::log(cert.constant) + std::log(q.n)));
  if (cert.global()) return main;
  if (!std::isfinite(q.beta))
    throw std::domain_error(
        "upper_bound_un: finite beta required when delta0 is finite");
  if (q.beta <= cert.delta0) return main;
  double tail = (std::pow(q.beta, k) - std::pow(cert.delta0, k)) *
                std::exp(-cert.constant * q.n * std::pow(cert.delta0, m));
  return main + tail;
}

DimensionBounds quant_dimension_bounds(
    const std::optional<RegularityCertificate>& cert_sub,
    const std::optional<RegularityCertificate>& cert_super, double p,
    bool entropy_finite) {
  if (!cert_sub && !cert_super)
    throw std::domain_error("quant_dimension_bounds: no certificate given");
  if (!(p >= 1.0)) throw std::domain_error("quant_dimension_bounds: p must be >= 1");
  DimensionBounds out;
  if (cert_sub) {
    validate_certificate(*cert_sub);
    if (cert_sub->kind != CertKind::sub)
      throw std::domain_error("quant_dimension_bounds: cert_sub has wrong kind");
    out.lower = cert_sub->m / p;
  }
  if (cert_super) {
    validate_certificate(*cert_super);
    if (cert_super->kind != CertKind::super)
      throw std::domain_error("quant_dimension_bounds: cert_super has wrong kind");
    out.upper = cert_super->m;
  }
  if (cert_sub && cert_super && cert_sub->m == cert_super->m &&
      (p == 1.0 || entropy_finite))
    out.equal = cert_super->m;
  return out;
}

CoefficientBounds coefficient_bounds(const QuantQuery& q, double d_k) {
  check_query(q);
  CoefficientBounds out;
  auto matches = [&](double value) {
    return std::abs(d_k - value) <= 1e-12 * std::max(1.0, std::abs(value));
  };
  if (q.cert_sub && q.cert_sub->kind == CertKind::sub && q.cert_sub->m > 0.0 &&
      matches(q.cert_sub->m / q.p)) {
    double m = q.cert_sub->m;
    double k = q.cert_sub->k;
    out.lower = std::exp(-(k / m) * std::log(q.cert_sub->constant) -
                         (q.p * k / m) * std::log(q.sigma_p)) *
                m / (m + q.p * k);
    out.lower_applicable = true;
  }
  if (q.cert_super && q.cert_super->kind == CertKind::super &&
      q.cert_super->m > 0.0 && matches(q.cert_super->m)) {
    double m = q.cert_super->m;
    double k = q.cert_super->k;
    out.upper = std::tgamma(1.0 + k / m) *
                std::pow(q.cert_super->constant, -k / m);
    out.upper_applicable = true;
    out.improved = q.has_omega ? q.omega * out.upper : out.upper;
    out.improved_applicable = true;
  }
  return out;
}

std::pair<double, double> dimension_from_sequence(const ErrorSequence& seq,
                                                  double k,
                                                  double tail_fraction,
                                                  double cap) {
  if (seq.entries.empty())
    throw std::invalid_argument("dimension_from_sequence: empty sequence");
  if (!(k > 0.0)) throw std::domain_error("dimension_from_sequence: k must be > 0");
  if (!(tail_fraction > 0.0 && tail_fraction <= 1.0))
    throw std::domain_error("dimension_from_sequence: tail fraction in (0,1]");
  for (std::size_t i = 1; i < seq.entries.size(); ++i)
    if (!(seq.entries[i - 1].first < seq.entries[i].first))
      throw std::invalid_argument("dimension_from_sequence: n must increase");

  std::size_t count = seq.entries.size();
  std::size_t tail = std::max<std::size_t>(
      1, static_cast<std::size_t>(std::ceil(tail_fraction * count)));
  double lo = std::numeric_limits<double>::infinity();
  double hi = -std::numeric_limits<double>::infinity();
  for (std::size_t i = count - tail; i < count; ++i) {
    auto [n, v] = seq.entries[i];
    if (!(v > 0.0)) throw std::domain_error("dimension_from_sequence: v must be > 0");
    if (v >= 1.0)
      throw std::domain_error("dimension_from_sequence: tail needs v < 1");
    double ratio = k * std::log(n) / -std::log(v);
    if (ratio > cap) ratio = std::numeric_limits<double>::infinity();
    lo = std::min(lo, ratio);
    hi = std::max(hi, ratio);
  }
  return {lo, hi};
}

}  // namespace rdq
