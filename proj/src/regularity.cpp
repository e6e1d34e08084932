#include "rdq/regularity.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include <json.hpp>

#include "rdq/parallel.hpp"
#include "rdq/stats.hpp"

namespace rdq {

void validate_certificate(const RegularityCertificate& cert) {
  if (!(cert.m >= 0.0)) throw std::domain_error("certificate: m must be >= 0");
  if (!(cert.constant > 0.0))
    throw std::domain_error("certificate: constant must be > 0");
  if (!(cert.delta0 > 0.0))
    throw std::domain_error("certificate: delta0 must be > 0");
  if (!(cert.k > 0.0)) throw std::domain_error("certificate: k must be > 0");
}

RegularityCertificate scale_certificate(const RegularityCertificate& cert,
                                        double alpha, double beta,
                                        double new_k) {
  validate_certificate(cert);
  if (!(alpha > 0.0) || !(beta > 0.0))
    throw std::domain_error("scale_certificate: alpha and beta must be > 0");
  if (!(new_k > 0.0))
    throw std::domain_error("scale_certificate: new_k must be > 0");
  RegularityCertificate out = cert;
  out.m = new_k == cert.k ? cert.m : cert.m * new_k / cert.k;
  out.constant = beta * cert.constant * std::pow(alpha, -cert.m / cert.k);
  out.delta0 = std::pow(alpha * std::pow(cert.delta0, cert.k), 1.0 / new_k);
  out.k = new_k;
  return out;
}

RegularityCertificate globalize_certificate(const RegularityCertificate& cert,
                                            bool total_mass_one) {
  validate_certificate(cert);
  if (cert.kind != CertKind::sub)
    throw std::domain_error("globalize_certificate: requires a sub certificate");
  if (cert.global()) return cert;
  if (!total_mass_one)
    throw std::domain_error(
        "globalize_certificate: requires total mass one to be asserted");
  RegularityCertificate out = cert;
  out.constant = std::max(cert.constant, std::pow(cert.delta0, -cert.m));
  out.delta0 = std::numeric_limits<double>::infinity();
  return out;
}

RegularityCertificate transfer_certificate(const RegularityCertificate& cert,
                                           const DensityBound& bound) {
  validate_certificate(cert);
  if (cert.kind != CertKind::sub)
    throw std::domain_error("transfer_certificate: requires a sub certificate");
  if (!(bound.p >= 1.0))
    throw std::domain_error("transfer_certificate: p must be >= 1");
  if (!(bound.norm_value > 0.0))
    throw std::domain_error("transfer_certificate: norm must be > 0");
  RegularityCertificate out = cert;
  out.m = cert.m / bound.p;
  out.constant = bound.norm_value * std::pow(cert.constant, 1.0 / bound.p);
  return out;
}

RegularityCertificate product_certificate(
    const std::vector<RegularityCertificate>& certs,
    const std::vector<double>& weights, double k) {
  if (certs.empty() || certs.size() != weights.size())
    throw std::invalid_argument("product_certificate: empty or mismatched input");
  for (const auto& c : certs) {
    validate_certificate(c);
    if (c.kind != certs.front().kind)
      throw std::domain_error("product_certificate: mixed certificate kinds");
    if (c.k != k)
      throw std::domain_error("product_certificate: factor exponent differs from k");
    if (!(c.m > 0.0))
      throw std::domain_error("product_certificate: factors need m > 0");
  }
  for (double w : weights)
    if (!(w > 0.0))
      throw std::domain_error("product_certificate: weights must be > 0");

  // Accumulate in a sorted order so the result is permutation-invariant.
  std::vector<std::size_t> order(certs.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t i, std::size_t j) {
    const auto& a = certs[i];
    const auto& b = certs[j];
    if (a.m != b.m) return a.m < b.m;
    if (a.constant != b.constant) return a.constant < b.constant;
    if (a.delta0 != b.delta0) return a.delta0 < b.delta0;
    return weights[i] < weights[j];
  });

  double m_total = 0.0;
  double log_gamma_ratio = 0.0;
  double factor = 1.0;
  double delta = std::numeric_limits<double>::infinity();
  for (std::size_t idx : order) {
    const auto& c = certs[idx];
    m_total += c.m;
    log_gamma_ratio += std::lgamma(1.0 + c.m / k);
    factor *= c.constant * std::pow(weights[idx], -c.m / k);
    delta = std::min(delta, std::pow(weights[idx], 1.0 / k) * c.delta0);
  }
  log_gamma_ratio -= std::lgamma(1.0 + m_total / k);

  RegularityCertificate out;
  out.kind = certs.front().kind;
  out.m = m_total;
  out.constant = std::exp(log_gamma_ratio) * factor;
  out.delta0 = delta;
  out.k = k;
  return out;
}

std::vector<ProbeResult> verify_certificate(const RegularityCertificate& cert,
                                            const SpaceModel& space,
                                            const std::vector<Point>& centers,
                                            const std::vector<double>& radii,
                                            long long samples,
                                            std::uint64_t seed, int workers) {
  validate_certificate(cert);
  if (centers.empty() || radii.empty())
    throw std::invalid_argument("verify_certificate: no probes requested");
  if (samples <= 0)
    throw std::invalid_argument("verify_certificate: samples must be > 0");
  for (double r : radii)
    if (!(r > 0.0) || !(r < cert.delta0))
      throw std::domain_error("verify_certificate: radii must lie in (0, delta0)");

  std::size_t total = centers.size() * radii.size();
  std::vector<ProbeResult> results(total);
  parallel_for(total, workers, [&](std::size_t pid) {
    const Point& center = centers[pid / radii.size()];
    double radius = radii[pid % radii.size()];
    double rho_cut = std::pow(radius, cert.k);
    RngStream rng(seed, static_cast<std::uint64_t>(pid));
    long long hits = 0;
    for (long long s = 0; s < samples; ++s) {
      Point x = space.sample_reference(rng);
      if (space.distortion(x, center) <= rho_cut) ++hits;
    }
    auto est = binomial_estimate(hits, samples);
    BallProbe probe;
    probe.center = center;
    probe.radius = radius;
    probe.estimate = est.estimate;
    probe.ci_halfwidth = est.ci_halfwidth;
    probe.samples = samples;
    double law = cert.constant * std::pow(radius, cert.m);
    bool pass = cert.kind == CertKind::sub
                    ? probe.estimate - 3.0 * probe.ci_halfwidth <= law
                    : probe.estimate + 3.0 * probe.ci_halfwidth >= law;
    results[pid] = ProbeResult{std::move(probe), pass};
  });
  return results;
}

std::string certificate_to_json(const RegularityCertificate& cert) {
  nlohmann::json j;
  j["kind"] = cert.kind == CertKind::sub ? "sub" : "super";
  j["m"] = cert.m;
  j["constant"] = cert.constant;
  if (cert.global())
    j["delta0"] = "inf";
  else
    j["delta0"] = cert.delta0;
  j["k"] = cert.k;
  return j.dump();
}

RegularityCertificate certificate_from_json(const std::string& text) {
  nlohmann::json j = nlohmann::json::parse(text);
  for (const char* key : {"kind", "m", "constant", "delta0", "k"})
    if (!j.contains(key))
      throw std::invalid_argument(std::string("certificate json: missing ") + key);
  RegularityCertificate cert;
  std::string kind = j.at("kind").get<std::string>();
  if (kind == "sub")
    cert.kind = CertKind::sub;
  else if (kind == "super")
    cert.kind = CertKind::super;
  else
    throw std::invalid_argument("certificate json: kind must be sub or super");
  cert.m = j.at("m").get<double>();
  cert.constant = j.at("constant").get<double>();
  const auto& d = j.at("delta0");
  if (d.is_string()) {
    if (d.get<std::string>() != "inf")
      throw std::invalid_argument("certificate json: bad delta0 string");
    cert.delta0 = std::numeric_limits<double>::infinity();
  } else {
    cert.delta0 = d.get<double>();
  }
  cert.k = j.at("k").get<double>();
  validate_certificate(cert);
  return cert;
}

}  // namespace rdq
