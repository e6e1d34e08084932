#pragma once

#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "rdq/space.hpp"

namespace rdq {

enum class CertKind { sub, super };

// Witness that a reference measure mu obeys mu(B(y, delta)) <= c * delta^m
// (sub) or >= b * delta^m (super) for all delta <= delta0, where the ball is
// taken in omega = rho^{1/k}. The exponent k travels with the certificate so
// constants cannot be applied to the wrong power of the distortion.
struct RegularityCertificate {
  CertKind kind = CertKind::sub;
  double m = 0.0;
  double constant = 1.0;
  double delta0 = std::numeric_limits<double>::infinity();
  double k = 1.0;

  bool global() const { return std::numeric_limits<double>::infinity() == delta0; }
};

void validate_certificate(const RegularityCertificate& cert);

// Holder transfer data: p and ||d nu / d mu||_{p/(p-1)}.
struct DensityBound {
  double p = 1.0;
  double norm_value = 1.0;
};

struct BallProbe {
  Point center;
  double radius = 0.0;
  double estimate = 0.0;
  double ci_halfwidth = 0.0;
  long long samples = 0;
};

struct ProbeResult {
  BallProbe probe;
  bool pass = false;
};

// Certificate for (beta * mu, alpha * rho) expressed in exponent new_k.
RegularityCertificate scale_certificate(const RegularityCertificate& cert,
                                        double alpha, double beta,
                                        double new_k);

// Drops the radius restriction of a sub certificate of a probability measure.
RegularityCertificate globalize_certificate(const RegularityCertificate& cert,
                                            bool total_mass_one);

// Sub certificate for nu << mu given a density norm bound.
RegularityCertificate transfer_certificate(const RegularityCertificate& cert,
                                           const DensityBound& bound);

// Certificate for the weighted-sum distortion sum_i alpha_i rho_i on the
// product measure. All factors must share the kind and the exponent k.
RegularityCertificate product_certificate(
    const std::vector<RegularityCertificate>& certs,
    const std::vector<double>& weights, double k);

// Monte Carlo check of the ball-mass inequality against the space's
// reference measure, one probe per (center, radius) pair, 3-sigma rule.
// Results are independent of the worker count.
std::vector<ProbeResult> verify_certificate(const RegularityCertificate& cert,
                                            const SpaceModel& space,
                                            const std::vector<Point>& centers,
                                            const std::vector<double>& radii,
                                            long long samples,
                                            std::uint64_t seed,
                                            int workers = 1);

std::string certificate_to_json(const RegularityCertificate& cert);
RegularityCertificate certificate_from_json(const std::string& text);

}  // namespace rdq
