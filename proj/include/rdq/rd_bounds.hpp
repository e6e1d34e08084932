#pragma once

#include <functional>
#include <limits>

#include "rdq/regularity.hpp"

namespace rdq {

struct RDQuery {
  double entropy = 0.0;        // h_mu(X) in nats
  RegularityCertificate cert;  // sub certificate of the reference measure
  double k = 2.0;              // distortion exponent, must match cert.k
  double D = 0.1;              // distortion level in units of rho
};

// F_{m,k,c}(D) = log((m/(kD))^{m/k} / (c Gamma(1+m/k))) - m/k.
double f_shannon(double m, double k, double c, double D);

// Explicit Shannon-type lower bound on R_X(D). For finite delta0 the caller
// asserts mu(X) = 1; the result then lies strictly below entropy + F and
// approaches it as D -> 0.
double rd_lower_explicit(const RDQuery& q);

struct NumericSlb {
  double rate = 0.0;    // entropy - min_s (sD + log nu(s)), unclamped
  double s_star = 0.0;
  bool converged = true;
  // Sampled-sup estimates of nu underestimate the true supremum, so numeric
  // results are advisory rather than rigorous bounds.
  bool heuristic = true;
};

// Minimizes s*D + log nu(s) over log s in [log(1e-6/D), log(1e6/D)]: a
// coarse scan picks the basin (truncated majorants are bimodal), then
// golden-section search plus a quadratic refinement step finish it.
NumericSlb rd_slb_numeric(double entropy,
                          const std::function<double(double)>& nu_estimator,
                          double D);

// Lower bound on the R-D dimension carried by a sub certificate.
double rd_dimension_lower(const RegularityCertificate& cert);

struct MultiLetterQuery {
  int ell = 1;
  double p = 1.0;
  double sigma_p = 1.0;  // ||d mu_X / d mu||_{p/(p-1)}
  double m = 1.0;
  double c = 1.0;
  double delta0 = std::numeric_limits<double>::infinity();
  double k = 2.0;
  double D = 0.1;
};

struct MultiLetterResult {
  double rate = 0.0;         // per-letter bound tilde R_(ell)(D)
  double d_threshold = 0.0;  // D_(ell); the bound needs D < D_(ell)
  double limit = 0.0;        // ell -> infinity value at the same D
  bool valid = false;
};

MultiLetterResult multi_letter_lower(const MultiLetterQuery& q);

}  // namespace rdq
