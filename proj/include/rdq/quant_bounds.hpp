#pragma once

#include <limits>
#include <optional>
#include <utility>
#include <vector>

#include "rdq/regularity.hpp"

namespace rdq {

struct QuantQuery {
  // Codebook size; double so asymptotic grids (n = 1e60, ...) stay exact in
  // the closed-form bounds.
  double n = 1.0;
  std::optional<RegularityCertificate> cert_sub;
  std::optional<RegularityCertificate> cert_super;
  double p = 1.0;
  double sigma_p = 1.0;  // ||d mu_X / d mu||_{p/(p-1)}
  double beta = std::numeric_limits<double>::infinity();  // sup rho^{1/k}
  double omega = 1.0;    // E[(d nu / d mu_X)^{k/m}] in (0,1]
  bool has_omega = false;
};

// L_n = min{c^{-k/m} Sigma_p^{-pk/m} n^{-pk/m}, delta0^k} * m/(m+pk).
double lower_bound_ln(const QuantQuery& q);

// U_n = Gamma(1+k/m) (b n)^{-k/m}, plus (beta^k - delta0^k) e^{-b n delta0^m}
// when beta exceeds a finite delta0. Rejects delta0 < inf with beta = inf.
double upper_bound_un(const QuantQuery& q);

struct DimensionBounds {
  std::optional<double> lower;  // m_sub / p
  std::optional<double> upper;  // m_super
  std::optional<double> equal;  // set when the two sides pin D_k
};

DimensionBounds quant_dimension_bounds(
    const std::optional<RegularityCertificate>& cert_sub,
    const std::optional<RegularityCertificate>& cert_super, double p,
    bool entropy_finite = false);

struct CoefficientBounds {
  double lower = std::numeric_limits<double>::quiet_NaN();
  bool lower_applicable = false;
  double upper = std::numeric_limits<double>::quiet_NaN();
  bool upper_applicable = false;
  double improved = std::numeric_limits<double>::quiet_NaN();
  bool improved_applicable = false;
};

// Bounds on the k-th quantization coefficients, applicable only when D_k
// matches the certificate dimensions (m/p for the lower side, m for the
// upper side).
CoefficientBounds coefficient_bounds(const QuantQuery& q, double d_k);

struct ErrorSequence {
  // (n, v) pairs with n strictly increasing; n is a double so analytic
  // sequences can be probed far beyond integer range.
  std::vector<std::pair<double, double>> entries;
};

// min/max of k log(n) / log(1/v) over the tail of the sequence. Ratios above
// cap are reported as +infinity.
std::pair<double, double> dimension_from_sequence(const ErrorSequence& seq,
                                                  double k,
                                                  double tail_fraction = 0.5,
                                                  double cap = 64.0);

}  // namespace rdq
