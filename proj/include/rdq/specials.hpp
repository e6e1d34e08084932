#pragma once

namespace rdq {

struct GammaFamily {
  double gamma;  // complete
  double lower;
  double upper;
};

// a > 0, s in [0, +inf]. lower + upper = gamma.
GammaFamily gamma_family(double a, double s);

// Regularized lower incomplete gamma P(a, s) = gamma_family(a,s).lower / Gamma(a).
double regularized_gamma_p(double a, double s);

double beta_function(double a, double b);

// I_{a,b}(s) = B_{a,b}(s)/B_{a,b}(1); a, b > 0, s in [0, 1].
double regularized_beta(double a, double b, double s);

// Solves I_{a,b}(s) = u on [0, 1].
double inverse_regularized_beta(double a, double b, double u);

// Modified Bessel function of the first kind, alpha >= 0, kappa >= 0.
double bessel_i(double alpha, double kappa);

struct SphereGeometry {
  double area;    // surface measure of the radius-r sphere in R^d
  double volume;  // volume of the radius-r ball in R^d
};
SphereGeometry sphere_geometry(int d, double r);

// sin(pi x)/(pi x), 1 at x = 0.
double sinc(double x);

}  // namespace rdq
