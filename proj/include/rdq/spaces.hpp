#pragma once

#include <memory>
#include <optional>
#include <utility>
#include <vector>

#include "rdq/regularity.hpp"
#include "rdq/space.hpp"

namespace rdq {

// ---------------------------------------------------------------------------
// Interval [0,1] with Lebesgue reference measure and rho = |x-y|^k.
// ---------------------------------------------------------------------------
class IntervalSpace : public SpaceModel {
 public:
  explicit IntervalSpace(double k = 2.0);

  std::string id() const override;
  int embedding_dim() const override { return 1; }
  double distortion(const Point& x, const Point& y) const override;
  double distortion_exponent() const override { return k_; }
  Point sample_reference(RngStream& rng) const override;
  bool contains(const Point& x) const override;
  Point project(const Point& ambient) const override;
  std::vector<Point> designed_codebook(int n) const override;

  // (m=1, c=2, delta0=inf) in the |x-y| root, re-expressed for exponent k.
  RegularityCertificate lebesgue_certificate() const;

 private:
  double k_;
};

// ---------------------------------------------------------------------------
// Hypersphere S^{d-1}(r) in R^d, uniform reference measure, rho = ||x-y||^2.
// ---------------------------------------------------------------------------
struct Hypersphere {
  int d = 3;
  double r = 1.0;
};

class SphereSpace : public SpaceModel {
 public:
  SphereSpace(int d, double r);

  std::string id() const override;
  int embedding_dim() const override { return geom_.d; }
  double distortion(const Point& x, const Point& y) const override;
  double distortion_exponent() const override { return 2.0; }
  Point sample_reference(RngStream& rng) const override;
  bool contains(const Point& x) const override;
  Point project(const Point& ambient) const override;
  std::vector<Point> designed_codebook(int n) const override;

  int dim() const { return geom_.d; }
  double radius() const { return geom_.r; }

 private:
  Hypersphere geom_;
};

// Normalized measure of the ball {x on sphere : ||x - center|| <= delta}.
// on_sphere_center: exact cap mass for centers on the sphere (delta up to
// sqrt(2) r); otherwise the ambient-center upper bound (delta up to r).
double sphere_cap_measure(int d, double r, double delta, bool on_sphere_center);

// Sub (and, for on-sphere centers, super) certificates for the uniform
// sphere measure: the radius variable is the Euclidean gap ||x-y||, so the
// certificates carry exponent k=2 to pair with rho = ||x-y||^2.
std::pair<RegularityCertificate, std::optional<RegularityCertificate>>
sphere_certificates(int d, double r, double delta0, bool ambient);

struct VonMisesFisher {
  Eigen::VectorXd mean_direction;
  double kappa = 1.0;
};

struct VmfFunctionals {
  double c_d = 1.0;        // density normalizer
  double entropy = 0.0;    // generalized entropy w.r.t. the uniform measure
  double sigma1 = 1.0;     // sup-norm of the density
  double omega = 1.0;      // E[(density)^{2/(d-1)}], d >= 4 only
  bool omega_valid = false;
};

VmfFunctionals vmf_functionals(const VonMisesFisher& v, int d, bool want_omega);
double vmf_log_density(const VonMisesFisher& v, int d, const Point& x);
Point vmf_sample(const VonMisesFisher& v, RngStream& rng);

struct SphereBounds {
  double ln = 0.0;
  double un = 0.0;
  bool below_n0 = false;  // L_n undefined for n below the threshold
  double n0 = 0.0;
};

// Quantization error bounds on S^{d-1}(r) with rho = ||x-y||^2; n may be
// fractional/huge for asymptotic studies. alpha in (0,1) sets the radius
// schedule of the upper bound.
SphereBounds sphere_bounds(int d, double r, double n, double p, double sigma_p,
                           double alpha);

struct CircleClosedForms {
  double upper_vn = 0.0;   // 2 r^2 (1 - sinc(1/n))
  double c2_target = 0.0;  // r^2 pi^2 / 3
};

CircleClosedForms circle_closed_forms(double r, int n);

// ---------------------------------------------------------------------------
// Grassmannians G^F(r,d) with squared chordal distance.
// ---------------------------------------------------------------------------
enum class Field { real, complex };

struct GrassmannParams {
  Field field = Field::real;
  int r = 1;
  int s = 1;
  int d = 2;

  int a() const { return r < s ? r : s; }
  int b() const { return r < s ? s : r; }
  int beta() const { return field == Field::real ? 1 : 2; }
  double m_g() const { return static_cast<double>(beta()) * a() * (d - b()); }
};

// Ball-volume constant c_{a,b,d,beta} (two-branch Gamma product).
double grassmann_constant(const GrassmannParams& g);

struct VolumeBounds {
  double lower = 0.0;
  double upper = 0.0;
  bool exact = false;
};

// Uniform-measure volume of a chordal ball of radius delta in (0,1]; exact
// in the closed-form case, a sandwich otherwise.
VolumeBounds grassmann_volume(const GrassmannParams& g, double delta);

double chordal_distance(const Eigen::MatrixXd& x, const Eigen::MatrixXd& y);
double chordal_distance(const Eigen::MatrixXcd& x, const Eigen::MatrixXcd& y);

struct GrassmannBounds {
  double ln = 0.0;
  double un = 0.0;
  bool below_n0 = false;
  double n0 = 0.0;
};

// Quantization error bounds with rho = chordal^2. For the real equal-rank
// case the default lower bound is the simplified closed form; exact_inverse
// switches to the exact h^{-1} evaluation.
GrassmannBounds grassmann_bounds(const GrassmannParams& g, double n, double p,
                                 double sigma_p, double alpha,
                                 bool exact_inverse = false);

// Sub certificate for lines/planes vs sphere points under the projection
// distortion rho(x, y) = ||P-orth_x(y)||_2.
RegularityCertificate grassmann_projection_cert(int p, int d, double r);

class GrassmannSpace : public SpaceModel {
 public:
  GrassmannSpace(Field field, int r, int d);

  std::string id() const override;
  int embedding_dim() const override;
  double distortion(const Point& x, const Point& y) const override;
  double distortion_exponent() const override { return 2.0; }
  Point sample_reference(RngStream& rng) const override;
  bool contains(const Point& x) const override;
  Point project(const Point& ambient) const override;
  Point centroid(const std::vector<Point>& pts,
                 const std::vector<double>& weights) const override;
  // Accumulates the orthogonal projector of each subspace; any basis of the
  // same subspace folds to the same statistic, so streaming means are
  // gauge-free.
  int centroid_accumulator_dim() const override;
  void centroid_accumulate(const Point& x, double weight,
                           Eigen::Ref<Eigen::VectorXd> acc) const override;
  Point centroid_from_accumulator(const Eigen::Ref<const Eigen::VectorXd>& acc,
                                  double total_weight) const override;

  const GrassmannParams& params() const { return params_; }
  Point pack(const Eigen::MatrixXcd& basis) const;
  Eigen::MatrixXcd unpack(const Point& flat) const;

 private:
  GrassmannParams params_;
};

// ---------------------------------------------------------------------------
// Self-similar sets from an IFS of contracting similarities in R^d.
// ---------------------------------------------------------------------------
struct Similarity {
  double kappa = 1.0 / 3.0;
  Eigen::MatrixXd ortho;   // orthogonal part
  Eigen::VectorXd shift;   // translation
};

struct SelfSimilarSet {
  std::vector<Similarity> maps;
  double m = 0.0;          // similarity dimension
  double diam = 1.0;
  double kappa_min = 1.0;
  int ambient_dim = 1;
};

// Solves sum kappa_i^m = 1 for m; diam is supplied by the caller.
SelfSimilarSet selfsimilar_build(const std::vector<Similarity>& maps,
                                 double diam);

// Sub certificate (m, c_sub, inf) and super certificate
// (m, (kappa_min/diam)^m, diam). The radius variable is the norm gap
// |x - y|, so both carry exponent k=2 to pair with rho = |x-y|^2.
// c_sub <= 0 asks for the ternary presets (2 on-set, 3 ambient).
std::pair<RegularityCertificate, RegularityCertificate> selfsimilar_certs(
    const SelfSimilarSet& set, double c_sub, bool ambient);

SelfSimilarSet cantor_preset();

// Exact n-th quantization error of the middle-third Cantor set under
// rho = |x-y|^2 and the natural measure.
double cantor_exact_vn(long long n);

struct CantorAccumulation {
  double lo = 0.0;
  double hi = 0.0;
  bool c2_exists = false;  // the scaled sequence oscillates over [lo, hi]
};

CantorAccumulation cantor_accumulation();

class SelfSimilarSpace : public SpaceModel {
 public:
  // cantor=true uses the exact ternary digit sampler and cell-center
  // codebooks; general sets sample by random composition of the maps.
  SelfSimilarSpace(SelfSimilarSet set, bool cantor, double k = 2.0);

  std::string id() const override;
  int embedding_dim() const override { return set_.ambient_dim; }
  double distortion(const Point& x, const Point& y) const override;
  double distortion_exponent() const override { return k_; }
  Point sample_reference(RngStream& rng) const override;
  bool contains(const Point& x) const override;
  Point project(const Point& ambient) const override;
  std::vector<Point> designed_codebook(int n) const override;

  const SelfSimilarSet& set() const { return set_; }
  bool is_cantor() const { return cantor_; }

 private:
  SelfSimilarSet set_;
  bool cantor_;
  double k_;
  int depth_;
};

}  // namespace rdq
