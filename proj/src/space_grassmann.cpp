#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

#include "rdq/spaces.hpp"

namespace rdq {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

void check_params(const GrassmannParams& g) {
  if (g.r < 1 || g.s < 1) throw std::domain_error("grassmann: ranks must be >= 1");
  if (g.b() > g.d) throw std::domain_error("grassmann: ranks must be <= d");
}

// Exact-volume case: real one-rank-apart pairs and complex equal ranks.
bool exact_volume_case(const GrassmannParams& g) {
  if (g.field == Field::real) return g.b() == g.a() + 1;
  return g.a() == g.b();
}

bool real_equal_case(const GrassmannParams& g) {
  return g.field == Field::real && g.a() == g.b();
}

template <typename Matrix>
void check_orthonormal(const Matrix& x, const char* what) {
  Matrix gram = x.adjoint() * x;
  gram -= Matrix::Identity(x.cols(), x.cols());
  if (gram.cwiseAbs().maxCoeff() > 1e-8)
    throw std::invalid_argument(std::string(what) + ": basis is not orthonormal");
}

template <typename Matrix>
double chordal_from_bases(const Matrix& x, const Matrix& y) {
  if (x.rows() != y.rows())
    throw std::invalid_argument("chordal_distance: ambient dimensions differ");
  check_orthonormal(x, "chordal_distance");
  check_orthonormal(y, "chordal_distance");
  Eigen::JacobiSVD<Matrix> svd(x.adjoint() * y);
  double sum = 0.0;
  const auto& sv = svd.singularValues();
  for (Eigen::Index i = 0; i < sv.size(); ++i) {
    double cosine = std::min(1.0, sv[i]);
    sum += (1.0 - cosine) * (1.0 + cosine);
  }
  return std::sqrt(std::max(0.0, sum));
}

// Solves c u^m / (1 - u^2)^{a/2} = y for u in (0,1); the left side is a
// strictly increasing bijection onto (0, inf).
double equal_rank_radius(double c, double m, int a, double y) {
  double log_y = std::log(y);
  auto excess = [&](double u) {
    return std::log(c) + m * std::log(u) - 0.5 * a * std::log1p(-u * u) - log_y;
  };
  double lo = 0.0;
  double hi = 1.0;
  for (int i = 0; i < 200; ++i) {
    double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    if (excess(mid) < 0.0)
      lo = mid;
    else
      hi = mid;
  }
  return 0.5 * (lo + hi);
}

}  // namespace

double grassmann_constant(const GrassmannParams& g) {
  check_params(g);
  double hb = 0.5 * g.beta();
  int a = g.a();
  int b = g.b();
  double log_c = -std::lgamma(hb * a * (g.d - b) + 1.0);
  if (a + b <= g.d) {
    for (int i = 1; i <= a; ++i)
      log_c += std::lgamma(hb * (g.d - i + 1)) - std::lgamma(hb * (b - i + 1));
  } else {
    for (int i = 1; i <= g.d - b; ++i)
      log_c += std::lgamma(hb * (g.d - i + 1)) - std::lgamma(hb * (g.d - a - i + 1));
  }
  return std::exp(log_c);
}

VolumeBounds grassmann_volume(const GrassmannParams& g, double delta) {
  check_params(g);
  if (!(delta > 0.0 && delta <= 1.0))
    throw std::domain_error("grassmann_volume: delta must be in (0,1]");
  double c = grassmann_constant(g);
  double m = g.m_g();
  double v = c * std::pow(delta, m);
  VolumeBounds out;
  if (exact_volume_case(g)) {
    out.lower = v;
    out.upper = v;
    out.exact = true;
  } else if (real_equal_case(g)) {
    out.lower = v;
    out.upper = std::min(1.0, v / std::pow((1.0 - delta) * (1.0 + delta), 0.5 * g.a()));
  } else {
    double e = 0.5 * g.beta() * g.a() * (g.b() - g.a() + 1) - g.a();
    out.lower = v * std::pow((1.0 - delta) * (1.0 + delta), e);
    out.upper = std::min(1.0, v);
  }
  return out;
}

double chordal_distance(const Eigen::MatrixXd& x, const Eigen::MatrixXd& y) {
  return chordal_from_bases(x, y);
}

double chordal_distance(const Eigen::MatrixXcd& x, const Eigen::MatrixXcd& y) {
  return chordal_from_bases(x, y);
}

GrassmannBounds grassmann_bounds(const GrassmannParams& g, double n, double p,
                                 double sigma_p, double alpha, bool exact_inverse) {
  check_params(g);
  if (!(g.m_g() > 0.0)) throw std::domain_error("grassmann_bounds: zero-dimensional space");
  if (!(n >= 1.0)) throw std::domain_error("grassmann_bounds: n must be >= 1");
  if (!(p >= 1.0)) throw std::domain_error("grassmann_bounds: p must be >= 1");
  if (!(sigma_p > 0.0)) throw std::domain_error("grassmann_bounds: sigma_p must be > 0");
  if (!(alpha > 0.0 && alpha < 1.0))
    throw std::domain_error("grassmann_bounds: alpha must be in (0,1)");

  double c = grassmann_constant(g);
  double m = g.m_g();
  int a = g.a();
  GrassmannBounds out;

  double tail_gamma = std::tgamma(1.0 + 2.0 / m);
  if (exact_volume_case(g) || real_equal_case(g)) {
    out.un = tail_gamma * std::exp(-2.0 / m * (std::log(c) + std::log(n)));
    if (a > 1) out.un += (a - 1) * std::exp(-n * c);
  } else {
    double delta_n = std::exp(-alpha / m * std::log(n));
    double e = 0.5 * g.beta() * a * (g.b() - a + 1) - a;
    double b_n = c * std::pow((1.0 - delta_n) * (1.0 + delta_n), e);
    out.un = tail_gamma * std::exp(-2.0 / m * (std::log(b_n) + std::log(n))) +
             (a - delta_n * delta_n) * std::exp(-n * b_n * std::pow(delta_n, m));
  }

  double scale = m / (m + 2.0 * p);
  double log_mass = -p * (std::log(n) + std::log(sigma_p));
  if (real_equal_case(g)) {
    if (exact_inverse) {
      out.n0 = 1.0 / sigma_p;
      out.below_n0 = n < out.n0;
      if (out.below_n0) {
        out.ln = kNaN;
      } else {
        double u = equal_rank_radius(c, m, a, std::exp(log_mass));
        out.ln = scale * u * u;
      }
    } else {
      out.n0 = std::exp(-std::log(sigma_p) - std::log(c) / p);
      out.below_n0 = n < out.n0;
      if (out.below_n0) {
        out.ln = kNaN;
      } else {
        double q = std::exp(2.0 / m * (log_mass - std::log(c)));
        out.ln = scale * q * std::pow(1.0 - q, 1.0 / (g.d - a));
      }
    }
  } else {
    out.n0 = std::exp(-std::log(sigma_p) - std::log(c) / p);
    out.below_n0 = n < out.n0;
    double q = std::exp(2.0 / m * (log_mass - std::log(c)));
    out.ln = scale * std::min(q, 1.0);
  }
  return out;
}

RegularityCertificate grassmann_projection_cert(int p, int d, double r) {
  if (p < 1 || p >= d) throw std::domain_error("grassmann_projection_cert: need 1 <= p < d");
  if (!(r > 0.0)) throw std::domain_error("grassmann_projection_cert: r must be > 0");
  RegularityCertificate cert;
  cert.kind = CertKind::sub;
  cert.m = static_cast<double>(d - p);
  cert.constant = std::exp(std::lgamma(1.0 + 0.5 * d) - (d - p) * std::log(r) -
                           std::lgamma(1.0 + 0.5 * p) - std::lgamma(1.0 + 0.5 * (d - p)));
  cert.delta0 = std::numeric_limits<double>::infinity();
  cert.k = 1.0;
  return cert;
}

GrassmannSpace::GrassmannSpace(Field field, int r, int d) {
  params_.field = field;
  params_.r = r;
  params_.s = r;
  params_.d = d;
  if (r < 1 || r >= d) throw std::domain_error("GrassmannSpace: need 1 <= r < d");
}

std::string GrassmannSpace::id() const {
  std::string tag = params_.field == Field::real ? "R" : "C";
  return "grassmann_" + tag + "_r" + std::to_string(params_.r) + "_d" +
         std::to_string(params_.d);
}

int GrassmannSpace::embedding_dim() const {
  int n = params_.d * params_.r;
  return params_.field == Field::real ? n : 2 * n;
}

Point GrassmannSpace::pack(const Eigen::MatrixXcd& basis) const {
  int d = params_.d;
  int r = params_.r;
  if (basis.rows() != d || basis.cols() != r)
    throw std::invalid_argument("GrassmannSpace::pack: wrong shape");
  Point flat(embedding_dim());
  for (int j = 0; j < r; ++j)
    for (int i = 0; i < d; ++i) {
      flat[j * d + i] = basis(i, j).real();
      if (params_.field == Field::complex) flat[d * r + j * d + i] = basis(i, j).imag();
    }
  return flat;
}

Eigen::MatrixXcd GrassmannSpace::unpack(const Point& flat) const {
  int d = params_.d;
  int r = params_.r;
  if (flat.size() != embedding_dim())
    throw std::invalid_argument("GrassmannSpace::unpack: wrong size");
  Eigen::MatrixXcd basis(d, r);
  for (int j = 0; j < r; ++j)
    for (int i = 0; i < d; ++i) {
      double re = flat[j * d + i];
      double im = params_.field == Field::complex ? flat[d * r + j * d + i] : 0.0;
      basis(i, j) = std::complex<double>(re, im);
    }
  return basis;
}

double GrassmannSpace::distortion(const Point& x, const Point& y) const {
  double gap = chordal_distance(unpack(x), unpack(y));
  return gap * gap;
}

Point GrassmannSpace::sample_reference(RngStream& rng) const {
  int d = params_.d;
  int r = params_.r;
  Eigen::MatrixXcd raw(d, r);
  for (int j = 0; j < r; ++j)
    for (int i = 0; i < d; ++i) {
      double re = rng.normal();
      double im = params_.field == Field::complex ? rng.normal() : 0.0;
      raw(i, j) = std::complex<double>(re, im);
    }
  Eigen::HouseholderQR<Eigen::MatrixXcd> qr(raw);
  Eigen::MatrixXcd q = qr.householderQ() * Eigen::MatrixXcd::Identity(d, r);
  return pack(q);
}

bool GrassmannSpace::contains(const Point& x) const {
  if (x.size() != embedding_dim()) return false;
  Eigen::MatrixXcd basis = unpack(x);
  Eigen::MatrixXcd gram = basis.adjoint() * basis;
  gram -= Eigen::MatrixXcd::Identity(params_.r, params_.r);
  return gram.cwiseAbs().maxCoeff() <= 1e-8;
}

Point GrassmannSpace::project(const Point& ambient) const {
  Eigen::MatrixXcd basis = unpack(ambient);
  if (params_.field == Field::real) basis = basis.real().cast<std::complex<double>>();
  Eigen::HouseholderQR<Eigen::MatrixXcd> qr(basis);
  Eigen::MatrixXcd q =
      qr.householderQ() * Eigen::MatrixXcd::Identity(params_.d, params_.r);
  return pack(q);
}

Point GrassmannSpace::centroid(const std::vector<Point>& pts,
                               const std::vector<double>& weights) const {
  if (pts.empty()) throw std::invalid_argument("GrassmannSpace::centroid: no points");
  if (weights.size() != pts.size())
    throw std::invalid_argument("GrassmannSpace::centroid: weight count mismatch");
  double total = 0.0;
  for (double w : weights) total += w;
  Eigen::VectorXd acc = Eigen::VectorXd::Zero(centroid_accumulator_dim());
  for (std::size_t i = 0; i < pts.size(); ++i)
    centroid_accumulate(pts[i], total > 0.0 ? weights[i] : 1.0, acc);
  double denom = total > 0.0 ? total : static_cast<double>(pts.size());
  return centroid_from_accumulator(acc, denom);
}

int GrassmannSpace::centroid_accumulator_dim() const {
  int dd = params_.d * params_.d;
  return params_.field == Field::real ? dd : 2 * dd;
}

void GrassmannSpace::centroid_accumulate(const Point& x, double weight,
                                         Eigen::Ref<Eigen::VectorXd> acc) const {
  Eigen::MatrixXcd basis = unpack(x);
  Eigen::MatrixXcd projector = basis * basis.adjoint();
  const int dd = params_.d * params_.d;
  Eigen::Map<Eigen::MatrixXd> re(acc.data(), params_.d, params_.d);
  re += weight * projector.real();
  if (params_.field == Field::complex) {
    Eigen::Map<Eigen::MatrixXd> im(acc.data() + dd, params_.d, params_.d);
    im += weight * projector.imag();
  }
}

Point GrassmannSpace::centroid_from_accumulator(
    const Eigen::Ref<const Eigen::VectorXd>& acc, double total_weight) const {
  const int dd = params_.d * params_.d;
  Eigen::Map<const Eigen::MatrixXd> re(acc.data(), params_.d, params_.d);
  if (params_.field == Field::real) {
    // The complex solver is free to rotate eigenvector phases; solve the real
    // symmetric problem directly so the basis stays real.
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> real_eig(re / total_weight);
    Eigen::MatrixXd real_top = real_eig.eigenvectors().rightCols(params_.r);
    return pack(real_top.cast<std::complex<double>>());
  }
  Eigen::Map<const Eigen::MatrixXd> im(acc.data() + dd, params_.d, params_.d);
  Eigen::MatrixXcd mean_projector(params_.d, params_.d);
  mean_projector.real() = re / total_weight;
  mean_projector.imag() = im / total_weight;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> eig(mean_projector);
  return pack(eig.eigenvectors().rightCols(params_.r));
}

}  // namespace rdq
