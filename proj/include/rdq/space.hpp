#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "rdq/rng.hpp"

namespace rdq {

using Point = Eigen::VectorXd;

// A concrete source/reproduction space: point representation, reference
// probability measure, distortion rho = omega^k, and the projection used by
// Lloyd iterations. Implementations are immutable after construction.
class SpaceModel {
 public:
  virtual ~SpaceModel();

  virtual std::string id() const = 0;
  virtual int embedding_dim() const = 0;
  virtual double distortion(const Point& x, const Point& y) const = 0;
  // rho = omega^k with omega the metric-like root certificates refer to.
  virtual double distortion_exponent() const = 0;
  virtual Point sample_reference(RngStream& rng) const = 0;
  virtual bool contains(const Point& x) const = 0;
  // Maps an ambient candidate back to a valid point of the space.
  virtual Point project(const Point& ambient) const = 0;
  // Weighted centroid used by Lloyd updates. Default: projected ambient mean.
  virtual Point centroid(const std::vector<Point>& pts,
                         const std::vector<double>& weights) const;
  // Streaming form of centroid: per-cell statistics fold into a flat vector so
  // Lloyd passes keep O(1) memory per cell and batch-ordered folds stay
  // worker-count invariant. The default accumulates ambient coordinates;
  // spaces whose point encoding has gauge freedom accumulate a gauge-free
  // statistic instead.
  virtual int centroid_accumulator_dim() const { return embedding_dim(); }
  virtual void centroid_accumulate(const Point& x, double weight,
                                   Eigen::Ref<Eigen::VectorXd> acc) const;
  virtual Point centroid_from_accumulator(
      const Eigen::Ref<const Eigen::VectorXd>& acc, double total_weight) const;
  // Space-specific deterministic codebook (equally spaced circle points,
  // attractor cell centers, ...). Empty when no construction is available.
  virtual std::vector<Point> designed_codebook(int n) const;
};

}  // namespace rdq
