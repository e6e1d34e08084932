#include "rdq/space.hpp"

#include <stdexcept>

namespace rdq {

SpaceModel::~SpaceModel() = default;

Point SpaceModel::centroid(const std::vector<Point>& pts,
                           const std::vector<double>& weights) const {
  if (pts.empty() || pts.size() != weights.size())
    throw std::invalid_argument("centroid: empty or mismatched input");
  Eigen::VectorXd acc = Eigen::VectorXd::Zero(centroid_accumulator_dim());
  double total = 0.0;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    centroid_accumulate(pts[i], weights[i], acc);
    total += weights[i];
  }
  if (total <= 0.0) return pts.front();
  return centroid_from_accumulator(acc, total);
}

void SpaceModel::centroid_accumulate(const Point& x, double weight,
                                     Eigen::Ref<Eigen::VectorXd> acc) const {
  acc += weight * x;
}

Point SpaceModel::centroid_from_accumulator(
    const Eigen::Ref<const Eigen::VectorXd>& acc, double total_weight) const {
  return project(acc / total_weight);
}

std::vector<Point> SpaceModel::designed_codebook(int /*n*/) const {
  return {};
}

}  // namespace rdq
