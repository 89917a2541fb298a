#include "hierembed/synthetic.hpp"

#include <random>
#include <stdexcept>

namespace hierembed {

FeatureMatrix generate_cluster_features(const Hierarchy& h, const ClusterFeatureConfig& config) {
  if (config.dim == 0 || config.per_leaf == 0) throw std::invalid_argument("feature dimension and count must be positive");
  if (!h.uniform_depth()) throw HierarchyError("cluster features need every leaf on the last level");
  const auto D = static_cast<Eigen::Index>(config.dim);
  Rng rng(config.seed);
  std::normal_distribution<double> gauss;

  Eigen::MatrixXd offsets(D, static_cast<Eigen::Index>(h.size()));
  for (Eigen::Index c = 0; c < offsets.cols(); ++c) {
    for (Eigen::Index r = 0; r < D; ++r) offsets(r, c) = config.center_scale * gauss(rng);
  }

  const auto leaves = h.level_members(h.level_count());
  FeatureMatrix f;
  f.data.resize(static_cast<Eigen::Index>(leaves.size() * config.per_leaf), D);
  std::size_t row = 0;
  for (const NodeId leaf : leaves) {
    Eigen::VectorXd center = Eigen::VectorXd::Zero(D);
    for (const NodeId n : h.path(leaf)) center += offsets.col(n);
    for (std::size_t k = 0; k < config.per_leaf; ++k, ++row) {
      for (Eigen::Index c = 0; c < D; ++c) {
        f.data(static_cast<Eigen::Index>(row), c) = center(c) + config.noise * gauss(rng);
      }
      f.instance_ids.push_back("i" + std::to_string(row));
      f.leaf_labels.push_back(leaf);
    }
  }
  return f;
}

}  // namespace hierembed
