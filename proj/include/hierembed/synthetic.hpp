#ifndef HIEREMBED_SYNTHETIC_HPP
#define HIEREMBED_SYNTHETIC_HPP

#include <cstdint>

#include "hierembed/hierarchy.hpp"
#include "hierembed/joint_embed.hpp"

namespace hierembed {

struct ClusterFeatureConfig {
  std::size_t per_leaf = 20;
  std::size_t dim = 64;
  double center_scale = 1.0;  // per-coordinate std of each node's offset
  double noise = 1.0;         // per-coordinate std of the instance noise
  std::uint64_t seed = 0;
};

/// Hierarchical Gaussian clusters: every node draws an offset, and an instance
/// of leaf v is the sum of offsets along v's root path plus isotropic noise.
/// Rows are grouped by leaf in node-id order; ids are "i<row>".
[[nodiscard]] FeatureMatrix generate_cluster_features(const Hierarchy& h, const ClusterFeatureConfig& config);

}  // namespace hierembed

#endif  // HIEREMBED_SYNTHETIC_HPP
