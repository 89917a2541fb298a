#ifndef HIEREMBED_SRC_GRAPH_TRAINER_HPP
#define HIEREMBED_SRC_GRAPH_TRAINER_HPP

#include <functional>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "hierembed/embed_train.hpp"
#include "hierembed/joint_embed.hpp"

namespace hierembed::detail {

// Node ids below labels.size() are labels; id labels.size() + k is training
// instance k, embedded through the linear map.
struct GraphTrainSpec {
  const Hierarchy* hierarchy = nullptr;
  const EdgeIndex* label_closure = nullptr;
  std::vector<Edge> positives;

  const FeatureMatrix* features = nullptr;
  std::vector<std::size_t> instance_rows;

  ConeParams cone;
  double margin = 1.0;
  int epochs = 0;
  std::size_t batch_size = 10;
  OptimizerKind label_optimizer = OptimizerKind::adam;
  double lr_labels = 0.01;
  double lr_im = 1e-3;
  bool pick_per_level = true;
  int negatives_per_level = 1;
  bool balance_negatives = false;
  // Adam on tangent vectors z with labels at exp_0(z) (hyperbolic cones only).
  bool label_tangent = false;
};

/// Returns (validation score, threshold) after an epoch.
using EpochValidator = std::function<std::pair<double, double>(const EmbeddingTable&, const Eigen::MatrixXd&)>;

struct GraphTrainOutput {
  EmbeddingTable labels;
  Eigen::MatrixXd weights;
  std::vector<EpochLog> log;
};

GraphTrainOutput train_graph(const GraphTrainSpec& spec, EmbeddingTable labels, Eigen::MatrixXd weights,
                             Rng& rng, const EpochValidator& validate);

/// ∂E/∂z for y = exp_0(z), given ∂E/∂y.
Vec exp0_backward(std::span<const double> z, std::span<const double> grad_y);

}  // namespace hierembed::detail

#endif  // HIEREMBED_SRC_GRAPH_TRAINER_HPP
