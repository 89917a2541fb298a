#ifndef HIEREMBED_JOINT_EMBED_HPP
#define HIEREMBED_JOINT_EMBED_HPP

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "hierembed/embed_train.hpp"
#include "hierembed/geometry.hpp"
#include "hierembed/hierarchy.hpp"

namespace hierembed {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// Instance feature rows with their ids and leaf labels.
struct FeatureMatrix {
  RowMatrix data;  // n × D
  std::vector<std::string> instance_ids;
  std::vector<NodeId> leaf_labels;

  [[nodiscard]] std::size_t rows() const { return static_cast<std::size_t>(data.rows()); }
  [[nodiscard]] std::size_t cols() const { return static_cast<std::size_t>(data.cols()); }
  [[nodiscard]] std::span<const double> row(std::size_t i) const {
    return {data.data() + i * cols(), cols()};
  }
};

/// features.bin ("FEAT", u32 n, u32 D, f32 row-major) + instances.tsv
/// (`instance_id<TAB>row<TAB>leaf_label_id`). Leaf labels must exist in `h`.
[[nodiscard]] FeatureMatrix load_features(const std::filesystem::path& features_bin,
                                          const std::filesystem::path& instances_tsv, const Hierarchy& h);
void save_features(const FeatureMatrix& f, const Hierarchy& h, const std::filesystem::path& features_bin,
                   const std::filesystem::path& instances_tsv);
/// instances-levels.tsv: `instance_id<TAB>l1<TAB>...<TAB>lL`.
void save_instance_levels(const FeatureMatrix& f, const Hierarchy& h, const std::filesystem::path& path);

/// Learnable D×N map from features into the embedding space.
struct LinearMap {
  Eigen::MatrixXd weights;
  Geometry geometry = Geometry::euclidean_cone;
};

/// Wᵀ·row, followed by exp_0 for hyperbolic cones.
[[nodiscard]] Vec embed_instance(std::span<const double> row, const LinearMap& map);

struct JointModel {
  EmbeddingTable labels;
  LinearMap map;
  ConeParams cone;
  double margin = 1.0;
};

struct JointConfig {
  ConeParams cone;
  std::size_t dim = 10;
  double margin = 1.0;
  double lr_labels = 1e-2;
  double lr_im = 1e-3;
  int epochs = 200;
  std::size_t batch_size = 10;
  int negatives_per_level = 1;
  bool balance_negatives = false;  // match instance and label corruptions one-to-one
  std::uint64_t seed = 0;
  std::optional<EmbeddingTable> init_labels;

  /// EC: 200 epochs, label lr 1e-2; HC: 100 epochs, label lr 1e-4; both image lr 1e-3.
  [[nodiscard]] static JointConfig defaults_for(Geometry g);
};

struct InstanceSplit {
  std::vector<std::size_t> train;
  std::vector<std::size_t> val;
  std::vector<std::size_t> test;
};

/// Seeded 80/10/10 split of instance rows.
[[nodiscard]] InstanceSplit split_instances(std::size_t count, std::uint64_t seed);

struct JointResult {
  JointModel model;
  std::vector<EpochLog> log;  // val_f1 holds validation micro-F1 over all levels
};

/// Positives: label closure edges plus (ancestor-or-leaf label → instance) for
/// every training instance. Negatives come from pick-per-level corruption and
/// never pair two instances.
[[nodiscard]] JointResult train_joint(const Hierarchy& h, const FeatureMatrix& features,
                                      std::span<const std::size_t> train_rows,
                                      std::span<const std::size_t> val_rows, const JointConfig& config);

/// Energy E(label, instance) for every label of `level`, in level-member order.
[[nodiscard]] std::vector<double> level_energies(const JointModel& model, const Hierarchy& h,
                                                 std::span<const double> row, int level);
/// Minimum-energy label of `level`; ties go to the lowest node id.
[[nodiscard]] NodeId classify_instance(const JointModel& model, const Hierarchy& h, std::span<const double> row,
                                       int level);
/// Labels of `level` by ascending energy, ties by node id.
[[nodiscard]] std::vector<NodeId> rank_labels(const JointModel& model, const Hierarchy& h,
                                              std::span<const double> row, int level);

struct Prediction {
  std::size_t row = 0;
  int level = 1;
  NodeId label = 0;
  double energy = 0.0;
};

struct ClassificationReport {
  std::vector<double> level_micro_f1;  // equals per-level accuracy
  double micro_f1 = 0.0;               // over all levels jointly
  double hit3_last = 0.0;              // hit@k on the last level only
  double hit5_last = 0.0;
  double hit3_mean = 0.0;              // hit@k averaged over levels
  double hit5_mean = 0.0;
  std::vector<Prediction> predictions;
};

[[nodiscard]] ClassificationReport evaluate_classification(const JointModel& model, const Hierarchy& h,
                                                           const FeatureMatrix& features,
                                                           std::span<const std::size_t> rows);

struct ReconstructionReport {
  double tpr = 0.0;
  double tnr = 0.0;
  double f1 = 0.0;
  double threshold = 0.0;
};

/// Label closure edges against every other ordered label pair, thresholded at
/// the best F1.
[[nodiscard]] ReconstructionReport reconstruct_labels(const EmbeddingTable& labels, const ConeParams& cone,
                                                      const Hierarchy& h);

/// "JMDL" header (u8 geometry, f64 K, f64 α, f64 max norm) + EMB1 block + "LMAP"
/// block (u32 D, u32 N, f64 row-major W).
void save_model(const JointModel& model, const std::filesystem::path& path);
[[nodiscard]] JointModel load_model(const std::filesystem::path& path);

/// predictions.tsv: `instance_id<TAB>level<TAB>pred_label_id<TAB>energy`.
void save_predictions(const ClassificationReport& report, const FeatureMatrix& features, const Hierarchy& h,
                      const std::filesystem::path& path);

}  // namespace hierembed

#endif  // HIEREMBED_JOINT_EMBED_HPP
