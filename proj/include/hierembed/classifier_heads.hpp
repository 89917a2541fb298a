#ifndef HIEREMBED_CLASSIFIER_HEADS_HPP
#define HIEREMBED_CLASSIFIER_HEADS_HPP

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "hierembed/hierarchy.hpp"
#include "hierembed/joint_embed.hpp"

namespace hierembed {

enum class HeadKind { hab, plc, mc, mplc, hs };

[[nodiscard]] std::string_view to_string(HeadKind k);
[[nodiscard]] HeadKind parse_head(std::string_view s);

/// Logit layouts derived from a uniform-depth hierarchy.
///
/// Flat layout (hab/plc/mplc): level segments in level order, members by node id.
/// Leaf layout (mc): the last level only.
/// Group layout (hs): one segment per sibling group; the level-1 group comes
/// first, then groups ordered by parent node id.
class LabelLayout {
 public:
  explicit LabelLayout(const Hierarchy& h);

  [[nodiscard]] int levels() const { return static_cast<int>(level_sizes_.size()); }
  [[nodiscard]] std::size_t level_size(int level) const { return level_sizes_.at(static_cast<std::size_t>(level - 1)); }
  [[nodiscard]] std::size_t level_offset(int level) const { return level_offsets_.at(static_cast<std::size_t>(level - 1)); }
  [[nodiscard]] std::size_t total() const { return total_; }
  [[nodiscard]] std::size_t output_width(HeadKind k) const;

  /// Level-local indices of the children of level-local node `j` on `level`.
  [[nodiscard]] std::span<const std::size_t> children(int level, std::size_t j) const;
  /// Level-local index of the parent (on level - 1) of node `j` on `level` >= 2.
  [[nodiscard]] std::size_t parent(int level, std::size_t j) const;
  /// Level-local indices of the last-level leaves below node `j` on `level`.
  [[nodiscard]] std::span<const std::size_t> leaves_under(int level, std::size_t j) const;

  struct Group {
    std::size_t offset = 0;
    int child_level = 1;
    std::vector<std::size_t> members;  // level-local indices on child_level
  };
  [[nodiscard]] const std::vector<Group>& groups() const { return groups_; }
  /// Group containing node `j` of `level`, and its position inside that group.
  [[nodiscard]] std::pair<std::size_t, std::size_t> group_of(int level, std::size_t j) const;

  /// Level-local truth indices (τ_1..τ_L) for a last-level leaf.
  [[nodiscard]] std::vector<std::size_t> truth_path(const Hierarchy& h, NodeId leaf) const;

 private:
  std::vector<std::size_t> level_sizes_;
  std::vector<std::size_t> level_offsets_;
  std::size_t total_ = 0;
  std::vector<std::vector<std::vector<std::size_t>>> children_;  // [level][j] -> children on level + 1
  std::vector<std::vector<std::size_t>> parent_;                 // [level][j] -> parent on level - 1
  std::vector<std::vector<std::vector<std::size_t>>> leaves_;    // [level][j] -> leaves
  std::vector<Group> groups_;
  std::vector<std::vector<std::pair<std::size_t, std::size_t>>> group_of_;
};

using LevelProbs = std::vector<std::vector<double>>;

[[nodiscard]] std::vector<double> softmax(std::span<const double> x);
[[nodiscard]] double log_sum_exp(std::span<const double> x);

/// Mean over labels of -[y log σ(x) + (1-y) log(1-σ(x))]. `grad` may be empty.
double hab_loss(std::span<const double> x, std::span<const double> y, std::span<double> grad = {});

/// Σ_levels softmax cross-entropy over flat level segments.
double plc_loss(std::span<const double> x, const LabelLayout& layout, std::span<const std::size_t> tau,
                std::span<double> grad = {});

/// p_L = softmax(leaf logits); upper levels sum their children bottom-up.
[[nodiscard]] LevelProbs mc_probabilities(std::span<const double> leaf_logits, const LabelLayout& layout);
/// Σ_levels -log p_i[τ_i] in log-sum-exp form.
double mc_loss(std::span<const double> leaf_logits, const LabelLayout& layout, std::span<const std::size_t> tau,
               std::span<double> grad = {});

/// Per level, cross-entropy restricted to the children of the true parent.
double mplc_loss(std::span<const double> x, const LabelLayout& layout, std::span<const std::size_t> tau,
                 std::span<double> grad = {});
/// Top-down argmax, each level restricted to the children of the level above's prediction.
[[nodiscard]] std::vector<std::size_t> mplc_predict(std::span<const double> x, const LabelLayout& layout);

struct HsProbabilities {
  std::vector<std::vector<double>> conditionals;  // per group
  std::vector<double> leaf_joint;                 // per last-level node
};

[[nodiscard]] HsProbabilities hs_probabilities(std::span<const double> group_logits, const LabelLayout& layout);
/// -log of the path product = Σ of group cross-entropies along the true path.
double hs_loss(std::span<const double> group_logits, const LabelLayout& layout, std::span<const std::size_t> tau,
               std::span<double> grad = {});

/// Level marginals from leaf probabilities (sums over descendant leaves).
[[nodiscard]] LevelProbs level_marginals(std::span<const double> leaf_probs, const LabelLayout& layout);

/// One level-local prediction per level for the single-label heads.
[[nodiscard]] std::vector<std::size_t> predict_levels(HeadKind head, std::span<const double> logits,
                                                      const LabelLayout& layout);

enum class ThresholdMode { ofadb, pcdb };
[[nodiscard]] ThresholdMode parse_threshold_mode(std::string_view s);

/// ofadb: one shared threshold maximising micro-F1; pcdb: one per label by the
/// same sweep. Scores >= threshold are predicted. Returns one entry per column.
[[nodiscard]] std::vector<double> select_thresholds(const RowMatrix& scores, const RowMatrix& targets,
                                                    ThresholdMode mode);

struct LabelCountStats {
  double min = 0.0;
  double max = 0.0;
  double mean = 0.0;
  double stddev = 0.0;
};

/// Statistics of the number of predicted labels per row.
[[nodiscard]] LabelCountStats predicted_label_counts(const RowMatrix& scores, std::span<const double> thresholds);

enum class ImbalanceMode { none, class_weights, resample };
[[nodiscard]] ImbalanceMode parse_imbalance(std::string_view s);

/// Inverse-frequency weights over the training leaf labels, normalised so that a
/// uniform label distribution gives weight 1.
struct ImbalancePolicy {
  ImbalanceMode mode = ImbalanceMode::none;
  std::map<NodeId, double> weights;

  [[nodiscard]] static ImbalancePolicy from_labels(ImbalanceMode mode, std::span<const NodeId> train_labels);
  /// Throws std::out_of_range for a label absent from the training labels.
  [[nodiscard]] double weight(NodeId label) const;
  /// Loss multiplier for one sample (1 unless class weights are active).
  [[nodiscard]] double loss_scale(NodeId label) const;
  /// Indices into `labels` for one epoch: a shuffle, or draws ∝ inverse frequency
  /// with replacement in resample mode.
  [[nodiscard]] std::vector<std::size_t> epoch_order(std::span<const NodeId> labels, Rng& rng) const;
};

struct LinearClassifier {
  HeadKind head = HeadKind::plc;
  Eigen::MatrixXd weights;  // D × width
  Eigen::VectorXd bias;
  std::vector<double> thresholds;  // hab only

  [[nodiscard]] Eigen::VectorXd logits(std::span<const double> row) const;
};

struct ClassifierConfig {
  HeadKind head = HeadKind::plc;
  ImbalanceMode imbalance = ImbalanceMode::none;
  ThresholdMode threshold_mode = ThresholdMode::ofadb;
  double lr = 0.01;
  int epochs = 100;
  std::size_t batch_size = 64;
  std::uint64_t seed = 0;
};

struct ClassifierReport {
  std::vector<double> level_f1;  // micro-F1 per level
  double micro_f1 = 0.0;         // over all labels of all levels
  double micro_precision = 0.0;
  double micro_recall = 0.0;
  double level_mean_f1 = 0.0;    // unweighted mean of level_f1
  std::optional<LabelCountStats> label_counts;  // hab only
};

struct ClassifierEpochLog {
  int epoch = 0;
  double loss = 0.0;
  std::vector<double> val_level_f1;
};

struct ClassifierResult {
  LinearClassifier model;
  std::vector<ClassifierEpochLog> log;
  ClassifierReport val;
  ClassifierReport test;
};

[[nodiscard]] ClassifierReport evaluate_classifier(const LinearClassifier& model, const Hierarchy& h,
                                                   const LabelLayout& layout, const FeatureMatrix& features,
                                                   std::span<const std::size_t> rows);

/// Minimises the head loss with Adam; HAB thresholds are chosen on the val rows.
[[nodiscard]] ClassifierResult train_linear_classifier(const Hierarchy& h, const FeatureMatrix& features,
                                                       const InstanceSplit& split, const ClassifierConfig& config);

/// Metrics CSV: `model,m-F1,L1..LL,level-mean-F1,m-P,m-R,count_min,count_max,count_mean,count_std`.
void write_classifier_report(const std::string& model_name, const ClassifierReport& report,
                             const std::filesystem::path& path);

}  // namespace hierembed

#endif  // HIEREMBED_CLASSIFIER_HEADS_HPP
