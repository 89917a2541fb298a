#ifndef HIEREMBED_EMBED_TRAIN_HPP
#define HIEREMBED_EMBED_TRAIN_HPP

#include <cstdint>
#include <filesystem>
#include <functional>
#include <span>
#include <vector>

#include "hierembed/binary_io.hpp"
#include "hierembed/geometry.hpp"
#include "hierembed/hierarchy.hpp"
#include "hierembed/optim.hpp"

namespace hierembed {

/// One point per label node, rows in node-id order.
struct EmbeddingTable {
  Geometry geometry = Geometry::euclidean_cone;
  std::size_t dim = 0;
  std::vector<double> coords;

  EmbeddingTable() = default;
  EmbeddingTable(Geometry g, std::size_t count, std::size_t d) : geometry(g), dim(d), coords(count * d, 0.0) {}

  [[nodiscard]] std::size_t size() const { return dim == 0 ? 0 : coords.size() / dim; }
  [[nodiscard]] std::span<double> row(std::size_t i) { return {coords.data() + i * dim, dim}; }
  [[nodiscard]] std::span<const double> row(std::size_t i) const { return {coords.data() + i * dim, dim}; }
};

/// Uniform random directions with norms uniform in [ε + δ, 0.9 · domain max].
[[nodiscard]] EmbeddingTable init_embeddings(std::size_t count, std::size_t dim, const ConeParams& cone, Rng& rng);

/// RSGD for hyperbolic cones, Adam otherwise.
[[nodiscard]] constexpr OptimizerKind default_optimizer(Geometry g) {
  return g == Geometry::hyperbolic_cone ? OptimizerKind::rsgd : OptimizerKind::adam;
}

struct TrainConfig {
  ConeParams cone;
  std::size_t dim = 2;
  double margin = 1.0;  // α
  double lr = 0.01;     // η
  int epochs = 500;
  std::size_t batch_size = 10;
  bool pick_per_level = true;
  int negatives_per_level = 1;  // corruptions per level for each side of a positive
  OptimizerKind optimizer = OptimizerKind::adam;
  std::uint64_t seed = 0;
};

/// Σ_pos E + Σ_neg max(0, α - E). When `grad` is non-empty (size = table coords)
/// the gradient is accumulated into it. Pairs where the cone angle is undefined
/// count as E = 0 with no gradient.
double max_margin_loss(std::span<const Edge> positives, std::span<const Edge> negatives,
                       const EmbeddingTable& table, const ConeParams& cone, double margin,
                       std::span<double> grad = {});

struct OptimizerState {
  OptimizerKind kind = OptimizerKind::adam;
  double lr = 0.01;
  Adam adam;

  OptimizerState() = default;
  OptimizerState(OptimizerKind k, double learning_rate, std::size_t size)
      : kind(k), lr(learning_rate), adam(size, learning_rate) {}
};

/// rsgd: u ← exp_u(-η · (1/λ_u)² g) on the ball, u ← u - η g otherwise.
/// adam: moment update on the raw coordinates. Every row is then projected
/// back into the cone domain.
void optimizer_step(EmbeddingTable& table, std::span<const double> grad, OptimizerState& state,
                    const ConeParams& cone, Rng& rng);

struct EpochLog {
  int epoch = 0;
  double loss = 0.0;
  double val_f1 = 0.0;  // NaN when there is nothing to validate on
  double threshold = 0.0;
};

struct TrainResult {
  EmbeddingTable table;
  std::vector<EpochLog> log;
  double margin = 1.0;
};

/// Trains on split.train, logging validation F1 each epoch when split.val has
/// positives and negatives.
[[nodiscard]] TrainResult train_label_embeddings(const Hierarchy& h, const SplitResult& split,
                                                 const TrainConfig& config);

/// Trains once per margin and keeps the run with the best final validation F1.
[[nodiscard]] TrainResult sweep_margin(const Hierarchy& h, const SplitResult& split, TrainConfig config,
                                       std::span<const double> margins);

struct EdgePrediction {
  double threshold = 0.0;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  double accuracy = 0.0;
};

/// Energies for each edge; undefined cone angles (coincident points) give 0.
[[nodiscard]] std::vector<double> edge_energies(const EmbeddingTable& table, const ConeParams& cone,
                                                std::span<const Edge> edges);

/// Sweeps midpoints of the sorted energies and keeps the threshold with the best
/// F1 (lowest threshold on ties). Energy <= threshold predicts an edge.
[[nodiscard]] EdgePrediction best_threshold(std::span<const double> positive_energies,
                                            std::span<const double> negative_energies);
[[nodiscard]] EdgePrediction apply_threshold(std::span<const double> positive_energies,
                                             std::span<const double> negative_energies, double threshold);

/// Throws std::invalid_argument when either set is empty.
[[nodiscard]] EdgePrediction evaluate_edge_prediction(const EmbeddingTable& table, const ConeParams& cone,
                                                      std::span<const Edge> positives,
                                                      std::span<const Edge> negatives);

/// "EMB1" block: u32 rows, u32 dim, u8 geometry, f64 row-major coordinates.
void write_embedding_block(ByteWriter& out, const EmbeddingTable& table);
[[nodiscard]] EmbeddingTable read_embedding_block(ByteReader& in);

/// Binary table plus sidecar TSV `node_id<TAB>row`.
void save_embeddings(const EmbeddingTable& table, const Hierarchy& h, const std::filesystem::path& path,
                     const std::filesystem::path& sidecar_tsv);
[[nodiscard]] EmbeddingTable load_embeddings(const std::filesystem::path& path);

/// CSV `epoch,loss,val_f1,threshold`.
void write_training_log(const std::vector<EpochLog>& log, const std::filesystem::path& path);

}  // namespace hierembed

#endif  // HIEREMBED_EMBED_TRAIN_HPP
