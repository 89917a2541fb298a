#include "hierembed/embed_train.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <fmt/format.h>

#include "graph_trainer.hpp"
#include "hierembed/parallel.hpp"
#include "tsv.hpp"

namespace hierembed {

EmbeddingTable init_embeddings(std::size_t count, std::size_t dim, const ConeParams& cone, Rng& rng) {
  if (dim == 0) throw std::invalid_argument("embedding dimension must be positive");
  EmbeddingTable table(cone.geometry, count, dim);
  const double lo = cone.epsilon() + kDomainMargin;
  const double hi = 0.9 * cone.domain_max();
  std::normal_distribution<double> gauss;
  std::uniform_real_distribution<double> radius(lo, std::max(lo, hi));
  for (std::size_t i = 0; i < count; ++i) {
    auto row = table.row(i);
    double n = 0.0;
    while (n < 1e-12) {
      for (auto& c : row) c = gauss(rng);
      n = norm(row);
    }
    const double r = radius(rng);
    for (auto& c : row) c *= r / n;
  }
  return table;
}

double max_margin_loss(std::span<const Edge> positives, std::span<const Edge> negatives, const EmbeddingTable& table,
                       const ConeParams& cone, double margin, std::span<double> grad) {
  if (!grad.empty() && grad.size() != table.coords.size()) throw std::invalid_argument("gradient buffer shape mismatch");
  const auto add = [&](NodeId n, const Vec& g, double sign) {
    if (grad.empty()) return;
    for (std::size_t i = 0; i < table.dim; ++i) grad[n * table.dim + i] += sign * g[i];
  };
  double loss = 0.0;
  for (const Edge& e : positives) {
    const auto eg = try_energy_gradients(table.row(e.parent), table.row(e.child), cone);
    if (!eg || eg->energy == 0.0) continue;
    loss += eg->energy;
    add(e.parent, eg->d_x, 1.0);
    add(e.child, eg->d_y, 1.0);
  }
  for (const Edge& e : negatives) {
    const auto eg = try_energy_gradients(table.row(e.parent), table.row(e.child), cone);
    const double energy = eg ? eg->energy : 0.0;
    if (energy >= margin) continue;
    loss += margin - energy;
    if (eg && energy > 0.0) {
      add(e.parent, eg->d_x, -1.0);
      add(e.child, eg->d_y, -1.0);
    }
  }
  return loss;
}

void optimizer_step(EmbeddingTable& table, std::span<const double> grad, OptimizerState& state,
                    const ConeParams& cone, Rng& rng) {
  if (grad.size() != table.coords.size()) throw std::invalid_argument("optimizer_step: gradient shape mismatch");
  require_finite(grad, "gradient");
  if (state.kind == OptimizerKind::adam) {
    state.adam.step(table.coords, grad);
  } else if (cone.geometry == Geometry::hyperbolic_cone) {
    Vec step(table.dim);
    for (std::size_t i = 0; i < table.size(); ++i) {
      auto row = table.row(i);
      const auto g = std::span<const double>(grad).subspan(i * table.dim, table.dim);
      if (std::ranges::all_of(g, [](double v) { return v == 0.0; })) continue;
      const double scale = riemannian_scale(row);
      for (std::size_t k = 0; k < table.dim; ++k) step[k] = -state.lr * scale * g[k];
      const Vec next = exp_map(row, step);
      std::ranges::copy(next, row.begin());
    }
  } else {
    for (std::size_t i = 0; i < table.coords.size(); ++i) table.coords[i] -= state.lr * grad[i];
  }
  for (std::size_t i = 0; i < table.size(); ++i) project_to_domain(table.row(i), cone, rng);
}

std::vector<double> edge_energies(const EmbeddingTable& table, const ConeParams& cone, std::span<const Edge> edges) {
  std::vector<double> out(edges.size(), 0.0);
  parallel_for(edges.size(), [&](std::size_t i) {
    const auto eg = try_energy_gradients(table.row(edges[i].parent), table.row(edges[i].child), cone);
    out[i] = eg ? eg->energy : 0.0;
  });
  return out;
}

EdgePrediction apply_threshold(std::span<const double> positive_energies, std::span<const double> negative_energies,
                               double threshold) {
  std::size_t tp = 0;
  std::size_t fp = 0;
  for (const double e : positive_energies) tp += e <= threshold ? 1 : 0;
  for (const double e : negative_energies) fp += e <= threshold ? 1 : 0;
  const std::size_t fn = positive_energies.size() - tp;
  const std::size_t tn = negative_energies.size() - fp;
  EdgePrediction p;
  p.threshold = threshold;
  p.precision = tp + fp == 0 ? 0.0 : static_cast<double>(tp) / static_cast<double>(tp + fp);
  p.recall = tp + fn == 0 ? 0.0 : static_cast<double>(tp) / static_cast<double>(tp + fn);
  p.f1 = p.precision + p.recall == 0.0 ? 0.0 : 2.0 * p.precision * p.recall / (p.precision + p.recall);
  const std::size_t total = positive_energies.size() + negative_energies.size();
  p.accuracy = total == 0 ? 0.0 : static_cast<double>(tp + tn) / static_cast<double>(total);
  return p;
}

EdgePrediction best_threshold(std::span<const double> positive_energies, std::span<const double> negative_energies) {
  if (positive_energies.empty() || negative_energies.empty()) {
    throw std::invalid_argument("threshold selection needs positive and negative edges");
  }
  std::vector<std::pair<double, bool>> all;
  all.reserve(positive_energies.size() + negative_energies.size());
  for (const double e : positive_energies) all.emplace_back(e, true);
  for (const double e : negative_energies) all.emplace_back(e, false);
  std::ranges::sort(all);

  const auto total_pos = positive_energies.size();
  const auto f1_of = [&](std::size_t tp, std::size_t fp) {
    const std::size_t fn = total_pos - tp;
    return tp == 0 ? 0.0 : 2.0 * static_cast<double>(tp) / static_cast<double>(2 * tp + fp + fn);
  };

  // Start below every energy: nothing predicted.
  double best_f1 = 0.0;
  double best_t = all.front().first - 1.0;
  std::size_t tp = 0;
  std::size_t fp = 0;
  for (std::size_t i = 0; i < all.size(); ++i) {
    (all[i].second ? tp : fp) += 1;
    const bool boundary = i + 1 == all.size() || all[i + 1].first != all[i].first;
    if (!boundary) continue;
    const double t = i + 1 == all.size() ? all[i].first : 0.5 * (all[i].first + all[i + 1].first);
    const double f1 = f1_of(tp, fp);
    if (f1 > best_f1) {
      best_f1 = f1;
      best_t = t;
    }
  }
  return apply_threshold(positive_energies, negative_energies, best_t);
}

EdgePrediction evaluate_edge_prediction(const EmbeddingTable& table, const ConeParams& cone,
                                        std::span<const Edge> positives, std::span<const Edge> negatives) {
  if (positives.empty() || negatives.empty()) throw std::invalid_argument("edge evaluation needs positives and negatives");
  const auto pe = edge_energies(table, cone, positives);
  const auto ne = edge_energies(table, cone, negatives);
  return best_threshold(pe, ne);
}

TrainResult train_label_embeddings(const Hierarchy& h, const SplitResult& split, const TrainConfig& config) {
  if (!(config.lr > 0.0)) throw std::invalid_argument("learning rate must be positive");
  if (config.epochs < 0) throw std::invalid_argument("epochs must be non-negative");
  const EdgeIndex closure(transitive_closure(h).edges);

  Rng rng(config.seed);
  EmbeddingTable table = init_embeddings(h.size(), config.dim, config.cone, rng);

  detail::GraphTrainSpec spec;
  spec.hierarchy = &h;
  spec.label_closure = &closure;
  spec.positives = split.train.edges;
  spec.cone = config.cone;
  spec.margin = config.margin;
  spec.epochs = config.epochs;
  spec.batch_size = config.batch_size;
  spec.label_optimizer = config.optimizer;
  spec.lr_labels = config.lr;
  spec.label_tangent = config.cone.geometry == Geometry::hyperbolic_cone && config.optimizer == OptimizerKind::adam;
  spec.pick_per_level = config.pick_per_level;
  spec.negatives_per_level = config.negatives_per_level;

  detail::EpochValidator validate;
  if (!split.val.empty() && !split.val_negatives.empty()) {
    validate = [&](const EmbeddingTable& t, const Eigen::MatrixXd&) {
      const auto r = evaluate_edge_prediction(t, config.cone, split.val.edges, split.val_negatives.edges);
      return std::pair{r.f1, r.threshold};
    };
  }
  auto out = detail::train_graph(spec, std::move(table), Eigen::MatrixXd(0, 0), rng, validate);
  return {std::move(out.labels), std::move(out.log), config.margin};
}

TrainResult sweep_margin(const Hierarchy& h, const SplitResult& split, TrainConfig config,
                         std::span<const double> margins) {
  if (margins.empty()) throw std::invalid_argument("margin sweep needs at least one margin");
  if (split.val.empty() || split.val_negatives.empty()) throw std::invalid_argument("margin sweep needs a validation set");
  std::optional<TrainResult> best;
  double best_f1 = -1.0;
  for (const double m : margins) {
    config.margin = m;
    TrainResult run = train_label_embeddings(h, split, config);
    const double f1 = evaluate_edge_prediction(run.table, config.cone, split.val.edges, split.val_negatives.edges).f1;
    if (f1 > best_f1) {
      best_f1 = f1;
      best = std::move(run);
    }
  }
  return *std::move(best);
}

void write_embedding_block(ByteWriter& out, const EmbeddingTable& table) {
  out.magic("EMB1");
  out.u32(static_cast<std::uint32_t>(table.size()));
  out.u32(static_cast<std::uint32_t>(table.dim));
  out.u8(static_cast<std::uint8_t>(table.geometry));
  for (const double c : table.coords) out.f64(c);
}

EmbeddingTable read_embedding_block(ByteReader& in) {
  in.expect_magic("EMB1");
  const std::uint32_t count = in.u32();
  const std::uint32_t dim = in.u32();
  const std::uint8_t g = in.u8();
  if (g > static_cast<std::uint8_t>(Geometry::hyperbolic_cone)) throw FormatError("unknown geometry tag");
  EmbeddingTable table(static_cast<Geometry>(g), count, dim);
  for (auto& c : table.coords) c = in.f64();
  return table;
}

void save_embeddings(const EmbeddingTable& table, const Hierarchy& h, const std::filesystem::path& path,
                     const std::filesystem::path& sidecar_tsv) {
  if (table.size() != h.size()) throw std::invalid_argument("embedding table does not match hierarchy size");
  ByteWriter out;
  write_embedding_block(out, table);
  out.save(path);
  auto side = tsv::open_out(sidecar_tsv);
  for (NodeId i = 0; i < h.size(); ++i) side << h.node(i).key << '\t' << i << '\n';
}

EmbeddingTable load_embeddings(const std::filesystem::path& path) {
  auto in = ByteReader::open(path);
  return read_embedding_block(in);
}

void write_training_log(const std::vector<EpochLog>& log, const std::filesystem::path& path) {
  auto out = tsv::open_out(path);
  out << "epoch,loss,val_f1,threshold\n";
  for (const auto& e : log) out << fmt::format("{},{:.17g},{:.17g},{:.17g}\n", e.epoch, e.loss, e.val_f1, e.threshold);
}

}  // namespace hierembed
