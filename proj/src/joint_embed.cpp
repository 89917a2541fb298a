#include "hierembed/joint_embed.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <fmt/format.h>

#include "graph_trainer.hpp"
#include "hierembed/binary_io.hpp"
#include "hierembed/metrics.hpp"
#include "hierembed/parallel.hpp"
#include "tsv.hpp"

namespace hierembed {

FeatureMatrix load_features(const std::filesystem::path& features_bin, const std::filesystem::path& instances_tsv,
                            const Hierarchy& h) {
  auto in = ByteReader::open(features_bin);
  in.expect_magic("FEAT");
  const std::uint32_t n = in.u32();
  const std::uint32_t d = in.u32();
  FeatureMatrix f;
  f.data.resize(n, d);
  for (Eigen::Index i = 0; i < f.data.size(); ++i) {
    const float v = in.f32();
    if (!std::isfinite(v)) throw FormatError("non-finite feature value");
    f.data.data()[i] = v;
  }
  if (!in.at_end()) throw FormatError("trailing bytes in features file");

  f.instance_ids.assign(n, {});
  f.leaf_labels.assign(n, 0);
  std::vector<bool> seen(n, false);
  for (const auto& line : tsv::read_lines(instances_tsv)) {
    const auto fields = tsv::split(line);
    if (fields.size() != 3) throw FormatError("instances.tsv: expected instance_id<TAB>row<TAB>leaf_label_id");
    const auto row = tsv::parse_number<std::size_t>(fields[1], "row");
    if (row >= n || seen[row]) throw FormatError("instances.tsv: bad or repeated row " + std::string(fields[1]));
    const auto leaf = h.find(fields[2]);
    if (!leaf) throw HierarchyError("instance label '" + std::string(fields[2]) + "' is not in the hierarchy");
    if (h.node(*leaf).level != h.level_count()) {
      throw HierarchyError("instance label '" + std::string(fields[2]) + "' is not on the last level");
    }
    seen[row] = true;
    f.instance_ids[row] = std::string(fields[0]);
    f.leaf_labels[row] = *leaf;
  }
  if (std::ranges::find(seen, false) != seen.end()) throw FormatError("instances.tsv does not cover every feature row");
  return f;
}

void save_features(const FeatureMatrix& f, const Hierarchy& h, const std::filesystem::path& features_bin,
                   const std::filesystem::path& instances_tsv) {
  ByteWriter out;
  out.magic("FEAT");
  out.u32(static_cast<std::uint32_t>(f.rows()));
  out.u32(static_cast<std::uint32_t>(f.cols()));
  for (Eigen::Index i = 0; i < f.data.size(); ++i) out.f32(static_cast<float>(f.data.data()[i]));
  out.save(features_bin);
  auto side = tsv::open_out(instances_tsv);
  for (std::size_t i = 0; i < f.rows(); ++i) {
    side << f.instance_ids[i] << '\t' << i << '\t' << h.node(f.leaf_labels[i]).key << '\n';
  }
}

void save_instance_levels(const FeatureMatrix& f, const Hierarchy& h, const std::filesystem::path& path) {
  auto out = tsv::open_out(path);
  for (std::size_t i = 0; i < f.rows(); ++i) {
    out << f.instance_ids[i];
    for (const NodeId n : h.path(f.leaf_labels[i])) out << '\t' << h.node(n).key;
    out << '\n';
  }
}

Vec embed_instance(std::span<const double> row, const LinearMap& map) {
  if (row.size() != static_cast<std::size_t>(map.weights.rows())) {
    throw DimensionError("feature row has length " + std::to_string(row.size()) + ", map expects " +
                         std::to_string(map.weights.rows()));
  }
  const Eigen::Map<const Eigen::VectorXd> f(row.data(), static_cast<Eigen::Index>(row.size()));
  const Eigen::VectorXd z = map.weights.transpose() * f;
  Vec out(z.data(), z.data() + z.size());
  require_finite(out, "instance embedding");
  if (map.geometry == Geometry::hyperbolic_cone) return exp_map_origin(out);
  return out;
}

JointConfig JointConfig::defaults_for(Geometry g) {
  JointConfig c;
  c.cone.geometry = g;
  if (g == Geometry::hyperbolic_cone) {
    c.epochs = 100;
    c.lr_labels = 1e-4;
  } else {
    c.epochs = 200;
    c.lr_labels = 1e-2;
  }
  c.lr_im = 1e-3;
  return c;
}

InstanceSplit split_instances(std::size_t count, std::uint64_t seed) {
  std::vector<std::size_t> order(count);
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng rng(seed);
  std::ranges::shuffle(order, rng);
  const auto n_val = static_cast<std::size_t>(std::llround(0.1 * static_cast<double>(count)));
  const auto n_test = n_val;
  InstanceSplit s;
  s.val.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_val));
  s.test.assign(order.begin() + static_cast<std::ptrdiff_t>(n_val),
                order.begin() + static_cast<std::ptrdiff_t>(n_val + n_test));
  s.train.assign(order.begin() + static_cast<std::ptrdiff_t>(n_val + n_test), order.end());
  std::ranges::sort(s.train);
  std::ranges::sort(s.val);
  std::ranges::sort(s.test);
  return s;
}

namespace {

constexpr std::uint64_t kWeightStream = 0x5851f42d4c957f2dULL;

double instance_energy(const JointModel& model, NodeId label, std::span<const double> y) {
  const auto eg = try_energy_gradients(model.labels.row(label), y, model.cone);
  return eg ? eg->energy : 0.0;
}

}  // namespace

JointResult train_joint(const Hierarchy& h, const FeatureMatrix& features, std::span<const std::size_t> train_rows,
                        std::span<const std::size_t> val_rows, const JointConfig& config) {
  if (!(config.lr_labels > 0.0) || !(config.lr_im > 0.0)) throw std::invalid_argument("learning rates must be positive");
  if (features.rows() > 0 && features.leaf_labels.size() != features.rows()) {
    throw std::invalid_argument("feature rows and leaf labels disagree");
  }
  const EdgeSet closure = transitive_closure(h);
  const EdgeIndex closure_index(closure.edges);

  Rng rng(config.seed);
  EmbeddingTable labels;
  if (config.init_labels) {
    labels = *config.init_labels;
    if (labels.size() != h.size() || labels.dim != config.dim) {
      throw std::invalid_argument("label initialisation does not match hierarchy size or dimension");
    }
    labels.geometry = config.cone.geometry;
    for (std::size_t i = 0; i < labels.size(); ++i) project_to_domain(labels.row(i), config.cone, rng);
  } else {
    labels = init_embeddings(h.size(), config.dim, config.cone, rng);
  }

  const auto d = static_cast<Eigen::Index>(features.cols());
  Eigen::MatrixXd weights(d, static_cast<Eigen::Index>(config.dim));
  {
    Rng wrng(config.seed ^ kWeightStream);
    std::normal_distribution<double> gauss(0.0, d > 0 ? 1.0 / std::sqrt(static_cast<double>(d)) : 1.0);
    for (Eigen::Index i = 0; i < weights.size(); ++i) weights.data()[i] = gauss(wrng);
  }

  detail::GraphTrainSpec spec;
  spec.hierarchy = &h;
  spec.label_closure = &closure_index;
  spec.positives = closure.edges;
  spec.features = &features;
  spec.instance_rows.assign(train_rows.begin(), train_rows.end());
  const auto n_labels = static_cast<NodeId>(h.size());
  for (std::size_t k = 0; k < spec.instance_rows.size(); ++k) {
    const NodeId inst = n_labels + static_cast<NodeId>(k);
    for (const NodeId label : h.path(features.leaf_labels.at(spec.instance_rows[k]))) {
      spec.positives.push_back({label, inst});
    }
  }
  spec.cone = config.cone;
  spec.margin = config.margin;
  spec.epochs = config.epochs;
  spec.batch_size = config.batch_size;
  spec.label_optimizer = OptimizerKind::adam;
  spec.label_tangent = config.cone.geometry == Geometry::hyperbolic_cone;
  spec.lr_labels = config.lr_labels;
  spec.lr_im = config.lr_im;
  spec.pick_per_level = true;
  spec.negatives_per_level = config.negatives_per_level;
  spec.balance_negatives = config.balance_negatives;

  detail::EpochValidator validate;
  if (!val_rows.empty()) {
    validate = [&](const EmbeddingTable& t, const Eigen::MatrixXd& w) {
      const JointModel m{t, {w, config.cone.geometry}, config.cone, config.margin};
      return std::pair{evaluate_classification(m, h, features, val_rows).micro_f1,
                       std::numeric_limits<double>::quiet_NaN()};
    };
  }
  auto out = detail::train_graph(spec, std::move(labels), std::move(weights), rng, validate);
  JointResult result;
  result.model.labels = std::move(out.labels);
  result.model.map = {std::move(out.weights), config.cone.geometry};
  result.model.cone = config.cone;
  result.model.margin = config.margin;
  result.log = std::move(out.log);
  return result;
}

std::vector<double> level_energies(const JointModel& model, const Hierarchy& h, std::span<const double> row, int level) {
  const Vec y = embed_instance(row, model.map);
  const auto members = h.level_members(level);
  std::vector<double> out(members.size());
  for (std::size_t j = 0; j < members.size(); ++j) out[j] = instance_energy(model, members[j], y);
  return out;
}

namespace {

std::vector<std::size_t> order_by_energy(const std::vector<double>& energies) {
  std::vector<std::size_t> idx(energies.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  // Members are sorted by node id, so a stable sort breaks ties by lowest id.
  std::ranges::stable_sort(idx, [&](std::size_t a, std::size_t b) { return energies[a] < energies[b]; });
  return idx;
}

}  // namespace

NodeId classify_instance(const JointModel& model, const Hierarchy& h, std::span<const double> row, int level) {
  const auto e = level_energies(model, h, row, level);
  const auto best = std::ranges::min_element(e);  // first minimum = lowest node id
  return h.level_members(level)[static_cast<std::size_t>(best - e.begin())];
}

std::vector<NodeId> rank_labels(const JointModel& model, const Hierarchy& h, std::span<const double> row, int level) {
  const auto members = h.level_members(level);
  std::vector<NodeId> out;
  for (const auto j : order_by_energy(level_energies(model, h, row, level))) out.push_back(members[j]);
  return out;
}

ClassificationReport evaluate_classification(const JointModel& model, const Hierarchy& h, const FeatureMatrix& features,
                                             std::span<const std::size_t> rows) {
  const int levels = h.level_count();
  const std::size_t n = rows.size();
  // Per row and level: ranking of level-local indices and the winning energy.
  std::vector<std::vector<std::vector<std::uint32_t>>> rankings(static_cast<std::size_t>(levels),
                                                               std::vector<std::vector<std::uint32_t>>(n));
  std::vector<std::vector<double>> best_energy(static_cast<std::size_t>(levels), std::vector<double>(n));
  parallel_for(n, [&](std::size_t i) {
    const Vec y = embed_instance(features.row(rows[i]), model.map);
    for (int l = 1; l <= levels; ++l) {
      const auto members = h.level_members(l);
      std::vector<double> e(members.size());
      for (std::size_t j = 0; j < members.size(); ++j) e[j] = instance_energy(model, members[j], y);
      auto& r = rankings[static_cast<std::size_t>(l - 1)][i];
      for (const auto j : order_by_energy(e)) r.push_back(static_cast<std::uint32_t>(j));
      best_energy[static_cast<std::size_t>(l - 1)][i] = e[r.front()];
    }
  });

  ClassificationReport report;
  ConfusionCounts total;
  double hit3_sum = 0.0;
  double hit5_sum = 0.0;
  for (int l = 1; l <= levels; ++l) {
    const auto li = static_cast<std::size_t>(l - 1);
    std::vector<std::uint32_t> predicted(n);
    std::vector<std::uint32_t> truth(n);
    for (std::size_t i = 0; i < n; ++i) {
      predicted[i] = rankings[li][i].front();
      truth[i] = static_cast<std::uint32_t>(h.index_in_level(h.path(features.leaf_labels[rows[i]])[li]));
    }
    const auto counts = single_label_counts(predicted, truth, h.level_size(l));
    ConfusionCounts level_total;
    for (const auto& c : counts) level_total += c;
    total += level_total;
    report.level_micro_f1.push_back(n == 0 ? 0.0 : precision_recall_f1(level_total).f1);
    const double h3 = n == 0 ? 0.0 : hit_at_k(rankings[li], truth, 3);
    const double h5 = n == 0 ? 0.0 : hit_at_k(rankings[li], truth, 5);
    hit3_sum += h3;
    hit5_sum += h5;
    if (l == levels) {
      report.hit3_last = h3;
      report.hit5_last = h5;
    }
  }
  report.micro_f1 = n == 0 ? 0.0 : precision_recall_f1(total).f1;
  report.hit3_mean = hit3_sum / levels;
  report.hit5_mean = hit5_sum / levels;

  for (std::size_t i = 0; i < n; ++i) {
    for (int l = 1; l <= levels; ++l) {
      const auto li = static_cast<std::size_t>(l - 1);
      report.predictions.push_back(
          {rows[i], l, h.level_members(l)[rankings[li][i].front()], best_energy[li][i]});
    }
  }
  return report;
}

ReconstructionReport reconstruct_labels(const EmbeddingTable& labels, const ConeParams& cone, const Hierarchy& h) {
  const EdgeSet closure = transitive_closure(h);
  const EdgeIndex index(closure.edges);
  std::vector<Edge> negatives;
  for (NodeId u = 0; u < h.size(); ++u) {
    for (NodeId v = 0; v < h.size(); ++v) {
      if (u != v && !index.contains(u, v)) negatives.push_back({u, v});
    }
  }
  const auto pe = edge_energies(labels, cone, closure.edges);
  const auto ne = edge_energies(labels, cone, negatives);
  const auto best = best_threshold(pe, ne);
  const std::size_t tn = static_cast<std::size_t>(std::ranges::count_if(ne, [&](double e) { return e > best.threshold; }));
  return {best.recall, ne.empty() ? 0.0 : static_cast<double>(tn) / static_cast<double>(ne.size()), best.f1,
          best.threshold};
}

void save_model(const JointModel& model, const std::filesystem::path& path) {
  ByteWriter out;
  out.magic("JMDL");
  out.u8(static_cast<std::uint8_t>(model.cone.geometry));
  out.f64(model.cone.aperture_k);
  out.f64(model.margin);
  out.f64(model.cone.max_norm);
  write_embedding_block(out, model.labels);
  out.magic("LMAP");
  out.u32(static_cast<std::uint32_t>(model.map.weights.rows()));
  out.u32(static_cast<std::uint32_t>(model.map.weights.cols()));
  for (Eigen::Index i = 0; i < model.map.weights.rows(); ++i) {
    for (Eigen::Index j = 0; j < model.map.weights.cols(); ++j) out.f64(model.map.weights(i, j));
  }
  out.save(path);
}

JointModel load_model(const std::filesystem::path& path) {
  auto in = ByteReader::open(path);
  in.expect_magic("JMDL");
  JointModel m;
  const std::uint8_t g = in.u8();
  if (g > static_cast<std::uint8_t>(Geometry::hyperbolic_cone)) throw FormatError("unknown geometry tag");
  m.cone.geometry = static_cast<Geometry>(g);
  m.cone.aperture_k = in.f64();
  m.margin = in.f64();
  m.cone.max_norm = in.f64();
  m.labels = read_embedding_block(in);
  in.expect_magic("LMAP");
  const std::uint32_t d = in.u32();
  const std::uint32_t n = in.u32();
  if (n != m.labels.dim) throw FormatError("linear map width does not match label dimension");
  m.map.geometry = m.cone.geometry;
  m.map.weights.resize(d, n);
  for (Eigen::Index i = 0; i < m.map.weights.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.map.weights.cols(); ++j) m.map.weights(i, j) = in.f64();
  }
  if (!in.at_end()) throw FormatError("trailing bytes in model file");
  return m;
}

void save_predictions(const ClassificationReport& report, const FeatureMatrix& features, const Hierarchy& h,
                      const std::filesystem::path& path) {
  auto out = tsv::open_out(path);
  for (const auto& p : report.predictions) {
    out << fmt::format("{}\t{}\t{}\t{:.17g}\n", features.instance_ids[p.row], p.level, h.node(p.label).key, p.energy);
  }
}

}  // namespace hierembed
