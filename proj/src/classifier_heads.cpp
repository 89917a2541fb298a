#include "hierembed/classifier_heads.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <stdexcept>

#include <fmt/format.h>

#include "hierembed/metrics.hpp"
#include "hierembed/optim.hpp"
#include "tsv.hpp"

namespace hierembed {

std::string_view to_string(HeadKind k) {
  switch (k) {
    case HeadKind::hab: return "hab";
    case HeadKind::plc: return "plc";
    case HeadKind::mc: return "mc";
    case HeadKind::mplc: return "mplc";
    case HeadKind::hs: return "hs";
  }
  return "?";
}

HeadKind parse_head(std::string_view s) {
  for (auto k : {HeadKind::hab, HeadKind::plc, HeadKind::mc, HeadKind::mplc, HeadKind::hs}) {
    if (s == to_string(k)) return k;
  }
  throw std::invalid_argument(fmt::format("unknown classifier head '{}'", s));
}

ThresholdMode parse_threshold_mode(std::string_view s) {
  if (s == "ofadb") return ThresholdMode::ofadb;
  if (s == "pcdb") return ThresholdMode::pcdb;
  throw std::invalid_argument(fmt::format("unknown threshold mode '{}'", s));
}

ImbalanceMode parse_imbalance(std::string_view s) {
  if (s == "none") return ImbalanceMode::none;
  if (s == "class-weights") return ImbalanceMode::class_weights;
  if (s == "resample") return ImbalanceMode::resample;
  throw std::invalid_argument(fmt::format("unknown imbalance mode '{}'", s));
}

LabelLayout::LabelLayout(const Hierarchy& h) {
  if (!h.uniform_depth()) throw HierarchyError("classifier heads need every leaf on the last level");
  const int L = h.level_count();
  for (int l = 1; l <= L; ++l) {
    level_offsets_.push_back(total_);
    level_sizes_.push_back(h.level_size(l));
    total_ += h.level_size(l);
  }
  children_.resize(L);
  parent_.resize(L);
  leaves_.resize(L);
  group_of_.resize(L);
  for (int l = 1; l <= L; ++l) {
    const auto members = h.level_members(l);
    auto& ch = children_[l - 1];
    auto& pa = parent_[l - 1];
    ch.resize(members.size());
    pa.assign(members.size(), 0);
    group_of_[l - 1].resize(members.size());
    for (std::size_t j = 0; j < members.size(); ++j) {
      for (const NodeId c : h.children(members[j])) ch[j].push_back(h.index_in_level(c));
      if (l > 1) pa[j] = h.index_in_level(*h.parent(members[j]));
    }
  }
  // Leaves below each node, bottom-up.
  leaves_[L - 1].resize(level_sizes_[L - 1]);
  for (std::size_t j = 0; j < level_sizes_[L - 1]; ++j) leaves_[L - 1][j] = {j};
  for (int l = L - 1; l >= 1; --l) {
    leaves_[l - 1].resize(level_sizes_[l - 1]);
    for (std::size_t j = 0; j < level_sizes_[l - 1]; ++j) {
      for (const std::size_t c : children_[l - 1][j]) {
        const auto& sub = leaves_[l][c];
        leaves_[l - 1][j].insert(leaves_[l - 1][j].end(), sub.begin(), sub.end());
      }
      std::ranges::sort(leaves_[l - 1][j]);
    }
  }
  // Sibling groups: the top level, then each internal node's children by node id.
  std::size_t offset = 0;
  const auto add_group = [&](int child_level, std::vector<std::size_t> members) {
    const std::size_t g = groups_.size();
    for (std::size_t k = 0; k < members.size(); ++k) group_of_[child_level - 1][members[k]] = {g, k};
    const std::size_t width = members.size();
    groups_.push_back(Group{offset, child_level, std::move(members)});
    offset += width;
  };
  std::vector<std::size_t> top(level_sizes_[0]);
  std::iota(top.begin(), top.end(), std::size_t{0});
  add_group(1, std::move(top));
  std::vector<NodeId> internal;
  for (NodeId n = 0; n < h.size(); ++n) {
    if (!h.is_leaf(n)) internal.push_back(n);
  }
  for (const NodeId n : internal) {
    const int l = h.node(n).level;
    add_group(l + 1, children_[l - 1][h.index_in_level(n)]);
  }
}

std::size_t LabelLayout::output_width(HeadKind k) const {
  return k == HeadKind::mc ? level_sizes_.back() : total_;
}

std::span<const std::size_t> LabelLayout::children(int level, std::size_t j) const {
  return children_.at(static_cast<std::size_t>(level - 1)).at(j);
}

std::size_t LabelLayout::parent(int level, std::size_t j) const {
  if (level < 2) throw std::out_of_range("level-1 labels have no parent");
  return parent_.at(static_cast<std::size_t>(level - 1)).at(j);
}

std::span<const std::size_t> LabelLayout::leaves_under(int level, std::size_t j) const {
  return leaves_.at(static_cast<std::size_t>(level - 1)).at(j);
}

std::pair<std::size_t, std::size_t> LabelLayout::group_of(int level, std::size_t j) const {
  return group_of_.at(static_cast<std::size_t>(level - 1)).at(j);
}

std::vector<std::size_t> LabelLayout::truth_path(const Hierarchy& h, NodeId leaf) const {
  if (h.node(leaf).level != levels()) throw HierarchyError("truth path needs a last-level label");
  std::vector<std::size_t> tau;
  for (const NodeId n : h.path(leaf)) tau.push_back(h.index_in_level(n));
  return tau;
}

double log_sum_exp(std::span<const double> x) {
  if (x.empty()) return -std::numeric_limits<double>::infinity();
  const double m = *std::ranges::max_element(x);
  if (!std::isfinite(m)) return m;
  double s = 0.0;
  for (const double v : x) s += std::exp(v - m);
  return m + std::log(s);
}

std::vector<double> softmax(std::span<const double> x) {
  const double lse = log_sum_exp(x);
  std::vector<double> p(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) p[i] = std::exp(x[i] - lse);
  return p;
}

namespace {

// log(1 + e^v) without overflow.
double softplus(double v) { return v > 0.0 ? v + std::log1p(std::exp(-v)) : std::log1p(std::exp(v)); }

double sigmoid(double v) {
  if (v >= 0.0) return 1.0 / (1.0 + std::exp(-v));
  const double e = std::exp(v);
  return e / (1.0 + e);
}

void check_grad(std::span<double> grad, std::size_t n) {
  if (!grad.empty() && grad.size() != n) throw std::invalid_argument("gradient buffer shape mismatch");
}

void check_tau(const LabelLayout& layout, std::span<const std::size_t> tau) {
  if (tau.size() != static_cast<std::size_t>(layout.levels())) {
    throw std::invalid_argument("need one target per level");
  }
  for (int l = 1; l <= layout.levels(); ++l) {
    if (tau[l - 1] >= layout.level_size(l)) throw std::out_of_range(fmt::format("target out of range at level {}", l));
  }
}

void check_path(const LabelLayout& layout, std::span<const std::size_t> tau) {
  check_tau(layout, tau);
  for (int l = 2; l <= layout.levels(); ++l) {
    if (layout.parent(l, tau[l - 1]) != tau[l - 2]) {
      throw HierarchyError(fmt::format("target at level {} is not a child of the level-{} target", l, l - 1));
    }
  }
}

// Cross-entropy of `x` restricted to `idx` (absolute positions), true entry `truth`.
double restricted_ce(std::span<const double> x, std::span<const std::size_t> idx, std::size_t truth,
                     std::span<double> grad) {
  std::vector<double> sub(idx.size());
  for (std::size_t k = 0; k < idx.size(); ++k) sub[k] = x[idx[k]];
  const double lse = log_sum_exp(sub);
  if (!grad.empty()) {
    for (std::size_t k = 0; k < idx.size(); ++k) grad[idx[k]] += std::exp(sub[k] - lse);
    grad[truth] -= 1.0;
  }
  return lse - x[truth];
}

std::vector<std::size_t> range_indices(std::size_t offset, std::size_t n) {
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), offset);
  return idx;
}

std::size_t argmax(std::span<const double> v) {
  return static_cast<std::size_t>(std::ranges::max_element(v) - v.begin());
}

}  // namespace

double hab_loss(std::span<const double> x, std::span<const double> y, std::span<double> grad) {
  if (x.size() != y.size() || x.empty()) throw std::invalid_argument("hab_loss: logits and targets differ in size");
  check_grad(grad, x.size());
  const double n = static_cast<double>(x.size());
  double loss = 0.0;
  for (std::size_t j = 0; j < x.size(); ++j) {
    loss += y[j] * softplus(-x[j]) + (1.0 - y[j]) * softplus(x[j]);
    if (!grad.empty()) grad[j] += (sigmoid(x[j]) - y[j]) / n;
  }
  return loss / n;
}

double plc_loss(std::span<const double> x, const LabelLayout& layout, std::span<const std::size_t> tau,
                std::span<double> grad) {
  if (x.size() != layout.total()) throw std::invalid_argument("plc_loss: logits do not match the level layout");
  check_grad(grad, x.size());
  check_tau(layout, tau);
  double loss = 0.0;
  for (int l = 1; l <= layout.levels(); ++l) {
    const auto idx = range_indices(layout.level_offset(l), layout.level_size(l));
    loss += restricted_ce(x, idx, layout.level_offset(l) + tau[l - 1], grad);
  }
  return loss;
}

LevelProbs level_marginals(std::span<const double> leaf_probs, const LabelLayout& layout) {
  const int L = layout.levels();
  if (leaf_probs.size() != layout.level_size(L)) throw std::invalid_argument("leaf probabilities do not match the layout");
  LevelProbs p(static_cast<std::size_t>(L));
  p[L - 1].assign(leaf_probs.begin(), leaf_probs.end());
  for (int l = L - 1; l >= 1; --l) {
    p[l - 1].assign(layout.level_size(l), 0.0);
    for (std::size_t j = 0; j < layout.level_size(l); ++j) {
      for (const std::size_t c : layout.children(l, j)) p[l - 1][j] += p[l][c];
    }
  }
  return p;
}

LevelProbs mc_probabilities(std::span<const double> leaf_logits, const LabelLayout& layout) {
  if (leaf_logits.size() != layout.level_size(layout.levels())) {
    throw std::invalid_argument("mc: leaf logits do not match the last level");
  }
  return level_marginals(softmax(leaf_logits), layout);
}

double mc_loss(std::span<const double> leaf_logits, const LabelLayout& layout, std::span<const std::size_t> tau,
               std::span<double> grad) {
  const int L = layout.levels();
  if (leaf_logits.size() != layout.level_size(L)) throw std::invalid_argument("mc: leaf logits do not match the last level");
  check_grad(grad, leaf_logits.size());
  check_tau(layout, tau);
  const double lse_all = log_sum_exp(leaf_logits);
  const auto p = softmax(leaf_logits);
  double loss = 0.0;
  std::vector<double> sub;
  for (int l = 1; l <= L; ++l) {
    // -log p_l[τ_l] = lse(all leaves) - lse(leaves under τ_l)
    const auto leaves = layout.leaves_under(l, tau[l - 1]);
    sub.resize(leaves.size());
    for (std::size_t k = 0; k < leaves.size(); ++k) sub[k] = leaf_logits[leaves[k]];
    const double lse_sub = log_sum_exp(sub);
    loss += lse_all - lse_sub;
    if (!grad.empty()) {
      for (std::size_t i = 0; i < grad.size(); ++i) grad[i] += p[i];
      for (std::size_t k = 0; k < leaves.size(); ++k) grad[leaves[k]] -= std::exp(sub[k] - lse_sub);
    }
  }
  return loss;
}

double mplc_loss(std::span<const double> x, const LabelLayout& layout, std::span<const std::size_t> tau,
                 std::span<double> grad) {
  if (x.size() != layout.total()) throw std::invalid_argument("mplc_loss: logits do not match the level layout");
  check_grad(grad, x.size());
  check_path(layout, tau);
  double loss = 0.0;
  for (int l = 1; l <= layout.levels(); ++l) {
    const std::size_t off = layout.level_offset(l);
    std::vector<std::size_t> idx;
    if (l == 1) {
      idx = range_indices(off, layout.level_size(1));
    } else {
      for (const std::size_t c : layout.children(l - 1, tau[l - 2])) idx.push_back(off + c);
    }
    loss += restricted_ce(x, idx, off + tau[l - 1], grad);
  }
  return loss;
}

std::vector<std::size_t> mplc_predict(std::span<const double> x, const LabelLayout& layout) {
  if (x.size() != layout.total()) throw std::invalid_argument("mplc_predict: logits do not match the level layout");
  std::vector<std::size_t> out;
  out.push_back(argmax(x.subspan(layout.level_offset(1), layout.level_size(1))));
  for (int l = 2; l <= layout.levels(); ++l) {
    const auto allowed = layout.children(l - 1, out.back());
    const std::size_t off = layout.level_offset(l);
    std::size_t best = allowed.front();
    for (const std::size_t c : allowed) {
      if (x[off + c] > x[off + best]) best = c;
    }
    out.push_back(best);
  }
  return out;
}

HsProbabilities hs_probabilities(std::span<const double> group_logits, const LabelLayout& layout) {
  if (group_logits.size() != layout.total()) throw std::invalid_argument("hs: logits do not match the sibling groups");
  HsProbabilities out;
  for (const auto& g : layout.groups()) out.conditionals.push_back(softmax(group_logits.subspan(g.offset, g.members.size())));
  const int L = layout.levels();
  out.leaf_joint.assign(layout.level_size(L), 1.0);
  for (std::size_t leaf = 0; leaf < out.leaf_joint.size(); ++leaf) {
    std::size_t j = leaf;
    for (int l = L; l >= 1; --l) {
      const auto [g, k] = layout.group_of(l, j);
      out.leaf_joint[leaf] *= out.conditionals[g][k];
      if (l > 1) j = layout.parent(l, j);
    }
  }
  return out;
}

double hs_loss(std::span<const double> group_logits, const LabelLayout& layout, std::span<const std::size_t> tau,
               std::span<double> grad) {
  if (group_logits.size() != layout.total()) throw std::invalid_argument("hs: logits do not match the sibling groups");
  check_grad(grad, group_logits.size());
  check_path(layout, tau);
  double loss = 0.0;
  for (int l = 1; l <= layout.levels(); ++l) {
    const auto [g, k] = layout.group_of(l, tau[l - 1]);
    const auto& group = layout.groups()[g];
    const auto idx = range_indices(group.offset, group.members.size());
    loss += restricted_ce(group_logits, idx, group.offset + k, grad);
  }
  return loss;
}

std::vector<std::size_t> predict_levels(HeadKind head, std::span<const double> logits, const LabelLayout& layout) {
  std::vector<std::size_t> out;
  switch (head) {
    case HeadKind::plc:
      if (logits.size() != layout.total()) throw std::invalid_argument("plc: logits do not match the level layout");
      for (int l = 1; l <= layout.levels(); ++l) {
        out.push_back(argmax(logits.subspan(layout.level_offset(l), layout.level_size(l))));
      }
      return out;
    case HeadKind::mc:
      for (const auto& p : mc_probabilities(logits, layout)) out.push_back(argmax(p));
      return out;
    case HeadKind::mplc:
      return mplc_predict(logits, layout);
    case HeadKind::hs:
      for (const auto& p : level_marginals(hs_probabilities(logits, layout).leaf_joint, layout)) out.push_back(argmax(p));
      return out;
    case HeadKind::hab:
      break;
  }
  throw std::invalid_argument("hab predictions need thresholds");
}

namespace {

// Highest-first sweep; strict improvement keeps the larger threshold on ties.
struct SweepResult {
  double threshold;
  double f1;
};

SweepResult sweep(std::vector<std::pair<double, bool>> scored) {
  std::ranges::sort(scored, [](const auto& a, const auto& b) { return a.first > b.first; });
  std::size_t positives = 0;
  for (const auto& s : scored) positives += s.second ? 1 : 0;
  SweepResult best{std::numeric_limits<double>::infinity(), 0.0};
  if (!scored.empty()) best.threshold = std::nextafter(scored.front().first, std::numeric_limits<double>::infinity());
  std::size_t tp = 0;
  std::size_t fp = 0;
  for (std::size_t i = 0; i < scored.size(); ++i) {
    (scored[i].second ? tp : fp) += 1;
    const bool boundary = i + 1 == scored.size() || scored[i + 1].first != scored[i].first;
    if (!boundary) continue;
    const std::size_t fn = positives - tp;
    const double f1 = tp == 0 ? 0.0 : 2.0 * static_cast<double>(tp) / static_cast<double>(2 * tp + fp + fn);
    if (f1 > best.f1) {
      best.f1 = f1;
      best.threshold = i + 1 == scored.size() ? scored[i].first : 0.5 * (scored[i].first + scored[i + 1].first);
    }
  }
  return best;
}

}  // namespace

std::vector<double> select_thresholds(const RowMatrix& scores, const RowMatrix& targets, ThresholdMode mode) {
  if (scores.rows() == 0 || scores.cols() == 0) throw std::invalid_argument("threshold selection needs validation scores");
  if (scores.rows() != targets.rows() || scores.cols() != targets.cols()) {
    throw std::invalid_argument("scores and targets differ in shape");
  }
  const auto cols = static_cast<std::size_t>(scores.cols());
  if (mode == ThresholdMode::ofadb) {
    std::vector<std::pair<double, bool>> all;
    all.reserve(static_cast<std::size_t>(scores.size()));
    for (Eigen::Index i = 0; i < scores.rows(); ++i) {
      for (Eigen::Index j = 0; j < scores.cols(); ++j) all.emplace_back(scores(i, j), targets(i, j) > 0.5);
    }
    return std::vector<double>(cols, sweep(std::move(all)).threshold);
  }
  std::vector<double> out(cols);
  for (Eigen::Index j = 0; j < scores.cols(); ++j) {
    std::vector<std::pair<double, bool>> col;
    col.reserve(static_cast<std::size_t>(scores.rows()));
    for (Eigen::Index i = 0; i < scores.rows(); ++i) col.emplace_back(scores(i, j), targets(i, j) > 0.5);
    out[static_cast<std::size_t>(j)] = sweep(std::move(col)).threshold;
  }
  return out;
}

LabelCountStats predicted_label_counts(const RowMatrix& scores, std::span<const double> thresholds) {
  if (static_cast<std::size_t>(scores.cols()) != thresholds.size()) throw std::invalid_argument("one threshold per column");
  if (scores.rows() == 0) return {};
  std::vector<double> counts;
  for (Eigen::Index i = 0; i < scores.rows(); ++i) {
    double c = 0.0;
    for (Eigen::Index j = 0; j < scores.cols(); ++j) c += scores(i, j) >= thresholds[static_cast<std::size_t>(j)] ? 1.0 : 0.0;
    counts.push_back(c);
  }
  LabelCountStats s;
  s.min = *std::ranges::min_element(counts);
  s.max = *std::ranges::max_element(counts);
  s.mean = std::accumulate(counts.begin(), counts.end(), 0.0) / static_cast<double>(counts.size());
  double var = 0.0;
  for (const double c : counts) var += (c - s.mean) * (c - s.mean);
  s.stddev = std::sqrt(var / static_cast<double>(counts.size()));
  return s;
}

ImbalancePolicy ImbalancePolicy::from_labels(ImbalanceMode mode, std::span<const NodeId> train_labels) {
  if (train_labels.empty()) throw std::invalid_argument("imbalance policy needs training labels");
  std::map<NodeId, std::size_t> freq;
  for (const NodeId l : train_labels) ++freq[l];
  ImbalancePolicy p;
  p.mode = mode;
  const double n = static_cast<double>(train_labels.size());
  const double k = static_cast<double>(freq.size());
  for (const auto& [label, count] : freq) p.weights[label] = n / (k * static_cast<double>(count));
  return p;
}

double ImbalancePolicy::weight(NodeId label) const {
  const auto it = weights.find(label);
  if (it == weights.end()) throw std::out_of_range(fmt::format("label {} never occurs in the training split", label));
  return it->second;
}

double ImbalancePolicy::loss_scale(NodeId label) const {
  return mode == ImbalanceMode::class_weights ? weight(label) : 1.0;
}

std::vector<std::size_t> ImbalancePolicy::epoch_order(std::span<const NodeId> labels, Rng& rng) const {
  std::vector<std::size_t> order(labels.size());
  if (mode != ImbalanceMode::resample) {
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::ranges::shuffle(order, rng);
    return order;
  }
  std::vector<double> w(labels.size());
  for (std::size_t i = 0; i < labels.size(); ++i) w[i] = weight(labels[i]);
  std::discrete_distribution<std::size_t> draw(w.begin(), w.end());
  for (auto& o : order) o = draw(rng);
  return order;
}

Eigen::VectorXd LinearClassifier::logits(std::span<const double> row) const {
  if (static_cast<Eigen::Index>(row.size()) != weights.rows()) throw DimensionError("feature width does not match the classifier");
  const Eigen::Map<const Eigen::VectorXd> f(row.data(), static_cast<Eigen::Index>(row.size()));
  return weights.transpose() * f + bias;
}

namespace {

std::vector<double> multi_hot(const LabelLayout& layout, std::span<const std::size_t> tau) {
  std::vector<double> y(layout.total(), 0.0);
  for (int l = 1; l <= layout.levels(); ++l) y[layout.level_offset(l) + tau[l - 1]] = 1.0;
  return y;
}

double head_loss(HeadKind head, std::span<const double> x, const LabelLayout& layout, std::span<const std::size_t> tau,
                 std::span<double> grad) {
  switch (head) {
    case HeadKind::hab: {
      const auto y = multi_hot(layout, tau);
      return hab_loss(x, y, grad);
    }
    case HeadKind::plc: return plc_loss(x, layout, tau, grad);
    case HeadKind::mc: return mc_loss(x, layout, tau, grad);
    case HeadKind::mplc: return mplc_loss(x, layout, tau, grad);
    case HeadKind::hs: return hs_loss(x, layout, tau, grad);
  }
  throw std::logic_error("unknown head");
}

RowMatrix score_rows(const LinearClassifier& model, const FeatureMatrix& features, std::span<const std::size_t> rows) {
  RowMatrix out(static_cast<Eigen::Index>(rows.size()), model.weights.cols());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    Eigen::VectorXd x = model.logits(features.row(rows[i]));
    if (model.head == HeadKind::hab) x = x.unaryExpr([](double v) { return sigmoid(v); });
    out.row(static_cast<Eigen::Index>(i)) = x.transpose();
  }
  return out;
}

}  // namespace

ClassifierReport evaluate_classifier(const LinearClassifier& model, const Hierarchy& h, const LabelLayout& layout,
                                     const FeatureMatrix& features, std::span<const std::size_t> rows) {
  if (rows.empty()) throw std::invalid_argument("classifier evaluation needs at least one row");
  const int L = layout.levels();
  std::vector<ConfusionCounts> level_counts(static_cast<std::size_t>(L));
  const RowMatrix scores = score_rows(model, features, rows);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto tau = layout.truth_path(h, features.leaf_labels[rows[i]]);
    const auto s = std::span<const double>(scores.data() + i * scores.cols(), static_cast<std::size_t>(scores.cols()));
    if (model.head == HeadKind::hab) {
      for (int l = 1; l <= L; ++l) {
        auto& c = level_counts[l - 1];
        for (std::size_t j = 0; j < layout.level_size(l); ++j) {
          const std::size_t col = layout.level_offset(l) + j;
          const bool pred = s[col] >= model.thresholds.at(col);
          const bool truth = j == tau[l - 1];
          if (pred && truth) ++c.tp;
          else if (pred) ++c.fp;
          else if (truth) ++c.fn;
          else ++c.tn;
        }
      }
    } else {
      const auto pred = predict_levels(model.head, s, layout);
      for (int l = 1; l <= L; ++l) {
        auto& c = level_counts[l - 1];
        if (pred[l - 1] == tau[l - 1]) {
          ++c.tp;
        } else {
          ++c.fp;
          ++c.fn;
        }
      }
    }
  }
  ClassifierReport r;
  ConfusionCounts total;
  for (const auto& c : level_counts) {
    r.level_f1.push_back(precision_recall_f1(c).f1);
    total += c;
  }
  const auto prf = precision_recall_f1(total);
  r.micro_f1 = prf.f1;
  r.micro_precision = prf.precision;
  r.micro_recall = prf.recall;
  r.level_mean_f1 = std::accumulate(r.level_f1.begin(), r.level_f1.end(), 0.0) / static_cast<double>(L);
  if (model.head == HeadKind::hab) r.label_counts = predicted_label_counts(scores, model.thresholds);
  return r;
}

ClassifierResult train_linear_classifier(const Hierarchy& h, const FeatureMatrix& features, const InstanceSplit& split,
                                         const ClassifierConfig& config) {
  if (split.train.empty()) throw std::invalid_argument("classifier training needs training rows");
  if (split.val.empty()) throw std::invalid_argument("classifier training needs validation rows");
  if (config.batch_size == 0) throw std::invalid_argument("batch size must be positive");
  if (config.epochs < 0) throw std::invalid_argument("epochs must be non-negative");
  if (!(config.lr > 0.0)) throw std::invalid_argument("learning rate must be positive");

  const LabelLayout layout(h);
  const auto D = static_cast<Eigen::Index>(features.cols());
  const auto width = static_cast<Eigen::Index>(layout.output_width(config.head));

  Rng rng(config.seed);
  LinearClassifier model;
  model.head = config.head;
  std::normal_distribution<double> init(0.0, 0.01);
  model.weights = Eigen::MatrixXd::NullaryExpr(D, width, [&] { return init(rng); });
  model.bias = Eigen::VectorXd::Zero(width);
  if (config.head == HeadKind::hab) model.thresholds.assign(static_cast<std::size_t>(width), 0.5);

  std::vector<NodeId> train_labels;
  std::vector<std::vector<std::size_t>> train_tau;
  for (const std::size_t r : split.train) {
    train_labels.push_back(features.leaf_labels[r]);
    train_tau.push_back(layout.truth_path(h, features.leaf_labels[r]));
  }
  const auto policy = ImbalancePolicy::from_labels(config.imbalance, train_labels);

  Adam opt_w(static_cast<std::size_t>(model.weights.size()), config.lr);
  Adam opt_b(static_cast<std::size_t>(width), config.lr);
  Eigen::MatrixXd grad_w(D, width);
  Eigen::VectorXd grad_b(width);
  std::vector<double> g(static_cast<std::size_t>(width));

  ClassifierResult result;
  for (int epoch = 1; epoch <= config.epochs; ++epoch) {
    const auto order = policy.epoch_order(train_labels, rng);
    double epoch_loss = 0.0;
    for (std::size_t start = 0; start < order.size(); start += config.batch_size) {
      const std::size_t end = std::min(order.size(), start + config.batch_size);
      const double inv = 1.0 / static_cast<double>(end - start);
      grad_w.setZero();
      grad_b.setZero();
      for (std::size_t b = start; b < end; ++b) {
        const std::size_t k = order[b];
        const auto row = features.row(split.train[k]);
        const Eigen::VectorXd x = model.logits(row);
        std::ranges::fill(g, 0.0);
        const double scale = policy.loss_scale(train_labels[k]);
        epoch_loss += scale * head_loss(config.head, std::span<const double>(x.data(), g.size()), layout, train_tau[k], g);
        const Eigen::Map<const Eigen::VectorXd> f(row.data(), D);
        const Eigen::Map<const Eigen::VectorXd> gx(g.data(), width);
        grad_w.noalias() += (scale * inv) * f * gx.transpose();
        grad_b += (scale * inv) * gx;
      }
      opt_w.step(std::span<double>(model.weights.data(), static_cast<std::size_t>(model.weights.size())),
                 std::span<const double>(grad_w.data(), static_cast<std::size_t>(grad_w.size())));
      opt_b.step(std::span<double>(model.bias.data(), static_cast<std::size_t>(width)),
                 std::span<const double>(grad_b.data(), static_cast<std::size_t>(width)));
    }
    if (!std::isfinite(epoch_loss)) throw NumericalError(fmt::format("classifier loss diverged at epoch {}", epoch));
    const auto val = evaluate_classifier(model, h, layout, features, split.val);
    result.log.push_back({epoch, epoch_loss / static_cast<double>(order.size()), val.level_f1});
  }

  if (config.head == HeadKind::hab) {
    const RowMatrix scores = score_rows(model, features, split.val);
    RowMatrix targets = RowMatrix::Zero(scores.rows(), scores.cols());
    for (std::size_t i = 0; i < split.val.size(); ++i) {
      const auto y = multi_hot(layout, layout.truth_path(h, features.leaf_labels[split.val[i]]));
      for (std::size_t j = 0; j < y.size(); ++j) targets(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = y[j];
    }
    model.thresholds = select_thresholds(scores, targets, config.threshold_mode);
  }
  result.val = evaluate_classifier(model, h, layout, features, split.val);
  if (!split.test.empty()) result.test = evaluate_classifier(model, h, layout, features, split.test);
  result.model = std::move(model);
  return result;
}

void write_classifier_report(const std::string& model_name, const ClassifierReport& report,
                             const std::filesystem::path& path) {
  auto out = tsv::open_out(path);
  out << "model,m-F1";
  for (std::size_t l = 1; l <= report.level_f1.size(); ++l) out << ",L" << l;
  out << ",level-mean-F1,m-P,m-R,count_min,count_max,count_mean,count_std\n";
  out << model_name << fmt::format(",{:.6f}", report.micro_f1);
  for (const double f : report.level_f1) out << fmt::format(",{:.6f}", f);
  out << fmt::format(",{:.6f},{:.6f},{:.6f}", report.level_mean_f1, report.micro_precision, report.micro_recall);
  if (report.label_counts) {
    const auto& c = *report.label_counts;
    out << fmt::format(",{:g},{:g},{:.4f},{:.4f}\n", c.min, c.max, c.mean, c.stddev);
  } else {
    out << ",,,,\n";
  }
}

}  // namespace hierembed
