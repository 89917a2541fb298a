#include "graph_trainer.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <unordered_map>

namespace hierembed::detail {

Vec log0(std::span<const double> y) {
  const double r = norm(y);
  Vec out(y.begin(), y.end());
  if (r < kDenominatorFloor) return out;
  const double s = std::atanh(std::min(r, 1.0 - 1e-15)) / r;
  for (auto& c : out) c *= s;
  return out;
}

Vec exp0_backward(std::span<const double> z, std::span<const double> grad_y) {
  const double r = norm(z);
  Vec out(grad_y.begin(), grad_y.end());
  if (r < kDenominatorFloor) return out;
  const double t = std::tanh(r);
  const double a = t / r;
  const double b = (1.0 - t * t) - a;
  const double zg = dot(z, grad_y) / r;
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a * grad_y[i] + b * zg * z[i] / r;
  return out;
}

namespace {

class Trainer {
 public:
  Trainer(const GraphTrainSpec& spec, EmbeddingTable labels, Eigen::MatrixXd weights, Rng& rng)
      : spec_(spec),
        h_(*spec.hierarchy),
        labels_(std::move(labels)),
        weights_(std::move(weights)),
        rng_(rng),
        n_labels_(static_cast<NodeId>(labels_.size())),
        label_opt_(spec.label_optimizer, spec.lr_labels, labels_.coords.size()),
        weight_opt_(static_cast<std::size_t>(weights_.size()), spec.lr_im),
        label_grad_(labels_.coords.size(), 0.0),
        weight_grad_(Eigen::MatrixXd::Zero(weights_.rows(), weights_.cols())) {
    if (spec.label_tangent) {
      tangent_.reserve(labels_.coords.size());
      for (std::size_t i = 0; i < labels_.size(); ++i) {
        const Vec z = log0(labels_.row(i));
        tangent_.insert(tangent_.end(), z.begin(), z.end());
      }
    }
    for (std::size_t k = 0; k < spec.instance_rows.size(); ++k) {
      instance_nodes_.push_back(n_labels_ + static_cast<NodeId>(k));
    }
    build_pools();
  }

  GraphTrainOutput run(const EpochValidator& validate) {
    GraphTrainOutput out;
    std::vector<Edge> order = spec_.positives;
    for (int epoch = 1; epoch <= spec_.epochs; ++epoch) {
      std::ranges::shuffle(order, rng_);
      double epoch_loss = 0.0;
      for (std::size_t start = 0; start < order.size(); start += spec_.batch_size) {
        const std::size_t end = std::min(order.size(), start + spec_.batch_size);
        epoch_loss += batch_step(std::span<const Edge>(order).subspan(start, end - start));
      }
      if (!std::isfinite(epoch_loss)) throw NumericalError("training loss diverged at epoch " + std::to_string(epoch));
      EpochLog entry{epoch, epoch_loss, std::numeric_limits<double>::quiet_NaN(),
                     std::numeric_limits<double>::quiet_NaN()};
      if (validate) std::tie(entry.val_f1, entry.threshold) = validate(labels_, weights_);
      out.log.push_back(entry);
    }
    out.labels = std::move(labels_);
    out.weights = std::move(weights_);
    return out;
  }

 private:
  bool is_instance(NodeId n) const { return n >= n_labels_; }

  NodeId leaf_of(NodeId instance) const {
    return spec_.features->leaf_labels[spec_.instance_rows[instance - n_labels_]];
  }

  bool positive_relation(NodeId parent, NodeId child) const {
    if (is_instance(child)) {
      const NodeId leaf = leaf_of(child);
      return parent == leaf || spec_.label_closure->contains(parent, leaf);
    }
    return spec_.label_closure->contains(parent, child);
  }

  void build_pools() {
    const int levels = h_.level_count();
    for (int l = 1; l <= levels; ++l) parent_pools_.push_back(h_.level_members(l));
    child_pools_ = parent_pools_;
    if (!instance_nodes_.empty()) {
      const int repeats = spec_.balance_negatives ? levels : 1;
      for (int r = 0; r < repeats; ++r) child_pools_.push_back(instance_nodes_);
    }
    if (!spec_.pick_per_level) {
      all_labels_.resize(n_labels_);
      std::iota(all_labels_.begin(), all_labels_.end(), NodeId{0});
      all_nodes_ = all_labels_;
      all_nodes_.insert(all_nodes_.end(), instance_nodes_.begin(), instance_nodes_.end());
      uniform_parent_pools_.assign(parent_pools_.size(), all_labels_);
      uniform_child_pools_.assign(child_pools_.size(), all_nodes_);
    }
  }

  std::vector<Edge> negatives_for(Edge positive) {
    const auto valid = [this](Edge c) { return !is_instance(c.parent) && !positive_relation(c.parent, c.child); };
    const auto& parents = spec_.pick_per_level ? parent_pools_ : uniform_parent_pools_;
    const auto& children = spec_.pick_per_level ? child_pools_ : uniform_child_pools_;
    std::vector<Edge> out;
    for (int k = 0; k < spec_.negatives_per_level; ++k) {
      auto a = pick_per_level(positive, CorruptSide::parent, parents, valid, rng_);
      auto b = pick_per_level(positive, CorruptSide::child, children, valid, rng_);
      out.insert(out.end(), a.begin(), a.end());
      out.insert(out.end(), b.begin(), b.end());
    }
    return out;
  }

  std::span<const double> endpoint(NodeId n) {
    if (!is_instance(n)) return labels_.row(n);
    auto it = cache_.find(n);
    if (it == cache_.end()) {
      const auto row = spec_.features->row(spec_.instance_rows[n - n_labels_]);
      const Eigen::Map<const Eigen::VectorXd> f(row.data(), static_cast<Eigen::Index>(row.size()));
      const Eigen::VectorXd z = weights_.transpose() * f;
      CachedInstance c;
      c.z.assign(z.data(), z.data() + z.size());
      c.y = spec_.cone.geometry == Geometry::hyperbolic_cone ? exp_map_origin(c.z) : c.z;
      c.grad.assign(c.z.size(), 0.0);
      it = cache_.emplace(n, std::move(c)).first;
    }
    return it->second.y;
  }

  void accumulate(NodeId n, std::span<const double> g, double sign) {
    std::span<double> target =
        is_instance(n) ? std::span<double>(cache_.at(n).grad) : std::span<double>(label_grad_).subspan(n * labels_.dim, labels_.dim);
    for (std::size_t i = 0; i < g.size(); ++i) target[i] += sign * g[i];
  }

  double term(Edge e, bool positive) {
    const auto x = endpoint(e.parent);
    const auto y = endpoint(e.child);
    const auto eg = try_energy_gradients(x, y, spec_.cone);
    if (positive) {
      if (!eg || eg->energy == 0.0) return 0.0;
      accumulate(e.parent, eg->d_x, 1.0);
      accumulate(e.child, eg->d_y, 1.0);
      return eg->energy;
    }
    if (!eg) return spec_.margin;
    if (eg->energy >= spec_.margin) return 0.0;
    if (eg->energy > 0.0) {
      accumulate(e.parent, eg->d_x, -1.0);
      accumulate(e.child, eg->d_y, -1.0);
    }
    return spec_.margin - eg->energy;
  }

  double batch_step(std::span<const Edge> batch) {
    std::ranges::fill(label_grad_, 0.0);
    cache_.clear();
    double loss = 0.0;
    for (const Edge& pos : batch) {
      loss += term(pos, true);
      for (const Edge& neg : negatives_for(pos)) loss += term(neg, false);
    }

    if (spec_.label_tangent) {
      tangent_step();
    } else {
      optimizer_step(labels_, label_grad_, label_opt_, spec_.cone, rng_);
    }

    if (!cache_.empty()) {
      weight_grad_.setZero();
      // Deterministic order over the touched instances.
      std::vector<NodeId> touched;
      touched.reserve(cache_.size());
      for (const auto& [n, c] : cache_) touched.push_back(n);
      std::ranges::sort(touched);
      for (const NodeId n : touched) {
        const auto& c = cache_.at(n);
        const Vec gz = spec_.cone.geometry == Geometry::hyperbolic_cone ? exp0_backward(c.z, c.grad) : c.grad;
        const auto row = spec_.features->row(spec_.instance_rows[n - n_labels_]);
        const Eigen::Map<const Eigen::VectorXd> f(row.data(), static_cast<Eigen::Index>(row.size()));
        const Eigen::Map<const Eigen::VectorXd> g(gz.data(), static_cast<Eigen::Index>(gz.size()));
        weight_grad_.noalias() += f * g.transpose();
      }
      weight_opt_.step(std::span<double>(weights_.data(), static_cast<std::size_t>(weights_.size())),
                       std::span<const double>(weight_grad_.data(), static_cast<std::size_t>(weight_grad_.size())));
    }
    return loss;
  }

  void tangent_step() {
    const std::size_t dim = labels_.dim;
    for (std::size_t i = 0; i < labels_.size(); ++i) {
      const auto g = std::span<double>(label_grad_).subspan(i * dim, dim);
      const Vec gz = exp0_backward(std::span<const double>(tangent_).subspan(i * dim, dim), g);
      std::ranges::copy(gz, g.begin());
    }
    require_finite(label_grad_, "gradient");
    label_opt_.adam.step(tangent_, label_grad_);
    for (std::size_t i = 0; i < labels_.size(); ++i) {
      const auto z = std::span<double>(tangent_).subspan(i * dim, dim);
      auto row = labels_.row(i);
      const Vec y = exp_map_origin(z);
      std::ranges::copy(y, row.begin());
      const double before = norm(row);
      project_to_domain(row, spec_.cone, rng_);
      // Keep z consistent with the domain clip applied to the ball point.
      if (norm(row) != before) std::ranges::copy(log0(row), z.begin());
    }
  }

  struct CachedInstance {
    Vec z;
    Vec y;
    Vec grad;
  };

  const GraphTrainSpec& spec_;
  const Hierarchy& h_;
  EmbeddingTable labels_;
  Eigen::MatrixXd weights_;
  Rng& rng_;
  NodeId n_labels_;
  OptimizerState label_opt_;
  Adam weight_opt_;
  std::vector<double> label_grad_;
  std::vector<double> tangent_;
  Eigen::MatrixXd weight_grad_;
  std::unordered_map<NodeId, CachedInstance> cache_;

  std::vector<NodeId> instance_nodes_;
  std::vector<NodeId> all_labels_;
  std::vector<NodeId> all_nodes_;
  std::vector<std::span<const NodeId>> parent_pools_;
  std::vector<std::span<const NodeId>> child_pools_;
  std::vector<std::span<const NodeId>> uniform_parent_pools_;
  std::vector<std::span<const NodeId>> uniform_child_pools_;
};

}  // namespace

GraphTrainOutput train_graph(const GraphTrainSpec& spec, EmbeddingTable labels, Eigen::MatrixXd weights, Rng& rng,
                             const EpochValidator& validate) {
  if (spec.hierarchy == nullptr || spec.label_closure == nullptr) throw std::invalid_argument("train_graph: missing hierarchy");
  if (spec.batch_size == 0) throw std::invalid_argument("batch size must be positive");
  if (!(spec.margin > 0.0)) throw std::invalid_argument("margin must be positive");
  if (!spec.instance_rows.empty() && spec.features == nullptr) throw std::invalid_argument("train_graph: missing features");
  Trainer trainer(spec, std::move(labels), std::move(weights), rng);
  return trainer.run(validate);
}

}  // namespace hierembed::detail
