#ifndef HIEREMBED_HIERARCHY_HPP
#define HIEREMBED_HIERARCHY_HPP

#include <compare>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <vector>

namespace hierembed {

using NodeId = std::uint32_t;
using Rng = std::mt19937_64;

/// Malformed graph input: bad levels, multiple parents, cycles, unknown ids.
class HierarchyError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A negative sampler could not produce a valid corruption.
class SamplingError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Node {
  std::string key;   // unique identity, e.g. a full taxonomic path
  std::string name;  // display name, not necessarily unique
  int level = 1;     // 1-based
};

/// Directed edge: `child` is a sub-concept of `parent`.
struct Edge {
  NodeId parent = 0;
  NodeId child = 0;
  auto operator<=>(const Edge&) const = default;
};

enum class Polarity { positive, negative };

struct EdgeSet {
  std::vector<Edge> edges;
  Polarity polarity = Polarity::positive;

  [[nodiscard]] std::size_t size() const { return edges.size(); }
  [[nodiscard]] bool empty() const { return edges.empty(); }
};

/// Constant-time membership over a set of (parent, child) pairs.
class EdgeIndex {
 public:
  EdgeIndex() = default;
  explicit EdgeIndex(std::span<const Edge> edges);

  void insert(Edge e) { pairs_.insert(pack(e)); }
  [[nodiscard]] bool contains(NodeId parent, NodeId child) const {
    return pairs_.contains(pack({parent, child}));
  }
  [[nodiscard]] bool contains(Edge e) const { return pairs_.contains(pack(e)); }
  [[nodiscard]] std::size_t size() const { return pairs_.size(); }

 private:
  static std::uint64_t pack(Edge e) {
    return (static_cast<std::uint64_t>(e.parent) << 32) | e.child;
  }
  std::unordered_set<std::uint64_t> pairs_;
};

/// Leveled forest of labels. Level-1 nodes are the roots; every other node has
/// exactly one parent on the level directly above it.
class Hierarchy {
 public:
  Hierarchy() = default;
  Hierarchy(std::vector<Node> nodes, std::vector<Edge> edges);

  [[nodiscard]] std::size_t size() const { return nodes_.size(); }
  [[nodiscard]] int level_count() const { return static_cast<int>(levels_.size()); }
  [[nodiscard]] const Node& node(NodeId id) const { return nodes_.at(id); }
  [[nodiscard]] const std::vector<Node>& nodes() const { return nodes_; }
  [[nodiscard]] const std::vector<Edge>& edges() const { return edges_; }

  /// Members of a 1-based level, ascending by node id.
  [[nodiscard]] std::span<const NodeId> level_members(int level) const;
  [[nodiscard]] std::size_t level_size(int level) const { return level_members(level).size(); }
  /// Position of a node within its level's member list.
  [[nodiscard]] std::size_t index_in_level(NodeId id) const { return index_in_level_.at(id); }

  [[nodiscard]] std::optional<NodeId> parent(NodeId id) const;
  [[nodiscard]] std::span<const NodeId> children(NodeId id) const { return children_.at(id); }
  [[nodiscard]] bool is_leaf(NodeId id) const { return children_.at(id).empty(); }

  /// Ancestors ordered from the level-1 root down to the direct parent.
  [[nodiscard]] std::vector<NodeId> ancestors(NodeId id) const;
  /// Root-to-node path including the node itself; element i sits on level i+1.
  [[nodiscard]] std::vector<NodeId> path(NodeId id) const;
  /// Leaves in the subtree rooted at `id` (the node itself when it is a leaf).
  [[nodiscard]] std::vector<NodeId> leaves_under(NodeId id) const;

  [[nodiscard]] std::optional<NodeId> find(std::string_view key) const;
  /// True when every leaf sits on the last level.
  [[nodiscard]] bool uniform_depth() const;

 private:
  std::vector<Node> nodes_;
  std::vector<Edge> edges_;
  std::vector<std::vector<NodeId>> levels_;
  std::vector<std::size_t> index_in_level_;
  std::vector<std::optional<NodeId>> parent_;
  std::vector<std::vector<NodeId>> children_;
  std::unordered_map<std::string, NodeId> by_key_;
};

/// All (ancestor, descendant) pairs, sorted. Throws HierarchyError on a cycle.
[[nodiscard]] EdgeSet transitive_closure(std::span<const Edge> edges, std::size_t node_count);
[[nodiscard]] EdgeSet transitive_closure(const Hierarchy& h);

struct SplitResult {
  EdgeSet train;
  EdgeSet val;
  EdgeSet test;
  EdgeSet val_negatives{{}, Polarity::negative};
  EdgeSet test_negatives{{}, Polarity::negative};
  // Index into val/test of the positive each negative was derived from.
  std::vector<std::size_t> val_negative_refs;
  std::vector<std::size_t> test_negative_refs;
  std::uint64_t seed = 0;
};

/// Number of held-out edges per evaluation split for `nonbasic` candidates.
[[nodiscard]] std::size_t heldout_count(std::size_t nonbasic);

/// Basic edges always go to train; 5% of the non-basic closure edges go to val,
/// 5% to test, and `nonbasic_train_fraction` of the remainder joins train.
[[nodiscard]] SplitResult split_edges(const Hierarchy& h, double nonbasic_train_fraction,
                                      std::uint64_t seed);

inline constexpr int kEvalNegativesPerSide = 5;
inline constexpr int kSamplerRetries = 100;

/// Attaches 5 (x', y) and 5 (x, y') negatives to every val/test positive.
/// A side with no valid corruption at all is replaced by the other side.
[[nodiscard]] SplitResult augment_eval_negatives(SplitResult split, const Hierarchy& h,
                                                 const EdgeIndex& closure, std::uint64_t seed);

enum class CorruptSide { parent, child };

/// Draws one corrupting node per candidate pool and keeps the corrupted edge when
/// `valid` accepts it. Each pool gets up to kSamplerRetries draws before it is
/// skipped, so every pool contributes at most one edge.
template <class Valid>
std::vector<Edge> pick_per_level(Edge edge, CorruptSide side,
                                 std::span<const std::span<const NodeId>> pools, Valid&& valid,
                                 Rng& rng) {
  std::vector<Edge> out;
  for (const auto& pool : pools) {
    if (pool.empty()) continue;
    std::uniform_int_distribution<std::size_t> pick(0, pool.size() - 1);
    for (int attempt = 0; attempt < kSamplerRetries; ++attempt) {
      const NodeId n = pool[pick(rng)];
      const Edge candidate = side == CorruptSide::parent ? Edge{n, edge.child} : Edge{edge.parent, n};
      if (candidate.parent != candidate.child && valid(candidate)) {
        out.push_back(candidate);
        break;
      }
    }
  }
  return out;
}

/// Pick-per-level corruption over the hierarchy's levels, rejecting closure edges.
[[nodiscard]] std::vector<Edge> sample_negative_pick_per_level(Edge edge, CorruptSide side,
                                                               const Hierarchy& h,
                                                               const EdgeIndex& closure,
                                                               Rng& rng);

/// Complete tree with a single root; `levels` counts the root level.
[[nodiscard]] Hierarchy generate_synthetic_tree(int levels, int branching);

// nodes.tsv: node_id<TAB>level<TAB>name ; edges.tsv: parent_id<TAB>child_id
[[nodiscard]] Hierarchy load_hierarchy(const std::filesystem::path& nodes_tsv,
                                       const std::filesystem::path& edges_tsv);
void save_hierarchy(const Hierarchy& h, const std::filesystem::path& nodes_tsv,
                    const std::filesystem::path& edges_tsv);

/// train.tsv / val.tsv / test.tsv plus negatives.tsv with a pos_ref column.
void save_split(const SplitResult& split, const Hierarchy& h, const std::filesystem::path& dir);
[[nodiscard]] SplitResult load_split(const Hierarchy& h, const std::filesystem::path& dir);

}  // namespace hierembed

#endif  // HIEREMBED_HIERARCHY_HPP
