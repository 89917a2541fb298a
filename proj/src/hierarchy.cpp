#include "hierembed/hierarchy.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <fmt/format.h>

#include "tsv.hpp"

namespace hierembed {

EdgeIndex::EdgeIndex(std::span<const Edge> edges) {
  pairs_.reserve(edges.size());
  for (const auto& e : edges) insert(e);
}

Hierarchy::Hierarchy(std::vector<Node> nodes, std::vector<Edge> edges)
    : nodes_(std::move(nodes)), edges_(std::move(edges)) {
  const std::size_t n = nodes_.size();
  if (n == 0) throw HierarchyError("hierarchy has no nodes");
  if (n > std::numeric_limits<NodeId>::max()) throw HierarchyError("too many nodes");

  int max_level = 0;
  for (NodeId id = 0; id < n; ++id) {
    const auto& node = nodes_[id];
    if (node.level < 1) throw HierarchyError(fmt::format("node '{}' has level {} < 1", node.key, node.level));
    if (!by_key_.emplace(node.key, id).second) throw HierarchyError("duplicate node id '" + node.key + "'");
    max_level = std::max(max_level, node.level);
  }
  levels_.assign(static_cast<std::size_t>(max_level), {});
  index_in_level_.resize(n);
  for (NodeId id = 0; id < n; ++id) {
    auto& members = levels_[static_cast<std::size_t>(nodes_[id].level - 1)];
    index_in_level_[id] = members.size();
    members.push_back(id);
  }
  for (int l = 1; l <= max_level; ++l) {
    if (levels_[static_cast<std::size_t>(l - 1)].empty()) throw HierarchyError(fmt::format("level {} is empty", l));
  }

  parent_.assign(n, std::nullopt);
  children_.assign(n, {});
  EdgeIndex seen;
  for (const auto& e : edges_) {
    if (e.parent >= n || e.child >= n) throw HierarchyError("edge references unknown node");
    if (e.parent == e.child) throw HierarchyError("self-loop on '" + nodes_[e.parent].key + "'");
    if (seen.contains(e)) {
      throw HierarchyError("duplicate edge " + nodes_[e.parent].key + " -> " + nodes_[e.child].key);
    }
    seen.insert(e);
    if (nodes_[e.child].level != nodes_[e.parent].level + 1) {
      throw HierarchyError("edge " + nodes_[e.parent].key + " -> " + nodes_[e.child].key +
                           " does not connect consecutive levels");
    }
    if (parent_[e.child]) throw HierarchyError("node '" + nodes_[e.child].key + "' has multiple parents");
    parent_[e.child] = e.parent;
    children_[e.parent].push_back(e.child);
  }
  for (NodeId id = 0; id < n; ++id) {
    if (nodes_[id].level > 1 && !parent_[id]) throw HierarchyError("node '" + nodes_[id].key + "' has no parent");
    std::ranges::sort(children_[id]);
  }
}

std::span<const NodeId> Hierarchy::level_members(int level) const {
  if (level < 1 || level > level_count()) throw HierarchyError(fmt::format("level {} out of range", level));
  return levels_[static_cast<std::size_t>(level - 1)];
}

std::optional<NodeId> Hierarchy::parent(NodeId id) const { return parent_.at(id); }

std::vector<NodeId> Hierarchy::ancestors(NodeId id) const {
  std::vector<NodeId> out;
  for (auto p = parent_.at(id); p; p = parent_[*p]) out.push_back(*p);
  std::ranges::reverse(out);
  return out;
}

std::vector<NodeId> Hierarchy::path(NodeId id) const {
  auto out = ancestors(id);
  out.push_back(id);
  return out;
}

std::vector<NodeId> Hierarchy::leaves_under(NodeId id) const {
  std::vector<NodeId> out;
  std::vector<NodeId> stack{id};
  while (!stack.empty()) {
    const NodeId cur = stack.back();
    stack.pop_back();
    if (children_[cur].empty()) {
      out.push_back(cur);
    } else {
      stack.insert(stack.end(), children_[cur].rbegin(), children_[cur].rend());
    }
  }
  std::ranges::sort(out);
  return out;
}

std::optional<NodeId> Hierarchy::find(std::string_view key) const {
  if (auto it = by_key_.find(std::string(key)); it != by_key_.end()) return it->second;
  return std::nullopt;
}

bool Hierarchy::uniform_depth() const {
  for (NodeId id = 0; id < nodes_.size(); ++id) {
    if (children_[id].empty() && nodes_[id].level != level_count()) return false;
  }
  return true;
}

EdgeSet transitive_closure(std::span<const Edge> edges, std::size_t node_count) {
  std::vector<std::vector<NodeId>> adj(node_count);
  for (const auto& e : edges) {
    if (e.parent >= node_count || e.child >= node_count) throw HierarchyError("edge references unknown node");
    adj[e.parent].push_back(e.child);
  }

  // Iterative DFS colouring for cycle detection and a reverse topological order.
  enum : std::uint8_t { white, grey, black };
  std::vector<std::uint8_t> colour(node_count, white);
  std::vector<NodeId> post_order;
  post_order.reserve(node_count);
  for (NodeId start = 0; start < node_count; ++start) {
    if (colour[start] != white) continue;
    std::vector<std::pair<NodeId, std::size_t>> stack{{start, 0}};
    colour[start] = grey;
    while (!stack.empty()) {
      auto& [node, next] = stack.back();
      if (next < adj[node].size()) {
        const NodeId child = adj[node][next++];
        if (colour[child] == grey) throw HierarchyError("cycle detected in edge set");
        if (colour[child] == white) {
          colour[child] = grey;
          stack.emplace_back(child, 0);
        }
      } else {
        colour[node] = black;
        post_order.push_back(node);
        stack.pop_back();
      }
    }
  }

  // Descendant sets bottom-up: children are finished before their parents.
  std::vector<std::vector<NodeId>> desc(node_count);
  for (const NodeId node : post_order) {
    auto& d = desc[node];
    for (const NodeId child : adj[node]) {
      d.push_back(child);
      d.insert(d.end(), desc[child].begin(), desc[child].end());
    }
    std::ranges::sort(d);
    d.erase(std::unique(d.begin(), d.end()), d.end());
  }

  EdgeSet out;
  for (NodeId u = 0; u < node_count; ++u) {
    for (const NodeId v : desc[u]) out.edges.push_back({u, v});
  }
  return out;
}

EdgeSet transitive_closure(const Hierarchy& h) { return transitive_closure(h.edges(), h.size()); }

std::size_t heldout_count(std::size_t nonbasic) {
  if (nonbasic < 2) return 0;
  const auto n = static_cast<std::size_t>(std::llround(0.05 * static_cast<double>(nonbasic)));
  return std::max<std::size_t>(1, n);
}

SplitResult split_edges(const Hierarchy& h, double nonbasic_train_fraction, std::uint64_t seed) {
  if (!(nonbasic_train_fraction >= 0.0 && nonbasic_train_fraction <= 1.0)) {
    throw std::invalid_argument("non-basic train fraction must lie in [0, 1]");
  }
  const EdgeSet closure = transitive_closure(h);
  const EdgeIndex basic(h.edges());
  std::vector<Edge> nonbasic;
  for (const auto& e : closure.edges) {
    if (!basic.contains(e)) nonbasic.push_back(e);
  }

  Rng rng(seed);
  std::ranges::shuffle(nonbasic, rng);

  const std::size_t held = heldout_count(nonbasic.size());
  SplitResult split;
  split.seed = seed;
  split.val.edges.assign(nonbasic.begin(), nonbasic.begin() + static_cast<std::ptrdiff_t>(held));
  split.test.edges.assign(nonbasic.begin() + static_cast<std::ptrdiff_t>(held),
                          nonbasic.begin() + static_cast<std::ptrdiff_t>(2 * held));
  const std::size_t remainder = nonbasic.size() - 2 * held;
  const auto extra = static_cast<std::size_t>(std::floor(nonbasic_train_fraction * static_cast<double>(remainder)));
  split.train.edges = h.edges();
  split.train.edges.insert(split.train.edges.end(), nonbasic.begin() + static_cast<std::ptrdiff_t>(2 * held),
                           nonbasic.begin() + static_cast<std::ptrdiff_t>(2 * held + extra));
  std::ranges::sort(split.train.edges);
  std::ranges::sort(split.val.edges);
  std::ranges::sort(split.test.edges);
  return split;
}

namespace {

// Uniform corruption over all nodes. Falls back to an exhaustive scan once the
// random retries are spent, so an empty result means no valid corruption exists.
std::optional<Edge> corrupt_uniform(Edge e, CorruptSide side, const Hierarchy& h, const EdgeIndex& closure,
                                    Rng& rng) {
  const auto make = [&](NodeId n) { return side == CorruptSide::parent ? Edge{n, e.child} : Edge{e.parent, n}; };
  const auto ok = [&](Edge c) { return c.parent != c.child && !closure.contains(c); };
  std::uniform_int_distribution<NodeId> pick(0, static_cast<NodeId>(h.size() - 1));
  for (int attempt = 0; attempt < kSamplerRetries; ++attempt) {
    if (const Edge c = make(pick(rng)); ok(c)) return c;
  }
  std::vector<NodeId> feasible;
  for (NodeId n = 0; n < h.size(); ++n) {
    if (ok(make(n))) feasible.push_back(n);
  }
  if (feasible.empty()) return std::nullopt;
  std::uniform_int_distribution<std::size_t> idx(0, feasible.size() - 1);
  return make(feasible[idx(rng)]);
}

void augment(const EdgeSet& positives, EdgeSet& negatives, std::vector<std::size_t>& refs, const Hierarchy& h,
             const EdgeIndex& closure, Rng& rng) {
  negatives.edges.clear();
  refs.clear();
  for (std::size_t i = 0; i < positives.size(); ++i) {
    const Edge pos = positives.edges[i];
    for (const auto side : {CorruptSide::parent, CorruptSide::child}) {
      const auto other = side == CorruptSide::parent ? CorruptSide::child : CorruptSide::parent;
      for (int k = 0; k < kEvalNegativesPerSide; ++k) {
        auto neg = corrupt_uniform(pos, side, h, closure, rng);
        if (!neg) neg = corrupt_uniform(pos, other, h, closure, rng);
        if (!neg) {
          throw SamplingError("no non-closure corruption exists for edge " + h.node(pos.parent).key + " -> " +
                              h.node(pos.child).key);
        }
        negatives.edges.push_back(*neg);
        refs.push_back(i);
      }
    }
  }
}

}  // namespace

SplitResult augment_eval_negatives(SplitResult split, const Hierarchy& h, const EdgeIndex& closure,
                                   std::uint64_t seed) {
  Rng rng(seed ^ 0x9e3779b97f4a7c15ULL);
  augment(split.val, split.val_negatives, split.val_negative_refs, h, closure, rng);
  augment(split.test, split.test_negatives, split.test_negative_refs, h, closure, rng);
  return split;
}

std::vector<Edge> sample_negative_pick_per_level(Edge edge, CorruptSide side, const Hierarchy& h,
                                                 const EdgeIndex& closure, Rng& rng) {
  std::vector<std::span<const NodeId>> pools;
  for (int l = 1; l <= h.level_count(); ++l) pools.push_back(h.level_members(l));
  return pick_per_level(edge, side, pools, [&](Edge c) { return !closure.contains(c); }, rng);
}

Hierarchy generate_synthetic_tree(int levels, int branching) {
  if (levels < 1 || branching < 1) throw std::invalid_argument("levels and branching must be >= 1");
  constexpr std::size_t kMaxNodes = 50'000'000;
  std::size_t total = 0;
  std::size_t width = 1;
  for (int l = 0; l < levels; ++l) {
    total += width;
    if (total > kMaxNodes) throw std::overflow_error("synthetic tree exceeds node limit");
    if (l + 1 < levels) {
      if (width > kMaxNodes / static_cast<std::size_t>(branching)) throw std::overflow_error("synthetic tree exceeds node limit");
      width *= static_cast<std::size_t>(branching);
    }
  }

  std::vector<Node> nodes;
  std::vector<Edge> edges;
  nodes.reserve(total);
  nodes.push_back({"0", "L1-0", 1});
  std::size_t level_begin = 0;
  std::size_t level_end = 1;
  for (int l = 2; l <= levels; ++l) {
    std::size_t index = 0;
    for (std::size_t p = level_begin; p < level_end; ++p) {
      for (int b = 0; b < branching; ++b) {
        const auto id = static_cast<NodeId>(nodes.size());
        nodes.push_back({std::to_string(id), fmt::format("L{}-{}", l, index++), l});
        edges.push_back({static_cast<NodeId>(p), id});
      }
    }
    level_begin = level_end;
    level_end = nodes.size();
  }
  return Hierarchy(std::move(nodes), std::move(edges));
}

Hierarchy load_hierarchy(const std::filesystem::path& nodes_tsv, const std::filesystem::path& edges_tsv) {
  std::vector<Node> nodes;
  for (const auto& line : tsv::read_lines(nodes_tsv)) {
    const auto f = tsv::split(line);
    if (f.size() < 2) throw HierarchyError("nodes.tsv: expected node_id<TAB>level<TAB>name");
    nodes.push_back({std::string(f[0]), f.size() > 2 ? std::string(f[2]) : std::string(f[0]),
                     tsv::parse_number<int>(f[1], "level")});
  }
  std::unordered_map<std::string, NodeId> ids;
  for (NodeId i = 0; i < nodes.size(); ++i) ids.emplace(nodes[i].key, i);
  const auto lookup = [&](std::string_view key) {
    auto it = ids.find(std::string(key));
    if (it == ids.end()) throw HierarchyError("edges.tsv references unknown node '" + std::string(key) + "'");
    return it->second;
  };
  std::vector<Edge> edges;
  for (const auto& line : tsv::read_lines(edges_tsv)) {
    const auto f = tsv::split(line);
    if (f.size() != 2) throw HierarchyError("edges.tsv: expected parent_id<TAB>child_id");
    edges.push_back({lookup(f[0]), lookup(f[1])});
  }
  return Hierarchy(std::move(nodes), std::move(edges));
}

void save_hierarchy(const Hierarchy& h, const std::filesystem::path& nodes_tsv,
                    const std::filesystem::path& edges_tsv) {
  auto nodes = tsv::open_out(nodes_tsv);
  for (const auto& n : h.nodes()) nodes << n.key << '\t' << n.level << '\t' << n.name << '\n';
  auto edges = tsv::open_out(edges_tsv);
  for (const auto& e : h.edges()) edges << h.node(e.parent).key << '\t' << h.node(e.child).key << '\n';
}

namespace {

void write_edges(const std::filesystem::path& path, const EdgeSet& set, const Hierarchy& h) {
  auto out = tsv::open_out(path);
  for (const auto& e : set.edges) out << h.node(e.parent).key << '\t' << h.node(e.child).key << '\n';
}

EdgeSet read_edges(const std::filesystem::path& path, const Hierarchy& h) {
  EdgeSet set;
  for (const auto& line : tsv::read_lines(path)) {
    const auto f = tsv::split(line);
    if (f.size() != 2) throw HierarchyError(path.string() + ": expected parent_id<TAB>child_id");
    const auto u = h.find(f[0]);
    const auto v = h.find(f[1]);
    if (!u || !v) throw HierarchyError(path.string() + ": unknown node id");
    set.edges.push_back({*u, *v});
  }
  return set;
}

}  // namespace

void save_split(const SplitResult& split, const Hierarchy& h, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  write_edges(dir / "train.tsv", split.train, h);
  write_edges(dir / "val.tsv", split.val, h);
  write_edges(dir / "test.tsv", split.test, h);
  auto out = tsv::open_out(dir / "negatives.tsv");
  out << "split\tparent_id\tchild_id\tpos_ref\n";
  const auto dump = [&](std::string_view name, const EdgeSet& negs, const std::vector<std::size_t>& refs) {
    for (std::size_t i = 0; i < negs.size(); ++i) {
      out << name << '\t' << h.node(negs.edges[i].parent).key << '\t' << h.node(negs.edges[i].child).key << '\t'
          << refs[i] << '\n';
    }
  };
  dump("val", split.val_negatives, split.val_negative_refs);
  dump("test", split.test_negatives, split.test_negative_refs);
}

SplitResult load_split(const Hierarchy& h, const std::filesystem::path& dir) {
  SplitResult split;
  split.train = read_edges(dir / "train.tsv", h);
  split.val = read_edges(dir / "val.tsv", h);
  split.test = read_edges(dir / "test.tsv", h);
  const auto lines = tsv::read_lines(dir / "negatives.tsv");
  for (std::size_t i = 1; i < lines.size(); ++i) {
    const auto f = tsv::split(lines[i]);
    if (f.size() != 4) throw HierarchyError("negatives.tsv: expected split, parent_id, child_id, pos_ref");
    const auto u = h.find(f[1]);
    const auto v = h.find(f[2]);
    if (!u || !v) throw HierarchyError("negatives.tsv: unknown node id");
    const auto ref = tsv::parse_number<std::size_t>(f[3], "pos_ref");
    if (f[0] == "val") {
      split.val_negatives.edges.push_back({*u, *v});
      split.val_negative_refs.push_back(ref);
    } else if (f[0] == "test") {
      split.test_negatives.edges.push_back({*u, *v});
      split.test_negative_refs.push_back(ref);
    } else {
      throw HierarchyError("negatives.tsv: unknown split '" + std::string(f[0]) + "'");
    }
  }
  return split;
}

}  // namespace hierembed
