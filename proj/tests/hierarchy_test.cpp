#include <algorithm>
#include <map>
#include <set>

#include "doctest.h"
#include "hierembed/hierarchy.hpp"
#include "support.hpp"

using namespace hierembed;

namespace {

// Brute-force reachability: repeated parent walks from every node.
std::set<std::pair<NodeId, NodeId>> closure_by_walk(const Hierarchy& h) {
  std::set<std::pair<NodeId, NodeId>> out;
  for (NodeId v = 0; v < h.size(); ++v) {
    for (auto p = h.parent(v); p; p = h.parent(*p)) out.insert({*p, v});
  }
  return out;
}

// Random uniform-depth forest: `roots` roots, each node gets 1..max_children.
Hierarchy random_forest(Rng& rng, int levels, int roots, int max_children) {
  std::vector<Node> nodes;
  std::vector<Edge> edges;
  std::vector<NodeId> frontier;
  for (int r = 0; r < roots; ++r) {
    frontier.push_back(static_cast<NodeId>(nodes.size()));
    nodes.push_back({"r" + std::to_string(r), "", 1});
  }
  std::uniform_int_distribution<int> kids(1, max_children);
  for (int l = 2; l <= levels; ++l) {
    std::vector<NodeId> next;
    for (const NodeId p : frontier) {
      const int k = kids(rng);
      for (int c = 0; c < k; ++c) {
        const auto id = static_cast<NodeId>(nodes.size());
        nodes.push_back({"v" + std::to_string(id), "", l});
        edges.push_back({p, id});
        next.push_back(id);
      }
    }
    frontier = std::move(next);
  }
  return {std::move(nodes), std::move(edges)};
}

}  // namespace

TEST_SUITE_BEGIN("hierarchy");

TEST_CASE("closure of small graphs") {
  SUBCASE("single edge") {
    const auto c = transitive_closure(std::vector<Edge>{{0, 1}}, 2);
    CHECK(c.edges == std::vector<Edge>{{0, 1}});
  }
  SUBCASE("chain") {
    const auto c = transitive_closure(std::vector<Edge>{{0, 1}, {1, 2}}, 3);
    CHECK(c.edges == std::vector<Edge>{{0, 1}, {0, 2}, {1, 2}});
  }
  SUBCASE("cycle rejected") {
    CHECK_THROWS_AS((void)transitive_closure(std::vector<Edge>{{0, 1}, {1, 2}, {2, 0}}, 3), HierarchyError);
  }
}

TEST_CASE("closure of the 3-level, branching-7 tree") {
  const Hierarchy h = generate_synthetic_tree(3, 7);
  CHECK(h.size() == 57);
  // root reaches 56 nodes, each of the 7 middle nodes reaches 7 leaves
  CHECK(transitive_closure(h).size() == 105);
}

TEST_CASE("closure matches parent walks on random forests") {
  Rng rng(11);
  for (int trial = 0; trial < 25; ++trial) {
    const Hierarchy h = random_forest(rng, 4, 1 + trial % 3, 3);
    const auto c = transitive_closure(h);
    const auto want = closure_by_walk(h);
    std::set<std::pair<NodeId, NodeId>> got;
    for (const auto& e : c.edges) got.insert({e.parent, e.child});
    REQUIRE(got == want);
    CHECK(got.size() == c.size());  // no duplicates

    // idempotence: closing the closure adds nothing
    CHECK(transitive_closure(c.edges, h.size()).edges == c.edges);
  }
}

TEST_CASE("synthetic trees") {
  CHECK(generate_synthetic_tree(4, 3).size() == 40);
  const Hierarchy chain = generate_synthetic_tree(5, 1);
  CHECK(chain.size() == 5);
  CHECK(chain.level_count() == 5);
  for (NodeId v = 1; v < 5; ++v) CHECK(chain.parent(v) == v - 1);
  CHECK_THROWS((void)generate_synthetic_tree(0, 3));
  CHECK_THROWS_AS((void)generate_synthetic_tree(40, 9), std::overflow_error);
}

TEST_CASE("structural validation") {
  SUBCASE("multiple parents") {
    std::vector<Node> n = {{"a", "", 1}, {"b", "", 1}, {"c", "", 2}};
    CHECK_THROWS_AS(Hierarchy(n, {{0, 2}, {1, 2}}), HierarchyError);
  }
  SUBCASE("level skip") {
    std::vector<Node> n = {{"a", "", 1}, {"b", "", 2}, {"c", "", 3}};
    CHECK_THROWS_AS(Hierarchy(n, {{0, 1}, {0, 2}}), HierarchyError);
  }
  SUBCASE("orphan below level 1") {
    std::vector<Node> n = {{"a", "", 1}, {"b", "", 2}};
    CHECK_THROWS_AS(Hierarchy(n, {}), HierarchyError);
  }
  SUBCASE("duplicate keys") {
    std::vector<Node> n = {{"a", "", 1}, {"a", "", 1}};
    CHECK_THROWS_AS(Hierarchy(n, {}), HierarchyError);
  }
}

TEST_CASE("navigation") {
  const Hierarchy h = testing::small_forest();
  CHECK(h.level_count() == 3);
  CHECK(h.level_size(1) == 2);
  CHECK(h.level_size(3) == 6);
  CHECK(h.path(7) == std::vector<NodeId>{0, 3, 7});
  CHECK(h.ancestors(9) == std::vector<NodeId>{1, 4});
  CHECK(h.leaves_under(0) == std::vector<NodeId>{5, 6, 7});
  CHECK(h.index_in_level(8) == 3);
  CHECK(h.uniform_depth());
  CHECK(h.find("n4") == NodeId{4});
  CHECK_FALSE(h.find("zz").has_value());
}

TEST_CASE("edge splits") {
  const Hierarchy h = generate_synthetic_tree(4, 3);
  const auto closure = transitive_closure(h);
  const EdgeIndex basic(h.edges());
  const std::size_t nonbasic = closure.size() - h.edges().size();

  for (const double frac : {0.0, 0.1, 0.25, 0.5, 1.0}) {
    CAPTURE(frac);
    const auto s = split_edges(h, frac, 5);
    CHECK(s.val.size() == heldout_count(nonbasic));
    CHECK(s.test.size() == heldout_count(nonbasic));

    std::set<Edge> train(s.train.edges.begin(), s.train.edges.end());
    for (const auto& e : h.edges()) CHECK(train.contains(e));
    for (const auto& e : s.val.edges) {
      CHECK_FALSE(basic.contains(e));
      CHECK_FALSE(train.contains(e));
      CHECK(std::ranges::find(s.test.edges, e) == s.test.edges.end());
    }
    for (const auto& e : s.test.edges) CHECK_FALSE(train.contains(e));

    const std::size_t remainder = nonbasic - 2 * s.val.size();
    CHECK(s.train.size() == h.edges().size() + static_cast<std::size_t>(std::floor(frac * static_cast<double>(remainder))));
  }
  CHECK(split_edges(h, 0.0, 5).train.edges.size() == h.edges().size());
  CHECK(heldout_count(100) == 5);
  CHECK(heldout_count(10) == 1);

  const auto a = split_edges(h, 0.5, 9);
  const auto b = split_edges(h, 0.5, 9);
  CHECK(a.train.edges == b.train.edges);
  CHECK(a.val.edges == b.val.edges);
  CHECK(a.test.edges == b.test.edges);
}

TEST_CASE("evaluation negatives") {
  const Hierarchy h = generate_synthetic_tree(4, 3);
  const auto closure = transitive_closure(h);
  const EdgeIndex index(closure.edges);
  const auto s = augment_eval_negatives(split_edges(h, 0.5, 3), h, index, 3);

  CHECK(s.val_negatives.size() == 10 * s.val.size());
  CHECK(s.test_negatives.size() == 10 * s.test.size());
  CHECK(s.val_negatives.polarity == Polarity::negative);
  for (std::size_t i = 0; i < s.val_negatives.size(); ++i) {
    const Edge n = s.val_negatives.edges[i];
    const Edge p = s.val.edges[s.val_negative_refs[i]];
    CHECK_FALSE(index.contains(n));
    CHECK(n.parent != n.child);
    // one endpoint is kept from the positive it came from
    CHECK((n.parent == p.parent || n.child == p.child));
  }
}

TEST_CASE("pick-per-level sampling") {
  const Hierarchy h = generate_synthetic_tree(4, 3);
  const EdgeIndex index(transitive_closure(h).edges);
  Rng rng(2);
  for (int trial = 0; trial < 200; ++trial) {
    const Edge pos = h.edges()[static_cast<std::size_t>(trial) % h.edges().size()];
    for (const auto side : {CorruptSide::parent, CorruptSide::child}) {
      const auto out = sample_negative_pick_per_level(pos, side, h, index, rng);
      CHECK(out.size() <= 4);
      std::set<int> levels;
      for (const Edge& e : out) {
        CHECK_FALSE(index.contains(e));
        const NodeId corrupted = side == CorruptSide::parent ? e.parent : e.child;
        CHECK(levels.insert(h.node(corrupted).level).second);  // each level at most once
      }
    }
  }

  // One level: at most one negative.
  const Hierarchy flat({{"a", "", 1}, {"b", "", 1}, {"c", "", 1}}, {});
  const EdgeIndex none;
  CHECK(sample_negative_pick_per_level({0, 1}, CorruptSide::parent, flat, none, rng).size() <= 1);
}

TEST_CASE("tsv round trips") {
  const Hierarchy h = testing::small_forest();
  testing::TempDir dir("hier");
  save_hierarchy(h, dir.path() / "nodes.tsv", dir.path() / "edges.tsv");
  const Hierarchy back = load_hierarchy(dir.path() / "nodes.tsv", dir.path() / "edges.tsv");
  REQUIRE(back.size() == h.size());
  for (NodeId v = 0; v < h.size(); ++v) {
    CHECK(back.node(v).key == h.node(v).key);
    CHECK(back.node(v).level == h.node(v).level);
  }
  CHECK(back.edges() == h.edges());

  const Hierarchy tree = generate_synthetic_tree(3, 3);
  const auto s = augment_eval_negatives(split_edges(tree, 0.5, 4), tree, EdgeIndex(transitive_closure(tree).edges), 4);
  save_split(s, tree, dir.path() / "split");
  const auto r = load_split(tree, dir.path() / "split");
  CHECK(r.train.edges == s.train.edges);
  CHECK(r.val.edges == s.val.edges);
  CHECK(r.test.edges == s.test.edges);
  CHECK(r.val_negatives.edges == s.val_negatives.edges);
  CHECK(r.test_negative_refs == s.test_negative_refs);
}

TEST_SUITE_END();
