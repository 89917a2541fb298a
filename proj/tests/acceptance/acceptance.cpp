// Acceptance runner: one PASS/FAIL line per criterion, nonzero exit if any fails.
//
//   hierembed_acceptance <path-to-hierembed-cli> [criterion ...]

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <numbers>
#include <map>
#include <numeric>
#include <optional>
#include <ranges>
#include <set>
#include <string>
#include <vector>

#include <fmt/format.h>

#include "hierembed/classifier_heads.hpp"
#include "hierembed/embed_train.hpp"
#include "hierembed/geometry.hpp"
#include "hierembed/hierarchy.hpp"
#include "hierembed/joint_embed.hpp"
#include "hierembed/metrics.hpp"
#include "hierembed/synthetic.hpp"
#include "support.hpp"

using namespace hierembed;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = true;
  std::vector<std::string> notes;

  void require(bool ok, std::string what) {
    pass = pass && ok;
    notes.push_back(fmt::format("{} {}", ok ? "ok  " : "FAIL", std::move(what)));
  }
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

ConeParams cone(Geometry g, double k = 0.1) {
  ConeParams p;
  p.geometry = g;
  p.aperture_k = k;
  return p;
}

// ---------------------------------------------------------------------------
// 1. analytic gradients against central differences

Outcome gradients() {
  Outcome out;
  const auto t0 = Clock::now();
  constexpr int kPoints = 100;
  constexpr double kTol = 1e-4;
  Rng rng(2024);

  for (const auto g : {Geometry::order, Geometry::euclidean_cone, Geometry::hyperbolic_cone}) {
    const auto p = cone(g);
    double worst = 0.0;
    int n = 0;
    while (n < kPoints) {
      Vec x;
      Vec y;
      if (g == Geometry::order) {
        x = testing::gaussian_vec(rng, 5);
        y = testing::gaussian_vec(rng, 5);
        if (std::ranges::any_of(std::views::iota(0, 5), [&](int i) { return std::abs(x[i] - y[i]) < 1e-3; })) continue;
      } else {
        const double hi = g == Geometry::hyperbolic_cone ? 0.9 : 1.5;
        x = testing::point_with_norm_in(rng, 5, p.epsilon() + 0.05, hi);
        y = testing::point_with_norm_in(rng, 5, 0.0, hi);
      }
      const auto eg = energy_gradients(x, y, p);
      // stay off the hinge and off the arccos endpoint, where E is not differentiable
      if (eg.energy < 1e-3) continue;
      if (g == Geometry::euclidean_cone && euclid_xi(x, y) > std::numbers::pi - 0.05) continue;
      if (g == Geometry::hyperbolic_cone && hyper_xi(x, y) > std::numbers::pi - 0.05) continue;
      const Vec fx = testing::fd_gradient([&](const Vec& v) { return energy(v, y, p); }, x, 1e-5);
      const Vec fy = testing::fd_gradient([&](const Vec& v) { return energy(x, v, p); }, y, 1e-5);
      worst = std::max({worst, testing::rel_error(eg.d_x, fx), testing::rel_error(eg.d_y, fy)});
      ++n;
    }
    out.require(worst < kTol, fmt::format("energy {}: max rel err {:.2e} over {} points", to_string(g), worst, kPoints));
  }

  const Hierarchy h = generate_synthetic_tree(4, 3);
  const LabelLayout layout(h);
  const auto leaves = h.level_members(4);
  using Loss = std::function<double(const Vec&, std::span<const std::size_t>, std::span<double>)>;
  const std::vector<std::pair<HeadKind, Loss>> heads = {
      {HeadKind::hab,
       [&](const Vec& x, std::span<const std::size_t> tau, std::span<double> g) {
         std::vector<double> y(layout.total(), 0.0);
         for (int l = 1; l <= layout.levels(); ++l) y[layout.level_offset(l) + tau[static_cast<std::size_t>(l - 1)]] = 1.0;
         return hab_loss(x, y, g);
       }},
      {HeadKind::plc, [&](const Vec& x, std::span<const std::size_t> tau, std::span<double> g) { return plc_loss(x, layout, tau, g); }},
      {HeadKind::mc, [&](const Vec& x, std::span<const std::size_t> tau, std::span<double> g) { return mc_loss(x, layout, tau, g); }},
      {HeadKind::mplc, [&](const Vec& x, std::span<const std::size_t> tau, std::span<double> g) { return mplc_loss(x, layout, tau, g); }},
      {HeadKind::hs, [&](const Vec& x, std::span<const std::size_t> tau, std::span<double> g) { return hs_loss(x, layout, tau, g); }},
  };
  for (const auto& [kind, loss] : heads) {
    double worst = 0.0;
    for (int i = 0; i < kPoints; ++i) {
      const Vec x = testing::gaussian_vec(rng, layout.output_width(kind), 2.0);
      const auto tau = layout.truth_path(h, leaves[static_cast<std::size_t>(i) % leaves.size()]);
      Vec g(x.size(), 0.0);
      (void)loss(x, tau, g);
      const Vec fd = testing::fd_gradient([&](const Vec& v) { return loss(v, tau, {}); }, x, 1e-5);
      worst = std::max(worst, testing::rel_error(g, fd));
    }
    out.require(worst < kTol, fmt::format("loss {}: max rel err {:.2e} over {} points", to_string(kind), worst, kPoints));
  }
  const double secs = seconds_since(t0);
  out.require(secs < 30.0, fmt::format("runtime {:.1f}s (< 30s)", secs));
  return out;
}

// ---------------------------------------------------------------------------
// 2. transitivity of zero-energy relations

Vec unit(ConstVec x) {
  Vec u(x.begin(), x.end());
  const double n = norm(x);
  for (auto& c : u) c /= n;
  return u;
}

// Unit vector at angle theta from unit axis a.
Vec tilt(ConstVec a, double theta, Rng& rng) {
  Vec w = testing::gaussian_vec(rng, a.size());
  const double d = dot(w, a);
  for (std::size_t i = 0; i < w.size(); ++i) w[i] -= d * a[i];
  const double n = norm(w);
  Vec u(a.size());
  for (std::size_t i = 0; i < u.size(); ++i) u[i] = std::cos(theta) * a[i] + std::sin(theta) * w[i] / n;
  return u;
}

Outcome transitivity() {
  Outcome out;
  constexpr int kTriples = 1000;
  Rng rng(77);
  for (const auto g : {Geometry::order, Geometry::euclidean_cone, Geometry::hyperbolic_cone}) {
    const auto p = cone(g);
    // A point in the zero-energy region of `from`: a positive coordinate shift for
    // order embeddings, a step inside the cone (a geodesic step on the ball) otherwise.
    const auto successor = [&](ConstVec from) {
      if (g == Geometry::order) {
        Vec y(from.begin(), from.end());
        for (auto& c : y) c += std::abs(std::normal_distribution<double>(0.0, 0.5)(rng));
        return y;
      }
      const double psi = g == Geometry::euclidean_cone ? euclid_aperture(from, p.aperture_k) : hyper_aperture(from, p.aperture_k);
      const Vec u = tilt(unit(from), std::uniform_real_distribution<double>(0.0, 0.999 * psi)(rng), rng);
      const double t = std::uniform_real_distribution<double>(0.01, 0.5)(rng);
      Vec step(u.size());
      for (std::size_t i = 0; i < u.size(); ++i) step[i] = t * u[i];
      if (g == Geometry::hyperbolic_cone) return exp_map(from, step);
      Vec y(from.begin(), from.end());
      for (std::size_t i = 0; i < y.size(); ++i) y[i] += step[i];
      return y;
    };
    double worst = 0.0;
    int valid = 0;
    for (int i = 0; i < kTriples; ++i) {
      const Vec x = g == Geometry::order ? testing::gaussian_vec(rng, 4)
                                         : testing::point_with_norm_in(rng, 4, p.epsilon() + 0.01,
                                                                       g == Geometry::hyperbolic_cone ? 0.9 : 2.0);
      const Vec y = successor(x);
      const Vec z = successor(y);
      if (energy(x, y, p) != 0.0 || energy(y, z, p) != 0.0) continue;
      ++valid;
      worst = std::max(worst, energy(x, z, p));
    }
    out.require(valid == kTriples && worst <= 1e-6,
                fmt::format("{}: {} triples with E(x,y)=E(y,z)=0, max E(x,z) = {:.2e}", to_string(g), valid, worst));
  }
  return out;
}

// ---------------------------------------------------------------------------
// 3. hyperbolic kernels

Outcome kernels() {
  Outcome out;
  Rng rng(3);
  double worst_tanh = 0.0;
  double max_norm = 0.0;
  for (int i = 0; i < 1000; ++i) {
    const Vec v = testing::gaussian_vec(rng, 6, i < 500 ? 1.0 : 20.0);
    const Vec e = exp_map_origin(v);
    const double nv = norm(v);
    for (std::size_t k = 0; k < v.size(); ++k) worst_tanh = std::max(worst_tanh, std::abs(e[k] - std::tanh(nv) * v[k] / nv));
    const Vec x = testing::point_with_norm_in(rng, 6, 0.0, 0.999);
    max_norm = std::max({max_norm, norm(e), norm(exp_map(x, v))});
  }
  out.require(worst_tanh <= 1e-9, fmt::format("exp_0 vs tanh closed form: max abs err {:.2e}", worst_tanh));
  out.require(max_norm < 1.0, fmt::format("exp-map outputs: max norm {:.17g} < 1", max_norm));
  const double d = poincare_distance(Vec{0.0, 0.0}, Vec{0.5, 0.0});
  out.require(std::abs(d - std::log(3.0)) <= 1e-12, fmt::format("d(0,(0.5,0)) - ln 3 = {:.2e}", d - std::log(3.0)));
  const double s0 = riemannian_scale(Vec{0.0, 0.0});
  const double s5 = riemannian_scale(Vec{0.5, 0.0});
  out.require(s0 == 0.25 && s5 == 9.0 / 64.0, fmt::format("rescale factors {} and {} (exact 1/4, 9/64)", s0, s5));
  return out;
}

// ---------------------------------------------------------------------------
// 4. toy trees in the plane

Outcome toy_trees() {
  Outcome out;
  struct Tree {
    int levels;
    int branching;
  };
  for (const Tree t : {Tree{4, 3}, Tree{3, 7}}) {
    const Hierarchy h = generate_synthetic_tree(t.levels, t.branching);
    const EdgeIndex closure(transitive_closure(h).edges);
    const SplitResult split = augment_eval_negatives(split_edges(h, 0.5, 1), h, closure, 1);
    for (const auto g : {Geometry::order, Geometry::euclidean_cone}) {
      const auto t0 = Clock::now();
      TrainConfig c;
      c.cone = cone(g);
      c.dim = 2;
      c.epochs = 1000;
      c.lr = 0.01;
      c.margin = 1.0;
      c.optimizer = OptimizerKind::adam;
      c.seed = 1;
      const TrainResult r = train_label_embeddings(h, split, c);
      const auto val = evaluate_edge_prediction(r.table, c.cone, split.val.edges, split.val_negatives.edges);
      const auto test = apply_threshold(edge_energies(r.table, c.cone, split.test.edges),
                                        edge_energies(r.table, c.cone, split.test_negatives.edges), val.threshold);
      const auto rec = reconstruct_labels(r.table, c.cone, h);
      const double secs = seconds_since(t0);
      const std::string tag = fmt::format("L={},b={} {}", t.levels, t.branching, to_string(g));
      out.require(test.f1 >= 0.95, fmt::format("{}: held-out F1 {:.4f} (val threshold {:.4g})", tag, test.f1, val.threshold));
      out.require(rec.tpr >= 0.95 && rec.tnr >= 0.95,
                  fmt::format("{}: reconstruction TPR {:.4f} TNR {:.4f}", tag, rec.tpr, rec.tnr));
      out.require(secs < 120.0, fmt::format("{}: runtime {:.1f}s", tag, secs));
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// 5. synthetic joint benchmark

FeatureMatrix benchmark_features(const Hierarchy& h, std::uint64_t seed) {
  ClusterFeatureConfig fc;
  fc.per_leaf = 20;
  fc.dim = 64;
  fc.seed = seed;
  return generate_cluster_features(h, fc);
}

struct JointRun {
  double val_micro = 0.0;
  ClassificationReport test;
  JointConfig config;
};

JointRun run_joint(const Hierarchy& h, const FeatureMatrix& f, const InstanceSplit& s, const JointConfig& c) {
  const JointResult r = train_joint(h, f, s.train, s.val, c);
  return {evaluate_classification(r.model, h, f, s.val).micro_f1, evaluate_classification(r.model, h, f, s.test), c};
}

std::string levels_str(std::span<const double> v) {
  std::string s;
  for (const double a : v) s += fmt::format(" {:.3f}", a);
  return s;
}

Outcome joint_benchmark() {
  Outcome out;
  const auto t0 = Clock::now();
  const Hierarchy h = generate_synthetic_tree(4, 3);
  const std::vector<std::uint64_t> seeds = {1, 2};

  for (const auto g : {Geometry::euclidean_cone, Geometry::hyperbolic_cone}) {
    std::vector<double> random_init;
    std::vector<double> label_init;
    for (const std::uint64_t seed : seeds) {
      const FeatureMatrix f = benchmark_features(h, seed);
      const InstanceSplit s = split_instances(f.rows(), seed);

      // Model selection on the validation rows only.
      std::optional<JointRun> best;
      for (const double k : {0.1, 0.3}) {
        for (const double alpha : {1.0, 0.3}) {
          for (const int scale : {1, 3}) {
            JointConfig c = JointConfig::defaults_for(g);
            c.cone.aperture_k = k;
            c.margin = alpha;
            c.epochs *= scale;
            c.seed = seed;
            JointRun run = run_joint(h, f, s, c);
            if (!best || run.val_micro > best->val_micro) best = std::move(run);
          }
        }
      }
      const auto& acc = best->test.level_micro_f1;
      const bool all_levels = std::ranges::all_of(acc, [](double a) { return a >= 0.90; });
      out.require(all_levels, fmt::format("{} seed {}: test per-level accuracy{} (K={}, alpha={}, epochs={}, val m-F1 {:.4f})",
                                          to_string(g), seed, levels_str(acc), best->config.cone.aperture_k,
                                          best->config.margin, best->config.epochs, best->val_micro));
      random_init.push_back(best->test.micro_f1);

      // Same settings, labels initialised from a label-only run at the same K, alpha and d.
      TrainConfig tc;
      tc.cone = best->config.cone;
      tc.dim = best->config.dim;
      tc.margin = best->config.margin;
      tc.optimizer = OptimizerKind::adam;
      tc.seed = seed;
      SplitResult all;
      all.train = transitive_closure(h);
      JointConfig with_init = best->config;
      with_init.init_labels = train_label_embeddings(h, all, tc).table;
      label_init.push_back(run_joint(h, f, s, with_init).test.micro_f1);
    }
    const double mean_rand = std::accumulate(random_init.begin(), random_init.end(), 0.0) / static_cast<double>(seeds.size());
    const double mean_init = std::accumulate(label_init.begin(), label_init.end(), 0.0) / static_cast<double>(seeds.size());
    if (g == Geometry::hyperbolic_cone) {
      out.require(mean_init >= mean_rand,
                  fmt::format("hc label-only init m-F1 {:.4f} vs random init {:.4f} (mean over seeds)", mean_init, mean_rand));
    } else {
      out.notes.push_back(fmt::format("info ec label-only init m-F1 {:.4f} vs random init {:.4f}", mean_init, mean_rand));
    }
  }
  const double secs = seconds_since(t0);
  out.require(secs < 300.0, fmt::format("runtime {:.1f}s (< 300s)", secs));
  return out;
}

// ---------------------------------------------------------------------------
// 6. classifier heads on the benchmark features

Outcome classifier_heads() {
  Outcome out;
  const auto t0 = Clock::now();
  const Hierarchy h = generate_synthetic_tree(4, 3);
  const LabelLayout layout(h);
  const FeatureMatrix f = benchmark_features(h, 1);
  const InstanceSplit s = split_instances(f.rows(), 1);

  std::map<HeadKind, ClassifierResult> trained;
  for (const auto head : {HeadKind::hab, HeadKind::plc, HeadKind::mc, HeadKind::mplc, HeadKind::hs}) {
    ClassifierConfig c;
    c.head = head;
    c.seed = 1;
    trained.emplace(head, train_linear_classifier(h, f, s, c));
  }

  // normalisation invariants on the trained heads' test outputs
  double worst = 0.0;
  const auto sum_dev = [](std::span<const double> v) { return std::abs(std::accumulate(v.begin(), v.end(), 0.0) - 1.0); };
  for (const std::size_t row : s.test) {
    const Eigen::VectorXd plc = trained.at(HeadKind::plc).model.logits(f.row(row));
    for (int l = 1; l <= layout.levels(); ++l) {
      const auto seg = std::span<const double>(plc.data(), static_cast<std::size_t>(plc.size()))
                           .subspan(layout.level_offset(l), layout.level_size(l));
      worst = std::max(worst, sum_dev(softmax(seg)));
    }
    const Eigen::VectorXd mc = trained.at(HeadKind::mc).model.logits(f.row(row));
    for (const auto& level : mc_probabilities(std::span<const double>(mc.data(), static_cast<std::size_t>(mc.size())), layout)) {
      worst = std::max(worst, sum_dev(level));
    }
    const Eigen::VectorXd hs = trained.at(HeadKind::hs).model.logits(f.row(row));
    const auto hp = hs_probabilities(std::span<const double>(hs.data(), static_cast<std::size_t>(hs.size())), layout);
    for (const auto& c : hp.conditionals) worst = std::max(worst, sum_dev(c));
    worst = std::max(worst, sum_dev(hp.leaf_joint));
    for (const auto& level : level_marginals(hp.leaf_joint, layout)) worst = std::max(worst, sum_dev(level));
  }
  out.require(worst <= 1e-9, fmt::format("probability sums: max |sum - 1| = {:.2e}", worst));

  // mplc equals plc when each level is a single sibling group
  Rng rng(6);
  const Hierarchy star = generate_synthetic_tree(2, 27);
  const LabelLayout sl(star);
  double mplc_gap = 0.0;
  for (int i = 0; i < 100; ++i) {
    const Vec x = testing::gaussian_vec(rng, sl.total(), 3.0);
    const auto tau = sl.truth_path(star, static_cast<NodeId>(1 + i % 27));
    mplc_gap = std::max(mplc_gap, std::abs(mplc_loss(x, sl, tau) - plc_loss(x, sl, tau)));
  }
  out.require(mplc_gap <= 1e-12, fmt::format("mplc with full mask vs plc: max gap {:.2e}", mplc_gap));

  // hs leaf joint against brute-force products of group softmaxes
  double hs_gap = 0.0;
  for (int i = 0; i < 100; ++i) {
    const Vec x = testing::gaussian_vec(rng, layout.output_width(HeadKind::hs), 3.0);
    const auto hp = hs_probabilities(x, layout);
    for (const NodeId leaf : h.level_members(4)) {
      const auto tau = layout.truth_path(h, leaf);
      double prod = 1.0;
      for (int l = 1; l <= layout.levels(); ++l) {
        const auto [gi, pos] = layout.group_of(l, tau[static_cast<std::size_t>(l - 1)]);
        const auto& grp = layout.groups()[gi];
        const auto seg = std::span<const double>(x).subspan(grp.offset, grp.members.size());
        prod *= std::exp(seg[pos] - log_sum_exp(seg));
      }
      hs_gap = std::max(hs_gap, std::abs(hp.leaf_joint[tau[3]] - prod));
    }
  }
  out.require(hs_gap <= 1e-12, fmt::format("hs leaf joint vs path products: max gap {:.2e}", hs_gap));

  const double hab = trained.at(HeadKind::hab).test.level_f1[0];
  const double mc = trained.at(HeadKind::mc).test.level_f1[0];
  const double hs = trained.at(HeadKind::hs).test.level_f1[0];
  out.require(mc >= hab && hs >= hab, fmt::format("level-1 micro-F1: mc {:.4f}, hs {:.4f}, hab {:.4f}", mc, hs, hab));
  for (const auto& [head, r] : trained) {
    out.notes.push_back(fmt::format("info {} test m-F1 {:.4f} levels{}", to_string(head), r.test.micro_f1, levels_str(r.test.level_f1)));
  }
  const double secs = seconds_since(t0);
  out.require(secs < 300.0, fmt::format("runtime {:.1f}s (< 300s)", secs));
  return out;
}

// ---------------------------------------------------------------------------
// 7. metrics

Outcome metrics() {
  Outcome out;
  Rng rng(9);
  bool monotone = true;
  bool full = true;
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = 2 + static_cast<std::size_t>(trial % 12);
    std::vector<std::vector<std::uint32_t>> rankings(50, std::vector<std::uint32_t>(n));
    std::vector<std::uint32_t> truth(50);
    for (std::size_t i = 0; i < 50; ++i) {
      std::iota(rankings[i].begin(), rankings[i].end(), 0U);
      std::ranges::shuffle(rankings[i], rng);
      truth[i] = std::uniform_int_distribution<std::uint32_t>(0, static_cast<std::uint32_t>(n - 1))(rng);
    }
    double prev = 0.0;
    for (std::size_t k = 1; k <= n; ++k) {
      const double v = hit_at_k(rankings, truth, k);
      monotone = monotone && v >= prev;
      prev = v;
    }
    full = full && prev == 1.0;
  }
  out.require(monotone && full, "hit@k monotone in k and hit@N = 1 on 200 random ranking sets");

  bool symmetric = true;
  for (int trial = 0; trial < 200; ++trial) {
    std::uniform_int_distribution<std::uint64_t> d(0, 40);
    const ConfusionCounts c{d(rng), d(rng), d(rng), d(rng)};
    const std::vector<ConfusionCounts> per(1 + static_cast<std::size_t>(trial % 6), c);
    for (const auto m : {Metric::precision, Metric::recall, Metric::f1, Metric::tpr, Metric::tnr}) {
      symmetric = symmetric && std::abs(aggregate(per, m, Averaging::macro) - aggregate(per, m, Averaging::micro)) <= 1e-12;
    }
  }
  out.require(symmetric, "macro = micro when every label has the same counts");

  // frequent label predicted well, rare label badly: micro above macro; and the reverse
  const std::vector<ConfusionCounts> rare_bad = {{90, 5, 0, 5}, {1, 5, 90, 4}};
  const std::vector<ConfusionCounts> rare_good = {{40, 30, 0, 30}, {9, 0, 90, 1}};
  const double d1 = aggregate(rare_bad, Metric::f1, Averaging::micro) - aggregate(rare_bad, Metric::f1, Averaging::macro);
  const double d2 = aggregate(rare_good, Metric::f1, Averaging::micro) - aggregate(rare_good, Metric::f1, Averaging::macro);
  out.require(d1 > 0.0 && d2 < 0.0, fmt::format("micro - macro F1: {:+.4f} (rare label bad), {:+.4f} (rare label good)", d1, d2));
  return out;
}

// ---------------------------------------------------------------------------
// 8. CLI determinism

bool run(const std::string& cmd) { return std::system((cmd + " >/dev/null 2>&1").c_str()) == 0; }

std::map<std::string, std::string> snapshot(const fs::path& root) {
  std::map<std::string, std::string> files;
  for (const auto& e : fs::recursive_directory_iterator(root)) {
    if (e.is_regular_file()) files[fs::relative(e.path(), root).string()] = testing::read_file(e.path());
  }
  return files;
}

Outcome determinism(const std::string& cli) {
  Outcome out;
  testing::TempDir work("accept-cli");

  const std::vector<std::string> steps = {
      "gen-tree --levels 3 --branching 3 --out tree",
      "gen-features --hierarchy tree --out feat --per-leaf 8 --feature-dim 16",
      "split --hierarchy tree --out split",
      "train-labels --hierarchy tree --split split --out labels-oe --geometry oe --epochs 20",
      "train-labels --hierarchy tree --split split --out labels-ec --geometry ec --epochs 20",
      "train-labels --hierarchy tree --split split --out labels-hc --geometry hc --epochs 20 --dim 4",
      "train-labels --hierarchy tree --split split --out labels-hc-adam --geometry hc --optimizer adam --epochs 20 --dim 4",
      "train-joint --hierarchy tree --features feat --out joint-ec --geometry ec --dim 4 --epochs 5",
      "train-joint --hierarchy tree --features feat --out joint-hc --geometry hc --dim 4 --epochs 5 "
      "--init-labels labels-hc-adam/embeddings.bin",
      "classify --model joint-ec/model.bin --hierarchy tree --features feat --out classify-ec --rows all",
      "reconstruct --hierarchy tree --model joint-hc/model.bin --geometry hc --out rec-hc",
      "reconstruct --hierarchy tree --embeddings labels-ec/embeddings.bin --out rec-ec",
      "train-classifier --hierarchy tree --features feat --out clf-hab --head hab --epochs 5",
      "train-classifier --hierarchy tree --features feat --out clf-mc --head mc --epochs 5 --imbalance resample",
      "train-classifier --hierarchy tree --features feat --out clf-hs --head hs --epochs 5 --imbalance class-weights",
      "train-classifier --hierarchy tree --features feat --out clf-mplc --head mplc --epochs 5",
      "export-2d --hierarchy tree --embeddings labels-ec/embeddings.bin --out labels-ec.tsv",
      "export-2d --hierarchy tree --model joint-ec/model.bin --out joint-ec.tsv",
      "convert-ethec --input meta.json --out ethec",
  };

  const auto pipeline = [&](const fs::path& dir, const std::string& extra) {
    fs::create_directories(dir);
    std::ofstream(dir / "meta.json")
        << R"({"a": {"family": "F1", "subfamily": "S1", "genus": "G1", "specific_epithet": "x"},)"
        << R"( "b": {"family": "F1", "subfamily": "S2", "genus": "G2", "specific_epithet": "y"},)"
        << R"( "c": {"family": "F2", "subfamily": "S3", "genus": "G3", "specific_epithet": "z"}})";
    bool ok = true;
    for (const auto& step : steps) {
      const bool r = run(fmt::format("cd '{}' && '{}' {} --seed 7{}", dir.string(), cli, step, extra));
      if (!r) out.notes.push_back("FAIL command failed: " + step);
      ok = ok && r;
    }
    return ok;
  };

  const bool ran = pipeline(work.path() / "a", "") && pipeline(work.path() / "b", "");
  out.require(ran, fmt::format("{} pipeline commands ran twice", steps.size()));
  const auto a = snapshot(work.path() / "a");
  const auto b = snapshot(work.path() / "b");
  std::vector<std::string> differing;
  for (const auto& [name, bytes] : a) {
    const auto it = b.find(name);
    if (it == b.end() || it->second != bytes) differing.push_back(name);
  }
  out.require(ran && differing.empty() && a.size() == b.size(),
              fmt::format("{} output files byte-identical across runs{}", a.size(),
                          differing.empty() ? "" : " (differs: " + differing.front() + ")"));

  // worker count must not change results (config snapshots record it, so skip those)
  const bool threaded = pipeline(work.path() / "c", " --threads 3");
  const auto c = snapshot(work.path() / "c");
  std::size_t compared = 0;
  std::vector<std::string> thread_diff;
  for (const auto& [name, bytes] : a) {
    if (name.ends_with("config.ini")) continue;
    ++compared;
    const auto it = c.find(name);
    if (it == c.end() || it->second != bytes) thread_diff.push_back(name);
  }
  out.require(threaded && thread_diff.empty(),
              fmt::format("{} outputs identical with --threads 3{}", compared,
                          thread_diff.empty() ? "" : " (differs: " + thread_diff.front() + ")"));

  // replaying a run from its config.ini snapshot reproduces it
  const bool replayed = run(fmt::format("cd '{}' && '{}' --config joint-hc/config.ini train-joint --out replay",
                                        (work.path() / "a").string(), cli));
  const bool same = replayed && testing::read_file(work.path() / "a" / "replay" / "model.bin") ==
                                    testing::read_file(work.path() / "a" / "joint-hc" / "model.bin");
  out.require(same, "train-joint replayed from config.ini gives an identical model");
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  if (argc < 2) {
    fmt::print(stderr, "usage: {} <hierembed-cli> [criterion ...]\n", argv[0]);
    return 2;
  }
  const std::string cli = fs::absolute(argv[1]).string();
  std::set<int> only;
  for (int i = 2; i < argc; ++i) only.insert(std::atoi(argv[i]));

  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
      {"gradient suite", gradients},
      {"cone transitivity", transitivity},
      {"hyperbolic kernels", kernels},
      {"toy-tree reproduction", toy_trees},
      {"synthetic joint benchmark", joint_benchmark},
      {"classifier-head suite", classifier_heads},
      {"metrics", metrics},
      {"determinism", [&] { return determinism(cli); }},
  };

  std::vector<std::string> summary;
  bool all = true;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const int id = static_cast<int>(i + 1);
    if (!only.empty() && !only.contains(id)) continue;
    const auto t0 = Clock::now();
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o.require(false, std::string("exception: ") + e.what());
    }
    for (const auto& n : o.notes) fmt::print("    [{}] {}\n", id, n);
    const std::string line = fmt::format("criterion {} ({}): {} [{:.1f}s]", id, criteria[i].first, o.pass ? "PASS" : "FAIL", seconds_since(t0));
    fmt::print("{}\n", line);
    std::fflush(stdout);
    summary.push_back(line);
    all = all && o.pass;
  }
  fmt::print("\nsummary\n");
  for (const auto& s : summary) fmt::print("  {}\n", s);
  return all ? 0 : 1;
}
