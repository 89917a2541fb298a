// hierembed: command-line driver for hierarchy embedding and classification runs.
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <numeric>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "hierembed/classifier_heads.hpp"
#include "hierembed/embed_train.hpp"
#include "hierembed/ethec.hpp"
#include "hierembed/export2d.hpp"
#include "hierembed/hierarchy.hpp"
#include "hierembed/joint_embed.hpp"
#include "hierembed/optim.hpp"
#include "hierembed/parallel.hpp"
#include "hierembed/synthetic.hpp"

namespace fs = std::filesystem;
using namespace hierembed;

namespace {

struct Common {
  std::uint64_t seed = 42;
  std::optional<std::size_t> threads;
};

void add_common(CLI::App* sub, Common& c) {
  sub->add_option("--seed", c.seed, "random seed")->capture_default_str();
  sub->add_option("--threads", c.threads, "worker threads (default: HIEREMBED_THREADS or 1)");
}

void apply_common(const Common& c) {
  if (c.threads) set_thread_count(*c.threads);
}

std::ofstream open_text(const fs::path& p) {
  std::ofstream out(p);
  if (!out) throw std::runtime_error("cannot write " + p.string());
  return out;
}

// Resolved options of `sub`, written next to the outputs so a run can be repeated
// with `hierembed --config <dir>/config.ini <sub>`. Unset optional values are left
// out; reading back an empty string would assign them.
void write_snapshot(const CLI::App* sub, const fs::path& dir) {
  auto out = open_text(dir / "config.ini");
  std::istringstream lines(sub->config_to_str(true, false));
  for (std::string line; std::getline(lines, line);) {
    if (line.empty() || line.ends_with("=\"\"")) continue;
    out << sub->get_name() << '.' << line << '\n';
  }
}

// Short, stable error class names for the stderr error line.
std::string error_kind(const std::exception& e) {
  if (dynamic_cast<const SamplingError*>(&e)) return "sampling";
  if (dynamic_cast<const HierarchyError*>(&e)) return "hierarchy";
  if (dynamic_cast<const FormatError*>(&e)) return "format";
  if (dynamic_cast<const NumericalError*>(&e)) return "numerical";
  if (dynamic_cast<const DimensionError*>(&e)) return "dimension";
  if (dynamic_cast<const DomainError*>(&e)) return "domain";
  if (dynamic_cast<const std::invalid_argument*>(&e)) return "invalid-argument";
  if (dynamic_cast<const std::filesystem::filesystem_error*>(&e)) return "io";
  return "runtime";
}

void log(const std::string& msg) { fmt::print(stderr, "[hierembed] {}\n", msg); }

Hierarchy read_hierarchy(const fs::path& dir) { return load_hierarchy(dir / "nodes.tsv", dir / "edges.tsv"); }

FeatureMatrix read_features(const fs::path& dir, const Hierarchy& h) {
  return load_features(dir / "features.bin", dir / "instances.tsv", h);
}

void write_instance_split(const InstanceSplit& s, const FeatureMatrix& f, const fs::path& path) {
  auto out = open_text(path);
  const auto put = [&](const std::vector<std::size_t>& rows, const char* name) {
    for (const std::size_t r : rows) out << f.instance_ids[r] << '\t' << name << '\n';
  };
  put(s.train, "train");
  put(s.val, "val");
  put(s.test, "test");
}

struct ConeFlags {
  std::string geometry = "ec";
  double aperture_k = 0.1;
  double max_norm = 1.0;
  bool squared_order = false;

  void add(CLI::App* sub) {
    sub->add_option("--geometry", geometry, "oe | ec | hc")
        ->check(CLI::IsMember({"oe", "ec", "hc"}))
        ->capture_default_str();
    sub->add_option("--aperture-k", aperture_k, "cone aperture constant K")->capture_default_str();
    sub->add_option("--max-norm", max_norm, "outer norm bound for Euclidean cones")->capture_default_str();
    sub->add_flag("--squared-order", squared_order, "squared order-embedding energy");
  }
  [[nodiscard]] ConeParams params() const {
    ConeParams p;
    p.geometry = parse_geometry(geometry);
    p.aperture_k = aperture_k;
    p.max_norm = max_norm;
    p.squared_order = squared_order;
    return p;
  }
};

void write_joint_report(const ClassificationReport& r, const fs::path& path) {
  auto out = open_text(path);
  out << "m-F1";
  for (std::size_t l = 1; l <= r.level_micro_f1.size(); ++l) out << ",L" << l;
  out << ",hit@3_last,hit@5_last,hit@3_mean,hit@5_mean\n";
  out << fmt::format("{:.6f}", r.micro_f1);
  for (const double f : r.level_micro_f1) out << fmt::format(",{:.6f}", f);
  out << fmt::format(",{:.6f},{:.6f},{:.6f},{:.6f}\n", r.hit3_last, r.hit5_last, r.hit3_mean, r.hit5_mean);
}

void write_reconstruction(const ReconstructionReport& r, const fs::path& path) {
  auto out = open_text(path);
  out << "TPR,TNR,full-F1,threshold\n";
  out << fmt::format("{:.6f},{:.6f},{:.6f},{:.17g}\n", r.tpr, r.tnr, r.f1, r.threshold);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Hierarchy embeddings with order embeddings and entailment cones"};
  app.require_subcommand(1);
  app.set_config("--config", "", "read subcommand options from a config.ini snapshot");
  std::function<void()> run;
  std::string command;

  // gen-tree ------------------------------------------------------------------
  Common gt_c;
  int gt_levels = 4;
  int gt_branching = 3;
  fs::path gt_out;
  auto* gen_tree = app.add_subcommand("gen-tree", "write a complete synthetic tree");
  gen_tree->add_option("--levels", gt_levels)->capture_default_str();
  gen_tree->add_option("--branching", gt_branching)->capture_default_str();
  gen_tree->add_option("--out", gt_out, "output directory")->required();
  add_common(gen_tree, gt_c);
  gen_tree->callback([&] {
    run = [&] {
      fs::create_directories(gt_out);
      const Hierarchy h = generate_synthetic_tree(gt_levels, gt_branching);
      save_hierarchy(h, gt_out / "nodes.tsv", gt_out / "edges.tsv");
      write_snapshot(gen_tree, gt_out);
      log(fmt::format("tree with {} nodes, {} levels", h.size(), h.level_count()));
    };
  });

  // gen-features --------------------------------------------------------------
  Common gf_c;
  fs::path gf_hier;
  fs::path gf_out;
  ClusterFeatureConfig gf_cfg;
  auto* gen_features = app.add_subcommand("gen-features", "write hierarchical Gaussian cluster features");
  gen_features->add_option("--hierarchy", gf_hier, "directory with nodes.tsv and edges.tsv")->required();
  gen_features->add_option("--out", gf_out, "output directory")->required();
  gen_features->add_option("--per-leaf", gf_cfg.per_leaf)->capture_default_str();
  gen_features->add_option("--feature-dim", gf_cfg.dim)->capture_default_str();
  gen_features->add_option("--center-scale", gf_cfg.center_scale)->capture_default_str();
  gen_features->add_option("--noise", gf_cfg.noise)->capture_default_str();
  add_common(gen_features, gf_c);
  gen_features->callback([&] {
    run = [&] {
      fs::create_directories(gf_out);
      const Hierarchy h = read_hierarchy(gf_hier);
      gf_cfg.seed = gf_c.seed;
      const FeatureMatrix f = generate_cluster_features(h, gf_cfg);
      save_features(f, h, gf_out / "features.bin", gf_out / "instances.tsv");
      save_instance_levels(f, h, gf_out / "instances-levels.tsv");
      write_snapshot(gen_features, gf_out);
      log(fmt::format("{} instances x {} features", f.rows(), f.cols()));
    };
  });

  // split ---------------------------------------------------------------------
  Common sp_c;
  fs::path sp_hier;
  fs::path sp_out;
  double sp_fraction = 0.5;
  auto* sp_app = app.add_subcommand("split", "split the transitive closure into train/val/test edges");
  sp_app->add_option("--hierarchy", sp_hier)->required();
  sp_app->add_option("--out", sp_out)->required();
  sp_app->add_option("--nonbasic-fraction", sp_fraction, "share of the remaining non-basic edges used for training")
      ->check(CLI::Range(0.0, 1.0))
      ->capture_default_str();
  add_common(sp_app, sp_c);
  sp_app->callback([&] {
    run = [&] {
      apply_common(sp_c);
      fs::create_directories(sp_out);
      const Hierarchy h = read_hierarchy(sp_hier);
      const EdgeIndex closure(transitive_closure(h).edges);
      auto s = augment_eval_negatives(split_edges(h, sp_fraction, sp_c.seed), h, closure, sp_c.seed);
      save_split(s, h, sp_out);
      write_snapshot(sp_app, sp_out);
      log(fmt::format("train {} / val {} / test {} edges", s.train.size(), s.val.size(), s.test.size()));
    };
  });

  // train-labels --------------------------------------------------------------
  Common tl_c;
  ConeFlags tl_cone;
  fs::path tl_hier;
  fs::path tl_split;
  fs::path tl_out;
  TrainConfig tl_cfg;
  std::string tl_opt = "auto";
  bool tl_uniform_neg = false;
  auto* tl_app = app.add_subcommand("train-labels", "embed the label hierarchy alone");
  tl_app->add_option("--hierarchy", tl_hier)->required();
  tl_app->add_option("--split", tl_split, "directory written by `split`")->required();
  tl_app->add_option("--out", tl_out)->required();
  tl_cone.add(tl_app);
  tl_app->add_option("--dim", tl_cfg.dim)->capture_default_str();
  tl_app->add_option("--margin", tl_cfg.margin, "negative margin alpha")->capture_default_str();
  tl_app->add_option("--lr", tl_cfg.lr)->capture_default_str();
  tl_app->add_option("--epochs", tl_cfg.epochs)->capture_default_str();
  tl_app->add_option("--batch", tl_cfg.batch_size)->capture_default_str();
  tl_app->add_option("--negatives-per-level", tl_cfg.negatives_per_level)->capture_default_str();
  tl_app->add_option("--optimizer", tl_opt, "auto (rsgd for hyperbolic cones, else adam) | adam | rsgd")
      ->check(CLI::IsMember({"auto", "adam", "rsgd"}))
      ->capture_default_str();
  tl_app->add_flag("--uniform-negatives", tl_uniform_neg, "draw corruptions uniformly instead of per level");
  add_common(tl_app, tl_c);
  tl_app->callback([&] {
    run = [&] {
      apply_common(tl_c);
      fs::create_directories(tl_out);
      const Hierarchy h = read_hierarchy(tl_hier);
      const SplitResult s = load_split(h, tl_split);
      tl_cfg.cone = tl_cone.params();
      tl_cfg.optimizer = tl_opt == "auto" ? default_optimizer(tl_cfg.cone.geometry) : parse_optimizer(tl_opt);
      tl_cfg.pick_per_level = !tl_uniform_neg;
      tl_cfg.seed = tl_c.seed;
      const TrainResult r = train_label_embeddings(h, s, tl_cfg);
      save_embeddings(r.table, h, tl_out / "embeddings.bin", tl_out / "embeddings.tsv");
      write_training_log(r.log, tl_out / "training_log.csv");

      auto out = open_text(tl_out / "metrics.csv");
      out << "split,threshold,precision,recall,f1,accuracy\n";
      double threshold = 0.0;
      bool have_threshold = false;
      if (!s.val.empty() && !s.val_negatives.empty()) {
        const auto v = evaluate_edge_prediction(r.table, tl_cfg.cone, s.val.edges, s.val_negatives.edges);
        out << fmt::format("val,{:.17g},{:.6f},{:.6f},{:.6f},{:.6f}\n", v.threshold, v.precision, v.recall, v.f1, v.accuracy);
        threshold = v.threshold;
        have_threshold = true;
      }
      if (!s.test.empty() && !s.test_negatives.empty()) {
        const auto pe = edge_energies(r.table, tl_cfg.cone, s.test.edges);
        const auto ne = edge_energies(r.table, tl_cfg.cone, s.test_negatives.edges);
        const auto t = have_threshold ? apply_threshold(pe, ne, threshold) : best_threshold(pe, ne);
        out << fmt::format("test,{:.17g},{:.6f},{:.6f},{:.6f},{:.6f}\n", t.threshold, t.precision, t.recall, t.f1, t.accuracy);
        log(fmt::format("test F1 {:.4f}", t.f1));
      }
      write_reconstruction(reconstruct_labels(r.table, tl_cfg.cone, h), tl_out / "reconstruction.csv");
      write_snapshot(tl_app, tl_out);
    };
  });

  // train-joint ---------------------------------------------------------------
  Common tj_c;
  ConeFlags tj_cone;
  fs::path tj_hier;
  fs::path tj_feat;
  fs::path tj_out;
  std::optional<fs::path> tj_init;
  std::size_t tj_dim = 10;
  double tj_margin = 1.0;
  std::optional<double> tj_lr_labels;
  std::optional<double> tj_lr_im;
  std::optional<int> tj_epochs;
  std::size_t tj_batch = 10;
  int tj_negatives = 1;
  bool tj_balance = false;
  std::uint64_t tj_split_seed = 42;
  auto* tj_app = app.add_subcommand("train-joint", "embed labels and image features jointly");
  tj_app->add_option("--hierarchy", tj_hier)->required();
  tj_app->add_option("--features", tj_feat, "directory with features.bin and instances.tsv")->required();
  tj_app->add_option("--out", tj_out)->required();
  tj_cone.add(tj_app);
  tj_app->add_option("--dim", tj_dim)->capture_default_str();
  tj_app->add_option("--margin", tj_margin)->capture_default_str();
  tj_app->add_option("--lr-labels", tj_lr_labels, "default: 1e-2 (ec), 1e-4 (hc)");
  tj_app->add_option("--lr-im", tj_lr_im, "default: 1e-3");
  tj_app->add_option("--epochs", tj_epochs, "default: 200 (ec), 100 (hc)");
  tj_app->add_option("--batch", tj_batch)->capture_default_str();
  tj_app->add_option("--negatives-per-level", tj_negatives)->capture_default_str();
  tj_app->add_flag("--balance-negatives", tj_balance, "as many instance corruptions as label corruptions");
  tj_app->add_option("--init-labels", tj_init, "EMB1 file from train-labels used to initialise labels");
  tj_app->add_option("--split-seed", tj_split_seed, "seed of the 80/10/10 instance split")->capture_default_str();
  add_common(tj_app, tj_c);
  tj_app->callback([&] {
    run = [&] {
      apply_common(tj_c);
      fs::create_directories(tj_out);
      const Hierarchy h = read_hierarchy(tj_hier);
      const FeatureMatrix f = read_features(tj_feat, h);
      const InstanceSplit is = split_instances(f.rows(), tj_split_seed);
      const ConeParams cone = tj_cone.params();
      JointConfig cfg = JointConfig::defaults_for(cone.geometry);
      cfg.cone = cone;
      cfg.dim = tj_dim;
      cfg.margin = tj_margin;
      if (tj_lr_labels) cfg.lr_labels = *tj_lr_labels;
      if (tj_lr_im) cfg.lr_im = *tj_lr_im;
      if (tj_epochs) cfg.epochs = *tj_epochs;
      cfg.batch_size = tj_batch;
      cfg.negatives_per_level = tj_negatives;
      cfg.balance_negatives = tj_balance;
      cfg.seed = tj_c.seed;
      if (tj_init) cfg.init_labels = load_embeddings(*tj_init);
      const JointResult r = train_joint(h, f, is.train, is.val, cfg);
      save_model(r.model, tj_out / "model.bin");
      write_training_log(r.log, tj_out / "training_log.csv");
      write_instance_split(is, f, tj_out / "instance-split.tsv");
      const auto report = evaluate_classification(r.model, h, f, is.test);
      write_joint_report(report, tj_out / "metrics.csv");
      save_predictions(report, f, h, tj_out / "predictions.tsv");
      write_reconstruction(reconstruct_labels(r.model.labels, r.model.cone, h), tj_out / "reconstruction.csv");
      write_snapshot(tj_app, tj_out);
      log(fmt::format("test m-F1 {:.4f}", report.micro_f1));
    };
  });

  // classify ------------------------------------------------------------------
  Common cl_c;
  fs::path cl_model;
  fs::path cl_hier;
  fs::path cl_feat;
  fs::path cl_out;
  std::string cl_rows = "test";
  std::uint64_t cl_split_seed = 42;
  auto* cl_app = app.add_subcommand("classify", "predict one label per level with a joint model");
  cl_app->add_option("--model", cl_model)->required();
  cl_app->add_option("--hierarchy", cl_hier)->required();
  cl_app->add_option("--features", cl_feat)->required();
  cl_app->add_option("--out", cl_out)->required();
  cl_app->add_option("--rows", cl_rows, "all | train | val | test")
      ->check(CLI::IsMember({"all", "train", "val", "test"}))
      ->capture_default_str();
  cl_app->add_option("--split-seed", cl_split_seed)->capture_default_str();
  add_common(cl_app, cl_c);
  cl_app->callback([&] {
    run = [&] {
      apply_common(cl_c);
      fs::create_directories(cl_out);
      const Hierarchy h = read_hierarchy(cl_hier);
      const FeatureMatrix f = read_features(cl_feat, h);
      const JointModel m = load_model(cl_model);
      std::vector<std::size_t> rows;
      if (cl_rows == "all") {
        rows.resize(f.rows());
        std::iota(rows.begin(), rows.end(), std::size_t{0});
      } else {
        const InstanceSplit is = split_instances(f.rows(), cl_split_seed);
        rows = cl_rows == "train" ? is.train : cl_rows == "val" ? is.val : is.test;
      }
      const auto report = evaluate_classification(m, h, f, rows);
      save_predictions(report, f, h, cl_out / "predictions.tsv");
      write_joint_report(report, cl_out / "metrics.csv");
      write_snapshot(cl_app, cl_out);
      log(fmt::format("{} rows, m-F1 {:.4f}", rows.size(), report.micro_f1));
    };
  });

  // reconstruct ---------------------------------------------------------------
  Common rc_c;
  ConeFlags rc_cone;
  fs::path rc_hier;
  std::optional<fs::path> rc_emb;
  std::optional<fs::path> rc_model;
  fs::path rc_out;
  auto* rc_app = app.add_subcommand("reconstruct", "score the label closure against all other label pairs");
  rc_app->add_option("--hierarchy", rc_hier)->required();
  auto* rc_emb_opt = rc_app->add_option("--embeddings", rc_emb, "EMB1 file from train-labels");
  auto* rc_model_opt = rc_app->add_option("--model", rc_model, "model file from train-joint");
  rc_emb_opt->excludes(rc_model_opt);
  rc_app->add_option("--out", rc_out)->required();
  rc_cone.add(rc_app);
  add_common(rc_app, rc_c);
  rc_app->callback([&] {
    run = [&] {
      apply_common(rc_c);
      if (!rc_emb && !rc_model) throw std::invalid_argument("reconstruct needs --embeddings or --model");
      fs::create_directories(rc_out);
      const Hierarchy h = read_hierarchy(rc_hier);
      ReconstructionReport r;
      if (rc_model) {
        const JointModel m = load_model(*rc_model);
        r = reconstruct_labels(m.labels, m.cone, h);
      } else {
        const EmbeddingTable t = load_embeddings(*rc_emb);
        ConeParams cone = rc_cone.params();
        cone.geometry = t.geometry;
        r = reconstruct_labels(t, cone, h);
      }
      write_reconstruction(r, rc_out / "reconstruction.csv");
      write_snapshot(rc_app, rc_out);
      log(fmt::format("TPR {:.4f} TNR {:.4f} F1 {:.4f}", r.tpr, r.tnr, r.f1));
    };
  });

  // train-classifier ----------------------------------------------------------
  Common tc_c;
  fs::path tc_hier;
  fs::path tc_feat;
  fs::path tc_out;
  ClassifierConfig tc_cfg;
  std::string tc_head = "plc";
  std::string tc_imbalance = "none";
  std::string tc_threshold = "ofadb";
  std::uint64_t tc_split_seed = 42;
  auto* tc_app = app.add_subcommand("train-classifier", "train a linear classifier head on features");
  tc_app->add_option("--hierarchy", tc_hier)->required();
  tc_app->add_option("--features", tc_feat)->required();
  tc_app->add_option("--out", tc_out)->required();
  tc_app->add_option("--head", tc_head, "hab | plc | mc | mplc | hs")
      ->check(CLI::IsMember({"hab", "plc", "mc", "mplc", "hs"}))
      ->capture_default_str();
  tc_app->add_option("--imbalance", tc_imbalance, "none | class-weights | resample")
      ->check(CLI::IsMember({"none", "class-weights", "resample"}))
      ->capture_default_str();
  tc_app->add_option("--threshold-mode", tc_threshold, "ofadb | pcdb (hab only)")
      ->check(CLI::IsMember({"ofadb", "pcdb"}))
      ->capture_default_str();
  tc_app->add_option("--lr", tc_cfg.lr)->capture_default_str();
  tc_app->add_option("--epochs", tc_cfg.epochs)->capture_default_str();
  tc_app->add_option("--batch", tc_cfg.batch_size)->capture_default_str();
  tc_app->add_option("--split-seed", tc_split_seed)->capture_default_str();
  add_common(tc_app, tc_c);
  tc_app->callback([&] {
    run = [&] {
      apply_common(tc_c);
      fs::create_directories(tc_out);
      const Hierarchy h = read_hierarchy(tc_hier);
      const FeatureMatrix f = read_features(tc_feat, h);
      const InstanceSplit is = split_instances(f.rows(), tc_split_seed);
      tc_cfg.head = parse_head(tc_head);
      tc_cfg.imbalance = parse_imbalance(tc_imbalance);
      tc_cfg.threshold_mode = parse_threshold_mode(tc_threshold);
      tc_cfg.seed = tc_c.seed;
      const ClassifierResult r = train_linear_classifier(h, f, is, tc_cfg);
      {
        auto out = open_text(tc_out / "training_log.csv");
        out << "epoch,loss";
        for (int l = 1; l <= h.level_count(); ++l) out << ",val_L" << l;
        out << '\n';
        for (const auto& e : r.log) {
          out << fmt::format("{},{:.17g}", e.epoch, e.loss);
          for (const double v : e.val_level_f1) out << fmt::format(",{:.17g}", v);
          out << '\n';
        }
      }
      write_instance_split(is, f, tc_out / "instance-split.tsv");
      write_classifier_report(tc_head, r.test, tc_out / "metrics.csv");
      write_snapshot(tc_app, tc_out);
      log(fmt::format("{} test m-F1 {:.4f}", tc_head, r.test.micro_f1));
    };
  });

  // export-2d -----------------------------------------------------------------
  Common ex_c;
  fs::path ex_hier;
  std::optional<fs::path> ex_emb;
  std::optional<fs::path> ex_model;
  std::optional<std::string> ex_method;
  fs::path ex_out;
  auto* export_2d = app.add_subcommand("export-2d", "write label coordinates projected to the plane");
  export_2d->add_option("--hierarchy", ex_hier)->required();
  auto* ex_emb_opt = export_2d->add_option("--embeddings", ex_emb);
  auto* ex_model_opt = export_2d->add_option("--model", ex_model);
  ex_emb_opt->excludes(ex_model_opt);
  export_2d->add_option("--method", ex_method, "raw2d | pca (default: raw2d for 2-D models, else pca)")
      ->check(CLI::IsMember({"raw2d", "pca"}));
  export_2d->add_option("--out", ex_out, "output TSV file")->required();
  add_common(export_2d, ex_c);
  export_2d->callback([&] {
    run = [&] {
      apply_common(ex_c);
      if (!ex_emb && !ex_model) throw std::invalid_argument("export-2d needs --embeddings or --model");
      const Hierarchy h = read_hierarchy(ex_hier);
      const EmbeddingTable t = ex_model ? load_model(*ex_model).labels : load_embeddings(*ex_emb);
      const ProjectionMethod method =
          ex_method ? parse_projection(*ex_method) : (t.dim == 2 ? ProjectionMethod::raw2d : ProjectionMethod::pca);
      if (ex_out.has_parent_path()) fs::create_directories(ex_out.parent_path());
      write_2d(project_2d(t, method), h, ex_out);
      log(fmt::format("{} points exported", t.size()));
    };
  });

  // convert-ethec -------------------------------------------------------------
  Common ce_c;
  fs::path ce_in;
  fs::path ce_out;
  auto* convert = app.add_subcommand("convert-ethec", "turn ETHEC metadata JSON into hierarchy and instance files");
  convert->add_option("--input", ce_in)->required()->check(CLI::ExistingFile);
  convert->add_option("--out", ce_out)->required();
  add_common(convert, ce_c);
  convert->callback([&] {
    run = [&] {
      const EthecData d = load_ethec(ce_in);
      save_ethec(d, ce_out);
      write_snapshot(convert, ce_out);
      log(fmt::format("{} labels on {} levels, {} images", d.hierarchy.size(), d.hierarchy.level_count(),
                      d.instance_ids.size()));
    };
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }
  for (const auto* sub : app.get_subcommands()) command = sub->get_name();

  try {
    run();
  } catch (const std::exception& e) {
    std::string msg = e.what();
    std::ranges::replace(msg, '\n', ' ');
    fmt::print(stderr, "error\tcommand={}\tkind={}\tmessage={}\n", command, error_kind(e), msg);
    return 1;
  }
  return 0;
}
