#include "tgemb/cli.hpp"

#include <CLI11.hpp>
#include <fstream>
#include <iostream>

#include "tgemb/gradcheck.hpp"
#include "tgemb/motifs.hpp"
#include "tgemb/synthetic.hpp"
#include "tgemb/temporal_graph.hpp"
#include "tgemb/trainer.hpp"

namespace tgemb {

namespace {

struct IngestArgs {
  std::string input, output;
  std::string format = "plain";
  bool bipartite = false;
  bool drop_self_loops = false;
};

struct MotifArgs {
  std::string graph, output, csv;
  std::string catalog;  // builtin name or path; defaults by network class
  double delta = 0.0;
  bool causal = false;
  unsigned threads = 0;
};

struct SplitArgs {
  std::string graph, output;
  double train_frac = 0.7;
  double val_frac = 0.15;
  bool inductive = false;
  double mask_frac = 0.1;
  uint64_t seed = 0;
};

struct TrainArgs {
  std::string graph, features, split, config, checkpoint, log;
  uint64_t seed = 0;
  bool seed_set = false;
  int epochs = 0;
  bool no_gru = false, no_motif = false, no_bicomp = false;
  bool audit = false;
};

struct EvalArgs {
  std::string graph, features, split, config, checkpoint;
  std::string split_name = "test";
  bool audit = false;
};

struct GradcheckArgs {
  uint64_t seed = 1;
  int trials = 20;
  double tolerance = 1e-4;
};

int do_ingest(const IngestArgs& a) {
  const EdgeFileFormat format =
      (a.format == "jodie") ? EdgeFileFormat::Jodie : EdgeFileFormat::Plain;
  const GraphKind kind =
      a.bipartite ? GraphKind::UndirectedBipartite : GraphKind::DirectedHomogeneous;
  const TemporalGraph g = ingest(a.input, format, kind, a.drop_self_loops);
  g.save(a.output);
  std::cout << "ingest,nodes=" << g.num_nodes() << ",edges=" << g.num_edges()
            << ",feature_dim=" << g.edge_feature_dim() << ",output=" << a.output << "\n";
  return 0;
}

int do_motifs(const MotifArgs& a) {
  const TemporalGraph g = TemporalGraph::load(a.graph);
  std::string catalog_spec = a.catalog;
  if (catalog_spec.empty())
    catalog_spec = (g.kind() == GraphKind::UndirectedBipartite) ? "bipartite_default"
                                                                : "directed_default";
  MotifCatalog catalog = resolve_catalog(catalog_spec);
  catalog.delta = a.delta;
  const EdgeMotifFeatures features = build_edge_features(g, catalog, a.causal, a.threads);
  features.save(a.output);
  if (!a.csv.empty()) features.write_csv(a.csv);
  std::cout << "motifs,catalog=" << catalog.name << ",motifs=" << catalog.motifs.size()
            << ",width=" << features.width() << ",delta=" << catalog.delta
            << ",causal=" << (a.causal ? 1 : 0) << ",output=" << a.output << "\n";
  return 0;
}

int do_split(const SplitArgs& a) {
  const TemporalGraph g = TemporalGraph::load(a.graph);
  const SplitPlan plan = split(g, a.train_frac, a.val_frac,
                               a.inductive ? SplitMode::Inductive : SplitMode::Transductive,
                               a.inductive ? a.mask_frac : 0.0, a.seed);
  plan.save(a.output);
  std::cout << "split,mode=" << (a.inductive ? "inductive" : "transductive")
            << ",train_end=" << plan.train_end << ",val_end=" << plan.val_end
            << ",masked=" << plan.masked_nodes.size() << ",output=" << a.output << "\n";
  return 0;
}

int do_train(const TrainArgs& a) {
  const TemporalGraph g = TemporalGraph::load(a.graph);
  const SplitPlan plan = SplitPlan::load(a.split);
  std::optional<EdgeMotifFeatures> features;
  if (!a.features.empty()) features = EdgeMotifFeatures::load(a.features);

  TrainConfig cfg = a.config.empty() ? TrainConfig{} : TrainConfig::from_file(a.config);
  if (a.seed_set) cfg.seed = a.seed;
  if (a.epochs > 0) cfg.epochs_max = a.epochs;
  cfg.model.no_gru |= a.no_gru;
  cfg.model.no_motif |= a.no_motif;
  cfg.model.no_bicomp |= a.no_bicomp;
  cfg.audit_leakage |= a.audit;

  const TrainResult result =
      train(g, features ? &*features : nullptr, plan, cfg, a.checkpoint);
  if (!a.log.empty()) {
    std::ofstream os(a.log, std::ios::trunc);
    if (!os) throw DataError("cannot open for writing: " + a.log);
    os << result.log;
  }
  std::cout << "train,epochs=" << result.epochs_run << ",best_epoch=" << result.best_epoch
            << ",val_auc=" << result.best_val_auc << ",val_ap=" << result.best_val_ap;
  if (cfg.audit_leakage)
    std::cout << ",audited=" << result.audit.embeddings_checked
              << ",violations=" << result.audit.violations;
  std::cout << ",checkpoint=" << a.checkpoint << "\n";
  if (cfg.audit_leakage && result.audit.violations > 0)
    throw NumericError("leakage audit found violations");
  return 0;
}

int do_eval(const EvalArgs& a) {
  const TemporalGraph g = TemporalGraph::load(a.graph);
  const SplitPlan plan = SplitPlan::load(a.split);
  std::optional<EdgeMotifFeatures> features;
  if (!a.features.empty()) features = EdgeMotifFeatures::load(a.features);
  TrainConfig cfg = a.config.empty() ? TrainConfig{} : TrainConfig::from_file(a.config);
  if (a.split_name != "val" && a.split_name != "test")
    throw UsageError("--split-name must be val or test");

  LeakageAudit audit;
  const EvalReport report =
      evaluate(g, features ? &*features : nullptr, plan, cfg, a.checkpoint,
               a.split_name == "val" ? EvalSplit::Val : EvalSplit::Test,
               a.audit ? &audit : nullptr);
  std::cout << report.csv_row();
  if (a.audit) std::cout << "," << audit.embeddings_checked << "," << audit.violations;
  std::cout << "\n";
  if (a.audit && audit.violations > 0) throw NumericError("leakage audit found violations");
  return 0;
}

int do_gradcheck(const GradcheckArgs& a) {
  const auto reports = run_gradient_checks(a.seed, a.trials);
  bool ok = true;
  for (const auto& r : reports) {
    std::cout << "gradcheck," << r.layer << "," << r.max_rel_error << ","
              << (r.max_rel_error <= a.tolerance ? "pass" : "fail") << "\n";
    ok &= r.max_rel_error <= a.tolerance;
  }
  if (!ok) throw NumericError("gradient check exceeded tolerance");
  std::cout << "gradcheck,all,pass\n";
  return 0;
}

}  // namespace

int run_cli(const std::vector<std::string>& args) {
  CLI::App app{"temporal network embedding with motif edge features", "tgemb"};
  app.require_subcommand(1);

  IngestArgs ingest_args;
  auto* cmd_ingest = app.add_subcommand("ingest", "parse an edge list into a graph container");
  cmd_ingest->add_option("--input", ingest_args.input, "edge list file")->required();
  cmd_ingest->add_option("--output", ingest_args.output, "graph container path")->required();
  cmd_ingest->add_option("--format", ingest_args.format, "plain | jodie")
      ->check(CLI::IsMember({"plain", "jodie"}));
  cmd_ingest->add_flag("--bipartite", ingest_args.bipartite,
                       "undirected bipartite network (default directed homogeneous)");
  cmd_ingest->add_flag("--drop-self-loops", ingest_args.drop_self_loops, "remove self loops");

  MotifArgs motif_args;
  auto* cmd_motifs = app.add_subcommand("motifs", "count motif instances into edge features");
  cmd_motifs->add_option("--graph", motif_args.graph, "graph container")->required();
  cmd_motifs->add_option("--output", motif_args.output, "feature table path")->required();
  cmd_motifs->add_option("--delta", motif_args.delta, "window length in seconds")->required();
  cmd_motifs->add_option("--catalog", motif_args.catalog,
                         "builtin catalog name or catalog file path");
  cmd_motifs->add_option("--csv", motif_args.csv, "also write counts as CSV");
  cmd_motifs->add_flag("--causal", motif_args.causal,
                       "count only instances completed by each edge's time");
  cmd_motifs->add_option("--threads", motif_args.threads, "worker threads (0 = auto)");

  SplitArgs split_args;
  auto* cmd_split = app.add_subcommand("split", "plan chronological train/val/test boundaries");
  cmd_split->add_option("--graph", split_args.graph, "graph container")->required();
  cmd_split->add_option("--output", split_args.output, "split plan path")->required();
  cmd_split->add_option("--train-frac", split_args.train_frac, "training fraction");
  cmd_split->add_option("--val-frac", split_args.val_frac, "validation fraction");
  cmd_split->add_flag("--inductive", split_args.inductive, "mask nodes for inductive evaluation");
  cmd_split->add_option("--mask-frac", split_args.mask_frac, "fraction of nodes to mask");
  cmd_split->add_option("--seed", split_args.seed, "mask sampling seed");

  TrainArgs train_args;
  auto* cmd_train = app.add_subcommand("train", "train link prediction");
  cmd_train->add_option("--graph", train_args.graph, "graph container")->required();
  cmd_train->add_option("--split", train_args.split, "split plan")->required();
  cmd_train->add_option("--checkpoint", train_args.checkpoint, "best checkpoint path")
      ->required();
  cmd_train->add_option("--features", train_args.features, "motif feature table");
  cmd_train->add_option("--config", train_args.config, "key = value training config");
  cmd_train->add_option("--log", train_args.log, "training log CSV path");
  cmd_train->add_option("--seed", train_args.seed, "override the config seed");
  cmd_train->add_option("--epochs", train_args.epochs, "override the config epoch limit");
  cmd_train->add_flag("--no-gru", train_args.no_gru, "freeze node memories");
  cmd_train->add_flag("--no-motif", train_args.no_motif, "zero the motif feature segment");
  cmd_train->add_flag("--no-bicomp", train_args.no_bicomp, "merge neighbor components");
  cmd_train->add_flag("--audit-leakage", train_args.audit, "instrument memory reads");

  EvalArgs eval_args;
  auto* cmd_eval = app.add_subcommand("eval", "score a split from a checkpoint");
  cmd_eval->add_option("--graph", eval_args.graph, "graph container")->required();
  cmd_eval->add_option("--split", eval_args.split, "split plan")->required();
  cmd_eval->add_option("--checkpoint", eval_args.checkpoint, "checkpoint path")->required();
  cmd_eval->add_option("--features", eval_args.features, "motif feature table");
  cmd_eval->add_option("--config", eval_args.config, "training config (model dimensions)");
  cmd_eval->add_option("--split-name", eval_args.split_name, "val | test");
  cmd_eval->add_flag("--audit-leakage", eval_args.audit, "instrument memory reads");

  GradcheckArgs grad_args;
  auto* cmd_grad = app.add_subcommand("gradcheck", "finite-difference gradient suite");
  cmd_grad->add_option("--seed", grad_args.seed, "base seed");
  cmd_grad->add_option("--trials", grad_args.trials, "random points per layer");
  cmd_grad->add_option("--tolerance", grad_args.tolerance, "max relative error");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (cmd_ingest->parsed()) return do_ingest(ingest_args);
    if (cmd_motifs->parsed()) return do_motifs(motif_args);
    if (cmd_split->parsed()) return do_split(split_args);
    if (cmd_train->parsed()) {
      train_args.seed_set = cmd_train->count("--seed") > 0;
      return do_train(train_args);
    }
    if (cmd_eval->parsed()) return do_eval(eval_args);
    if (cmd_grad->parsed()) return do_gradcheck(grad_args);
    throw UsageError("no subcommand given");
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const DataError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const NumericError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
}

}  // namespace tgemb
