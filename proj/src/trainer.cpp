#include "tgemb/trainer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <memory>
#include <sstream>

#include "tgemb/adam.hpp"

namespace tgemb {

namespace {

constexpr double kProbClamp = 1e-12;

// Distinct negative-draw streams per purpose.
constexpr uint64_t kTrainSalt = 0x747261696e5f6e67ULL;
constexpr uint64_t kValSalt = 0x76616c5f6e656773ULL;
constexpr uint64_t kTestSalt = 0x746573745f6e6567ULL;

std::vector<std::span<const int64_t>> chunk(std::span<const int64_t> ids, int batch_size) {
  std::vector<std::span<const int64_t>> out;
  for (std::size_t at = 0; at < ids.size(); at += static_cast<std::size_t>(batch_size))
    out.push_back(ids.subspan(at, std::min<std::size_t>(batch_size, ids.size() - at)));
  return out;
}

void collect_nodes(const SubgraphNode& node, std::vector<int32_t>& out) {
  out.push_back(node.node);
  for (const SubgraphNode& c : node.his) collect_nodes(c, out);
  for (const SubgraphNode& c : node.cur) collect_nodes(c, out);
}

// A scored embedding must consume no memory update derived from its own edge
// or any later one.
void audit_embedding(const MemoryStore& memories, const TemporalSubgraph& sg, int64_t edge_id,
                     LeakageAudit& audit) {
  std::vector<int32_t> nodes;
  collect_nodes(sg.root, nodes);
  ++audit.embeddings_checked;
  for (const int32_t v : nodes) {
    if (memories.last_edge(v) >= edge_id) {
      ++audit.violations;
      return;
    }
  }
}

struct ScoredBatch {
  std::vector<double> pos;
  std::vector<double> neg;
};

// Embeds src/dst/neg at the edge's timestamp and scores both pairs.
ScoredBatch score_batch(const EmbedContext& ctx, std::span<const int64_t> edges,
                        std::span<const int32_t> negatives, LeakageAudit* audit) {
  const ModelConfig& cfg = ctx.model.cfg;
  ScoredBatch out;
  out.pos.reserve(edges.size());
  out.neg.reserve(edges.size());
  for (std::size_t i = 0; i < edges.size(); ++i) {
    const TemporalEdge& e = ctx.graph.edge(edges[i]);
    const TemporalSubgraph sg_src =
        build_subgraph(ctx.graph, e.src, e.timestamp, cfg.layers, cfg.num_neighbors, cfg.no_bicomp);
    const TemporalSubgraph sg_dst =
        build_subgraph(ctx.graph, e.dst, e.timestamp, cfg.layers, cfg.num_neighbors, cfg.no_bicomp);
    const TemporalSubgraph sg_neg = build_subgraph(ctx.graph, negatives[i], e.timestamp,
                                                   cfg.layers, cfg.num_neighbors, cfg.no_bicomp);
    if (audit != nullptr) {
      audit_embedding(ctx.memories, sg_src, e.edge_id, *audit);
      audit_embedding(ctx.memories, sg_dst, e.edge_id, *audit);
      audit_embedding(ctx.memories, sg_neg, e.edge_id, *audit);
    }
    const ad::Tensor z_src = embed(ctx, sg_src);
    const ad::Tensor z_dst = embed(ctx, sg_dst);
    const ad::Tensor z_neg = embed(ctx, sg_neg);
    out.pos.push_back(predict_link(ctx.model.head, ctx.view, z_src, z_dst).item());
    out.neg.push_back(predict_link(ctx.model.head, ctx.view, z_src, z_neg).item());
  }
  return out;
}

std::vector<int32_t> draw_negatives(const TemporalGraph& graph, std::span<const int64_t> edges,
                                    Rng& rng) {
  std::vector<int32_t> out;
  out.reserve(edges.size());
  for (const int64_t id : edges) out.push_back(sample_negative(graph, graph.edge(id), rng));
  return out;
}

// Rolls memories forward through `edges` without gradients.
void absorb(MemoryStore& memories, const TemporalGraph& graph, const Model& model,
            std::span<const int64_t> edges, const ad::ParamView& frozen) {
  memories.apply_batch(graph, edges, model.gru, frozen, model.cfg, graph.mean_timestamp_gap());
  memories.detach();
}

// Batched split scoring per the sequential protocol: score a batch with
// memories lagging one batch behind, then absorb it.
EvalReport score_split(const Model& model, MemoryStore& memories, const TemporalGraph& graph,
                       const EdgeMotifFeatures* features, std::span<const int64_t> ids,
                       int batch_size, uint64_t negative_seed, LeakageAudit* audit) {
  if (ids.empty()) throw DataError("evaluation split is empty");
  const ad::ParamView frozen = ad::ParamView::frozen(model.params);
  const EmbedContext ctx{model, frozen, graph, memories, features};
  Rng rng(negative_seed);
  std::vector<double> pos, neg;
  for (const auto batch : chunk(ids, batch_size)) {
    const std::vector<int32_t> negatives = draw_negatives(graph, batch, rng);
    const ScoredBatch scored = score_batch(ctx, batch, negatives, audit);
    pos.insert(pos.end(), scored.pos.begin(), scored.pos.end());
    neg.insert(neg.end(), scored.neg.begin(), scored.neg.end());
    absorb(memories, graph, model, batch, frozen);
  }
  EvalReport report;
  report.auc = auc_score(pos, neg);
  report.ap = average_precision(pos, neg);
  return report;
}

std::string format_double(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

}  // namespace

void TrainConfig::validate() const {
  if (batch_size < 1) throw UsageError("batch size must be at least 1");
  if (patience < 1) throw UsageError("patience must be at least 1");
  if (epochs_max < 1) throw UsageError("epoch limit must be at least 1");
  if (!(learning_rate > 0.0)) throw UsageError("learning rate must be positive");
  model.validate();
}

std::string EvalReport::csv_row() const {
  std::ostringstream os;
  os << split << ',' << mode << ',' << epoch << ',' << format_double(auc) << ','
     << format_double(ap);
  return os.str();
}

ad::Tensor predict_link(const PredictionHead& head, const ad::ParamView& view,
                        const ad::Tensor& z_i, const ad::Tensor& z_j) {
  using namespace ad;
  if (z_i.cols() != z_j.cols())
    throw NumericError("predict_link: embedding widths " + shape_str(z_i.value()) + " vs " +
                       shape_str(z_j.value()));
  const Tensor hidden = relu(affine(concat_cols({z_i, z_j}), view[head.w1], view[head.b1]));
  return sigmoid(affine(hidden, view[head.w2], view[head.b2]));
}

ad::Tensor batch_loss(const EmbedContext& ctx, std::span<const int64_t> positive_edges,
                      std::span<const int32_t> negative_dsts, LeakageAudit* audit) {
  using namespace ad;
  if (positive_edges.size() != negative_dsts.size())
    throw NumericError("batch_loss: one negative destination per positive edge required");
  if (positive_edges.empty()) throw NumericError("batch_loss: empty batch");

  const ModelConfig& cfg = ctx.model.cfg;
  std::vector<Tensor> pos_probs, neg_probs;
  pos_probs.reserve(positive_edges.size());
  neg_probs.reserve(positive_edges.size());
  for (std::size_t i = 0; i < positive_edges.size(); ++i) {
    const TemporalEdge& e = ctx.graph.edge(positive_edges[i]);
    const TemporalSubgraph sg_src =
        build_subgraph(ctx.graph, e.src, e.timestamp, cfg.layers, cfg.num_neighbors, cfg.no_bicomp);
    const TemporalSubgraph sg_dst =
        build_subgraph(ctx.graph, e.dst, e.timestamp, cfg.layers, cfg.num_neighbors, cfg.no_bicomp);
    const TemporalSubgraph sg_neg = build_subgraph(ctx.graph, negative_dsts[i], e.timestamp,
                                                   cfg.layers, cfg.num_neighbors, cfg.no_bicomp);
    if (audit != nullptr) {
      audit_embedding(ctx.memories, sg_src, e.edge_id, *audit);
      audit_embedding(ctx.memories, sg_dst, e.edge_id, *audit);
      audit_embedding(ctx.memories, sg_neg, e.edge_id, *audit);
    }
    const Tensor z_src = embed(ctx, sg_src);
    pos_probs.push_back(predict_link(ctx.model.head, ctx.view, z_src, embed(ctx, sg_dst)));
    neg_probs.push_back(predict_link(ctx.model.head, ctx.view, z_src, embed(ctx, sg_neg)));
  }

  const Tensor pos = clamp(stack_rows(std::span<const Tensor>(pos_probs)), kProbClamp,
                           1.0 - kProbClamp);
  const Tensor neg = clamp(stack_rows(std::span<const Tensor>(neg_probs)), kProbClamp,
                           1.0 - kProbClamp);
  const Tensor ones(Matrix(Matrix::Ones(neg.rows(), 1)));
  const Tensor total = add(reduce_sum(log(pos)), reduce_sum(log(sub(ones, neg))));
  return scale(total, -1.0);
}

TrainResult train(const TemporalGraph& graph, const EdgeMotifFeatures* features,
                  const SplitPlan& plan, const TrainConfig& cfg,
                  const std::string& checkpoint_path, const BatchObserver& observer) {
  TrainConfig local = cfg;
  if (features != nullptr) {
    if (features->counts().rows() != graph.num_edges())
      throw DataError("feature table rows do not match the edge count");
    local.model.motif_width = static_cast<int>(features->width());
  } else {
    local.model.motif_width = 0;
  }
  local.model.edge_feat_dim = static_cast<int>(graph.edge_feature_dim());
  local.validate();

  const std::vector<int64_t> train_ids = training_edge_ids(graph, plan);
  if (train_ids.empty()) throw DataError("training split is empty");
  const std::vector<int64_t> val_ids = eval_edge_ids(graph, plan, EvalSplit::Val);
  if (val_ids.empty()) throw DataError("validation split is empty");

  Model model(local.model, local.seed);
  MemoryStore memories(graph.num_nodes(), local.model.d_mem);
  ad::Adam adam(model.params, {local.learning_rate, 0.9, 0.999, 1e-8});
  Rng train_rng(local.seed ^ kTrainSalt);
  const double mean_gap = graph.mean_timestamp_gap();
  const auto batches = chunk(train_ids, local.batch_size);

  TrainResult result;
  std::ostringstream log;
  double best_ap = -1.0;
  int epochs_without_improvement = 0;
  MemoryStore::Snapshot best_memories;
  NamedTensors best_params;

  for (int epoch = 1; epoch <= local.epochs_max; ++epoch) {
    const auto epoch_start = std::chrono::steady_clock::now();
    if (!local.carry_memories || epoch == 1) memories.reset();

    double epoch_loss = 0.0;
    std::span<const int64_t> previous{};
    int batch_index = 0;
    auto tape = std::make_unique<ad::Tape>();
    for (const auto batch : batches) {
      if (!local.bptt) tape = std::make_unique<ad::Tape>();
      const ad::ParamView view = ad::ParamView::watched(model.params, *tape);
      const auto mem_stats =
          memories.apply_batch(graph, previous, model.gru, view, local.model, mean_gap);

      const std::vector<int32_t> negatives = draw_negatives(graph, batch, train_rng);
      const EmbedContext ctx{model, view, graph, memories, features};
      LeakageAudit* audit = local.audit_leakage ? &result.audit : nullptr;
      const ad::Tensor loss = batch_loss(ctx, batch, negatives, audit);
      const double loss_value = loss.item();
      if (!std::isfinite(loss_value))
        throw NumericError("training loss is not finite at epoch " + std::to_string(epoch));
      epoch_loss += loss_value;

      model.params.zero_grad();
      tape->backward(loss, /*keep_graph=*/local.bptt);
      adam.step();
      if (!local.bptt) memories.detach();
      if (observer)
        observer(BatchEvent{epoch, batch_index, batch.size(), mem_stats.messages_applied,
                            loss_value});
      ++batch_index;
      previous = batch;
    }
    // The last batch is still pending; fold it in so validation sees the
    // whole training stream.
    const ad::ParamView frozen = ad::ParamView::frozen(model.params);
    memories.apply_batch(graph, previous, model.gru, frozen, local.model, mean_gap);
    memories.detach();
    tape.reset();

    const MemoryStore::Snapshot post_train = memories.snapshot();
    EvalReport val = score_split(model, memories, graph, features, val_ids, local.batch_size,
                                 local.seed ^ kValSalt,
                                 local.audit_leakage ? &result.audit : nullptr);
    memories.restore(post_train);

    const auto epoch_end = std::chrono::steady_clock::now();
    const double seconds =
        local.log_timing
            ? std::chrono::duration<double>(epoch_end - epoch_start).count()
            : 0.0;
    {
      std::ostringstream line;
      line.setf(std::ios::fixed);
      line.precision(6);
      line << epoch << ',' << epoch_loss << ',' << val.auc << ',' << val.ap << ','
           << std::setprecision(3) << seconds;
      log << line.str() << '\n';
    }
    result.epochs_run = epoch;

    if (val.ap > best_ap) {
      best_ap = val.ap;
      result.best_epoch = epoch;
      result.best_val_auc = val.auc;
      result.best_val_ap = val.ap;
      epochs_without_improvement = 0;
      best_memories = post_train;
      best_params.clear();
      for (const auto* p : model.params) best_params[p->name] = p->value;
    } else if (++epochs_without_improvement >= local.patience) {
      break;
    }
  }

  if (!checkpoint_path.empty()) {
    MemoryStore best_store(graph.num_nodes(), local.model.d_mem);
    best_store.restore(best_memories);
    NamedTensors extra = best_store.to_tensors("memory");
    extra.insert(best_params.begin(), best_params.end());
    save_tensors(checkpoint_path, extra);
  }
  result.log = log.str();
  return result;
}

EvalReport evaluate(const TemporalGraph& graph, const EdgeMotifFeatures* features,
                    const SplitPlan& plan, const TrainConfig& cfg,
                    const std::string& checkpoint_path, EvalSplit which, LeakageAudit* audit) {
  TrainConfig local = cfg;
  local.model.motif_width = (features != nullptr) ? static_cast<int>(features->width()) : 0;
  local.model.edge_feat_dim = static_cast<int>(graph.edge_feature_dim());
  local.validate();

  Model model(local.model, local.seed);
  const NamedTensors extras = model.load(checkpoint_path);
  MemoryStore memories(graph.num_nodes(), local.model.d_mem);
  memories.load_tensors(extras, "memory");

  if (which == EvalSplit::Test) {
    // Replay the validation stream (without scoring) to reach the test
    // boundary with consistent memories.
    const std::vector<int64_t> val_ids = eval_edge_ids(graph, plan, EvalSplit::Val);
    const ad::ParamView frozen = ad::ParamView::frozen(model.params);
    for (const auto batch : chunk(val_ids, local.batch_size))
      absorb(memories, graph, model, batch, frozen);
  }

  const std::vector<int64_t> ids = eval_edge_ids(graph, plan, which);
  EvalReport report =
      score_split(model, memories, graph, features, ids, local.batch_size,
                  local.seed ^ (which == EvalSplit::Val ? kValSalt : kTestSalt), audit);
  report.split = (which == EvalSplit::Val) ? "val" : "test";
  report.mode = (plan.mode == SplitMode::Inductive) ? "inductive" : "transductive";
  return report;
}

TrainConfig TrainConfig::from_file(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw DataError("cannot open: " + path);
  TrainConfig cfg;
  std::string line;
  int line_no = 0;
  while (std::getline(is, line)) {
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      if (line.find_first_not_of(" \t\r") != std::string::npos)
        throw DataError(path + ":" + std::to_string(line_no) + ": expected 'key = value'");
      continue;
    }
    auto trim = [](std::string s) {
      const auto b = s.find_first_not_of(" \t\r");
      const auto e = s.find_last_not_of(" \t\r");
      return (b == std::string::npos) ? std::string() : s.substr(b, e - b + 1);
    };
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    auto as_int = [&] { return std::stoi(value); };
    auto as_bool = [&] {
      if (value == "true" || value == "1") return true;
      if (value == "false" || value == "0") return false;
      throw DataError(path + ":" + std::to_string(line_no) + ": expected boolean, got '" +
                      value + "'");
    };
    try {
      if (key == "batch_size") cfg.batch_size = as_int();
      else if (key == "learning_rate") cfg.learning_rate = std::stod(value);
      else if (key == "epochs_max") cfg.epochs_max = as_int();
      else if (key == "patience") cfg.patience = as_int();
      else if (key == "seed") cfg.seed = std::stoull(value);
      else if (key == "bptt") cfg.bptt = as_bool();
      else if (key == "carry_memories") cfg.carry_memories = as_bool();
      else if (key == "audit_leakage") cfg.audit_leakage = as_bool();
      else if (key == "log_timing") cfg.log_timing = as_bool();
      else if (key == "d_mem") cfg.model.d_mem = as_int();
      else if (key == "d_time") cfg.model.d_time = as_int();
      else if (key == "d_motif") cfg.model.d_motif = as_int();
      else if (key == "d_attn") cfg.model.d_attn = as_int();
      else if (key == "heads") cfg.model.heads = as_int();
      else if (key == "layers") cfg.model.layers = as_int();
      else if (key == "num_neighbors") cfg.model.num_neighbors = as_int();
      else if (key == "combine_hidden") cfg.model.combine_hidden = as_int();
      else if (key == "head_hidden") cfg.model.head_hidden = as_int();
      else if (key == "max_gru_len") cfg.model.max_gru_len = as_int();
      else if (key == "log1p_motifs") cfg.model.log1p_motifs = as_bool();
      else if (key == "no_gru") cfg.model.no_gru = as_bool();
      else if (key == "no_motif") cfg.model.no_motif = as_bool();
      else if (key == "no_bicomp") cfg.model.no_bicomp = as_bool();
      else throw DataError(path + ":" + std::to_string(line_no) + ": unknown key '" + key + "'");
    } catch (const std::invalid_argument&) {
      throw DataError(path + ":" + std::to_string(line_no) + ": invalid value '" + value + "'");
    }
  }
  return cfg;
}

}  // namespace tgemb
