#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "tgemb/attention.hpp"
#include "tgemb/metrics.hpp"
#include "tgemb/model.hpp"
#include "tgemb/motifs.hpp"
#include "tgemb/temporal_graph.hpp"

namespace tgemb {

struct TrainConfig {
  int batch_size = 100;
  double learning_rate = 3e-4;
  int epochs_max = 50;
  int patience = 5;
  uint64_t seed = 0;
  // Keep the epoch's graph alive so gradients flow through memory updates of
  // earlier batches; feasible for small runs only.
  bool bptt = false;
  // Carry memories across epochs instead of resetting to zero.
  bool carry_memories = false;
  // Track which edge updates feed each scored embedding.
  bool audit_leakage = false;
  // Zeroes the seconds column so logs are byte-reproducible.
  bool log_timing = true;

  ModelConfig model;

  void validate() const;
  static TrainConfig from_file(const std::string& path);
};

struct EvalReport {
  double auc = 0.0;
  double ap = 0.0;
  std::string split;  // "val" | "test"
  std::string mode;   // "transductive" | "inductive"
  int epoch = -1;

  std::string csv_row() const;
};

struct LeakageAudit {
  int64_t embeddings_checked = 0;
  int64_t violations = 0;
};

struct TrainResult {
  int best_epoch = -1;
  double best_val_auc = 0.0;
  double best_val_ap = 0.0;
  int epochs_run = 0;
  std::string log;  // CSV, one line per epoch
  LeakageAudit audit;
};

// Link probability for a pair of node representations; strictly inside (0,1).
ad::Tensor predict_link(const PredictionHead& head, const ad::ParamView& view,
                        const ad::Tensor& z_i, const ad::Tensor& z_j);

// Batch cross-entropy: -sum(log p_pos + log(1 - p_neg)), probabilities
// clamped to [1e-12, 1 - 1e-12]. One negative destination per positive edge;
// embeddings are computed at each edge's timestamp from the current
// memories.
ad::Tensor batch_loss(const EmbedContext& ctx, std::span<const int64_t> positive_edges,
                      std::span<const int32_t> negative_dsts, LeakageAudit* audit = nullptr);

struct BatchEvent {
  int epoch = 0;
  int batch_index = 0;           // within the epoch
  std::size_t batch_edges = 0;   // positives scored in this batch
  int64_t memory_updates = 0;    // GRU applications before scoring (previous batch)
  double loss = 0.0;
};
using BatchObserver = std::function<void(const BatchEvent&)>;

// Chronological mini-batch training with per-epoch validation, early
// stopping on validation AP, and best-checkpoint retention. Memory updates
// always lag one batch behind the scored batch. Returns the log; writes the
// best checkpoint (parameters + post-training memory state) to
// checkpoint_path when non-empty.
TrainResult train(const TemporalGraph& graph, const EdgeMotifFeatures* features,
                  const SplitPlan& plan, const TrainConfig& cfg,
                  const std::string& checkpoint_path, const BatchObserver& observer = {});

// Scores one split from a checkpoint. Memories start from the checkpoint's
// post-training state; scoring the test split first replays the validation
// stream without scoring it.
EvalReport evaluate(const TemporalGraph& graph, const EdgeMotifFeatures* features,
                    const SplitPlan& plan, const TrainConfig& cfg,
                    const std::string& checkpoint_path, EvalSplit which,
                    LeakageAudit* audit = nullptr);

}  // namespace tgemb
