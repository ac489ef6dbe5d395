#pragma once

#include <cstdint>
#include <span>
#include <unordered_map>
#include <vector>

#include "tgemb/autodiff.hpp"
#include "tgemb/checkpoint.hpp"
#include "tgemb/model_config.hpp"
#include "tgemb/temporal_graph.hpp"

namespace tgemb {

// Gate weights for the memory update GRU. Message vectors are row vectors of
// width 2*d_mem + 1, so w_* maps message -> memory and u_* maps memory ->
// memory.
struct GruParameters {
  ad::Parameter w_z, u_z, b_z;
  ad::Parameter w_r, u_r, b_r;
  ad::Parameter w_c, u_c, b_c;

  GruParameters(int d_mem, Rng& rng);
  void register_into(ad::ParameterSet& set);
};

// Concat(own state, partner state, normalized time gap).
ad::Tensor build_message(const ad::Tensor& mem_own, const ad::Tensor& mem_partner,
                         double delta_t);

// Update/reset gates with logistic sigmoid, tanh candidate, convex blend.
ad::Tensor gru_update(const GruParameters& params, const ad::ParamView& view,
                      const ad::Tensor& message, const ad::Tensor& prev);

// Per-node memory states with update stamps. States read as tracked tensors
// while a batch's updates are live on a tape; detach() folds them back into
// the plain baseline matrix.
class MemoryStore {
 public:
  MemoryStore(int32_t num_nodes, int d_mem);

  int d_mem() const { return static_cast<int>(baseline_.cols()); }
  int32_t num_nodes() const { return static_cast<int32_t>(baseline_.rows()); }

  // Current state of a node: the live tape tensor when the node was updated
  // by an un-detached batch, the baseline row otherwise.
  ad::Tensor state(int32_t node) const;

  bool has_update(int32_t node) const { return last_update_[static_cast<std::size_t>(node)] >= 0.0; }
  double last_update(int32_t node) const;
  // Most recent edge id folded into a node's state; -1 if none. Drives the
  // leakage audit.
  int64_t last_edge(int32_t node) const { return last_edge_[static_cast<std::size_t>(node)]; }

  struct ApplyStats {
    int64_t messages_applied = 0;
    int64_t nodes_touched = 0;
  };

  // Sequential chronological replay of the batch: each interaction builds
  // both endpoint messages from the pre-interaction states, then updates
  // both memories. A node applies only its cfg.max_gru_len most recent
  // messages of the batch. Gaps are normalized by mean_gap. With cfg.no_gru
  // the call is the identity.
  ApplyStats apply_batch(const TemporalGraph& graph, std::span<const int64_t> edge_ids,
                         const GruParameters& gru, const ad::ParamView& view,
                         const ModelConfig& cfg, double mean_gap);

  // Fold live tensors into the baseline and drop them (detach-between-batches
  // training and no-grad evaluation).
  void detach();
  void reset();

  struct Snapshot {
    ad::Matrix state;
    std::vector<double> last_update;
    std::vector<int64_t> last_edge;
  };
  Snapshot snapshot() const;          // requires no live tensors
  void restore(const Snapshot& s);

  NamedTensors to_tensors(const std::string& prefix) const;
  void load_tensors(const NamedTensors& tensors, const std::string& prefix);

 private:
  ad::Matrix baseline_;                               // num_nodes x d_mem
  std::unordered_map<int32_t, ad::Tensor> live_;      // batch-tape states
  std::vector<double> last_update_;                   // -1 until first update
  std::vector<int64_t> last_edge_;                    // -1 until first update
};

}  // namespace tgemb
