#pragma once

#include <optional>
#include <span>

#include "tgemb/gru_memory.hpp"
#include "tgemb/model.hpp"
#include "tgemb/motifs.hpp"
#include "tgemb/neighbor_sampling.hpp"
#include "tgemb/time_encoding.hpp"

namespace tgemb {

// Scaled dot-product multi-head attention of one component over assembled
// neighbor rows. `rows` must be non-empty; empty components are handled one
// level up by zero substitution. weights_out, when given, receives the
// (heads x rows) softmax weights.
ad::Tensor attend(const AttentionParams& comp, const ad::ParamView& view,
                  const ModelConfig& cfg, const TimeEncoderParams& time_enc,
                  const ad::Tensor& target_state, const ad::Tensor& rows,
                  ad::Matrix* weights_out = nullptr);

// Combines the previous-level representation with both components'
// attention outputs; an absent component contributes a zero vector.
ad::Tensor aggregate_layer(const LayerParams& layer, const ad::ParamView& view,
                           const ModelConfig& cfg, const TimeEncoderParams& time_enc,
                           const ad::Tensor& target_state,
                           const std::optional<ad::Tensor>& his_rows,
                           const std::optional<ad::Tensor>& cur_rows);

// Everything a forward pass reads. motif_features may be null only when the
// motif segment is ablated or the catalog width is zero.
struct EmbedContext {
  const Model& model;
  const ad::ParamView& view;
  const TemporalGraph& graph;
  const MemoryStore& memories;
  const EdgeMotifFeatures* motif_features = nullptr;
};

// Neighbor-row matrix (one row per child): previous-level representation,
// time encoding of (query time - tau), projected motif counts, and the raw
// edge features when the dataset has them.
ad::Tensor neighbor_rows(const EmbedContext& ctx, const AttentionParams& comp,
                         std::span<const SubgraphNode> children,
                         const std::vector<ad::Tensor>& child_reps, double query_time);

// Bottom-up evaluation of a sampled subgraph; leaf representations are raw
// memories and the root output is the node representation z(t).
ad::Tensor embed(const EmbedContext& ctx, const TemporalSubgraph& sg);

}  // namespace tgemb
