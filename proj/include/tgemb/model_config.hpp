#pragma once

#include "tgemb/errors.hpp"

namespace tgemb {

// Model dimensions and ablation switches. Defaults follow the reference
// experimental setup: 172-wide memory/embedding/time encoding, 2 attention
// heads, 2 GNN layers, 10 sampled neighbors per component, GRU chains capped
// at 5 messages per node per batch.
struct ModelConfig {
  int d_mem = 172;    // node memory / representation width
  int d_time = 86;    // learnable frequencies; the encoding is 2*d_time wide
  int d_motif = 172;  // width of the projected motif-count segment
  int d_attn = 172;   // shared query/key/value lift width
  int heads = 2;
  int layers = 2;  // must equal the subgraph hop count
  int num_neighbors = 10;
  int combine_hidden = 172;
  int head_hidden = 172;
  int max_gru_len = 5;

  int motif_width = 0;    // raw motif feature columns (from the catalog)
  int edge_feat_dim = 0;  // dataset edge feature columns (0 when absent)

  bool log1p_motifs = true;
  bool no_gru = false;
  bool no_motif = false;
  bool no_bicomp = false;

  int time_dim() const { return 2 * d_time; }
  int d_key() const { return d_attn / heads; }
  int d_value() const { return d_attn / heads; }
  int message_dim() const { return 2 * d_mem + 1; }
  int row_width() const { return d_mem + time_dim() + d_motif + edge_feat_dim; }

  void validate() const {
    if (d_mem < 1 || d_time < 1 || d_motif < 1 || d_attn < 1)
      throw UsageError("model dimensions must be positive");
    if (heads < 1 || d_attn % heads != 0)
      throw UsageError("attention width must be a positive multiple of the head count");
    if (layers < 1) throw UsageError("at least one layer is required");
    if (num_neighbors < 1) throw UsageError("at least one sampled neighbor is required");
    if (max_gru_len < 1) throw UsageError("max GRU length must be positive");
    if (motif_width < 0 || edge_feat_dim < 0) throw UsageError("negative feature width");
  }
};

}  // namespace tgemb
