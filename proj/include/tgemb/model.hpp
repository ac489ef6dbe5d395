#pragma once

#include <vector>

#include "tgemb/autodiff.hpp"
#include "tgemb/checkpoint.hpp"
#include "tgemb/gru_memory.hpp"
#include "tgemb/model_config.hpp"
#include "tgemb/time_encoding.hpp"

namespace tgemb {

// One attention component (historical or current) of one layer. The his and
// cur components hold disjoint parameter storage by construction.
struct AttentionParams {
  ad::Parameter w_q;               // (d_mem + 2*d_time) x d_attn, query lift
  ad::Parameter w_k, w_v;          // row_width x d_attn, key/value lifts
  ad::Parameter w_e;               // motif_width x d_motif
  struct Head {
    ad::Parameter w_q, w_k;        // d_attn x d_key
    ad::Parameter w_v;             // d_attn x d_value
  };
  std::vector<Head> heads;
  ad::Parameter w_o;               // (heads * d_value) x d_mem

  AttentionParams(const std::string& prefix, const ModelConfig& cfg, Rng& rng);
  void register_into(ad::ParameterSet& set);
};

// The layer combiner: one hidden ReLU layer over
// Concat(previous rep, current att., historical att.).
struct CombineParams {
  ad::Parameter w1, b1, w2, b2;

  CombineParams(const std::string& prefix, int in_dim, int hidden, int out_dim, Rng& rng);
  void register_into(ad::ParameterSet& set);
};

struct LayerParams {
  AttentionParams his, cur;
  CombineParams combine;

  LayerParams(const std::string& prefix, const ModelConfig& cfg, Rng& rng);
  void register_into(ad::ParameterSet& set);
};

// Link probability head: sigmoid over a one-hidden-layer network on the
// concatenated pair embedding.
struct PredictionHead {
  ad::Parameter w1, b1, w2, b2;

  PredictionHead(const ModelConfig& cfg, Rng& rng);
  void register_into(ad::ParameterSet& set);
};

// Every trainable piece of the embedding pipeline, with a stable parameter
// order for the optimizer and checkpoints.
struct Model {
  ModelConfig cfg;
  TimeEncoderParams time_enc;
  GruParameters gru;
  std::vector<LayerParams> layers;
  PredictionHead head;
  ad::ParameterSet params;

  Model(ModelConfig config, uint64_t seed);

  void save(const std::string& path, const NamedTensors& extra = {}) const;
  // Loads parameters by name; returns the non-parameter tensors.
  NamedTensors load(const std::string& path);

 private:
  Model(ModelConfig config, Rng rng);
};

}  // namespace tgemb
