#include "tgemb/model.hpp"

namespace tgemb {

namespace {

ad::Parameter weight(const std::string& name, int rows, int cols, Rng& rng) {
  ad::Parameter p(name, ad::Matrix(rows, cols));
  ad::init_uniform(p, rows, rng);
  return p;
}

ad::Parameter bias(const std::string& name, int cols) {
  return ad::Parameter(name, ad::Matrix(ad::Matrix::Zero(1, cols)));
}

}  // namespace

AttentionParams::AttentionParams(const std::string& prefix, const ModelConfig& cfg, Rng& rng)
    : w_q(weight(prefix + "/w_q", cfg.d_mem + cfg.time_dim(), cfg.d_attn, rng)),
      w_k(weight(prefix + "/w_k", cfg.row_width(), cfg.d_attn, rng)),
      w_v(weight(prefix + "/w_v", cfg.row_width(), cfg.d_attn, rng)),
      w_e(weight(prefix + "/w_e", std::max(1, cfg.motif_width), cfg.d_motif, rng)),
      w_o(weight(prefix + "/w_o", cfg.heads * cfg.d_value(), cfg.d_mem, rng)) {
  for (int h = 0; h < cfg.heads; ++h) {
    const std::string hp = prefix + "/head" + std::to_string(h);
    heads.push_back(Head{weight(hp + "/w_q", cfg.d_attn, cfg.d_key(), rng),
                         weight(hp + "/w_k", cfg.d_attn, cfg.d_key(), rng),
                         weight(hp + "/w_v", cfg.d_attn, cfg.d_value(), rng)});
  }
}

void AttentionParams::register_into(ad::ParameterSet& set) {
  set.add(w_q);
  set.add(w_k);
  set.add(w_v);
  set.add(w_e);
  for (Head& h : heads) {
    set.add(h.w_q);
    set.add(h.w_k);
    set.add(h.w_v);
  }
  set.add(w_o);
}

CombineParams::CombineParams(const std::string& prefix, int in_dim, int hidden, int out_dim,
                             Rng& rng)
    : w1(weight(prefix + "/w1", in_dim, hidden, rng)),
      b1(bias(prefix + "/b1", hidden)),
      w2(weight(prefix + "/w2", hidden, out_dim, rng)),
      b2(bias(prefix + "/b2", out_dim)) {}

void CombineParams::register_into(ad::ParameterSet& set) {
  set.add(w1);
  set.add(b1);
  set.add(w2);
  set.add(b2);
}

LayerParams::LayerParams(const std::string& prefix, const ModelConfig& cfg, Rng& rng)
    : his(prefix + "/his", cfg, rng),
      cur(prefix + "/cur", cfg, rng),
      combine(prefix + "/combine", 3 * cfg.d_mem, cfg.combine_hidden, cfg.d_mem, rng) {}

void LayerParams::register_into(ad::ParameterSet& set) {
  his.register_into(set);
  cur.register_into(set);
  combine.register_into(set);
}

PredictionHead::PredictionHead(const ModelConfig& cfg, Rng& rng)
    : w1(weight("head/w1", 2 * cfg.d_mem, cfg.head_hidden, rng)),
      b1(bias("head/b1", cfg.head_hidden)),
      w2(weight("head/w2", cfg.head_hidden, 1, rng)),
      b2(bias("head/b2", 1)) {}

void PredictionHead::register_into(ad::ParameterSet& set) {
  set.add(w1);
  set.add(b1);
  set.add(w2);
  set.add(b2);
}

namespace {

ModelConfig validated(ModelConfig cfg) {
  cfg.validate();
  return cfg;
}

std::vector<LayerParams> make_layers(const ModelConfig& cfg, Rng& rng) {
  std::vector<LayerParams> out;
  out.reserve(static_cast<std::size_t>(cfg.layers));
  for (int l = 0; l < cfg.layers; ++l)
    out.emplace_back("layer" + std::to_string(l), cfg, rng);
  return out;
}

}  // namespace

Model::Model(ModelConfig config, uint64_t seed) : Model(validated(std::move(config)), Rng(seed)) {}

Model::Model(ModelConfig config, Rng rng)
    : cfg(std::move(config)),
      time_enc(cfg.d_time),
      gru(cfg.d_mem, rng),
      layers(make_layers(cfg, rng)),
      head(cfg, rng) {
  time_enc.register_into(params);
  gru.register_into(params);
  for (LayerParams& l : layers) l.register_into(params);
  head.register_into(params);
}

void Model::save(const std::string& path, const NamedTensors& extra) const {
  save_parameters(path, params, extra);
}

NamedTensors Model::load(const std::string& path) { return load_parameters(path, params); }

}  // namespace tgemb
