#include "tgemb/gradcheck.hpp"

#include <algorithm>
#include <cmath>

#include "tgemb/attention.hpp"
#include "tgemb/gru_memory.hpp"
#include "tgemb/model.hpp"
#include "tgemb/time_encoding.hpp"
#include "tgemb/trainer.hpp"

namespace tgemb {

double fd_max_rel_error(ad::ParameterSet& params, const std::function<double()>& forward,
                        double h) {
  double worst = 0.0;
  for (auto* p : params) {
    for (Eigen::Index r = 0; r < p->value.rows(); ++r) {
      for (Eigen::Index c = 0; c < p->value.cols(); ++c) {
        const double keep = p->value(r, c);
        p->value(r, c) = keep + h;
        const double up = forward();
        p->value(r, c) = keep - h;
        const double dn = forward();
        p->value(r, c) = keep;
        const double fd = (up - dn) / (2.0 * h);
        const double an = p->grad(r, c);
        const double scale = std::max({std::abs(fd), std::abs(an), 1e-6});
        worst = std::max(worst, std::abs(fd - an) / scale);
      }
    }
  }
  return worst;
}

namespace {

ad::Matrix random_matrix(Eigen::Index r, Eigen::Index c, Rng& rng) {
  ad::Matrix m(r, c);
  for (Eigen::Index i = 0; i < r; ++i)
    for (Eigen::Index j = 0; j < c; ++j) m(i, j) = rng.uniform(-1.0, 1.0);
  return m;
}

ModelConfig check_config() {
  ModelConfig cfg;
  cfg.d_mem = 6;
  cfg.d_time = 3;
  cfg.d_motif = 4;
  cfg.d_attn = 6;
  cfg.heads = 2;
  cfg.layers = 1;
  cfg.num_neighbors = 3;
  cfg.combine_hidden = 5;
  cfg.head_hidden = 5;
  cfg.motif_width = 4;
  return cfg;
}

// Generic loss = sum(output . mix) keeps every gradient entry active.
double check_one(ad::ParameterSet& checked, ad::ParameterSet& all,
                 const std::function<ad::Tensor(const ad::ParamView&)>& objective) {
  ad::Tape tape;
  all.zero_grad();
  tape.backward(objective(ad::ParamView::watched(all, tape)));
  return fd_max_rel_error(checked, [&] { return objective(ad::ParamView::frozen(all)).item(); });
}

}  // namespace

std::vector<GradCheckReport> run_gradient_checks(uint64_t seed, int trials) {
  const ModelConfig cfg = check_config();
  std::vector<GradCheckReport> reports{{"gru_cell", 0.0},       {"time_encoder", 0.0},
                                       {"attention_his", 0.0},  {"attention_cur", 0.0},
                                       {"layer_combiner", 0.0}, {"prediction_head", 0.0}};

  for (int trial = 0; trial < trials; ++trial) {
    const uint64_t trial_seed = seed + static_cast<uint64_t>(trial);
    Model model(cfg, trial_seed);
    Rng rng(trial_seed ^ 0x5eedULL);

    const ad::Matrix prev = random_matrix(1, cfg.d_mem, rng);
    const ad::Matrix partner = random_matrix(1, cfg.d_mem, rng);
    const ad::Matrix gru_mix = random_matrix(1, cfg.d_mem, rng);
    const ad::Matrix his_rows = random_matrix(3, cfg.row_width(), rng);
    const ad::Matrix cur_rows = random_matrix(2, cfg.row_width(), rng);
    const ad::Matrix target = random_matrix(1, cfg.d_mem, rng);
    const ad::Matrix layer_mix = random_matrix(1, cfg.d_mem, rng);
    const std::vector<double> gaps{0.0, rng.uniform(0.0, 5.0), rng.uniform(0.0, 50.0)};
    const ad::Matrix time_mix = random_matrix(3, cfg.time_dim(), rng);
    const ad::Matrix zi = random_matrix(1, cfg.d_mem, rng);
    const ad::Matrix zj = random_matrix(1, cfg.d_mem, rng);

    auto update = [&](const std::string& name, double err) {
      for (auto& r : reports)
        if (r.layer == name) r.max_rel_error = std::max(r.max_rel_error, err);
    };

    {
      ad::ParameterSet gru_params;
      model.gru.register_into(gru_params);
      update("gru_cell",
             check_one(gru_params, model.params, [&](const ad::ParamView& view) {
               const ad::Tensor msg = build_message(ad::Tensor(prev), ad::Tensor(partner), 1.7);
               const ad::Tensor out = gru_update(model.gru, view, msg, ad::Tensor(prev));
               return ad::reduce_sum(ad::hadamard(out, ad::Tensor(gru_mix)));
             }));
    }
    {
      ad::ParameterSet time_params;
      model.time_enc.register_into(time_params);
      update("time_encoder",
             check_one(time_params, model.params, [&](const ad::ParamView& view) {
               return ad::reduce_sum(ad::hadamard(encode_times(model.time_enc, view, gaps),
                                                  ad::Tensor(time_mix)));
             }));
    }
    for (const bool cur_side : {false, true}) {
      const AttentionParams& comp = cur_side ? model.layers[0].cur : model.layers[0].his;
      ad::ParameterSet comp_params;
      const_cast<AttentionParams&>(comp).register_into(comp_params);
      update(cur_side ? "attention_cur" : "attention_his",
             check_one(comp_params, model.params, [&](const ad::ParamView& view) {
               const ad::Tensor out =
                   attend(comp, view, cfg, model.time_enc, ad::Tensor(target),
                          ad::Tensor(cur_side ? cur_rows : his_rows));
               return ad::reduce_sum(ad::hadamard(out, ad::Tensor(layer_mix)));
             }));
    }
    {
      ad::ParameterSet combine_params;
      model.layers[0].combine.register_into(combine_params);
      update("layer_combiner",
             check_one(combine_params, model.params, [&](const ad::ParamView& view) {
               const ad::Tensor out =
                   aggregate_layer(model.layers[0], view, cfg, model.time_enc,
                                   ad::Tensor(target), ad::Tensor(his_rows),
                                   ad::Tensor(cur_rows));
               return ad::reduce_sum(ad::hadamard(out, ad::Tensor(layer_mix)));
             }));
    }
    {
      ad::ParameterSet head_params;
      model.head.register_into(head_params);
      update("prediction_head",
             check_one(head_params, model.params, [&](const ad::ParamView& view) {
               return predict_link(model.head, view, ad::Tensor(zi), ad::Tensor(zj));
             }));
    }
  }
  return reports;
}

}  // namespace tgemb
