#include "tgemb/attention.hpp"

#include <cmath>

namespace tgemb {

ad::Tensor attend(const AttentionParams& comp, const ad::ParamView& view,
                  const ModelConfig& cfg, const TimeEncoderParams& time_enc,
                  const ad::Tensor& target_state, const ad::Tensor& rows,
                  ad::Matrix* weights_out) {
  using namespace ad;
  if (rows.rows() == 0) throw NumericError("attend: no neighbor rows");

  const Tensor phi0 = encode_time(time_enc, view, 0.0);
  const Tensor q = matmul(concat_cols({target_state, phi0}), view[comp.w_q]);
  const Tensor keys = matmul(rows, view[comp.w_k]);
  const Tensor values = matmul(rows, view[comp.w_v]);

  if (weights_out != nullptr)
    weights_out->resize(static_cast<Eigen::Index>(comp.heads.size()), rows.rows());

  const double inv_sqrt_dk = 1.0 / std::sqrt(static_cast<double>(cfg.d_key()));
  std::vector<Tensor> head_outs;
  head_outs.reserve(comp.heads.size());
  for (std::size_t h = 0; h < comp.heads.size(); ++h) {
    const AttentionParams::Head& head = comp.heads[h];
    const Tensor qp = matmul(q, view[head.w_q]);
    const Tensor kp = matmul(keys, view[head.w_k]);
    const Tensor vp = matmul(values, view[head.w_v]);
    const Tensor weights = row_softmax(scale(matmul(qp, transpose(kp)), inv_sqrt_dk));
    if (weights_out != nullptr)
      weights_out->row(static_cast<Eigen::Index>(h)) = weights.value().row(0);
    head_outs.push_back(matmul(weights, vp));
  }
  return matmul(concat_cols(std::span<const Tensor>(head_outs)), view[comp.w_o]);
}

ad::Tensor aggregate_layer(const LayerParams& layer, const ad::ParamView& view,
                           const ModelConfig& cfg, const TimeEncoderParams& time_enc,
                           const ad::Tensor& target_state,
                           const std::optional<ad::Tensor>& his_rows,
                           const std::optional<ad::Tensor>& cur_rows) {
  using namespace ad;
  const Tensor zero(Matrix(Matrix::Zero(1, cfg.d_mem)));
  const Tensor his_out =
      his_rows ? attend(layer.his, view, cfg, time_enc, target_state, *his_rows) : zero;
  const Tensor cur_out =
      cur_rows ? attend(layer.cur, view, cfg, time_enc, target_state, *cur_rows) : zero;
  const Tensor joined = concat_cols({target_state, cur_out, his_out});
  const Tensor hidden = relu(affine(joined, view[layer.combine.w1], view[layer.combine.b1]));
  return affine(hidden, view[layer.combine.w2], view[layer.combine.b2]);
}

ad::Tensor neighbor_rows(const EmbedContext& ctx, const AttentionParams& comp,
                         std::span<const SubgraphNode> children,
                         const std::vector<ad::Tensor>& child_reps, double query_time) {
  using namespace ad;
  const ModelConfig& cfg = ctx.model.cfg;
  const auto n = static_cast<Eigen::Index>(children.size());

  const Tensor reps = stack_rows(std::span<const Tensor>(child_reps));

  std::vector<double> gaps;
  gaps.reserve(children.size());
  for (const SubgraphNode& c : children) gaps.push_back(query_time - c.tau);
  const Tensor phi = encode_times(ctx.model.time_enc, ctx.view, gaps);

  const auto motif_in_width = comp.w_e.value.rows();
  Matrix motif_raw = Matrix::Zero(n, motif_in_width);
  if (!cfg.no_motif && cfg.motif_width > 0) {
    if (ctx.motif_features == nullptr)
      throw NumericError("motif features required but not supplied");
    for (Eigen::Index i = 0; i < n; ++i) {
      auto row = ctx.motif_features->counts().row(children[static_cast<std::size_t>(i)].edge_id);
      motif_raw.row(i) = cfg.log1p_motifs ? row.array().log1p().matrix().eval() : row.eval();
    }
  }
  const Tensor motif_seg = matmul(Tensor(std::move(motif_raw)), ctx.view[comp.w_e]);

  std::vector<Tensor> parts{reps, phi, motif_seg};
  if (cfg.edge_feat_dim > 0) {
    Matrix x(n, cfg.edge_feat_dim);
    for (Eigen::Index i = 0; i < n; ++i)
      x.row(i) = ctx.graph.edge_features().row(children[static_cast<std::size_t>(i)].edge_id);
    parts.emplace_back(std::move(x));
  }
  return concat_cols(std::span<const Tensor>(parts));
}

namespace {

ad::Tensor eval_node(const EmbedContext& ctx, const SubgraphNode& node, int level,
                     double query_time) {
  if (level == 0) return ctx.memories.state(node.node);
  const LayerParams& layer = ctx.model.layers[static_cast<std::size_t>(level - 1)];

  const ad::Tensor target_prev = eval_node(ctx, node, level - 1, query_time);

  auto component_rows = [&](const AttentionParams& comp,
                            const std::vector<SubgraphNode>& children)
      -> std::optional<ad::Tensor> {
    if (children.empty()) return std::nullopt;
    std::vector<ad::Tensor> reps;
    reps.reserve(children.size());
    for (const SubgraphNode& c : children) reps.push_back(eval_node(ctx, c, level - 1, query_time));
    return neighbor_rows(ctx, comp, children, reps, query_time);
  };

  const std::optional<ad::Tensor> his_rows = component_rows(layer.his, node.his);
  const std::optional<ad::Tensor> cur_rows = component_rows(layer.cur, node.cur);
  return aggregate_layer(layer, ctx.view, ctx.model.cfg, ctx.model.time_enc, target_prev,
                         his_rows, cur_rows);
}

}  // namespace

ad::Tensor embed(const EmbedContext& ctx, const TemporalSubgraph& sg) {
  if (sg.hops != ctx.model.cfg.layers)
    throw NumericError("subgraph hops (" + std::to_string(sg.hops) +
                       ") must match the stacked layer count (" +
                       std::to_string(ctx.model.cfg.layers) + ")");
  return eval_node(ctx, sg.root, sg.hops, sg.query_time);
}

}  // namespace tgemb
