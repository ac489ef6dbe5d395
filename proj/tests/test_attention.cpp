#include <doctest.h>

#include <cmath>

#include "fd_check.hpp"
#include "tgemb/attention.hpp"
#include "tgemb/synthetic.hpp"

using namespace tgemb;
using tgemb::testing::max_rel_error_vs_fd;
using tgemb::testing::random_matrix;

namespace {

ModelConfig tiny_config() {
  ModelConfig c;
  c.d_mem = 4;
  c.d_time = 2;
  c.d_motif = 3;
  c.d_attn = 4;
  c.heads = 2;
  c.layers = 2;
  c.num_neighbors = 3;
  c.combine_hidden = 5;
  c.head_hidden = 6;
  c.motif_width = 6;
  c.edge_feat_dim = 0;
  return c;
}

TemporalGraph from_triples(const std::vector<std::tuple<int, int, double>>& triples,
                           int feat_dim, Rng& rng) {
  std::vector<TemporalGraph::InputRow> rows;
  for (const auto& [s, d, t] : triples) {
    TemporalGraph::InputRow r{s, d, t, {}};
    for (int f = 0; f < feat_dim; ++f) r.features.push_back(rng.uniform(-1.0, 1.0));
    rows.push_back(std::move(r));
  }
  return TemporalGraph::from_rows(std::move(rows), GraphKind::DirectedHomogeneous);
}

void randomize_memories(MemoryStore& store, Rng& rng) {
  MemoryStore::Snapshot snap = store.snapshot();
  snap.state = random_matrix(snap.state.rows(), snap.state.cols(), rng);
  store.restore(snap);
}

// ---- plain-Eigen re-evaluation of the attention equations ----------------

ad::Matrix oracle_phi(const ad::Matrix& omegas, double dt) {
  const auto d = omegas.cols();
  ad::Matrix out(1, 2 * d);
  const double s = std::sqrt(1.0 / static_cast<double>(d));
  for (Eigen::Index i = 0; i < d; ++i) {
    out(0, 2 * i) = s * std::cos(omegas(0, i) * dt);
    out(0, 2 * i + 1) = s * std::sin(omegas(0, i) * dt);
  }
  return out;
}

ad::Matrix oracle_softmax_row(const ad::Matrix& scores) {
  const double m = scores.maxCoeff();
  ad::Matrix e = (scores.array() - m).exp().matrix();
  return e / e.sum();
}

ad::Matrix oracle_attend(const AttentionParams& p, const ModelConfig& cfg,
                         const ad::Matrix& omegas, const ad::Matrix& target,
                         const ad::Matrix& rows) {
  ad::Matrix q_in(1, target.cols() + 2 * cfg.d_time);
  q_in << target, oracle_phi(omegas, 0.0);
  const ad::Matrix q = q_in * p.w_q.value;
  const ad::Matrix keys = rows * p.w_k.value;
  const ad::Matrix values = rows * p.w_v.value;
  ad::Matrix heads_out(1, cfg.heads * cfg.d_value());
  for (int h = 0; h < cfg.heads; ++h) {
    const auto& head = p.heads[static_cast<std::size_t>(h)];
    const ad::Matrix qp = q * head.w_q.value;
    const ad::Matrix kp = keys * head.w_k.value;
    const ad::Matrix vp = values * head.w_v.value;
    const ad::Matrix scores = qp * kp.transpose() / std::sqrt(static_cast<double>(cfg.d_key()));
    heads_out.middleCols(h * cfg.d_value(), cfg.d_value()) = oracle_softmax_row(scores) * vp;
  }
  return heads_out * p.w_o.value;
}

ad::Matrix oracle_combine(const CombineParams& c, const ad::Matrix& target,
                          const ad::Matrix& cur, const ad::Matrix& his) {
  ad::Matrix joined(1, target.cols() + cur.cols() + his.cols());
  joined << target, cur, his;
  const ad::Matrix hidden =
      ((joined * c.w1.value).rowwise() + c.b1.value.row(0)).cwiseMax(0.0);
  return (hidden * c.w2.value).rowwise() + c.b2.value.row(0);
}

ad::Matrix oracle_rows(const Model& model, const TemporalGraph& graph,
                       const EdgeMotifFeatures* feats, const AttentionParams& comp,
                       const std::vector<SubgraphNode>& children,
                       const std::vector<ad::Matrix>& reps, double query_time) {
  const ModelConfig& cfg = model.cfg;
  ad::Matrix rows(static_cast<Eigen::Index>(children.size()), cfg.row_width());
  for (std::size_t i = 0; i < children.size(); ++i) {
    ad::Matrix motif = ad::Matrix::Zero(1, cfg.motif_width);
    if (!cfg.no_motif && feats != nullptr)
      motif = feats->counts().row(children[i].edge_id).array().log1p().matrix();
    ad::Matrix row(1, cfg.row_width());
    if (cfg.edge_feat_dim > 0) {
      row << reps[i], oracle_phi(model.time_enc.omegas.value, query_time - children[i].tau),
          motif * comp.w_e.value, graph.edge_features().row(children[i].edge_id);
    } else {
      row << reps[i], oracle_phi(model.time_enc.omegas.value, query_time - children[i].tau),
          motif * comp.w_e.value;
    }
    rows.row(static_cast<Eigen::Index>(i)) = row;
  }
  return rows;
}

ad::Matrix oracle_eval(const Model& model, const TemporalGraph& graph,
                       const EdgeMotifFeatures* feats, const MemoryStore& memories,
                       const SubgraphNode& node, int level, double query_time) {
  if (level == 0) return memories.state(node.node).value();
  const LayerParams& layer = model.layers[static_cast<std::size_t>(level - 1)];
  const ad::Matrix target =
      oracle_eval(model, graph, feats, memories, node, level - 1, query_time);
  auto side = [&](const AttentionParams& comp, const std::vector<SubgraphNode>& children) {
    if (children.empty()) return ad::Matrix(ad::Matrix::Zero(1, model.cfg.d_mem));
    std::vector<ad::Matrix> reps;
    for (const SubgraphNode& c : children)
      reps.push_back(oracle_eval(model, graph, feats, memories, c, level - 1, query_time));
    const ad::Matrix rows = oracle_rows(model, graph, feats, comp, children, reps, query_time);
    return oracle_attend(comp, model.cfg, model.time_enc.omegas.value, target, rows);
  };
  return oracle_combine(layer.combine, target, side(layer.cur, node.cur),
                        side(layer.his, node.his));
}

EdgeMotifFeatures fake_features(const TemporalGraph& g, int width, Rng& rng) {
  ad::Matrix counts(g.num_edges(), width);
  for (Eigen::Index r = 0; r < counts.rows(); ++r)
    for (Eigen::Index c = 0; c < counts.cols(); ++c)
      counts(r, c) = static_cast<double>(rng.uniform_int(6));
  return EdgeMotifFeatures(std::move(counts), 10.0, false);
}

}  // namespace

TEST_CASE("neighbor rows concatenate the documented segments") {
  const ModelConfig cfg = tiny_config();
  Model model(cfg, 3);
  Rng rng(4);
  const TemporalGraph g = from_triples({{0, 1, 1.0}, {1, 2, 2.0}, {2, 0, 3.0}}, 0, rng);
  const EdgeMotifFeatures feats = fake_features(g, cfg.motif_width, rng);
  MemoryStore memories(g.num_nodes(), cfg.d_mem);
  randomize_memories(memories, rng);

  const ad::ParamView view = ad::ParamView::frozen(model.params);
  const EmbedContext ctx{model, view, g, memories, &feats};

  const double query_t = 4.0;
  std::vector<SubgraphNode> children{{1, 2.0, 1, {}, {}}, {0, 4.0, 2, {}, {}}};
  std::vector<ad::Tensor> reps{memories.state(1), memories.state(0)};
  const ad::Tensor rows =
      neighbor_rows(ctx, model.layers[0].his, children, reps, query_t);

  REQUIRE(rows.rows() == 2);
  REQUIRE(rows.cols() == cfg.row_width());
  // Representation segment is the raw memory.
  CHECK(rows.value().block(0, 0, 1, cfg.d_mem) == memories.state(1).value());
  // dt = 0 for the second child encodes to the cosine pattern.
  const double s = std::sqrt(1.0 / cfg.d_time);
  CHECK(rows.value()(1, cfg.d_mem) == doctest::Approx(s));
  CHECK(rows.value()(1, cfg.d_mem + 1) == doctest::Approx(0.0));
}

TEST_CASE("zero motif counts contribute a zero projected segment") {
  ModelConfig cfg = tiny_config();
  Model model(cfg, 5);
  Rng rng(6);
  const TemporalGraph g = from_triples({{0, 1, 1.0}, {1, 2, 2.0}}, 0, rng);
  EdgeMotifFeatures zero_feats(ad::Matrix(ad::Matrix::Zero(g.num_edges(), cfg.motif_width)),
                               10.0, false);
  MemoryStore memories(g.num_nodes(), cfg.d_mem);

  const ad::ParamView view = ad::ParamView::frozen(model.params);
  const EmbedContext ctx{model, view, g, memories, &zero_feats};
  std::vector<SubgraphNode> children{{0, 1.0, 0, {}, {}}};
  std::vector<ad::Tensor> reps{memories.state(0)};
  const ad::Tensor rows = neighbor_rows(ctx, model.layers[0].his, children, reps, 2.0);
  CHECK((rows.value().block(0, cfg.d_mem + cfg.time_dim(), 1, cfg.d_motif).array() == 0.0)
            .all());
}

TEST_CASE("single-row attention weight is exactly one") {
  const ModelConfig cfg = tiny_config();
  Model model(cfg, 7);
  Rng rng(8);
  const ad::Matrix target = random_matrix(1, cfg.d_mem, rng);
  const ad::Matrix row = random_matrix(1, cfg.row_width(), rng);

  const ad::ParamView view = ad::ParamView::frozen(model.params);
  ad::Matrix weights;
  const ad::Tensor out = attend(model.layers[0].his, view, cfg, model.time_enc,
                                ad::Tensor(target), ad::Tensor(row), &weights);
  REQUIRE(weights.rows() == cfg.heads);
  REQUIRE(weights.cols() == 1);
  CHECK(weights(0, 0) == 1.0);
  CHECK(weights(1, 0) == 1.0);

  const ad::Matrix expect =
      oracle_attend(model.layers[0].his, cfg, model.time_enc.omegas.value, target, row);
  CHECK(out.value().isApprox(expect, 1e-12));
}

TEST_CASE("duplicated rows attend identically to the single row") {
  const ModelConfig cfg = tiny_config();
  Model model(cfg, 9);
  Rng rng(10);
  const ad::Matrix target = random_matrix(1, cfg.d_mem, rng);
  const ad::Matrix row = random_matrix(1, cfg.row_width(), rng);
  ad::Matrix twice(2, cfg.row_width());
  twice << row, row;
  const ad::ParamView view = ad::ParamView::frozen(model.params);
  const ad::Tensor one = attend(model.layers[0].cur, view, cfg, model.time_enc,
                                ad::Tensor(target), ad::Tensor(row));
  const ad::Tensor two = attend(model.layers[0].cur, view, cfg, model.time_enc,
                                ad::Tensor(target), ad::Tensor(twice));
  CHECK(one.value().isApprox(two.value(), 1e-12));
}

TEST_CASE("multi-head attention matches the step-by-step oracle") {
  const ModelConfig cfg = tiny_config();
  Model model(cfg, 11);
  Rng rng(12);
  const ad::Matrix target = random_matrix(1, cfg.d_mem, rng);
  const ad::Matrix rows = random_matrix(3, cfg.row_width(), rng);

  const ad::ParamView view = ad::ParamView::frozen(model.params);
  ad::Matrix weights;
  const ad::Tensor out = attend(model.layers[1].his, view, cfg, model.time_enc,
                                ad::Tensor(target), ad::Tensor(rows), &weights);
  const ad::Matrix expect =
      oracle_attend(model.layers[1].his, cfg, model.time_enc.omegas.value, target, rows);
  CHECK(out.value().isApprox(expect, 1e-12));

  for (Eigen::Index h = 0; h < weights.rows(); ++h) {
    CHECK(weights.row(h).sum() == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(weights.row(h).minCoeff() >= 0.0);
  }
}

TEST_CASE("attention is invariant to neighbor row permutations") {
  const ModelConfig cfg = tiny_config();
  Model model(cfg, 13);
  Rng rng(14);
  const ad::Matrix target = random_matrix(1, cfg.d_mem, rng);
  const ad::Matrix rows = random_matrix(4, cfg.row_width(), rng);
  ad::Matrix shuffled(4, cfg.row_width());
  shuffled << rows.row(2), rows.row(0), rows.row(3), rows.row(1);

  const ad::ParamView view = ad::ParamView::frozen(model.params);
  const ad::Tensor a = attend(model.layers[0].his, view, cfg, model.time_enc,
                              ad::Tensor(target), ad::Tensor(rows));
  const ad::Tensor b = attend(model.layers[0].his, view, cfg, model.time_enc,
                              ad::Tensor(target), ad::Tensor(shuffled));
  CHECK(a.value().isApprox(b.value(), 1e-12));
}

TEST_CASE("aggregating empty components reduces to the combiner on zeros") {
  const ModelConfig cfg = tiny_config();
  Model model(cfg, 15);
  Rng rng(16);
  const ad::Matrix target = random_matrix(1, cfg.d_mem, rng);
  const ad::ParamView view = ad::ParamView::frozen(model.params);
  const ad::Tensor out = aggregate_layer(model.layers[0], view, cfg, model.time_enc,
                                         ad::Tensor(target), std::nullopt, std::nullopt);
  const ad::Matrix zero = ad::Matrix::Zero(1, cfg.d_mem);
  const ad::Matrix expect = oracle_combine(model.layers[0].combine, target, zero, zero);
  CHECK(out.value().isApprox(expect, 1e-12));
}

TEST_CASE("layer gradients match finite differences") {
  const ModelConfig cfg = tiny_config();
  Model model(cfg, 17);
  Rng rng(18);
  const ad::Matrix target = random_matrix(1, cfg.d_mem, rng);
  const ad::Matrix his_rows = random_matrix(3, cfg.row_width(), rng);
  const ad::Matrix cur_rows = random_matrix(2, cfg.row_width(), rng);

  ad::ParameterSet layer_params;
  model.layers[0].register_into(layer_params);
  model.time_enc.register_into(layer_params);

  auto objective = [&](const ad::ParamView& view) {
    const ad::Tensor out =
        aggregate_layer(model.layers[0], view, cfg, model.time_enc, ad::Tensor(target),
                        ad::Tensor(his_rows), ad::Tensor(cur_rows));
    return ad::reduce_sum(ad::hadamard(out, out));
  };

  ad::Tape tape;
  model.params.zero_grad();
  tape.backward(objective(ad::ParamView::watched(model.params, tape)));
  auto forward = [&] { return objective(ad::ParamView::frozen(model.params)).item(); };
  CHECK(max_rel_error_vs_fd(layer_params, forward) <= 1e-4);
}

TEST_CASE("one-hop embedding of an isolated node is the zero-combined state") {
  const ModelConfig cfg = [] {
    ModelConfig c = tiny_config();
    c.layers = 1;
    return c;
  }();
  Model model(cfg, 19);
  Rng rng(20);
  const TemporalGraph g = from_triples({{0, 1, 5.0}}, 0, rng);
  const EdgeMotifFeatures feats = fake_features(g, cfg.motif_width, rng);
  MemoryStore memories(g.num_nodes(), cfg.d_mem);
  randomize_memories(memories, rng);

  const ad::ParamView view = ad::ParamView::frozen(model.params);
  const EmbedContext ctx{model, view, g, memories, &feats};
  // Node 0 has no touches before t=2, so layer one sees no rows at all.
  const TemporalSubgraph sg = build_subgraph(g, 0, 2.0, 1, cfg.num_neighbors);
  const ad::Tensor z = embed(ctx, sg);
  const ad::Matrix zero = ad::Matrix::Zero(1, cfg.d_mem);
  const ad::Matrix expect = oracle_combine(model.layers[0].combine,
                                           memories.state(0).value(), zero, zero);
  CHECK(z.value().isApprox(expect, 1e-12));
}

TEST_CASE("two-hop embedding matches the nested oracle, with edge features") {
  ModelConfig cfg = tiny_config();
  cfg.edge_feat_dim = 2;
  Model model(cfg, 21);
  Rng rng(22);
  const TemporalGraph g = from_triples({{0, 1, 1.0},
                                        {1, 2, 2.0},
                                        {2, 0, 3.0},
                                        {0, 3, 4.0},
                                        {3, 1, 5.0},
                                        {1, 0, 6.0},
                                        {2, 3, 6.5},
                                        {0, 2, 7.0}},
                                       2, rng);
  const EdgeMotifFeatures feats = fake_features(g, cfg.motif_width, rng);
  MemoryStore memories(g.num_nodes(), cfg.d_mem);
  randomize_memories(memories, rng);

  const ad::ParamView view = ad::ParamView::frozen(model.params);
  const EmbedContext ctx{model, view, g, memories, &feats};
  for (const int32_t root : {0, 1, 2, 3}) {
    const TemporalSubgraph sg = build_subgraph(g, root, 7.5, cfg.layers, 2);
    const ad::Tensor z = embed(ctx, sg);
    const ad::Matrix expect =
        oracle_eval(model, g, &feats, memories, sg.root, cfg.layers, sg.query_time);
    CHECK(z.value().isApprox(expect, 1e-11));
  }
}

TEST_CASE("ablated motifs equal zero motif inputs") {
  ModelConfig cfg = tiny_config();
  Model with_flag(cfg, 23);
  Rng rng(24);
  const TemporalGraph g =
      from_triples({{0, 1, 1.0}, {1, 2, 2.0}, {2, 0, 3.0}, {1, 0, 4.0}}, 0, rng);
  const EdgeMotifFeatures feats = fake_features(g, cfg.motif_width, rng);
  EdgeMotifFeatures zero_feats(ad::Matrix(ad::Matrix::Zero(g.num_edges(), cfg.motif_width)),
                               10.0, false);
  MemoryStore memories(g.num_nodes(), cfg.d_mem);
  randomize_memories(memories, rng);

  // Same parameters; one context ablates, the other feeds zero counts.
  ModelConfig ablated_cfg = cfg;
  ablated_cfg.no_motif = true;
  Model ablated(ablated_cfg, 23);

  const ad::ParamView view_a = ad::ParamView::frozen(with_flag.params);
  const ad::ParamView view_b = ad::ParamView::frozen(ablated.params);
  const EmbedContext ctx_zero{with_flag, view_a, g, memories, &zero_feats};
  const EmbedContext ctx_flag{ablated, view_b, g, memories, &feats};

  const TemporalSubgraph sg = build_subgraph(g, 0, 4.5, cfg.layers, 3);
  CHECK(embed(ctx_zero, sg).value().isApprox(embed(ctx_flag, sg).value(), 1e-12));
}

TEST_CASE("historical and current parameters are disjoint") {
  ModelConfig cfg = tiny_config();
  cfg.layers = 1;
  Model model(cfg, 25);
  Rng rng(26);
  // Root with history only: every cur-side parameter must stay untouched.
  const TemporalGraph g = from_triples({{0, 1, 1.0}, {0, 2, 2.0}, {1, 2, 3.0}}, 0, rng);
  const EdgeMotifFeatures feats = fake_features(g, cfg.motif_width, rng);
  MemoryStore memories(g.num_nodes(), cfg.d_mem);
  randomize_memories(memories, rng);

  ad::Tape tape;
  const ad::ParamView view = ad::ParamView::watched(model.params, tape);
  const EmbedContext ctx{model, view, g, memories, &feats};
  const TemporalSubgraph sg = build_subgraph(g, 0, 4.0, 1, 3);
  model.params.zero_grad();
  tape.backward(ad::reduce_sum(embed(ctx, sg)));

  ad::ParameterSet cur_params, his_params;
  model.layers[0].cur.register_into(cur_params);
  model.layers[0].his.register_into(his_params);
  for (const auto* p : cur_params) CHECK(p->grad.cwiseAbs().maxCoeff() == 0.0);
  bool any_his = false;
  for (const auto* p : his_params) any_his |= p->grad.cwiseAbs().maxCoeff() > 0.0;
  CHECK(any_his);

  // Forward check: perturbing a cur parameter cannot move the output.
  const ad::Matrix base = embed(EmbedContext{model, ad::ParamView::frozen(model.params), g,
                                             memories, &feats},
                                sg)
                              .value();
  model.layers[0].cur.w_o.value.array() += 0.5;
  const ad::Matrix bumped = embed(EmbedContext{model, ad::ParamView::frozen(model.params), g,
                                               memories, &feats},
                                  sg)
                                .value();
  CHECK((base.array() == bumped.array()).all());
}
