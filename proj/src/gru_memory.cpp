#include "tgemb/gru_memory.hpp"

#include <algorithm>
#include <map>

namespace tgemb {

namespace {

ad::Parameter weight(const char* name, int rows, int cols, Rng& rng) {
  ad::Parameter p(name, ad::Matrix(rows, cols));
  ad::init_uniform(p, rows, rng);
  return p;
}

ad::Parameter bias(const char* name, int cols) {
  return ad::Parameter(name, ad::Matrix(ad::Matrix::Zero(1, cols)));
}

}  // namespace

GruParameters::GruParameters(int d_mem, Rng& rng)
    : w_z(weight("gru/w_z", 2 * d_mem + 1, d_mem, rng)),
      u_z(weight("gru/u_z", d_mem, d_mem, rng)),
      b_z(bias("gru/b_z", d_mem)),
      w_r(weight("gru/w_r", 2 * d_mem + 1, d_mem, rng)),
      u_r(weight("gru/u_r", d_mem, d_mem, rng)),
      b_r(bias("gru/b_r", d_mem)),
      w_c(weight("gru/w_c", 2 * d_mem + 1, d_mem, rng)),
      u_c(weight("gru/u_c", d_mem, d_mem, rng)),
      b_c(bias("gru/b_c", d_mem)) {}

void GruParameters::register_into(ad::ParameterSet& set) {
  for (ad::Parameter* p : {&w_z, &u_z, &b_z, &w_r, &u_r, &b_r, &w_c, &u_c, &b_c}) set.add(*p);
}

ad::Tensor build_message(const ad::Tensor& mem_own, const ad::Tensor& mem_partner,
                         double delta_t) {
  if (mem_own.cols() != mem_partner.cols() || mem_own.rows() != 1 || mem_partner.rows() != 1)
    throw NumericError("build_message: memory shapes " + ad::shape_str(mem_own.value()) +
                       " vs " + ad::shape_str(mem_partner.value()));
  return ad::concat_cols({mem_own, mem_partner, ad::Tensor::scalar(delta_t)});
}

ad::Tensor gru_update(const GruParameters& params, const ad::ParamView& view,
                      const ad::Tensor& message, const ad::Tensor& prev) {
  using namespace ad;
  const Tensor z = sigmoid(add(add(matmul(message, view[params.w_z]),
                                   matmul(prev, view[params.u_z])),
                               view[params.b_z]));
  const Tensor r = sigmoid(add(add(matmul(message, view[params.w_r]),
                                   matmul(prev, view[params.u_r])),
                               view[params.b_r]));
  const Tensor c = tanh(add(add(matmul(message, view[params.w_c]),
                                matmul(hadamard(r, prev), view[params.u_c])),
                            view[params.b_c]));
  const Tensor keep = sub(Tensor(Matrix(Matrix::Ones(1, z.cols()))), z);
  return add(hadamard(keep, prev), hadamard(z, c));
}

MemoryStore::MemoryStore(int32_t num_nodes, int d_mem)
    : baseline_(ad::Matrix::Zero(num_nodes, d_mem)),
      last_update_(static_cast<std::size_t>(num_nodes), -1.0),
      last_edge_(static_cast<std::size_t>(num_nodes), -1) {}

ad::Tensor MemoryStore::state(int32_t node) const {
  if (const auto it = live_.find(node); it != live_.end()) return it->second;
  return ad::Tensor(ad::Matrix(baseline_.row(node)));
}

double MemoryStore::last_update(int32_t node) const {
  const double t = last_update_[static_cast<std::size_t>(node)];
  return t < 0.0 ? 0.0 : t;
}

MemoryStore::ApplyStats MemoryStore::apply_batch(const TemporalGraph& graph,
                                                 std::span<const int64_t> edge_ids,
                                                 const GruParameters& gru,
                                                 const ad::ParamView& view,
                                                 const ModelConfig& cfg, double mean_gap) {
  ApplyStats stats;
  if (cfg.no_gru || edge_ids.empty()) return stats;
  if (mean_gap <= 0.0) throw NumericError("mean gap must be positive");

  // Per-node incident counts decide which messages survive the cap: a node
  // applies only its max_gru_len most recent messages in this batch.
  std::unordered_map<int32_t, int64_t> total, seen;
  int64_t prev_id = -1;
  for (const int64_t id : edge_ids) {
    if (id <= prev_id) throw NumericError("apply_batch: edge ids not ascending");
    prev_id = id;
    const TemporalEdge& e = graph.edge(id);
    ++total[e.src];
    ++total[e.dst];
  }

  std::unordered_map<int32_t, bool> touched;
  for (const int64_t id : edge_ids) {
    const TemporalEdge& e = graph.edge(id);
    const int64_t src_index = seen[e.src]++;
    const int64_t dst_index = seen[e.dst]++;
    const bool apply_src = src_index >= total[e.src] - cfg.max_gru_len;
    const bool apply_dst = dst_index >= total[e.dst] - cfg.max_gru_len;
    if (!apply_src && !apply_dst) continue;

    // Both messages read the pre-interaction states, then both nodes update.
    const ad::Tensor s_src = state(e.src);
    const ad::Tensor s_dst = state(e.dst);
    auto apply_side = [&](int32_t node, const ad::Tensor& own, const ad::Tensor& partner) {
      const double prev_t = last_update_[static_cast<std::size_t>(node)];
      const double gap = (prev_t < 0.0) ? 0.0 : (e.timestamp - prev_t) / mean_gap;
      const ad::Tensor next =
          gru_update(gru, view, build_message(own, partner, gap), state(node));
      if (!next.value().allFinite())
        throw NumericError("memory state for node " + std::to_string(node) +
                           " is no longer finite");
      live_[node] = next;
      last_update_[static_cast<std::size_t>(node)] = e.timestamp;
      last_edge_[static_cast<std::size_t>(node)] = e.edge_id;
      touched[node] = true;
      ++stats.messages_applied;
    };
    if (apply_src) apply_side(e.src, s_src, s_dst);
    if (apply_dst) apply_side(e.dst, s_dst, s_src);
  }
  stats.nodes_touched = static_cast<int64_t>(touched.size());
  return stats;
}

void MemoryStore::detach() {
  for (const auto& [node, tensor] : live_) baseline_.row(node) = tensor.value();
  live_.clear();
}

void MemoryStore::reset() {
  baseline_.setZero();
  live_.clear();
  std::fill(last_update_.begin(), last_update_.end(), -1.0);
  std::fill(last_edge_.begin(), last_edge_.end(), -1);
}

MemoryStore::Snapshot MemoryStore::snapshot() const {
  if (!live_.empty())
    throw NumericError("snapshot requires detached memories");
  return Snapshot{baseline_, last_update_, last_edge_};
}

void MemoryStore::restore(const Snapshot& s) {
  baseline_ = s.state;
  last_update_ = s.last_update;
  last_edge_ = s.last_edge;
  live_.clear();
}

NamedTensors MemoryStore::to_tensors(const std::string& prefix) const {
  if (!live_.empty()) throw NumericError("serializing memories requires detached state");
  NamedTensors out;
  out[prefix + "/state"] = baseline_;
  ad::Matrix stamps(num_nodes(), 2);
  for (int32_t v = 0; v < num_nodes(); ++v) {
    stamps(v, 0) = last_update_[static_cast<std::size_t>(v)];
    stamps(v, 1) = static_cast<double>(last_edge_[static_cast<std::size_t>(v)]);
  }
  out[prefix + "/stamps"] = std::move(stamps);
  return out;
}

void MemoryStore::load_tensors(const NamedTensors& tensors, const std::string& prefix) {
  const auto state_it = tensors.find(prefix + "/state");
  const auto stamp_it = tensors.find(prefix + "/stamps");
  if (state_it == tensors.end() || stamp_it == tensors.end())
    throw DataError("checkpoint is missing memory tensors under '" + prefix + "'");
  if (state_it->second.rows() != baseline_.rows() || state_it->second.cols() != baseline_.cols())
    throw DataError("memory state shape mismatch in checkpoint");
  baseline_ = state_it->second;
  live_.clear();
  for (int32_t v = 0; v < num_nodes(); ++v) {
    last_update_[static_cast<std::size_t>(v)] = stamp_it->second(v, 0);
    last_edge_[static_cast<std::size_t>(v)] = static_cast<int64_t>(stamp_it->second(v, 1));
  }
}

}  // namespace tgemb
