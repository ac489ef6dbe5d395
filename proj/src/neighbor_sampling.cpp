#include "tgemb/neighbor_sampling.hpp"

#include <algorithm>

namespace tgemb {

void partition_neighbors(const TemporalGraph& graph, int32_t node, double t_low, double horizon,
                         std::vector<NeighborRef>& his, std::vector<NeighborRef>& cur) {
  his.clear();
  cur.clear();
  if (t_low > horizon) throw NumericError("partition_neighbors: anchor after horizon");
  for (const Touch& t : graph.touches(node)) {
    if (t.timestamp >= horizon) break;  // touch list ascends in time
    if (t.timestamp < t_low)
      his.push_back({t.neighbor, t.timestamp, t.edge_id});
    else if (t.timestamp > t_low)
      cur.push_back({t.neighbor, t.timestamp, t.edge_id});
    // touches exactly at t_low (including the anchor edge) are dropped
  }
}

std::vector<NeighborRef> sample_recent(std::span<const NeighborRef> candidates, int n) {
  if (n < 1) throw UsageError("sample_recent: n must be at least 1");
  const std::size_t keep = std::min<std::size_t>(candidates.size(), static_cast<std::size_t>(n));
  std::vector<NeighborRef> out;
  out.reserve(keep);
  for (std::size_t i = 0; i < keep; ++i)
    out.push_back(candidates[candidates.size() - 1 - i]);
  return out;
}

namespace {

void expand(const TemporalGraph& graph, SubgraphNode& entry, double query_time, int remaining,
            int n, bool merge_components, bool is_root) {
  if (remaining == 0) return;

  std::vector<NeighborRef> his, cur;
  // The root has no anchor interaction: everything before the query is
  // history and there is no current window.
  const double t_low = is_root ? query_time : entry.tau;
  const double horizon = query_time;
  partition_neighbors(graph, entry.node, t_low, horizon, his, cur);

  if (merge_components) {
    // his then cur keeps global time order; both exclude t_low itself.
    his.insert(his.end(), cur.begin(), cur.end());
    cur.clear();
  }

  for (const NeighborRef& ref : sample_recent(his, n)) {
    SubgraphNode child{ref.node, ref.tau, ref.edge_id, {}, {}};
    expand(graph, child, query_time, remaining - 1, n, merge_components, false);
    entry.his.push_back(std::move(child));
  }
  for (const NeighborRef& ref : sample_recent(cur, n)) {
    SubgraphNode child{ref.node, ref.tau, ref.edge_id, {}, {}};
    expand(graph, child, query_time, remaining - 1, n, merge_components, false);
    entry.cur.push_back(std::move(child));
  }
}

}  // namespace

TemporalSubgraph build_subgraph(const TemporalGraph& graph, int32_t root, double query_time,
                                int hops, int n, bool merge_components) {
  if (hops < 1) throw UsageError("build_subgraph: at least one hop is required");
  TemporalSubgraph sg;
  sg.hops = hops;
  sg.query_time = query_time;
  sg.root = SubgraphNode{root, query_time, -1, {}, {}};
  expand(graph, sg.root, query_time, hops, n, merge_components, true);
  return sg;
}

}  // namespace tgemb
