#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "tgemb/temporal_graph.hpp"

namespace tgemb {

// One sampled neighbor occurrence: node `node` touched the expanded node at
// time `tau` through edge `edge_id`.
struct NeighborRef {
  int32_t node = 0;
  double tau = 0.0;
  int64_t edge_id = -1;
};

// Multi-hop sampled neighborhood rooted at (node, query_time). Children split
// into the historical component (touches before the anchor interaction) and
// the current component (touches between the anchor and the query time); the
// root's history is all pre-query touches and its current list stays empty.
struct SubgraphNode {
  int32_t node = 0;
  double tau = 0.0;       // anchor time (query time at the root)
  int64_t edge_id = -1;   // edge that produced this occurrence (-1 at the root)
  std::vector<SubgraphNode> his;
  std::vector<SubgraphNode> cur;
};

struct TemporalSubgraph {
  SubgraphNode root;
  int hops = 0;
  double query_time = 0.0;
};

// Incident touches split around an anchor: his strictly before t_low, cur
// strictly inside (t_low, horizon). Both ascend in time.
void partition_neighbors(const TemporalGraph& graph, int32_t node, double t_low, double horizon,
                         std::vector<NeighborRef>& his, std::vector<NeighborRef>& cur);

// The min(n, size) most recent candidates of a time-ascending list, returned
// most-recent-first. Deterministic; later edge ids win timestamp ties.
std::vector<NeighborRef> sample_recent(std::span<const NeighborRef> candidates, int n);

// merge_components implements the single-stream ablation: his and cur are
// merged into one recency-sampled list stored on the his side.
TemporalSubgraph build_subgraph(const TemporalGraph& graph, int32_t root, double query_time,
                                int hops, int n, bool merge_components = false);

}  // namespace tgemb
