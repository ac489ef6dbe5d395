#pragma once

#include <cstdint>

#include "tgemb/temporal_graph.hpp"

namespace tgemb {

// Periodic triangle stream for learning checks: a seeded fixed pool of
// 2*num_nodes ordered triples fires cyclically, step s emitting a->b, b->c,
// c->a at times 3s, 3s+1, 3s+2. The repeating schedule makes every edge
// predictable from the stream's history, and the closing edge additionally
// follows from the two edges immediately before it, which is exactly the
// signal motif features and the current-neighbor component carry.
TemporalGraph periodic_triangle_graph(int num_nodes, int num_edges, uint64_t seed);

}  // namespace tgemb
