#include "tgemb/synthetic.hpp"

namespace tgemb {

TemporalGraph periodic_triangle_graph(int num_nodes, int num_edges, uint64_t seed) {
  if (num_nodes < 3) throw UsageError("triangle stream needs at least 3 nodes");
  Rng rng(seed);

  // A fixed pool of ordered node triples, fired cyclically. Every edge is
  // predictable from the stream's history: the schedule repeats, and the
  // closing edge of each triangle follows from the two edges before it.
  const int pool_size = 2 * num_nodes;
  std::vector<std::array<int32_t, 3>> pool;
  pool.reserve(static_cast<std::size_t>(pool_size));
  for (int i = 0; i < pool_size; ++i) {
    const auto a = static_cast<int32_t>(rng.uniform_int(num_nodes));
    auto b = static_cast<int32_t>(rng.uniform_int(num_nodes - 1));
    if (b >= a) ++b;
    auto c = static_cast<int32_t>(rng.uniform_int(num_nodes - 2));
    for (const int32_t used : {std::min(a, b), std::max(a, b)})
      if (c >= used) ++c;
    pool.push_back({a, b, c});
  }

  std::vector<TemporalGraph::InputRow> rows;
  rows.reserve(static_cast<std::size_t>(num_edges));
  int64_t step = 0;
  while (static_cast<int>(rows.size()) < num_edges) {
    const auto& [a, b, c] = pool[static_cast<std::size_t>(step % pool_size)];
    const double t0 = static_cast<double>(3 * step);
    const int32_t srcs[3] = {a, b, c};
    const int32_t dsts[3] = {b, c, a};
    for (int k = 0; k < 3 && static_cast<int>(rows.size()) < num_edges; ++k)
      rows.push_back({srcs[k], dsts[k], t0 + static_cast<double>(k), {}});
    ++step;
  }
  return TemporalGraph::from_rows(std::move(rows), GraphKind::DirectedHomogeneous);
}

}  // namespace tgemb
