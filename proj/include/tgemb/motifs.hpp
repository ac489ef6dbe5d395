#pragma once

#include <Eigen/Dense>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "tgemb/temporal_graph.hpp"

namespace tgemb {

// An ordered abstract edge pattern: edge p must match the p-th edge of an
// instance, and all L instance edges must fall inside one delta window.
struct MotifSpec {
  int motif_id = 0;
  bool directed = true;
  std::vector<std::pair<int, int>> edges;  // (src label, dst label)
  int num_labels = 0;

  int length() const { return static_cast<int>(edges.size()); }

  // Throws DataError on label gaps, disconnected patterns, empty or
  // over-long motifs.
  void validate() const;
};

struct MotifCatalog {
  std::string name;
  std::vector<MotifSpec> motifs;
  double delta = 0.0;  // seconds; set by the caller before counting
  GraphKind network_class = GraphKind::DirectedHomogeneous;

  int feature_width() const;
  // First feature column of motif `index` within the concatenated layout.
  int column_offset(int index) const;

  void validate() const;
};

// Catalog text format: '#' starts a comment; each motif is a block
//   motif <id> directed|undirected
//   edge <src_label> <dst_label>   (repeated L times)
MotifCatalog parse_catalog(const std::string& text, const std::string& origin);
MotifCatalog load_catalog(const std::string& path);

// "directed_default" (12 motifs) or "bipartite_default" (7 motifs).
bool is_builtin_catalog(const std::string& name);
MotifCatalog builtin_catalog(const std::string& name);
// Resolves a builtin name or falls back to treating `spec` as a path.
MotifCatalog resolve_catalog(const std::string& spec);

// Visits every instance: an edge-id tuple (e_1..e_L), strictly increasing in
// stream position, whose endpoints admit an injective label->node mapping
// matching the motif edges in order, with t(e_L) - t(e_1) <= delta.
// Anchors are restricted to [anchor_lo, anchor_hi) stream positions.
using InstanceCallback = std::function<void(std::span<const int64_t>)>;
void for_each_instance(const TemporalGraph& graph, const MotifSpec& motif, double delta,
                       int64_t anchor_lo, int64_t anchor_hi, const InstanceCallback& cb);

std::vector<std::vector<int64_t>> enumerate_instances(const TemporalGraph& graph,
                                                      const MotifSpec& motif, double delta);

// Positional instance counts per edge: column (offset of M) + p counts the
// instances of M in which the edge sits at position p. Counted once over the
// whole stream; `causal` drops contributions from instances that complete
// after the featurized edge's timestamp.
class EdgeMotifFeatures {
 public:
  EdgeMotifFeatures() = default;
  EdgeMotifFeatures(Eigen::MatrixXd counts, double delta, bool causal)
      : counts_(std::move(counts)), delta_(delta), causal_(causal) {}

  const Eigen::MatrixXd& counts() const { return counts_; }
  Eigen::Index width() const { return counts_.cols(); }
  double delta() const { return delta_; }
  bool causal() const { return causal_; }

  void save(const std::string& path) const;
  static EdgeMotifFeatures load(const std::string& path);
  void write_csv(const std::string& path) const;

 private:
  Eigen::MatrixXd counts_;  // num_edges x width, integer-valued
  double delta_ = 0.0;
  bool causal_ = false;
};

// threads = 0 picks hardware concurrency. Counting parallelizes over anchor
// edges with per-worker tables merged in a fixed order, so results do not
// depend on the thread count.
EdgeMotifFeatures build_edge_features(const TemporalGraph& graph, const MotifCatalog& catalog,
                                      bool causal = false, unsigned threads = 0);

}  // namespace tgemb
