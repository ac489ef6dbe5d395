#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "tgemb/errors.hpp"
#include "tgemb/rng.hpp"

namespace tgemb {

// One timestamped interaction. edge_id is the edge's rank in the
// timestamp-sorted stream (input order breaks ties); per-edge input features,
// when present, live in TemporalGraph::edge_features() row edge_id.
struct TemporalEdge {
  int64_t edge_id = 0;
  int32_t src = 0;
  int32_t dst = 0;
  double timestamp = 0.0;
};

enum class GraphKind : uint8_t {
  DirectedHomogeneous = 0,
  UndirectedBipartite = 1,
};

// One incident interaction as seen from a node. is_out marks the node as the
// edge's src; meaningful for directed graphs only.
struct Touch {
  int32_t neighbor = 0;
  double timestamp = 0.0;
  int64_t edge_id = 0;
  bool is_out = false;
};

// An immutable time-sorted interaction stream with a per-node adjacency
// index. Safe to read from many threads once built.
class TemporalGraph {
 public:
  // `rows` carries original (file) node labels; they are re-labeled to a
  // dense 0..num_nodes-1 range in order of first appearance. For bipartite
  // graphs, dst labels get their own id range above all src labels.
  struct InputRow {
    int64_t src = 0;
    int64_t dst = 0;
    double timestamp = 0.0;
    std::vector<double> features;
  };

  static TemporalGraph from_rows(std::vector<InputRow> rows, GraphKind kind,
                                 bool drop_self_loops = false);

  int32_t num_nodes() const { return num_nodes_; }
  int64_t num_edges() const { return static_cast<int64_t>(edges_.size()); }
  GraphKind kind() const { return kind_; }

  // First node id of the destination partition; -1 for homogeneous graphs.
  int32_t bipartite_boundary() const { return bipartite_boundary_; }

  const std::vector<TemporalEdge>& edges() const { return edges_; }
  const TemporalEdge& edge(int64_t id) const { return edges_[static_cast<std::size_t>(id)]; }

  // Timestamp-sorted (equivalently edge_id-sorted) incident touches.
  std::span<const Touch> touches(int32_t node) const;

  Eigen::Index edge_feature_dim() const { return edge_features_.cols(); }
  const Eigen::MatrixXd& edge_features() const { return edge_features_; }

  // Original labels, indexed by dense node id.
  const std::vector<int64_t>& original_ids() const { return original_ids_; }

  // Mean gap between consecutive stream timestamps; >= some tiny positive
  // value even for degenerate streams. Used to normalize GRU message deltas.
  double mean_timestamp_gap() const { return mean_gap_; }

  // Valid negative-destination universe: the dst partition for bipartite
  // graphs, all nodes otherwise.
  int32_t destination_lo() const;
  int32_t destination_count() const;

  void save(const std::string& path) const;
  static TemporalGraph load(const std::string& path);

 private:
  TemporalGraph() = default;
  void build_index();

  std::vector<TemporalEdge> edges_;
  Eigen::MatrixXd edge_features_;  // num_edges x feature_dim (0 cols if none)
  std::vector<Touch> touch_pool_;
  std::vector<int64_t> touch_offsets_;  // num_nodes + 1
  std::vector<int64_t> original_ids_;
  int32_t num_nodes_ = 0;
  int32_t bipartite_boundary_ = -1;
  GraphKind kind_ = GraphKind::DirectedHomogeneous;
  double mean_gap_ = 1.0;
};

enum class EdgeFileFormat { Plain, Jodie };

// Parses "src,dst,timestamp[,feature...]" lines (Plain) or the JODIE layout
// "user,item,timestamp,state_label,feature..." with a header row, then builds
// the graph. Commas and whitespace both act as field separators.
TemporalGraph ingest(const std::string& path, EdgeFileFormat format, GraphKind kind,
                     bool drop_self_loops = false);

enum class SplitMode : uint8_t { Transductive = 0, Inductive = 1 };

struct SplitPlan {
  int64_t train_end = 0;  // edges [0, train_end) train
  int64_t val_end = 0;    // edges [train_end, val_end) validate, rest test
  SplitMode mode = SplitMode::Transductive;
  uint64_t seed = 0;
  std::vector<int32_t> masked_nodes;  // sorted; empty when transductive

  bool is_masked(int32_t node) const;

  void save(const std::string& path) const;
  static SplitPlan load(const std::string& path);
};

SplitPlan split(const TemporalGraph& graph, double train_frac, double val_frac,
                SplitMode mode, double mask_frac, uint64_t seed);

// Edge ids of the training stream (inductive mode removes edges touching a
// masked node) and of the scored evaluation sets (inductive mode keeps only
// edges touching a masked node).
enum class EvalSplit { Val, Test };
std::vector<int64_t> training_edge_ids(const TemporalGraph& graph, const SplitPlan& plan);
std::vector<int64_t> eval_edge_ids(const TemporalGraph& graph, const SplitPlan& plan,
                                   EvalSplit which);

// Uniform negative destination != positive.dst, drawn from the graph's
// destination universe.
int32_t sample_negative(const TemporalGraph& graph, const TemporalEdge& positive, Rng& rng);

}  // namespace tgemb
