#include "tgemb/motifs.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <sstream>
#include <thread>

#include "tgemb/io.hpp"

namespace tgemb {

namespace {

constexpr int kMaxMotifEdges = 5;
constexpr uint32_t kFeatureMagic = 0x52544654;  // "TFTR"
constexpr uint32_t kFeatureVersion = 1;

// Largest integer exactly representable in a double.
constexpr double kMaxExactCount = 9007199254740992.0;  // 2^53

const char* kDirectedDefault = R"(# directed_default: temporal motifs for directed homogeneous networks.
#
# M1-M3: the three 3-edge interaction sequences between two nodes that use
# both directions, canonicalized so the first edge goes 0 -> 1.
motif 1 directed
edge 0 1
edge 0 1
edge 1 0

motif 2 directed
edge 0 1
edge 1 0
edge 0 1

motif 3 directed
edge 0 1
edge 1 0
edge 1 0

# M4-M11: the eight oriented triangles over three nodes, with the pair order
# fixed to {0,1}, {1,2}, {2,0} and every orientation assignment. M4 is the
# cyclic triangle.
motif 4 directed
edge 0 1
edge 1 2
edge 2 0

motif 5 directed
edge 0 1
edge 1 2
edge 0 2

motif 6 directed
edge 0 1
edge 2 1
edge 2 0

motif 7 directed
edge 0 1
edge 2 1
edge 0 2

motif 8 directed
edge 1 0
edge 1 2
edge 2 0

motif 9 directed
edge 1 0
edge 1 2
edge 0 2

motif 10 directed
edge 1 0
edge 2 1
edge 2 0

motif 11 directed
edge 1 0
edge 2 1
edge 0 2

# M12: a mutual pair followed by a reach-out to a third node.
motif 12 directed
edge 0 1
edge 1 0
edge 1 2
)";

const char* kBipartiteDefault = R"(# bipartite_default: temporal motifs for undirected bipartite networks.
# Labels are abstract per motif: M1 relates one user (0) and one item (1);
# M2-M7 relate two users (0,1) and one item (2).
#
# M1: a repeated pair.
motif 1 undirected
edge 0 1
edge 0 1

# M2-M4: 3-edge wedges over two users and one item, in the three time orders
# of the multiset {(0,2), (0,2), (1,2)} up to user relabeling.
motif 2 undirected
edge 0 2
edge 0 2
edge 1 2

motif 3 undirected
edge 0 2
edge 1 2
edge 0 2

motif 4 undirected
edge 0 2
edge 1 2
edge 1 2

# M5-M7: 4-edge enhanced wedges, the three time orders of {(0,2), (0,2),
# (1,2), (1,2)} up to user relabeling.
motif 5 undirected
edge 0 2
edge 0 2
edge 1 2
edge 1 2

motif 6 undirected
edge 0 2
edge 1 2
edge 0 2
edge 1 2

motif 7 undirected
edge 0 2
edge 1 2
edge 1 2
edge 0 2
)";

}  // namespace

void MotifSpec::validate() const {
  if (edges.empty()) throw DataError("motif " + std::to_string(motif_id) + ": no edges");
  if (length() > kMaxMotifEdges)
    throw DataError("motif " + std::to_string(motif_id) + ": more than " +
                    std::to_string(kMaxMotifEdges) + " edges is unsupported");

  int max_label = -1;
  for (const auto& [a, b] : edges) {
    if (a < 0 || b < 0)
      throw DataError("motif " + std::to_string(motif_id) + ": negative label");
    max_label = std::max({max_label, a, b});
  }
  if (max_label + 1 != num_labels)
    throw DataError("motif " + std::to_string(motif_id) + ": inconsistent label count");

  std::vector<bool> seen(static_cast<std::size_t>(num_labels), false);
  for (const auto& [a, b] : edges) {
    seen[static_cast<std::size_t>(a)] = true;
    seen[static_cast<std::size_t>(b)] = true;
  }
  for (int l = 0; l < num_labels; ++l)
    if (!seen[static_cast<std::size_t>(l)])
      throw DataError("motif " + std::to_string(motif_id) + ": label gap at " +
                      std::to_string(l));

  // Connectivity of the undirected label multigraph.
  std::vector<int> comp(static_cast<std::size_t>(num_labels));
  for (int l = 0; l < num_labels; ++l) comp[static_cast<std::size_t>(l)] = l;
  const std::function<int(int)> find = [&](int x) {
    while (comp[static_cast<std::size_t>(x)] != x) {
      comp[static_cast<std::size_t>(x)] = comp[static_cast<std::size_t>(comp[static_cast<std::size_t>(x)])];
      x = comp[static_cast<std::size_t>(x)];
    }
    return x;
  };
  for (const auto& [a, b] : edges) comp[static_cast<std::size_t>(find(a))] = find(b);
  for (int l = 1; l < num_labels; ++l)
    if (find(l) != find(0))
      throw DataError("motif " + std::to_string(motif_id) + ": disconnected pattern");
}

int MotifCatalog::feature_width() const {
  int w = 0;
  for (const MotifSpec& m : motifs) w += m.length();
  return w;
}

int MotifCatalog::column_offset(int index) const {
  int w = 0;
  for (int i = 0; i < index; ++i) w += motifs[static_cast<std::size_t>(i)].length();
  return w;
}

void MotifCatalog::validate() const {
  if (motifs.empty()) throw DataError("catalog '" + name + "': no motifs");
  const bool directed = motifs.front().directed;
  for (const MotifSpec& m : motifs) {
    m.validate();
    if (m.directed != directed)
      throw DataError("catalog '" + name + "': mixed directed and undirected motifs");
  }
  if (feature_width() > 4096)
    throw DataError("catalog '" + name + "': feature width overflow");
}

MotifCatalog parse_catalog(const std::string& text, const std::string& origin) {
  MotifCatalog cat;
  cat.name = origin;

  std::istringstream is(text);
  std::string line;
  int line_no = 0;
  MotifSpec* current = nullptr;
  while (std::getline(is, line)) {
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
    std::istringstream ls(line);
    std::string kw;
    if (!(ls >> kw)) continue;
    if (kw == "motif") {
      int id = 0;
      std::string dir;
      if (!(ls >> id >> dir) || (dir != "directed" && dir != "undirected"))
        throw DataError(origin + ":" + std::to_string(line_no) +
                        ": expected 'motif <id> directed|undirected'");
      cat.motifs.push_back(MotifSpec{id, dir == "directed", {}, 0});
      current = &cat.motifs.back();
    } else if (kw == "edge") {
      int a = 0, b = 0;
      if (current == nullptr || !(ls >> a >> b))
        throw DataError(origin + ":" + std::to_string(line_no) + ": malformed edge line");
      current->edges.emplace_back(a, b);
      current->num_labels = std::max({current->num_labels, a + 1, b + 1});
    } else {
      throw DataError(origin + ":" + std::to_string(line_no) + ": unknown keyword '" + kw + "'");
    }
  }

  if (!cat.motifs.empty())
    cat.network_class = cat.motifs.front().directed ? GraphKind::DirectedHomogeneous
                                                    : GraphKind::UndirectedBipartite;
  cat.validate();
  return cat;
}

MotifCatalog load_catalog(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw DataError("cannot open: " + path);
  std::ostringstream buf;
  buf << is.rdbuf();
  return parse_catalog(buf.str(), path);
}

bool is_builtin_catalog(const std::string& name) {
  return name == "directed_default" || name == "bipartite_default";
}

MotifCatalog builtin_catalog(const std::string& name) {
  if (name == "directed_default") return parse_catalog(kDirectedDefault, name);
  if (name == "bipartite_default") return parse_catalog(kBipartiteDefault, name);
  throw DataError("unknown builtin catalog '" + name + "'");
}

MotifCatalog resolve_catalog(const std::string& spec) {
  return is_builtin_catalog(spec) ? builtin_catalog(spec) : load_catalog(spec);
}

namespace {

// Backtracking matcher for one anchor range. The candidate generator walks
// the adjacency index of an already-mapped endpoint whenever the next motif
// edge touches the partial mapping, and falls back to a stream-window scan
// for (unusual) motifs whose prefix is disconnected.
class Matcher {
 public:
  Matcher(const TemporalGraph& g, const MotifSpec& m, double delta, const InstanceCallback& cb)
      : graph_(g), motif_(m), delta_(delta), cb_(cb) {
    mapping_.assign(static_cast<std::size_t>(m.num_labels), -1);
    chosen_.resize(static_cast<std::size_t>(m.length()));
    find_automorphisms();
  }

  void run(int64_t anchor_lo, int64_t anchor_hi) {
    const auto& edges = graph_.edges();
    for (int64_t a = anchor_lo; a < anchor_hi; ++a) {
      window_end_ = edges[static_cast<std::size_t>(a)].timestamp + delta_;
      try_edge(0, edges[static_cast<std::size_t>(a)]);
    }
  }

 private:
  bool bind(int label, int32_t node) {
    int32_t& slot = mapping_[static_cast<std::size_t>(label)];
    if (slot >= 0) return slot == node;
    for (int l = 0; l < motif_.num_labels; ++l)
      if (mapping_[static_cast<std::size_t>(l)] == node) return false;  // injectivity
    slot = node;
    bound_.push_back(label);
    return true;
  }

  void unbind_to(std::size_t mark) {
    while (bound_.size() > mark) {
      mapping_[static_cast<std::size_t>(bound_.back())] = -1;
      bound_.pop_back();
    }
  }

  // Attempts to place `e` at position p under the current mapping, trying
  // both orientations for undirected motifs.
  void try_edge(int p, const TemporalEdge& e) {
    const auto [a, b] = motif_.edges[static_cast<std::size_t>(p)];
    try_oriented(p, e, a, e.src, b, e.dst);
    if (!motif_.directed && e.src != e.dst) try_oriented(p, e, a, e.dst, b, e.src);
  }

  void try_oriented(int p, const TemporalEdge& e, int la, int32_t na, int lb, int32_t nb) {
    const std::size_t mark = bound_.size();
    if (la == lb) {
      if (na == nb && bind(la, na)) descend(p, e);
    } else if (bind(la, na) && bind(lb, nb)) {
      descend(p, e);
    }
    unbind_to(mark);
  }

  void descend(int p, const TemporalEdge& e) {
    chosen_[static_cast<std::size_t>(p)] = e.edge_id;
    if (p + 1 == motif_.length()) {
      if (canonical_witness()) cb_(chosen_);
      return;
    }
    expand(p + 1, e.edge_id);
  }

  // Non-identity label permutations that fix every ordered motif edge (as an
  // unordered pair for undirected motifs). The witnesses of one edge tuple
  // form exactly one orbit under this group, so emitting only the
  // lexicographically minimal mapping reports each instance once.
  void find_automorphisms() {
    std::vector<int> perm(static_cast<std::size_t>(motif_.num_labels));
    for (int l = 0; l < motif_.num_labels; ++l) perm[static_cast<std::size_t>(l)] = l;
    while (std::next_permutation(perm.begin(), perm.end())) {
      bool fixes = true;
      for (const auto& [a, b] : motif_.edges) {
        const int pa = perm[static_cast<std::size_t>(a)];
        const int pb = perm[static_cast<std::size_t>(b)];
        const bool fwd = (pa == a && pb == b);
        const bool rev = (pa == b && pb == a);
        if (!(motif_.directed ? fwd : (fwd || rev))) {
          fixes = false;
          break;
        }
      }
      if (fixes) automorphisms_.push_back(perm);
    }
  }

  bool canonical_witness() const {
    for (const auto& perm : automorphisms_) {
      for (int l = 0; l < motif_.num_labels; ++l) {
        const int32_t mine = mapping_[static_cast<std::size_t>(l)];
        const int32_t other = mapping_[static_cast<std::size_t>(perm[static_cast<std::size_t>(l)])];
        if (other < mine) return false;  // a smaller witness exists in the orbit
        if (other > mine) break;
      }
    }
    return true;
  }

  void expand(int p, int64_t prev_id) {
    const auto [a, b] = motif_.edges[static_cast<std::size_t>(p)];
    const int32_t na = mapping_[static_cast<std::size_t>(a)];
    const int32_t nb = mapping_[static_cast<std::size_t>(b)];

    if (na < 0 && nb < 0) {
      scan_stream(p, prev_id);
      return;
    }

    // Walk the touch list of a mapped endpoint; edge ids are time-ordered,
    // so the delta window is a contiguous tail segment.
    const bool from_src = na >= 0;
    const int32_t pivot = from_src ? na : nb;
    const auto touches = graph_.touches(pivot);
    auto it = std::upper_bound(touches.begin(), touches.end(), prev_id,
                               [](int64_t id, const Touch& t) { return id < t.edge_id; });
    for (; it != touches.end() && it->timestamp <= window_end_; ++it) {
      if (motif_.directed && it->is_out != from_src) continue;
      const TemporalEdge& e = graph_.edge(it->edge_id);
      // A self-loop shows up twice in its node's touch list; keep one.
      if (e.src == e.dst && !it->is_out) continue;
      if (motif_.directed) {
        const std::size_t mark = bound_.size();
        if (bind(a, e.src) && bind(b, e.dst)) descend(p, e);
        unbind_to(mark);
      } else {
        try_edge(p, e);
      }
    }
  }

  void scan_stream(int p, int64_t prev_id) {
    const auto& edges = graph_.edges();
    for (std::size_t i = static_cast<std::size_t>(prev_id) + 1;
         i < edges.size() && edges[i].timestamp <= window_end_; ++i)
      try_edge(p, edges[i]);
  }

  const TemporalGraph& graph_;
  const MotifSpec& motif_;
  const double delta_;
  const InstanceCallback& cb_;
  double window_end_ = 0.0;
  std::vector<int32_t> mapping_;  // label -> node, -1 unmapped
  std::vector<int> bound_;        // bind order, for backtracking
  std::vector<int64_t> chosen_;
  std::vector<std::vector<int>> automorphisms_;
};

}  // namespace

void for_each_instance(const TemporalGraph& graph, const MotifSpec& motif, double delta,
                       int64_t anchor_lo, int64_t anchor_hi, const InstanceCallback& cb) {
  if (delta <= 0.0) throw DataError("delta must be positive");
  motif.validate();
  Matcher(graph, motif, delta, cb).run(anchor_lo, anchor_hi);
}

std::vector<std::vector<int64_t>> enumerate_instances(const TemporalGraph& graph,
                                                      const MotifSpec& motif, double delta) {
  std::vector<std::vector<int64_t>> out;
  for_each_instance(graph, motif, delta, 0, graph.num_edges(),
                    [&](std::span<const int64_t> inst) {
                      out.emplace_back(inst.begin(), inst.end());
                    });
  return out;
}

EdgeMotifFeatures build_edge_features(const TemporalGraph& graph, const MotifCatalog& catalog,
                                      bool causal, unsigned threads) {
  catalog.validate();
  if (catalog.delta <= 0.0) throw DataError("catalog delta must be positive");
  if (catalog.network_class != graph.kind())
    throw DataError("catalog '" + catalog.name + "' does not match the graph's network class");

  const auto num_edges = static_cast<std::size_t>(graph.num_edges());
  const auto width = static_cast<std::size_t>(catalog.feature_width());
  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  threads = std::min<unsigned>(threads, 64);

  std::vector<std::vector<uint64_t>> tables(
      threads, std::vector<uint64_t>(num_edges * width, 0));

  for (std::size_t mi = 0; mi < catalog.motifs.size(); ++mi) {
    const MotifSpec& motif = catalog.motifs[mi];
    const auto base = static_cast<std::size_t>(catalog.column_offset(static_cast<int>(mi)));
    const int64_t total = graph.num_edges();
    const int64_t chunk = (total + threads - 1) / threads;

    std::vector<std::thread> pool;
    for (unsigned w = 0; w < threads; ++w) {
      const int64_t lo = std::min<int64_t>(total, static_cast<int64_t>(w) * chunk);
      const int64_t hi = std::min<int64_t>(total, lo + chunk);
      if (lo >= hi) break;
      pool.emplace_back([&, w, lo, hi]() {
        auto& table = tables[w];
        for_each_instance(graph, motif, catalog.delta, lo, hi,
                          [&](std::span<const int64_t> inst) {
                            const double t_last =
                                graph.edge(inst[inst.size() - 1]).timestamp;
                            for (std::size_t p = 0; p < inst.size(); ++p) {
                              if (causal && t_last > graph.edge(inst[p]).timestamp) continue;
                              ++table[static_cast<std::size_t>(inst[p]) * width + base + p];
                            }
                          });
      });
    }
    for (auto& t : pool) t.join();
  }

  for (unsigned w = 1; w < threads; ++w)
    for (std::size_t i = 0; i < tables[0].size(); ++i) tables[0][i] += tables[w][i];

  Eigen::MatrixXd counts(static_cast<Eigen::Index>(num_edges), static_cast<Eigen::Index>(width));
  for (std::size_t e = 0; e < num_edges; ++e) {
    for (std::size_t c = 0; c < width; ++c) {
      const uint64_t v = tables[0][e * width + c];
      if (static_cast<double>(v) >= kMaxExactCount)
        throw NumericError("motif count overflow at edge " + std::to_string(e));
      counts(static_cast<Eigen::Index>(e), static_cast<Eigen::Index>(c)) =
          static_cast<double>(v);
    }
  }
  return EdgeMotifFeatures(std::move(counts), catalog.delta, causal);
}

void EdgeMotifFeatures::save(const std::string& path) const {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw DataError("cannot open for writing: " + path);
  io::write_u32(os, kFeatureMagic);
  io::write_u32(os, kFeatureVersion);
  io::write_u64(os, static_cast<uint64_t>(counts_.rows()));
  io::write_u64(os, static_cast<uint64_t>(counts_.cols()));
  io::write_f64(os, delta_);
  io::write_u8(os, causal_ ? 1 : 0);
  for (Eigen::Index r = 0; r < counts_.rows(); ++r)
    for (Eigen::Index c = 0; c < counts_.cols(); ++c) io::write_f64(os, counts_(r, c));
  if (!os) throw DataError("short write: " + path);
}

EdgeMotifFeatures EdgeMotifFeatures::load(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw DataError("cannot open: " + path);
  if (io::read_u32(is, "magic") != kFeatureMagic)
    throw DataError("not a feature table: " + path);
  const uint32_t version = io::read_u32(is, "version");
  if (version != kFeatureVersion)
    throw DataError("unsupported feature table version " + std::to_string(version));
  const auto rows = static_cast<Eigen::Index>(io::read_u64(is, "rows"));
  const auto cols = static_cast<Eigen::Index>(io::read_u64(is, "cols"));
  const double delta = io::read_f64(is, "delta");
  const bool causal = io::read_u8(is, "causal") != 0;
  Eigen::MatrixXd counts(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r)
    for (Eigen::Index c = 0; c < cols; ++c) counts(r, c) = io::read_f64(is, "count");
  return EdgeMotifFeatures(std::move(counts), delta, causal);
}

void EdgeMotifFeatures::write_csv(const std::string& path) const {
  std::ofstream os(path, std::ios::trunc);
  if (!os) throw DataError("cannot open for writing: " + path);
  for (Eigen::Index r = 0; r < counts_.rows(); ++r) {
    for (Eigen::Index c = 0; c < counts_.cols(); ++c) {
      if (c) os << ',';
      os << static_cast<uint64_t>(counts_(r, c));
    }
    os << '\n';
  }
}

}  // namespace tgemb
