#include "tgemb/temporal_graph.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <fstream>
#include <numeric>
#include <unordered_map>

#include <json.hpp>

#include "tgemb/io.hpp"

namespace tgemb {

namespace {

constexpr uint32_t kGraphMagic = 0x46524754;  // "TGRF"
constexpr uint32_t kGraphVersion = 1;

std::vector<std::string_view> split_fields(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && (line[i] == ',' || std::isspace(static_cast<unsigned char>(line[i]))))
      ++i;
    std::size_t j = i;
    while (j < line.size() && line[j] != ',' && !std::isspace(static_cast<unsigned char>(line[j])))
      ++j;
    if (j > i) out.push_back(line.substr(i, j - i));
    i = j;
  }
  return out;
}

double parse_double(std::string_view s, int64_t line_no, const char* what) {
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size())
    throw DataError("line " + std::to_string(line_no) + ": non-numeric " + what + " '" +
                    std::string(s) + "'");
  return v;
}

int64_t parse_id(std::string_view s, int64_t line_no, const char* what) {
  int64_t v = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size())
    throw DataError("line " + std::to_string(line_no) + ": malformed " + what + " '" +
                    std::string(s) + "'");
  return v;
}

}  // namespace

TemporalGraph TemporalGraph::from_rows(std::vector<InputRow> rows, GraphKind kind,
                                       bool drop_self_loops) {
  if (drop_self_loops) {
    std::erase_if(rows, [](const InputRow& r) { return r.src == r.dst; });
  }
  if (rows.empty()) throw DataError("no edges");

  const std::size_t feat_dim = rows.front().features.size();
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i].features.size() != feat_dim)
      throw DataError("inconsistent feature arity: row " + std::to_string(i + 1) + " has " +
                      std::to_string(rows[i].features.size()) + " features, expected " +
                      std::to_string(feat_dim));
    if (rows[i].timestamp < 0.0)
      throw DataError("negative timestamp at row " + std::to_string(i + 1));
  }

  TemporalGraph g;
  g.kind_ = kind;

  // Dense re-labeling in order of first appearance; bipartite dst labels get
  // their own contiguous range above every src label.
  std::unordered_map<int64_t, int32_t> src_map, dst_map;
  std::unordered_map<int64_t, int32_t>& dst_ref =
      (kind == GraphKind::UndirectedBipartite) ? dst_map : src_map;
  auto intern = [](std::unordered_map<int64_t, int32_t>& map, std::vector<int64_t>& names,
                   int64_t raw) {
    if (map.try_emplace(raw, static_cast<int32_t>(map.size())).second) names.push_back(raw);
  };
  std::vector<int64_t> src_originals, dst_originals;
  std::vector<int64_t>& dst_names =
      (kind == GraphKind::UndirectedBipartite) ? dst_originals : src_originals;
  for (const InputRow& r : rows) {
    intern(src_map, src_originals, r.src);
    intern(dst_ref, dst_names, r.dst);
  }

  const auto num_src = static_cast<int32_t>(src_map.size());
  if (kind == GraphKind::UndirectedBipartite) {
    g.bipartite_boundary_ = num_src;
    g.num_nodes_ = num_src + static_cast<int32_t>(dst_map.size());
  } else {
    g.num_nodes_ = num_src;
  }
  g.original_ids_ = std::move(src_originals);
  g.original_ids_.insert(g.original_ids_.end(), dst_originals.begin(), dst_originals.end());

  // Stable sort by timestamp: ties keep input order, and edge_id is the rank
  // in the sorted stream.
  std::vector<std::size_t> order(rows.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return rows[a].timestamp < rows[b].timestamp;
  });

  g.edges_.resize(rows.size());
  g.edge_features_.resize(static_cast<Eigen::Index>(rows.size()),
                          static_cast<Eigen::Index>(feat_dim));
  const int32_t dst_offset = (kind == GraphKind::UndirectedBipartite) ? num_src : 0;
  for (std::size_t k = 0; k < order.size(); ++k) {
    const InputRow& r = rows[order[k]];
    TemporalEdge& e = g.edges_[k];
    e.edge_id = static_cast<int64_t>(k);
    e.src = src_map.at(r.src);
    e.dst = dst_ref.at(r.dst) + dst_offset;
    e.timestamp = r.timestamp;
    for (std::size_t f = 0; f < feat_dim; ++f)
      g.edge_features_(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(f)) =
          r.features[f];
  }

  const double span = g.edges_.back().timestamp - g.edges_.front().timestamp;
  g.mean_gap_ = (g.edges_.size() > 1 && span > 0.0)
                    ? span / static_cast<double>(g.edges_.size() - 1)
                    : 1.0;

  g.build_index();
  return g;
}

void TemporalGraph::build_index() {
  std::vector<int64_t> counts(static_cast<std::size_t>(num_nodes_) + 1, 0);
  for (const TemporalEdge& e : edges_) {
    ++counts[static_cast<std::size_t>(e.src) + 1];
    ++counts[static_cast<std::size_t>(e.dst) + 1];
  }
  touch_offsets_.assign(counts.begin(), counts.end());
  for (std::size_t i = 1; i < touch_offsets_.size(); ++i) touch_offsets_[i] += touch_offsets_[i - 1];

  touch_pool_.resize(static_cast<std::size_t>(touch_offsets_.back()));
  std::vector<int64_t> cursor(touch_offsets_.begin(), touch_offsets_.end() - 1);
  // Filling in edge_id order leaves every per-node list sorted by
  // (timestamp, edge_id), which coincide after the stable sort.
  for (const TemporalEdge& e : edges_) {
    touch_pool_[static_cast<std::size_t>(cursor[static_cast<std::size_t>(e.src)]++)] =
        Touch{e.dst, e.timestamp, e.edge_id, true};
    touch_pool_[static_cast<std::size_t>(cursor[static_cast<std::size_t>(e.dst)]++)] =
        Touch{e.src, e.timestamp, e.edge_id, false};
  }
}

std::span<const Touch> TemporalGraph::touches(int32_t node) const {
  const auto lo = static_cast<std::size_t>(touch_offsets_[static_cast<std::size_t>(node)]);
  const auto hi = static_cast<std::size_t>(touch_offsets_[static_cast<std::size_t>(node) + 1]);
  return {touch_pool_.data() + lo, hi - lo};
}

int32_t TemporalGraph::destination_lo() const {
  return kind_ == GraphKind::UndirectedBipartite ? bipartite_boundary_ : 0;
}

int32_t TemporalGraph::destination_count() const {
  return kind_ == GraphKind::UndirectedBipartite ? num_nodes_ - bipartite_boundary_
                                                 : num_nodes_;
}

TemporalGraph ingest(const std::string& path, EdgeFileFormat format, GraphKind kind,
                     bool drop_self_loops) {
  std::ifstream is(path);
  if (!is) throw DataError("cannot open: " + path);

  std::vector<TemporalGraph::InputRow> rows;
  std::string line;
  int64_t line_no = 0;
  bool header_skipped = (format != EdgeFileFormat::Jodie);
  while (std::getline(is, line)) {
    ++line_no;
    const auto fields = split_fields(line);
    if (fields.empty()) continue;  // blank line
    if (!header_skipped) {
      header_skipped = true;
      continue;
    }
    const std::size_t base = (format == EdgeFileFormat::Jodie) ? 4 : 3;  // jodie: +state label
    if (fields.size() < base)
      throw DataError("line " + std::to_string(line_no) + ": malformed row, expected at least " +
                      std::to_string(base) + " fields, got " + std::to_string(fields.size()));
    TemporalGraph::InputRow r;
    r.src = parse_id(fields[0], line_no, "source id");
    r.dst = parse_id(fields[1], line_no, "destination id");
    r.timestamp = parse_double(fields[2], line_no, "timestamp");
    for (std::size_t f = base; f < fields.size(); ++f)
      r.features.push_back(parse_double(fields[f], line_no, "feature"));
    rows.push_back(std::move(r));
  }
  return TemporalGraph::from_rows(std::move(rows), kind, drop_self_loops);
}

void TemporalGraph::save(const std::string& path) const {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw DataError("cannot open for writing: " + path);
  io::write_u32(os, kGraphMagic);
  io::write_u32(os, kGraphVersion);
  io::write_u64(os, static_cast<uint64_t>(num_nodes_));
  io::write_u64(os, static_cast<uint64_t>(edges_.size()));
  io::write_u8(os, static_cast<uint8_t>(kind_));
  io::write_i64(os, bipartite_boundary_);
  io::write_u64(os, static_cast<uint64_t>(edge_features_.cols()));
  io::write_f64(os, mean_gap_);
  for (int64_t id : original_ids_) io::write_i64(os, id);
  for (const TemporalEdge& e : edges_) {
    io::write_u32(os, static_cast<uint32_t>(e.src));
    io::write_u32(os, static_cast<uint32_t>(e.dst));
    io::write_f64(os, e.timestamp);
  }
  for (Eigen::Index r = 0; r < edge_features_.rows(); ++r)
    for (Eigen::Index c = 0; c < edge_features_.cols(); ++c)
      io::write_f64(os, edge_features_(r, c));
  if (!os) throw DataError("short write: " + path);
}

TemporalGraph TemporalGraph::load(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw DataError("cannot open: " + path);
  if (io::read_u32(is, "magic") != kGraphMagic)
    throw DataError("not a graph container: " + path);
  const uint32_t version = io::read_u32(is, "version");
  if (version != kGraphVersion)
    throw DataError("unsupported graph container version " + std::to_string(version));

  TemporalGraph g;
  g.num_nodes_ = static_cast<int32_t>(io::read_u64(is, "num_nodes"));
  const uint64_t num_edges = io::read_u64(is, "num_edges");
  g.kind_ = static_cast<GraphKind>(io::read_u8(is, "kind"));
  g.bipartite_boundary_ = static_cast<int32_t>(io::read_i64(is, "bipartite boundary"));
  const auto feat_dim = static_cast<Eigen::Index>(io::read_u64(is, "feature dim"));
  g.mean_gap_ = io::read_f64(is, "mean gap");
  g.original_ids_.resize(static_cast<std::size_t>(g.num_nodes_));
  for (auto& id : g.original_ids_) id = io::read_i64(is, "original id");
  g.edges_.resize(num_edges);
  for (uint64_t i = 0; i < num_edges; ++i) {
    TemporalEdge& e = g.edges_[i];
    e.edge_id = static_cast<int64_t>(i);
    e.src = static_cast<int32_t>(io::read_u32(is, "src"));
    e.dst = static_cast<int32_t>(io::read_u32(is, "dst"));
    e.timestamp = io::read_f64(is, "timestamp");
  }
  g.edge_features_.resize(static_cast<Eigen::Index>(num_edges), feat_dim);
  for (Eigen::Index r = 0; r < g.edge_features_.rows(); ++r)
    for (Eigen::Index c = 0; c < feat_dim; ++c)
      g.edge_features_(r, c) = io::read_f64(is, "edge feature");
  g.build_index();
  return g;
}

bool SplitPlan::is_masked(int32_t node) const {
  return std::binary_search(masked_nodes.begin(), masked_nodes.end(), node);
}

void SplitPlan::save(const std::string& path) const {
  nlohmann::json j;
  j["mode"] = (mode == SplitMode::Inductive) ? "inductive" : "transductive";
  j["train_end"] = train_end;
  j["val_end"] = val_end;
  j["seed"] = seed;
  j["masked_nodes"] = masked_nodes;
  std::ofstream os(path, std::ios::trunc);
  if (!os) throw DataError("cannot open for writing: " + path);
  os << j.dump(2) << "\n";
}

SplitPlan SplitPlan::load(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw DataError("cannot open: " + path);
  nlohmann::json j;
  try {
    is >> j;
  } catch (const nlohmann::json::exception& e) {
    throw DataError("invalid split file " + path + ": " + e.what());
  }
  SplitPlan plan;
  const std::string mode = j.at("mode").get<std::string>();
  if (mode == "inductive")
    plan.mode = SplitMode::Inductive;
  else if (mode == "transductive")
    plan.mode = SplitMode::Transductive;
  else
    throw DataError("invalid split mode '" + mode + "'");
  plan.train_end = j.at("train_end").get<int64_t>();
  plan.val_end = j.at("val_end").get<int64_t>();
  plan.seed = j.at("seed").get<uint64_t>();
  plan.masked_nodes = j.at("masked_nodes").get<std::vector<int32_t>>();
  if (!std::is_sorted(plan.masked_nodes.begin(), plan.masked_nodes.end()))
    std::sort(plan.masked_nodes.begin(), plan.masked_nodes.end());
  return plan;
}

namespace {

bool touches_masked(const TemporalEdge& e, const SplitPlan& plan) {
  return plan.is_masked(e.src) || plan.is_masked(e.dst);
}

}  // namespace

std::vector<int64_t> training_edge_ids(const TemporalGraph& graph, const SplitPlan& plan) {
  std::vector<int64_t> out;
  out.reserve(static_cast<std::size_t>(plan.train_end));
  for (int64_t i = 0; i < plan.train_end; ++i) {
    if (plan.mode == SplitMode::Inductive && touches_masked(graph.edge(i), plan)) continue;
    out.push_back(i);
  }
  return out;
}

std::vector<int64_t> eval_edge_ids(const TemporalGraph& graph, const SplitPlan& plan,
                                   EvalSplit which) {
  const int64_t lo = (which == EvalSplit::Val) ? plan.train_end : plan.val_end;
  const int64_t hi = (which == EvalSplit::Val) ? plan.val_end : graph.num_edges();
  std::vector<int64_t> out;
  for (int64_t i = lo; i < hi; ++i) {
    if (plan.mode == SplitMode::Inductive && !touches_masked(graph.edge(i), plan)) continue;
    out.push_back(i);
  }
  return out;
}

SplitPlan split(const TemporalGraph& graph, double train_frac, double val_frac, SplitMode mode,
                double mask_frac, uint64_t seed) {
  if (!(train_frac > 0.0) || !(val_frac >= 0.0) || !(train_frac + val_frac < 1.0))
    throw UsageError("split fractions out of range: train " + std::to_string(train_frac) +
                     ", val " + std::to_string(val_frac));
  if (!(mask_frac >= 0.0 && mask_frac < 1.0))
    throw UsageError("mask fraction out of range: " + std::to_string(mask_frac));

  SplitPlan plan;
  plan.mode = mode;
  plan.seed = seed;
  const auto total = static_cast<double>(graph.num_edges());
  plan.train_end = static_cast<int64_t>(train_frac * total);
  plan.val_end = static_cast<int64_t>((train_frac + val_frac) * total);
  if (plan.train_end == 0) throw UsageError("split leaves an empty training set");

  if (mode == SplitMode::Inductive) {
    const auto num_masked =
        static_cast<std::size_t>(mask_frac * static_cast<double>(graph.num_nodes()));
    std::vector<int32_t> ids(static_cast<std::size_t>(graph.num_nodes()));
    std::iota(ids.begin(), ids.end(), 0);
    Rng rng(seed);
    // Partial Fisher-Yates: the first num_masked entries become the sample.
    for (std::size_t i = 0; i < num_masked; ++i) {
      const auto j = i + static_cast<std::size_t>(
                             rng.uniform_int(static_cast<int64_t>(ids.size() - i)));
      std::swap(ids[i], ids[j]);
    }
    ids.resize(num_masked);
    std::sort(ids.begin(), ids.end());
    plan.masked_nodes = std::move(ids);

    if (training_edge_ids(graph, plan).empty())
      throw DataError("inductive filtering left an empty training set");
    if (eval_edge_ids(graph, plan, EvalSplit::Val).empty() &&
        eval_edge_ids(graph, plan, EvalSplit::Test).empty())
      throw DataError("inductive filtering left an empty evaluation set");
  }
  return plan;
}

int32_t sample_negative(const TemporalGraph& graph, const TemporalEdge& positive, Rng& rng) {
  const int32_t lo = graph.destination_lo();
  const int32_t count = graph.destination_count();
  if (count <= 1)
    throw DataError("destination universe of size " + std::to_string(count) +
                    " cannot exclude the true destination");
  const int32_t pd = positive.dst;
  if (pd >= lo && pd < lo + count) {
    const auto r = static_cast<int32_t>(rng.uniform_int(count - 1));
    return lo + r + (r >= pd - lo ? 1 : 0);
  }
  return lo + static_cast<int32_t>(rng.uniform_int(count));
}

}  // namespace tgemb
