#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <set>

#include "tgemb/temporal_graph.hpp"

using namespace tgemb;

namespace {

std::string write_temp(const std::string& name, const std::string& content) {
  std::ofstream os(name, std::ios::trunc);
  os << content;
  return name;
}

TemporalGraph from_triples(const std::vector<std::tuple<int, int, double>>& triples,
                           GraphKind kind = GraphKind::DirectedHomogeneous) {
  std::vector<TemporalGraph::InputRow> rows;
  for (const auto& [s, d, t] : triples) rows.push_back({s, d, t, {}});
  return TemporalGraph::from_rows(std::move(rows), kind);
}

}  // namespace

TEST_CASE("plain three-line file keeps tie order and ids") {
  const auto path = write_temp("ingest_plain.csv", "0,1,5\n1,2,7\n0,2,7\n");
  const TemporalGraph g = ingest(path, EdgeFileFormat::Plain, GraphKind::DirectedHomogeneous);
  CHECK(g.num_nodes() == 3);
  REQUIRE(g.num_edges() == 3);
  CHECK(g.edge(0).timestamp == 5.0);
  CHECK(g.edge(1).timestamp == 7.0);
  CHECK(g.edge(2).timestamp == 7.0);
  // Tie at t=7 preserved in input order: (1,2) before (0,2). Raw labels
  // appear in first-appearance order, so dense ids equal raw ids here.
  CHECK(g.original_ids() == std::vector<int64_t>{0, 1, 2});
  CHECK(g.edge(1).src == 1);
  CHECK(g.edge(1).dst == 2);
  CHECK(g.edge(2).src == 0);
  std::remove(path.c_str());
}

TEST_CASE("empty file is rejected") {
  const auto path = write_temp("ingest_empty.csv", "");
  CHECK_THROWS_WITH_AS(ingest(path, EdgeFileFormat::Plain, GraphKind::DirectedHomogeneous),
                       doctest::Contains("no edges"), DataError);
  std::remove(path.c_str());
}

TEST_CASE("malformed rows report the line number") {
  const auto path = write_temp("ingest_bad.csv", "0,1,5\n0,oops,6\n");
  CHECK_THROWS_WITH_AS(ingest(path, EdgeFileFormat::Plain, GraphKind::DirectedHomogeneous),
                       doctest::Contains("line 2"), DataError);
  const auto path2 = write_temp("ingest_bad_ts.csv", "0,1,xyz\n");
  CHECK_THROWS_WITH_AS(ingest(path2, EdgeFileFormat::Plain, GraphKind::DirectedHomogeneous),
                       doctest::Contains("non-numeric timestamp"), DataError);
  std::remove(path.c_str());
  std::remove(path2.c_str());
}

TEST_CASE("inconsistent feature arity is rejected") {
  const auto path = write_temp("ingest_arity.csv", "0,1,5,0.5\n1,2,7\n");
  CHECK_THROWS_WITH_AS(ingest(path, EdgeFileFormat::Plain, GraphKind::DirectedHomogeneous),
                       doctest::Contains("feature arity"), DataError);
  std::remove(path.c_str());
}

TEST_CASE("jodie format skips header, drops the state label, keeps features") {
  const auto path = write_temp("ingest_jodie.csv",
                               "user_id,item_id,timestamp,state_label,f0,f1\n"
                               "10,7,0.0,0,0.25,1.5\n"
                               "11,7,2.0,1,0.5,2.5\n"
                               "10,8,3.0,0,0.75,3.5\n");
  const TemporalGraph g = ingest(path, EdgeFileFormat::Jodie, GraphKind::UndirectedBipartite);
  CHECK(g.num_nodes() == 4);
  CHECK(g.num_edges() == 3);
  CHECK(g.edge_feature_dim() == 2);
  CHECK(g.edge_features()(0, 0) == 0.25);
  CHECK(g.edge_features()(2, 1) == 3.5);
  // Users occupy [0, boundary), items [boundary, num_nodes).
  REQUIRE(g.bipartite_boundary() == 2);
  for (const TemporalEdge& e : g.edges()) {
    CHECK(e.src < g.bipartite_boundary());
    CHECK(e.dst >= g.bipartite_boundary());
  }
  CHECK(g.original_ids() == std::vector<int64_t>{10, 11, 7, 8});
  std::remove(path.c_str());
}

TEST_CASE("drop-self-loops removes only self loops") {
  const TemporalGraph g = TemporalGraph::from_rows(
      {{0, 0, 1.0, {}}, {0, 1, 2.0, {}}, {1, 1, 3.0, {}}}, GraphKind::DirectedHomogeneous,
      /*drop_self_loops=*/true);
  CHECK(g.num_edges() == 1);
  CHECK(g.edge(0).timestamp == 2.0);
}

TEST_CASE("adjacency index replays the exact edge multiset") {
  Rng rng(41);
  std::vector<TemporalGraph::InputRow> rows;
  for (int i = 0; i < 200; ++i)
    rows.push_back({rng.uniform_int(12), rng.uniform_int(12), static_cast<double>(rng.uniform_int(50)), {}});
  const TemporalGraph g = TemporalGraph::from_rows(std::move(rows), GraphKind::DirectedHomogeneous);

  std::multiset<int64_t> replayed;
  for (int32_t v = 0; v < g.num_nodes(); ++v) {
    double prev = -1.0;
    for (const Touch& t : g.touches(v)) {
      CHECK(t.timestamp >= prev);
      prev = t.timestamp;
      if (t.is_out || g.edge(t.edge_id).src != g.edge(t.edge_id).dst) replayed.insert(t.edge_id);
    }
  }
  // Every edge appears exactly twice across the index (self loops counted
  // once above to keep the multiset comparable).
  std::multiset<int64_t> expect;
  for (const TemporalEdge& e : g.edges()) {
    expect.insert(e.edge_id);
    if (e.src != e.dst) expect.insert(e.edge_id);
  }
  CHECK(replayed == expect);
}

TEST_CASE("split boundaries follow the floor rule") {
  std::vector<std::tuple<int, int, double>> triples;
  for (int i = 0; i < 100; ++i) triples.emplace_back(i % 7, (i + 1) % 7, static_cast<double>(i));
  const TemporalGraph g = from_triples(triples);
  const SplitPlan plan = split(g, 0.70, 0.15, SplitMode::Transductive, 0.0, 1);
  CHECK(plan.train_end == 70);
  CHECK(plan.val_end == 85);
  CHECK(plan.masked_nodes.empty());
}

TEST_CASE("split is deterministic and masks the floor count of nodes") {
  // 1899 nodes; a sparse chain keeps every node present.
  std::vector<std::tuple<int, int, double>> triples;
  for (int i = 0; i < 1898; ++i) triples.emplace_back(i, i + 1, static_cast<double>(i));
  const TemporalGraph g = from_triples(triples);
  REQUIRE(g.num_nodes() == 1899);
  const SplitPlan a = split(g, 0.7, 0.15, SplitMode::Inductive, 0.1, 99);
  const SplitPlan b = split(g, 0.7, 0.15, SplitMode::Inductive, 0.1, 99);
  CHECK(a.masked_nodes == b.masked_nodes);
  CHECK(a.masked_nodes.size() == 189);  // floor(0.1 * 1899)
  const SplitPlan c = split(g, 0.7, 0.15, SplitMode::Inductive, 0.1, 100);
  CHECK(a.masked_nodes != c.masked_nodes);
}

TEST_CASE("no training edge touches a masked node") {
  Rng rng(7);
  std::vector<std::tuple<int, int, double>> triples;
  for (int i = 0; i < 400; ++i)
    triples.emplace_back(static_cast<int>(rng.uniform_int(30)),
                         static_cast<int>(rng.uniform_int(30)), static_cast<double>(i));
  const TemporalGraph g = from_triples(triples);
  const SplitPlan plan = split(g, 0.7, 0.15, SplitMode::Inductive, 0.2, 3);
  for (int64_t id : training_edge_ids(g, plan)) {
    CHECK_FALSE(plan.is_masked(g.edge(id).src));
    CHECK_FALSE(plan.is_masked(g.edge(id).dst));
  }
  // Evaluation edges all touch a masked node.
  for (const auto which : {EvalSplit::Val, EvalSplit::Test})
    for (int64_t id : eval_edge_ids(g, plan, which))
      CHECK((plan.is_masked(g.edge(id).src) || plan.is_masked(g.edge(id).dst)));
}

TEST_CASE("inductive filtering that empties the training set is an error") {
  // Node 0 touches every edge; masking it wipes the training stream.
  std::vector<std::tuple<int, int, double>> triples;
  for (int i = 0; i < 20; ++i) triples.emplace_back(0, 1 + (i % 3), static_cast<double>(i));
  const TemporalGraph g = from_triples(triples);
  bool hit = false;
  for (uint64_t seed = 0; seed < 64 && !hit; ++seed) {
    try {
      const SplitPlan plan = split(g, 0.7, 0.15, SplitMode::Inductive, 0.25, seed);
      hit = !plan.is_masked(0);  // only acceptable without an error if 0 unmasked
    } catch (const DataError& e) {
      hit = true;
      CHECK(std::string(e.what()).find("empty") != std::string::npos);
    }
  }
  CHECK(hit);
}

TEST_CASE("split rejects out-of-range fractions") {
  const TemporalGraph g = from_triples({{0, 1, 1.0}, {1, 2, 2.0}});
  CHECK_THROWS_AS(split(g, 0.8, 0.3, SplitMode::Transductive, 0.0, 1), UsageError);
  CHECK_THROWS_AS(split(g, 0.0, 0.1, SplitMode::Transductive, 0.0, 1), UsageError);
  CHECK_THROWS_AS(split(g, 0.7, 0.15, SplitMode::Inductive, 1.0, 1), UsageError);
}

TEST_CASE("split plan round-trips through its file") {
  std::vector<std::tuple<int, int, double>> triples;
  for (int i = 0; i < 50; ++i) triples.emplace_back(i % 9, (i + 1) % 9, static_cast<double>(i));
  const TemporalGraph g = from_triples(triples);
  const SplitPlan plan = split(g, 0.7, 0.15, SplitMode::Inductive, 0.3, 5);
  plan.save("plan_roundtrip.json");
  const SplitPlan back = SplitPlan::load("plan_roundtrip.json");
  CHECK(back.train_end == plan.train_end);
  CHECK(back.val_end == plan.val_end);
  CHECK(back.mode == plan.mode);
  CHECK(back.masked_nodes == plan.masked_nodes);
  std::remove("plan_roundtrip.json");
}

TEST_CASE("negative sampling stays in the destination partition") {
  // Bipartite: 3 users, 3 items; positives point at item id 1 (dense id 4).
  const TemporalGraph g = from_triples({{0, 0, 1.0}, {1, 1, 2.0}, {2, 2, 3.0}},
                                       GraphKind::UndirectedBipartite);
  REQUIRE(g.bipartite_boundary() == 3);
  Rng rng(1);
  const TemporalEdge& positive = g.edge(1);
  for (int i = 0; i < 200; ++i) {
    const int32_t neg = sample_negative(g, positive, rng);
    CHECK(neg >= 3);
    CHECK(neg < 6);
    CHECK(neg != positive.dst);
  }
}

TEST_CASE("negative sampling is uniform within three sigma") {
  const TemporalGraph g = from_triples({{0, 1, 1.0}, {1, 2, 2.0}, {2, 3, 3.0}, {3, 0, 4.0}});
  REQUIRE(g.num_nodes() == 4);
  Rng rng(123);
  const TemporalEdge positive{0, 0, 2, 1.0};  // true dst = 2
  std::map<int32_t, int> freq;
  const int draws = 10000;
  for (int i = 0; i < draws; ++i) ++freq[sample_negative(g, positive, rng)];
  CHECK(freq.count(2) == 0);
  const double p = 1.0 / 3.0;
  const double sigma = std::sqrt(draws * p * (1 - p));
  for (const int32_t v : {0, 1, 3}) {
    CHECK(std::abs(freq[v] - draws * p) <= 3.0 * sigma);
  }
}

TEST_CASE("single-destination graphs cannot be negative-sampled") {
  const TemporalGraph g = from_triples({{0, 5, 1.0}, {1, 5, 2.0}},
                                       GraphKind::UndirectedBipartite);
  Rng rng(1);
  CHECK_THROWS_WITH_AS(sample_negative(g, g.edge(0), rng), doctest::Contains("universe"),
                       DataError);
}

TEST_CASE("graph container round-trips byte-for-byte content") {
  Rng rng(59);
  std::vector<TemporalGraph::InputRow> rows;
  for (int i = 0; i < 64; ++i)
    rows.push_back({rng.uniform_int(10) + 100, rng.uniform_int(10) + 200,
                    static_cast<double>(rng.uniform_int(40)),
                    {rng.uniform(), rng.uniform()}});
  const TemporalGraph g =
      TemporalGraph::from_rows(std::move(rows), GraphKind::UndirectedBipartite);
  g.save("graph_roundtrip.tgraph");
  const TemporalGraph back = TemporalGraph::load("graph_roundtrip.tgraph");
  CHECK(back.num_nodes() == g.num_nodes());
  CHECK(back.num_edges() == g.num_edges());
  CHECK(back.kind() == g.kind());
  CHECK(back.bipartite_boundary() == g.bipartite_boundary());
  CHECK(back.mean_timestamp_gap() == g.mean_timestamp_gap());
  CHECK(back.original_ids() == g.original_ids());
  for (int64_t i = 0; i < g.num_edges(); ++i) {
    CHECK(back.edge(i).src == g.edge(i).src);
    CHECK(back.edge(i).dst == g.edge(i).dst);
    CHECK(back.edge(i).timestamp == g.edge(i).timestamp);
  }
  CHECK((back.edge_features().array() == g.edge_features().array()).all());
  std::remove("graph_roundtrip.tgraph");
}

TEST_CASE("mean timestamp gap telescopes over the stream") {
  const TemporalGraph g = from_triples({{0, 1, 2.0}, {1, 2, 5.0}, {2, 0, 11.0}});
  CHECK(g.mean_timestamp_gap() == doctest::Approx((11.0 - 2.0) / 2.0));
  const TemporalGraph flat = from_triples({{0, 1, 3.0}, {1, 2, 3.0}});
  CHECK(flat.mean_timestamp_gap() == 1.0);
}

// Full-scale ingestion check against the published dataset statistics; only
// runs when the dataset file is supplied.
TEST_CASE("uci dataset statistics" * doctest::skip(std::getenv("TGEMB_UCI_PATH") == nullptr)) {
  const char* path = std::getenv("TGEMB_UCI_PATH");
  REQUIRE(path != nullptr);
  const TemporalGraph g = ingest(path, EdgeFileFormat::Plain, GraphKind::DirectedHomogeneous);
  CHECK(g.num_nodes() == 1899);
  CHECK(g.num_edges() == 59835);
}
