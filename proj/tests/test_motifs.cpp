#include <doctest.h>

#include <algorithm>
#include <set>

#include "motif_oracle.hpp"
#include "tgemb/motifs.hpp"

using namespace tgemb;
using tgemb::testing::brute_force_instances;
using tgemb::testing::random_graph;

namespace {

TemporalGraph graph_from_triples(const std::vector<std::tuple<int, int, double>>& triples,
                                 GraphKind kind = GraphKind::DirectedHomogeneous) {
  std::vector<TemporalGraph::InputRow> rows;
  for (const auto& [s, d, t] : triples) rows.push_back({s, d, t, {}});
  return TemporalGraph::from_rows(std::move(rows), kind);
}

// Cyclic triangle: M4 of the directed default catalog.
MotifSpec triangle_motif() {
  MotifSpec m;
  m.motif_id = 4;
  m.directed = true;
  m.edges = {{0, 1}, {1, 2}, {2, 0}};
  m.num_labels = 3;
  return m;
}

// Four nodes, seven interactions, two cyclic-triangle instances within the
// window: positions (0,1,2) and (4,5,6); the window rules out mixtures.
TemporalGraph example_graph_g1() {
  return graph_from_triples({{1, 2, 1.0},
                             {2, 3, 2.0},
                             {3, 1, 3.0},
                             {2, 4, 4.0},
                             {1, 2, 5.0},
                             {2, 3, 6.0},
                             {3, 1, 7.0}});
}

}  // namespace

TEST_CASE("directed default catalog has 12 motifs of width 36") {
  const MotifCatalog cat = builtin_catalog("directed_default");
  CHECK(cat.motifs.size() == 12);
  CHECK(cat.feature_width() == 36);
  CHECK(cat.network_class == GraphKind::DirectedHomogeneous);
}

TEST_CASE("bipartite default catalog has 7 motifs of width 23") {
  const MotifCatalog cat = builtin_catalog("bipartite_default");
  CHECK(cat.motifs.size() == 7);
  CHECK(cat.feature_width() == 23);
  CHECK(cat.network_class == GraphKind::UndirectedBipartite);
}

TEST_CASE("shipped catalog files match the builtins") {
  for (const std::string name : {"directed_default", "bipartite_default"}) {
    const MotifCatalog builtin = builtin_catalog(name);
    const MotifCatalog file =
        load_catalog(std::string(TGEMB_SOURCE_DIR) + "/data/catalogs/" + name + ".motifs");
    REQUIRE(file.motifs.size() == builtin.motifs.size());
    for (std::size_t i = 0; i < file.motifs.size(); ++i) {
      CHECK(file.motifs[i].edges == builtin.motifs[i].edges);
      CHECK(file.motifs[i].directed == builtin.motifs[i].directed);
    }
  }
}

TEST_CASE("catalog with a label gap is rejected") {
  const std::string text = "motif 1 directed\nedge 0 2\nedge 2 0\nedge 0 2\n";
  CHECK_THROWS_WITH_AS(parse_catalog(text, "inline"), doctest::Contains("label gap"), DataError);
}

TEST_CASE("disconnected motif is rejected") {
  const std::string text =
      "motif 1 directed\nedge 0 1\nedge 2 3\nedge 0 1\n";
  CHECK_THROWS_WITH_AS(parse_catalog(text, "inline"), doctest::Contains("disconnected"),
                       DataError);
}

TEST_CASE("network class mismatch is rejected") {
  const TemporalGraph g = example_graph_g1();
  MotifCatalog cat = builtin_catalog("bipartite_default");
  cat.delta = 10.0;
  CHECK_THROWS_WITH_AS(build_edge_features(g, cat), doctest::Contains("network class"),
                       DataError);
}

TEST_CASE("example graph holds exactly two triangle instances") {
  const TemporalGraph g = example_graph_g1();
  const auto instances = enumerate_instances(g, triangle_motif(), 2.5);
  REQUIRE(instances.size() == 2);
  CHECK(instances[0] == std::vector<int64_t>{0, 1, 2});
  CHECK(instances[1] == std::vector<int64_t>{4, 5, 6});
  // Same answer from the brute-force oracle.
  CHECK(brute_force_instances(g, triangle_motif(), 2.5) == instances);
}

TEST_CASE("single-edge graph yields no 3-edge instances") {
  const TemporalGraph g = graph_from_triples({{0, 1, 1.0}});
  CHECK(enumerate_instances(g, triangle_motif(), 100.0).empty());
}

TEST_CASE("first edge of the 3-cycle example gets feature [1,0,0]") {
  const TemporalGraph g = graph_from_triples({{1, 2, 2.0}, {2, 3, 5.0}, {3, 1, 7.0}});
  MotifCatalog cat;
  cat.name = "triangle_only";
  cat.motifs = {triangle_motif()};
  cat.delta = 10.0;
  cat.network_class = GraphKind::DirectedHomogeneous;
  const EdgeMotifFeatures feats = build_edge_features(g, cat);
  REQUIRE(feats.width() == 3);
  CHECK(feats.counts()(0, 0) == 1.0);
  CHECK(feats.counts()(0, 1) == 0.0);
  CHECK(feats.counts()(0, 2) == 0.0);
  // The other two edges occupy positions 2 and 3 of the same instance.
  CHECK(feats.counts()(1, 1) == 1.0);
  CHECK(feats.counts()(2, 2) == 1.0);
}

TEST_CASE("engine matches the brute-force oracle on random graphs") {
  for (const auto kind : {GraphKind::DirectedHomogeneous, GraphKind::UndirectedBipartite}) {
    const MotifCatalog cat = builtin_catalog(
        kind == GraphKind::DirectedHomogeneous ? "directed_default" : "bipartite_default");
    for (uint64_t seed = 1; seed <= 8; ++seed) {
      Rng rng(seed);
      const TemporalGraph g = random_graph(8, 25, 30, kind, rng);
      for (const MotifSpec& m : cat.motifs) {
        for (const double delta : {5.0, 12.0, 1e9}) {
          auto got = enumerate_instances(g, m, delta);
          auto expect = brute_force_instances(g, m, delta);
          std::sort(got.begin(), got.end());
          std::sort(expect.begin(), expect.end());
          REQUIRE_MESSAGE(got == expect, "kind=", static_cast<int>(kind), " seed=", seed,
                          " motif=", m.motif_id, " delta=", delta);
        }
      }
    }
  }
}

TEST_CASE("instance sets are nested as delta grows") {
  Rng rng(77);
  const TemporalGraph g = random_graph(7, 22, 40, GraphKind::DirectedHomogeneous, rng);
  for (const MotifSpec& m : builtin_catalog("directed_default").motifs) {
    const auto small = enumerate_instances(g, m, 6.0);
    const auto big = enumerate_instances(g, m, 18.0);
    const std::set<std::vector<int64_t>> big_set(big.begin(), big.end());
    for (const auto& inst : small) CHECK(big_set.count(inst) == 1);
  }
}

TEST_CASE("instances map distinct abstract nodes to distinct graph nodes") {
  Rng rng(91);
  const TemporalGraph g = random_graph(6, 24, 25, GraphKind::DirectedHomogeneous, rng);
  for (const MotifSpec& m : builtin_catalog("directed_default").motifs) {
    for (const auto& inst : enumerate_instances(g, m, 12.0)) {
      std::set<int32_t> nodes;
      for (int64_t id : inst) {
        nodes.insert(g.edge(id).src);
        nodes.insert(g.edge(id).dst);
      }
      CHECK(static_cast<int>(nodes.size()) == m.num_labels);
    }
  }
}

TEST_CASE("column sums equal the total instance count at every position") {
  Rng rng(13);
  const TemporalGraph g = random_graph(8, 28, 30, GraphKind::DirectedHomogeneous, rng);
  MotifCatalog cat = builtin_catalog("directed_default");
  cat.delta = 9.0;
  const EdgeMotifFeatures feats = build_edge_features(g, cat);
  for (std::size_t mi = 0; mi < cat.motifs.size(); ++mi) {
    const auto total =
        static_cast<double>(enumerate_instances(g, cat.motifs[mi], cat.delta).size());
    const int base = cat.column_offset(static_cast<int>(mi));
    for (int p = 0; p < cat.motifs[mi].length(); ++p)
      CHECK(feats.counts().col(base + p).sum() == total);
  }
}

TEST_CASE("counting is independent of the thread count") {
  Rng rng(17);
  const TemporalGraph g = random_graph(9, 40, 50, GraphKind::DirectedHomogeneous, rng);
  MotifCatalog cat = builtin_catalog("directed_default");
  cat.delta = 15.0;
  const EdgeMotifFeatures one = build_edge_features(g, cat, false, 1);
  const EdgeMotifFeatures four = build_edge_features(g, cat, false, 4);
  CHECK((one.counts().array() == four.counts().array()).all());
}

TEST_CASE("causal counting keeps only contributions visible at the edge's time") {
  Rng rng(23);
  const TemporalGraph g = random_graph(7, 26, 30, GraphKind::DirectedHomogeneous, rng);
  MotifCatalog cat = builtin_catalog("directed_default");
  cat.delta = 10.0;
  const EdgeMotifFeatures causal = build_edge_features(g, cat, true);

  Eigen::MatrixXd expect = Eigen::MatrixXd::Zero(g.num_edges(), cat.feature_width());
  for (std::size_t mi = 0; mi < cat.motifs.size(); ++mi) {
    const int base = cat.column_offset(static_cast<int>(mi));
    for (const auto& inst : enumerate_instances(g, cat.motifs[mi], cat.delta)) {
      const double t_last = g.edge(inst.back()).timestamp;
      for (std::size_t p = 0; p < inst.size(); ++p)
        if (t_last <= g.edge(inst[p]).timestamp)
          expect(inst[p], base + static_cast<int>(p)) += 1.0;
    }
  }
  CHECK((causal.counts().array() == expect.array()).all());
}

TEST_CASE("feature table round-trips through the binary container") {
  Rng rng(29);
  const TemporalGraph g = random_graph(6, 15, 20, GraphKind::DirectedHomogeneous, rng);
  MotifCatalog cat = builtin_catalog("directed_default");
  cat.delta = 8.0;
  const EdgeMotifFeatures feats = build_edge_features(g, cat);
  const std::string path = "feats_roundtrip.tfeat";
  feats.save(path);
  const EdgeMotifFeatures back = EdgeMotifFeatures::load(path);
  CHECK(back.delta() == feats.delta());
  CHECK(back.causal() == feats.causal());
  CHECK((back.counts().array() == feats.counts().array()).all());
  std::remove(path.c_str());
}
