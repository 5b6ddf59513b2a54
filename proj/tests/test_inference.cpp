#include <gtest/gtest.h>

#include <limits>
#include <numeric>

#include "test_util.hpp"

using namespace cliqueseg;
using testutil::seg;

namespace {

LatticeEnergies random_lattice_energies(const Lattice& lat, std::mt19937_64& rng) {
  LatticeEnergies le;
  le.succ.resize(lat.size());
  for (std::size_t u = 0; u < lat.size(); ++u)
    for (std::size_t k = 0; k < lat.succ[u].size(); ++k) le.succ[u].push_back(uniform_real(rng, -1.0, 2.0));
  return le;
}

double path_energy(const Lattice& lat, const LatticeEnergies& le, const Prediction& p) {
  double s = 0;
  for (auto [u, v] : p.edges) {
    const auto it = std::find(lat.succ[u].begin(), lat.succ[u].end(), v);
    s += le.succ[u][static_cast<std::size_t>(it - lat.succ[u].begin())];
  }
  return s;
}

/// Every start-to-end path energy, by exhaustive enumeration.
std::vector<double> all_path_energies(const Lattice& lat, const LatticeEnergies& le) {
  std::vector<double> out;
  auto dfs = [&](auto&& self, std::size_t u, double acc) -> void {
    if (u == lat.end()) {
      out.push_back(acc);
      return;
    }
    for (std::size_t k = 0; k < lat.succ[u].size(); ++k) self(self, lat.succ[u][k], acc + le.succ[u][k]);
  };
  dfs(dfs, lat.start(), 0.0);
  std::sort(out.begin(), out.end());
  return out;
}

bool is_spanning_tree(const Prediction& p) {
  if (p.edges.size() + 1 != p.nodes.size()) return false;
  std::map<std::size_t, std::size_t> parent;
  for (auto u : p.nodes) parent[u] = u;
  auto find = [&](std::size_t x) {
    while (parent[x] != x) x = parent[x];
    return x;
  };
  for (auto [a, b] : p.edges) {
    if (!parent.count(a) || !parent.count(b)) return false;
    const auto ra = find(a), rb = find(b);
    if (ra == rb) return false;
    parent[ra] = rb;
  }
  return true;
}

}  // namespace

TEST(GreedyClique, ForcedCompletion) {
  // Choosing "a" forces "b" regardless of energies.
  const auto g = build_graph(testutil::ab_space());
  auto E = EdgeEnergies::zeros(g.size());
  std::size_t a = 0, b = 0, ab = 0;
  for (std::size_t u = 0; u < g.size(); ++u) {
    if (g.nodes[u].surface == "a") a = u;
    if (g.nodes[u].surface == "b") b = u;
    if (g.nodes[u].surface == "ab") ab = u;
  }
  E.at(a, b) = 100;
  E.at(b, a) = 100;
  const auto from_a = greedy_clique_from_seed(g, E, a);
  EXPECT_EQ(from_a.nodes, (std::vector<std::size_t>{std::min(a, b), std::max(a, b)}));
  EXPECT_DOUBLE_EQ(from_a.energy, 200.0);
  const auto best = greedy_inference(g, E);
  EXPECT_EQ(best.best.nodes, std::vector<std::size_t>{ab});
  EXPECT_DOUBLE_EQ(best.best.energy, 0.0);
  EXPECT_EQ(best.samples.size(), 2u);
}

TEST(GreedyClique, PrefersLowerEnergyReading) {
  const auto g = build_graph(testutil::ab_space());
  auto E = EdgeEnergies::zeros(g.size());
  for (std::size_t u = 0; u < g.size(); ++u)
    for (std::size_t v = 0; v < g.size(); ++v)
      if (g.has_edge(u, v)) E.at(u, v) = -1.0;
  const auto r = greedy_inference(g, E);
  EXPECT_EQ(r.best.nodes.size(), 2u);
  EXPECT_DOUBLE_EQ(r.best.energy, -2.0);
}

TEST(GreedyClique, OutputsAreMaximalAndBoundedByExact) {
  std::mt19937_64 rng(31);
  for (const auto& cs : testutil::random_spaces(150, 8)) {
    const auto g = build_graph(cs);
    const auto E = testutil::random_energies(g, rng);
    const auto r = greedy_inference(g, E);
    for (const auto& p : r.samples) {
      ASSERT_TRUE(g.is_maximal_clique(p.nodes)) << cs.id;
      ASSERT_NEAR(p.energy, clique_energy(g, E, p.nodes), 1e-12);
    }
    // Every node seeds its own run, so the samples cover every node.
    std::set<std::size_t> covered;
    for (const auto& p : r.samples) covered.insert(p.nodes.begin(), p.nodes.end());
    EXPECT_EQ(covered.size(), g.size());
    double exact = std::numeric_limits<double>::infinity();
    for (const auto& c : exact_maximal_cliques(g, 64)) exact = std::min(exact, clique_energy(g, E, c));
    EXPECT_GE(r.best.energy, exact - 1e-12);
    EXPECT_EQ(greedy_inference(g, E, 3).best.nodes, r.best.nodes);
  }
}

TEST(ExactCliques, SmallGraphs) {
  // Triangle: three pairwise-compatible segments.
  CandidateSpace tri;
  tri.id = "tri";
  tri.input = "abc";
  tri.segments = {seg("a", 0, 1), seg("b", 1, 2), seg("c", 2, 3)};
  auto g = build_graph(tri);
  EXPECT_EQ(exact_maximal_cliques(g), (std::vector<std::vector<std::size_t>>{{0, 1, 2}}));
  // Compatibility path a - b - c: a and c read the same span differently.
  CandidateSpace path;
  path.id = "path";
  path.input = "abcd";
  path.segments = {seg("a", 0, 2, "a", "x"), seg("b", 2, 4), seg("a", 0, 2, "a", "y")};
  g = build_graph(path);
  ASSERT_EQ(g.size(), 3u);
  std::size_t b = 0;
  while (g.nodes[b].surface != "b") ++b;
  std::set<std::vector<std::size_t>> expected;
  for (std::size_t u = 0; u < 3; ++u)
    if (u != b) expected.insert({std::min(u, b), std::max(u, b)});
  EXPECT_EQ(testutil::as_set(exact_maximal_cliques(g)), expected);
}

TEST(ExactCliques, EqualExhaustiveSegmentations) {
  GraphConfig wide;
  wide.enumeration_limit = 200;
  for (const auto& cs : testutil::random_spaces(200, 41)) {
    const auto g = build_graph(cs);
    ASSERT_EQ(testutil::as_set(exact_maximal_cliques(g, 64)),
              testutil::to_node_sets(g, enumerate_exhaustive_segmentations(cs, wide)))
        << cs.id;
  }
}

TEST(ExactCliques, LimitIsEnforced) {
  CandidateSpace cs;
  cs.id = "long";
  cs.input.assign(30, 'x');
  for (std::size_t i = 0; i < 30; ++i) cs.segments.push_back(seg("c" + std::to_string(i), i, i + 1));
  EXPECT_THROW(exact_maximal_cliques(build_graph(cs)), Error);
}

TEST(SteinerTree, ProducesSpanningTreesOverSegmentations) {
  std::mt19937_64 rng(12);
  for (const auto& cs : testutil::random_spaces(150, 19)) {
    const auto g = build_graph(cs);
    const auto E = testutil::random_energies(g, rng);
    const auto r = steiner_tree_inference(g, E);
    for (const auto& p : r.samples) {
      ASSERT_EQ(p.kind, PredictionKind::Tree);
      ASSERT_TRUE(g.is_maximal_clique(p.nodes)) << cs.id;
      ASSERT_TRUE(is_spanning_tree(p)) << cs.id;
      double s = 0;
      for (auto [u, v] : p.edges) {
        ASSERT_TRUE(g.has_edge(u, v));
        ASSERT_LE(E(u, v), E(v, u));  // the cheaper direction carries the energy
        s += E(u, v);
      }
      ASSERT_NEAR(p.energy, s, 1e-12);
    }
  }
}

TEST(SteinerTree, NeverAboveCliqueEnergyForNonNegativeEnergies) {
  std::mt19937_64 rng(15);
  for (const auto& cs : testutil::random_spaces(100, 20)) {
    const auto g = build_graph(cs);
    const auto E = testutil::random_energies(g, rng, 0.0, 2.0);
    for (const auto& p : steiner_tree_inference(g, E).samples)
      ASSERT_LE(p.energy, clique_energy(g, E, p.nodes) + 1e-12);
  }
}

TEST(SteinerTree, ForcedSegmentation) {
  CandidateSpace cs;
  cs.id = "one";
  cs.input = "abc";
  cs.segments = {seg("a", 0, 1), seg("b", 1, 2), seg("c", 2, 3)};
  const auto g = build_graph(cs);
  std::mt19937_64 rng(2);
  const auto E = testutil::random_energies(g, rng);
  EXPECT_EQ(steiner_tree_inference(g, E).best.nodes, (std::vector<std::size_t>{0, 1, 2}));
  EXPECT_EQ(greedy_inference(g, E).best.nodes, (std::vector<std::size_t>{0, 1, 2}));
  const auto lat = to_lattice(g);
  LatticeEnergies le;
  le.succ.resize(lat.size());
  for (std::size_t u = 0; u < lat.size(); ++u)
    for (std::size_t k = 0; k < lat.succ[u].size(); ++k) le.succ[u].push_back(0.25 * (u + 1));
  const auto p = lattice_decode(lat, le);
  EXPECT_EQ(p.nodes, (std::vector<std::size_t>{0, 1, 2}));
  EXPECT_NEAR(p.energy, path_energy(lat, le, p), 1e-12);
}

TEST(SteinerTree, TwoNodeHandCase) {
  const auto g = build_graph(testutil::ab_space());
  auto E = EdgeEnergies::zeros(g.size());
  std::size_t a = 0, b = 0;
  for (std::size_t u = 0; u < g.size(); ++u) {
    if (g.nodes[u].surface == "a") a = u;
    if (g.nodes[u].surface == "b") b = u;
  }
  E.at(a, b) = 3.0;
  E.at(b, a) = 1.0;
  const auto p = steiner_tree_from_seed(g, E, a);
  ASSERT_EQ(p.edges.size(), 1u);
  EXPECT_EQ(p.edges[0], std::make_pair(b, a));
  EXPECT_DOUBLE_EQ(p.energy, 1.0);
}

TEST(LatticeDecode, BeamOfOneEqualsDynamicProgramme) {
  std::mt19937_64 rng(3);
  for (const auto& cs : testutil::random_spaces(150, 29)) {
    const auto lat = to_lattice(build_graph(cs));
    const auto le = random_lattice_energies(lat, rng);
    const auto dp = lattice_decode(lat, le);
    const auto b1 = lattice_beam(lat, le, 1);
    ASSERT_EQ(b1.size(), 1u);
    EXPECT_EQ(b1[0].nodes, dp.nodes);
    EXPECT_NEAR(b1[0].energy, dp.energy, 1e-12);
    const auto all = all_path_energies(lat, le);
    EXPECT_NEAR(dp.energy, all.front(), 1e-12);
    EXPECT_NEAR(path_energy(lat, le, dp), dp.energy, 1e-12);
  }
}

TEST(LatticeDecode, BeamIsBestFirstAndExactOnSmallLattices) {
  std::mt19937_64 rng(4);
  for (const auto& cs : testutil::random_spaces(100, 30)) {
    const auto lat = to_lattice(build_graph(cs));
    const auto le = random_lattice_energies(lat, rng);
    const auto all = all_path_energies(lat, le);
    const std::size_t B = 5;
    const auto beam = lattice_beam(lat, le, B);
    ASSERT_EQ(beam.size(), std::min(B, all.size()));
    std::set<std::vector<std::size_t>> distinct;
    for (std::size_t i = 0; i < beam.size(); ++i) {
      if (i) { ASSERT_LE(beam[i - 1].energy, beam[i].energy); }
      ASSERT_NEAR(beam[i].energy, all[i], 1e-9);  // per-node k-best is exact for the global k-best
      ASSERT_NEAR(path_energy(lat, le, beam[i]), beam[i].energy, 1e-9);
      distinct.insert(beam[i].nodes);
    }
    EXPECT_EQ(distinct.size(), beam.size());
  }
}

TEST(LatticeDecode, ChecksArguments) {
  const auto lat = to_lattice(build_graph(testutil::ab_space()));
  std::mt19937_64 rng(1);
  const auto le = random_lattice_energies(lat, rng);
  EXPECT_THROW(lattice_beam(lat, le, 0), Error);
  EXPECT_EQ(lattice_beam(lat, le, 3).size(), 2u);
  Lattice broken = lat;
  broken.succ[0].clear();
  LatticeEnergies ble = le;
  ble.succ[0].clear();
  EXPECT_THROW(lattice_decode(broken, ble), Error);
}

TEST(Inference, Deterministic) {
  std::mt19937_64 rng(8);
  for (const auto& cs : testutil::random_spaces(30, 50)) {
    const auto g = build_graph(cs);
    const auto E = testutil::random_energies(g, rng);
    EXPECT_EQ(greedy_inference(g, E, 1).best.nodes, greedy_inference(g, E, 2).best.nodes);
    EXPECT_EQ(steiner_tree_inference(g, E, 1).best.nodes, steiner_tree_inference(g, E, 2).best.nodes);
  }
}
