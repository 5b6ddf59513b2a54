#include <gtest/gtest.h>

#include <set>

#include "test_util.hpp"

using namespace cliqueseg;
using testutil::seg;

namespace {

GraphConfig wide_limit() {
  GraphConfig c;
  c.enumeration_limit = 200;
  return c;
}

/// All start-to-end paths of a lattice, as sorted graph node ids.
std::set<std::vector<std::size_t>> lattice_paths(const Lattice& lat) {
  std::set<std::vector<std::size_t>> out;
  std::vector<std::size_t> path;
  auto dfs = [&](auto&& self, std::size_t u) -> void {
    if (u == lat.end()) {
      auto p = path;
      std::sort(p.begin(), p.end());
      out.insert(p);
      return;
    }
    for (auto v : lat.succ[u]) {
      if (v != lat.end()) path.push_back(v - 1);
      self(self, v);
      if (v != lat.end()) path.pop_back();
    }
  };
  dfs(dfs, lat.start());
  return out;
}

}  // namespace

TEST(Conflicts, OverlapTolerance) {
  EXPECT_TRUE(conflicts(seg("a", 0, 3), seg("b", 0, 3)));   // same span
  EXPECT_FALSE(conflicts(seg("a", 0, 3), seg("b", 2, 5)));  // one shared character
  EXPECT_TRUE(conflicts(seg("a", 0, 3), seg("b", 1, 5)));
  EXPECT_FALSE(conflicts(seg("a", 0, 3), seg("b", 3, 5)));
  EXPECT_FALSE(conflicts(seg("a", 0, 3), seg("b", 5, 7)));
  EXPECT_TRUE(conflicts(seg("a", 0, 3), seg("b", 2, 5), 0));
  EXPECT_TRUE(conflicts(seg("a", 0, 6), seg("b", 2, 4)));  // containment
}

TEST(ChainStep, BoundsOnGapAndOverlap) {
  EXPECT_TRUE(chain_step(seg("a", 0, 3), seg("b", 3, 5), 1, 1));
  EXPECT_TRUE(chain_step(seg("a", 0, 3), seg("b", 2, 5), 1, 1));
  EXPECT_TRUE(chain_step(seg("a", 0, 3), seg("b", 4, 5), 1, 1));
  EXPECT_FALSE(chain_step(seg("a", 0, 3), seg("b", 5, 6), 1, 1));
  EXPECT_FALSE(chain_step(seg("a", 0, 3), seg("b", 1, 5), 1, 1));
  EXPECT_FALSE(chain_step(seg("b", 3, 5), seg("a", 0, 3), 1, 1));
  EXPECT_FALSE(chain_step(seg("a", 0, 3), seg("b", 4, 5), 1, 0));
  EXPECT_EQ(span_gap(seg("a", 0, 3), seg("b", 7, 9)), 4u);
  EXPECT_EQ(span_gap(seg("b", 7, 9), seg("a", 0, 3)), 4u);
  EXPECT_EQ(span_gap(seg("a", 0, 3), seg("b", 2, 9)), 0u);
}

TEST(BuildGraph, OneWordOrTwo) {
  const auto g = build_graph(testutil::ab_space());
  ASSERT_EQ(g.size(), 3u);
  EXPECT_EQ(g.edge_count(), 1u);
  const auto segs = enumerate_exhaustive_segmentations(testutil::ab_space());
  EXPECT_EQ(segs.size(), 2u);
  std::size_t maximal = 0;
  for (std::size_t mask = 1; mask < 8; ++mask) {
    std::vector<std::size_t> ids;
    for (std::size_t i = 0; i < 3; ++i)
      if (mask >> i & 1) ids.push_back(i);
    maximal += g.is_maximal_clique(ids);
  }
  EXPECT_EQ(maximal, 2u);
  const auto exact = exact_maximal_cliques(g, 100);
  EXPECT_EQ(testutil::to_node_sets(g, segs), testutil::as_set(exact));
}

TEST(BuildGraph, AdjacencyMatchesPairCooccurrence) {
  const auto spaces = testutil::random_spaces(200, 17);
  for (const auto& cs : spaces) {
    const auto g = build_graph(cs);
    const auto segs = enumerate_exhaustive_segmentations(cs, wide_limit());
    ASSERT_FALSE(segs.empty());
    const auto node_sets = testutil::to_node_sets(g, segs);
    std::set<std::pair<std::size_t, std::size_t>> together;
    std::set<std::size_t> used;
    for (const auto& s : node_sets) {
      for (auto u : s) used.insert(u);
      for (auto u : s)
        for (auto v : s)
          if (u < v) together.insert({u, v});
    }
    EXPECT_EQ(used.size(), g.size()) << cs.id;  // every kept node lies on some segmentation
    for (std::size_t u = 0; u < g.size(); ++u)
      for (std::size_t v = u + 1; v < g.size(); ++v) {
        ASSERT_EQ(g.compatible(u, v), together.count({u, v}) > 0) << cs.id << " " << u << "," << v;
        ASSERT_EQ(g.compatible(u, v), g.compatible(v, u));
        ASSERT_EQ(g.has_edge(u, v), g.compatible(u, v));
      }
    for (std::size_t u = 0; u < g.size(); ++u) EXPECT_FALSE(g.compatible(u, u));
    for (const auto& s : node_sets) EXPECT_TRUE(g.is_maximal_clique(s));
  }
}

TEST(BuildGraph, ForcedSegmentIsInEverySegmentation) {
  CandidateSpace cs;
  cs.id = "forced";
  cs.input = "aaaMbbb";
  cs.segments = {seg("a", 0, 3), seg("a1", 0, 1), seg("a2", 1, 3), seg("M", 3, 4),
                 seg("b", 4, 7), seg("b1", 4, 6), seg("b2", 6, 7)};
  const auto segs = enumerate_exhaustive_segmentations(cs, GraphConfig{0, 0, 25});
  EXPECT_EQ(segs.size(), 4u);
  for (const auto& s : segs) EXPECT_TRUE(std::count(s.begin(), s.end(), 3u));
  const auto g = build_graph(cs, GraphConfig{0, 0, 25});
  std::size_t m = 0;
  while (g.nodes[m].surface != "M") ++m;
  for (std::size_t u = 0; u < g.size(); ++u)
    if (u != m) { EXPECT_TRUE(g.compatible(u, m)); }
}

TEST(BuildGraph, DropsNodesOffEveryChain) {
  CandidateSpace cs = testutil::ab_space();
  cs.input = "abcdefghij";
  cs.segments.push_back(seg("cd", 4, 10));
  cs.segments.push_back(seg("zz", 7, 8));  // no chain reaches it from the start
  const auto g = build_graph(cs);
  EXPECT_EQ(g.size(), 4u);
  for (const auto& n : g.nodes) EXPECT_NE(n.surface, "zz");
}

TEST(BuildGraph, UncoverableInputIsAnError) {
  CandidateSpace cs;
  cs.id = "hole";
  cs.input = "abcdefgh";
  cs.segments = {seg("ab", 0, 2), seg("gh", 6, 8)};
  try {
    build_graph(cs);
    FAIL() << "expected an error";
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::Data);
    EXPECT_NE(std::string(e.what()).find("uncoverable"), std::string::npos);
  }
  EXPECT_THROW(build_graph(CandidateSpace{"empty", "ab", {}, std::nullopt}), Error);
}

TEST(BuildGraph, EnumerationLimit) {
  CandidateSpace cs;
  cs.id = "long";
  cs.input.assign(30, 'x');
  for (std::size_t i = 0; i < 30; ++i) cs.segments.push_back(seg("c" + std::to_string(i), i, i + 1));
  EXPECT_THROW(enumerate_exhaustive_segmentations(cs), Error);
  EXPECT_EQ(enumerate_exhaustive_segmentations(cs, wide_limit()).size(), 1u);
}

TEST(BuildGraph, DuplicateAnalysesCollapse) {
  CandidateSpace cs = testutil::ab_space();
  cs.segments.push_back(seg("a", 0, 2));       // exact duplicate
  cs.segments.push_back(seg("a", 0, 2, "a", "d"));  // same span, other class
  const auto g = build_graph(cs);
  EXPECT_EQ(g.size(), 4u);
}

TEST(BuildGraph, GoldValidity) {
  auto cs = testutil::ab_space();
  cs.gold = std::vector<std::size_t>{1, 2};
  auto g = build_graph(cs);
  EXPECT_TRUE(g.gold_valid);
  EXPECT_EQ(g.to_source(g.gold), (std::vector<std::size_t>{1, 2}));
  cs.gold = std::vector<std::size_t>{1};  // not maximal
  EXPECT_FALSE(build_graph(cs).gold_valid);
  cs.gold = std::vector<std::size_t>{0, 1};  // conflicting
  EXPECT_FALSE(build_graph(cs).gold_valid);
  cs.gold = std::vector<std::size_t>{9};
  EXPECT_THROW(build_graph(cs), Error);
}

TEST(PruneEdges, NoLimitIsIdentity) {
  for (const auto& cs : testutil::random_spaces(30, 4)) {
    const auto g = build_graph(cs);
    const auto p = prune_edges(g, std::nullopt);
    for (std::size_t u = 0; u < g.size(); ++u)
      for (std::size_t v = 0; v < g.size(); ++v) ASSERT_EQ(p.has_edge(u, v), g.has_edge(u, v));
  }
}

TEST(PruneEdges, NestedAndCompatibilityPreserved) {
  for (const auto& cs : testutil::random_spaces(60, 5)) {
    const auto g = build_graph(cs);
    std::optional<SentenceGraph> prev;
    for (std::size_t k : {20u, 15u, 10u, 5u, 1u, 0u}) {
      const auto p = prune_edges(g, k);
      for (std::size_t u = 0; u < g.size(); ++u)
        for (std::size_t v = 0; v < g.size(); ++v) {
          ASSERT_EQ(p.compatible(u, v), g.compatible(u, v));
          if (p.has_edge(u, v)) { ASSERT_TRUE(g.has_edge(u, v)); }
          if (prev && p.has_edge(u, v)) { ASSERT_TRUE(prev->has_edge(u, v)); }  // smaller k keeps a subset
          if (g.has_edge(u, v) && span_gap(g.nodes[u], g.nodes[v]) == 0) { ASSERT_TRUE(p.has_edge(u, v)); }
          if (p.has_edge(u, v)) { ASSERT_LE(span_gap(g.nodes[u], g.nodes[v]), k); }
        }
      prev = p;
    }
  }
}

TEST(Lattice, PathsAreExactlyTheSegmentations) {
  for (const auto& cs : testutil::random_spaces(200, 23)) {
    const auto g = build_graph(cs);
    const auto lat = to_lattice(g);
    ASSERT_EQ(lat.size(), g.size() + 2);
    EXPECT_EQ(lat.nodes.front().surface, kStartMarker);
    EXPECT_EQ(lat.nodes.back().surface, kEndMarker);
    const auto expected = testutil::to_node_sets(g, enumerate_exhaustive_segmentations(cs, wide_limit()));
    ASSERT_EQ(lattice_paths(lat), expected) << cs.id;
    for (std::size_t u = 1; u + 1 < lat.size(); ++u)
      for (auto v : lat.succ[u])
        if (v != lat.end()) { ASSERT_TRUE(g.has_edge(u - 1, v - 1)); }
  }
}

TEST(Lattice, GoldPath) {
  auto cs = testutil::ab_space();
  cs.gold = std::vector<std::size_t>{1, 2};
  const auto g = build_graph(cs);
  const auto lat = to_lattice(g);
  ASSERT_EQ(lat.gold_path.size(), 4u);
  EXPECT_EQ(lat.gold_path.front(), lat.start());
  EXPECT_EQ(lat.gold_path.back(), lat.end());
  EXPECT_EQ(lat.nodes[lat.gold_path[1]].surface, "a");
  EXPECT_EQ(lat.nodes[lat.gold_path[2]].surface, "b");
}

TEST(Lattice, AllowsGapOfOne) {
  CandidateSpace cs;
  cs.id = "gap";
  cs.input = "ab_cd";
  cs.segments = {seg("ab", 0, 2), seg("cd", 3, 5)};
  const auto lat = to_lattice(build_graph(cs));
  EXPECT_TRUE(lat.has_edge(1, 2));
  GraphConfig tight;
  tight.allow_gap = 0;
  EXPECT_THROW(build_graph(cs, tight), Error);
}
