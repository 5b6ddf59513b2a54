#pragma once

// Sentence graph construction over a candidate space, exhaustive-segmentation
// enumeration (test oracle), edge pruning and lattice conversion.
//
// A chain is a sequence of segments a -> b with strictly increasing start and
// end and b.start - a.end in [-allow_overlap, allow_gap]. An exhaustive
// segmentation is an inclusion-maximal chain running from offset 0 to the end
// of the input. Two segments are compatible iff some exhaustive segmentation
// contains both; the maximal cliques of the compatibility relation are then
// exactly the exhaustive segmentations.

#include <algorithm>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <tuple>
#include <vector>

#include "cliqueseg/core.hpp"

namespace cliqueseg {

struct CandidateSpace {
  std::string id;
  std::string input;
  std::vector<Segment> segments;
  std::optional<std::vector<std::size_t>> gold;  // indices into segments
};

struct GraphConfig {
  std::size_t allow_overlap = 1;
  std::size_t allow_gap = 1;
  std::size_t enumeration_limit = 25;
};

/// Spans overlapping by more than `allow_overlap` characters, or identical
/// spans, cannot appear in the same segmentation.
inline bool conflicts(const Segment& u, const Segment& v, std::size_t allow_overlap = 1) {
  if (u.start == v.start && u.end == v.end) return true;
  const std::size_t lo = std::max(u.start, v.start);
  const std::size_t hi = std::min(u.end, v.end);
  return hi > lo && hi - lo > allow_overlap;
}

/// Whether `b` may directly follow `a` in a chain.
inline bool chain_step(const Segment& a, const Segment& b, std::size_t allow_overlap, std::size_t allow_gap) {
  if (b.start <= a.start || b.end <= a.end) return false;
  const auto diff = static_cast<long long>(b.start) - static_cast<long long>(a.end);
  return diff >= -static_cast<long long>(allow_overlap) && diff <= static_cast<long long>(allow_gap);
}

/// Characters between two spans; 0 when they touch or overlap.
inline std::size_t span_gap(const Segment& u, const Segment& v) {
  const std::size_t lo = std::min(u.end, v.end);
  const std::size_t hi = std::max(u.start, v.start);
  return hi > lo ? hi - lo : 0;
}

namespace detail {

class Bitset {
 public:
  explicit Bitset(std::size_t n = 0) : words_((n + 63) / 64, 0) {}
  void set(std::size_t i) { words_[i >> 6] |= (std::uint64_t{1} << (i & 63)); }
  bool test(std::size_t i) const { return (words_[i >> 6] >> (i & 63)) & 1u; }
  Bitset& operator|=(const Bitset& o) {
    for (std::size_t w = 0; w < words_.size(); ++w) words_[w] |= o.words_[w];
    return *this;
  }

 private:
  std::vector<std::uint64_t> words_;
};

}  // namespace detail

/// Validates spans and drops repeated (lemma, class, span) analyses. Returns
/// indices of the surviving segments sorted by (start, end, surface, lemma, class).
inline std::vector<std::size_t> unique_segments(const CandidateSpace& cs) {
  std::map<std::tuple<std::string, std::string, std::size_t, std::size_t>, std::size_t> seen;
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < cs.segments.size(); ++i) {
    const auto& s = cs.segments[i];
    if (s.start >= s.end || s.end > cs.input.size())
      throw data_error("sentence '" + cs.id + "': segment " + std::to_string(i) + " has invalid span [" +
                       std::to_string(s.start) + "," + std::to_string(s.end) + ")");
    if (seen.try_emplace({s.lemma, s.morph_class, s.start, s.end}, i).second) out.push_back(i);
  }
  std::sort(out.begin(), out.end(), [&](std::size_t a, std::size_t b) {
    const auto& x = cs.segments[a];
    const auto& y = cs.segments[b];
    return std::tie(x.start, x.end, x.surface, x.lemma, x.morph_class) <
           std::tie(y.start, y.end, y.surface, y.lemma, y.morph_class);
  });
  return out;
}

class SentenceGraph {
 public:
  std::string id;
  std::size_t input_length = 0;
  GraphConfig config;
  std::vector<Segment> nodes;
  std::vector<std::size_t> source_index;  // node -> index into CandidateSpace::segments
  std::vector<std::size_t> gold;          // node ids, sorted; empty when absent
  bool gold_valid = false;

  std::size_t size() const noexcept { return nodes.size(); }
  bool compatible(std::size_t u, std::size_t v) const { return compat_[u * nodes.size() + v] != 0; }
  /// Whether the pair carries directed edges in both directions (pruning
  /// removes edges but never changes compatibility).
  bool has_edge(std::size_t u, std::size_t v) const { return edge_[u * nodes.size() + v] != 0; }

  std::size_t edge_count() const {
    std::size_t c = 0;
    for (std::size_t u = 0; u < size(); ++u)
      for (std::size_t v = u + 1; v < size(); ++v) c += has_edge(u, v);
    return c;
  }

  bool is_clique(const std::vector<std::size_t>& ids) const {
    for (std::size_t i = 0; i < ids.size(); ++i)
      for (std::size_t j = i + 1; j < ids.size(); ++j)
        if (!compatible(ids[i], ids[j])) return false;
    return true;
  }

  /// Clique that no further node can join.
  bool is_maximal_clique(const std::vector<std::size_t>& ids) const {
    if (!is_clique(ids)) return false;
    for (std::size_t x = 0; x < size(); ++x) {
      if (std::find(ids.begin(), ids.end(), x) != ids.end()) continue;
      if (std::all_of(ids.begin(), ids.end(), [&](std::size_t y) { return compatible(x, y); })) return false;
    }
    return true;
  }

  std::vector<std::size_t> to_source(const std::vector<std::size_t>& ids) const {
    std::vector<std::size_t> out;
    out.reserve(ids.size());
    for (auto i : ids) out.push_back(source_index[i]);
    std::sort(out.begin(), out.end());
    return out;
  }

  void set_edge(std::size_t u, std::size_t v, bool on) {
    edge_[u * size() + v] = on;
    edge_[v * size() + u] = on;
  }

 private:
  friend SentenceGraph build_graph(const CandidateSpace&, const GraphConfig&);
  std::vector<std::uint8_t> compat_;
  std::vector<std::uint8_t> edge_;
};

inline SentenceGraph build_graph(const CandidateSpace& cs, const GraphConfig& cfg = {}) {
  if (cs.segments.empty()) throw data_error("sentence '" + cs.id + "' has no candidate segments");
  const auto order = unique_segments(cs);
  const std::size_t m = order.size();
  const std::size_t n = cs.input.size();
  auto seg = [&](std::size_t i) -> const Segment& { return cs.segments[order[i]]; };
  auto step = [&](std::size_t a, std::size_t b) {
    return chain_step(seg(a), seg(b), cfg.allow_overlap, cfg.allow_gap);
  };

  // Sorting by start makes index order topological for chain steps.
  std::vector<char> prefix(m, 0), suffix(m, 0);
  for (std::size_t i = 0; i < m; ++i) {
    prefix[i] = seg(i).start == 0;
    for (std::size_t j = 0; j < i && !prefix[i]; ++j) prefix[i] = prefix[j] && step(j, i);
  }
  for (std::size_t i = m; i-- > 0;) {
    suffix[i] = seg(i).end == n;
    for (std::size_t j = i + 1; j < m && !suffix[i]; ++j) suffix[i] = suffix[j] && step(i, j);
  }
  bool coverable = false;
  for (std::size_t i = 0; i < m; ++i) coverable |= prefix[i] && seg(i).end == n;
  if (!coverable) {
    std::vector<char> covered(n, 0);
    for (std::size_t i = 0; i < m; ++i)
      if (prefix[i])
        for (std::size_t p = seg(i).start; p < seg(i).end; ++p) covered[p] = 1;
    std::string where;
    for (std::size_t p = 0; p < n;) {
      if (covered[p]) {
        ++p;
        continue;
      }
      std::size_t q = p;
      while (q < n && !covered[q]) ++q;
      if (!where.empty()) where += ", ";
      where += "[" + std::to_string(p) + "," + std::to_string(q) + ")";
      p = q;
    }
    throw data_error("sentence '" + cs.id + "': uncoverable input, no exhaustive segmentation exists; "
                     "positions not reachable from the start: " + (where.empty() ? std::string("none") : where));
  }

  SentenceGraph g;
  g.id = cs.id;
  g.input_length = n;
  g.config = cfg;
  std::vector<std::size_t> node_of(m, SIZE_MAX);
  for (std::size_t i = 0; i < m; ++i) {
    if (prefix[i] && suffix[i]) {
      node_of[i] = g.nodes.size();
      g.nodes.push_back(seg(i));
      g.source_index.push_back(order[i]);
    }
  }
  const std::size_t N = g.nodes.size();

  std::vector<detail::Bitset> reach(N, detail::Bitset(N));
  for (std::size_t a = N; a-- > 0;) {
    for (std::size_t b = a + 1; b < N; ++b) {
      if (chain_step(g.nodes[a], g.nodes[b], cfg.allow_overlap, cfg.allow_gap)) {
        reach[a].set(b);
        reach[a] |= reach[b];
      }
    }
  }
  g.compat_.assign(N * N, 0);
  for (std::size_t a = 0; a < N; ++a) {
    for (std::size_t b = a + 1; b < N; ++b) {
      const bool ok = !conflicts(g.nodes[a], g.nodes[b], cfg.allow_overlap) && reach[a].test(b);
      g.compat_[a * N + b] = g.compat_[b * N + a] = ok;
    }
  }
  g.edge_ = g.compat_;

  if (cs.gold) {
    std::map<std::size_t, std::size_t> dedup_of;  // source index -> unique index
    std::map<std::tuple<std::string, std::string, std::size_t, std::size_t>, std::size_t> key_to_unique;
    for (std::size_t i = 0; i < m; ++i) {
      const auto& s = seg(i);
      key_to_unique[{s.lemma, s.morph_class, s.start, s.end}] = i;
    }
    g.gold_valid = !cs.gold->empty();
    for (std::size_t gi : *cs.gold) {
      if (gi >= cs.segments.size()) throw data_error("sentence '" + cs.id + "': gold index out of range");
      const auto& s = cs.segments[gi];
      const std::size_t u = key_to_unique.at({s.lemma, s.morph_class, s.start, s.end});
      if (node_of[u] == SIZE_MAX) {
        g.gold_valid = false;
        continue;
      }
      g.gold.push_back(node_of[u]);
    }
    std::sort(g.gold.begin(), g.gold.end());
    g.gold.erase(std::unique(g.gold.begin(), g.gold.end()), g.gold.end());
    if (g.gold_valid) g.gold_valid = g.is_maximal_clique(g.gold);
  }
  return g;
}

/// All exhaustive segmentations by depth-first chain enumeration, as sorted
/// lists of segment indices. Independent of build_graph; used as an oracle.
inline std::vector<std::vector<std::size_t>> enumerate_exhaustive_segmentations(const CandidateSpace& cs,
                                                                                const GraphConfig& cfg = {}) {
  const auto order = unique_segments(cs);
  if (order.size() > cfg.enumeration_limit)
    throw usage_error("sentence '" + cs.id + "' has " + std::to_string(order.size()) +
                      " candidate segments, above the enumeration limit of " + std::to_string(cfg.enumeration_limit) +
                      "; use greedy inference instead");
  const std::size_t n = cs.input.size();
  auto seg = [&](std::size_t i) -> const Segment& { return cs.segments[order[i]]; };

  std::vector<std::vector<std::size_t>> chains;
  std::vector<std::size_t> path;
  auto dfs = [&](auto&& self, std::size_t last) -> void {
    if (seg(last).end == n) chains.push_back(path);
    for (std::size_t next = 0; next < order.size(); ++next) {
      if (chain_step(seg(last), seg(next), cfg.allow_overlap, cfg.allow_gap)) {
        path.push_back(next);
        self(self, next);
        path.pop_back();
      }
    }
  };
  for (std::size_t i = 0; i < order.size(); ++i) {
    if (seg(i).start != 0) continue;
    path.assign(1, i);
    dfs(dfs, i);
  }

  std::vector<std::vector<std::size_t>> sets;
  for (auto& c : chains) {
    std::vector<std::size_t> s;
    for (auto i : c) s.push_back(order[i]);
    std::sort(s.begin(), s.end());
    sets.push_back(std::move(s));
  }
  std::sort(sets.begin(), sets.end());
  sets.erase(std::unique(sets.begin(), sets.end()), sets.end());

  std::vector<std::vector<std::size_t>> maximal;
  for (std::size_t i = 0; i < sets.size(); ++i) {
    bool dominated = false;
    for (std::size_t j = 0; j < sets.size() && !dominated; ++j) {
      if (i == j || sets[j].size() <= sets[i].size()) continue;
      dominated = std::includes(sets[j].begin(), sets[j].end(), sets[i].begin(), sets[i].end());
    }
    if (!dominated) maximal.push_back(sets[i]);
  }
  return maximal;
}

/// Keeps an edge only when the gap between the two spans is at most k
/// characters. nullopt means no limit.
inline SentenceGraph prune_edges(const SentenceGraph& g, std::optional<std::size_t> k) {
  SentenceGraph out = g;
  if (!k) return out;
  for (std::size_t u = 0; u < g.size(); ++u)
    for (std::size_t v = u + 1; v < g.size(); ++v)
      if (g.has_edge(u, v) && span_gap(g.nodes[u], g.nodes[v]) > *k) out.set_edge(u, v, false);
  return out;
}

// ---------------------------------------------------------------------------
// Lattice

/// Sequential restriction of a sentence graph. Node 0 is the start marker,
/// nodes 1..N are the graph nodes (graph id + 1), node N+1 is the end marker.
struct Lattice {
  std::string id;
  std::vector<Segment> nodes;
  std::vector<std::vector<std::size_t>> succ;
  std::vector<std::vector<std::size_t>> pred;
  std::vector<std::size_t> gold_path;  // lattice ids, markers included; empty when gold is not a path

  std::size_t start() const noexcept { return 0; }
  std::size_t end() const noexcept { return nodes.size() - 1; }
  std::size_t size() const noexcept { return nodes.size(); }
  bool has_edge(std::size_t u, std::size_t v) const {
    return std::find(succ[u].begin(), succ[u].end(), v) != succ[u].end();
  }
};

inline const char* kStartMarker = "<s>";
inline const char* kEndMarker = "</s>";

/// Links each segment only to its immediate chain neighbours: u -> v when v
/// may follow u and no segment fits between them. Every start-to-end path is
/// then an exhaustive segmentation and vice versa.
inline Lattice to_lattice(const SentenceGraph& g) {
  const std::size_t N = g.size();
  const auto ov = g.config.allow_overlap;
  const auto gap = g.config.allow_gap;
  Lattice lat;
  lat.id = g.id;
  lat.nodes.push_back(Segment{kStartMarker, kStartMarker, kStartMarker, 0, 0});
  for (const auto& s : g.nodes) lat.nodes.push_back(s);
  lat.nodes.push_back(Segment{kEndMarker, kEndMarker, kEndMarker, g.input_length, g.input_length});
  lat.succ.assign(N + 2, {});
  lat.pred.assign(N + 2, {});
  auto link = [&](std::size_t a, std::size_t b) {
    lat.succ[a].push_back(b);
    lat.pred[b].push_back(a);
  };
  for (std::size_t u = 0; u < N; ++u)
    if (g.nodes[u].start == 0) link(0, u + 1);
  for (std::size_t u = 0; u < N; ++u) {
    for (std::size_t v = u + 1; v < N; ++v) {
      if (!chain_step(g.nodes[u], g.nodes[v], ov, gap)) continue;
      bool between = false;
      for (std::size_t w = u + 1; w < v && !between; ++w)
        between = chain_step(g.nodes[u], g.nodes[w], ov, gap) && chain_step(g.nodes[w], g.nodes[v], ov, gap);
      if (!between) link(u + 1, v + 1);
    }
  }
  for (std::size_t u = 0; u < N; ++u)
    if (g.nodes[u].end == g.input_length) link(u + 1, N + 1);

  if (g.gold_valid && !g.gold.empty()) {
    std::vector<std::size_t> path{0};
    for (auto u : g.gold) path.push_back(u + 1);  // gold ids are sorted, i.e. in chain order
    path.push_back(N + 1);
    bool ok = true;
    for (std::size_t i = 0; i + 1 < path.size() && ok; ++i) ok = lat.has_edge(path[i], path[i + 1]);
    if (ok) lat.gold_path = std::move(path);
  }
  return lat;
}

}  // namespace cliqueseg
