#pragma once

// Decoders over a scored sentence graph: the greedy per-seed maximal-clique
// heuristic, exact Bron-Kerbosch enumeration, greedy Steiner-tree growth and
// lattice path decoding (exact and beam).

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "cliqueseg/core.hpp"
#include "cliqueseg/energy.hpp"
#include "cliqueseg/graph.hpp"
#include "cliqueseg/parallel.hpp"

namespace cliqueseg {

/// Dense directed edge energies for one sentence graph. Entries for pairs
/// without an edge are 0 and never read.
struct EdgeEnergies {
  std::size_t n = 0;
  std::vector<double> e;

  double operator()(std::size_t u, std::size_t v) const { return e[u * n + v]; }
  double& at(std::size_t u, std::size_t v) { return e[u * n + v]; }

  static EdgeEnergies zeros(std::size_t n) { return {n, std::vector<double>(n * n, 0.0)}; }
};

inline EdgeEnergies score_graph(const SentenceGraph& g, const ProjectedEnergies& proj) {
  auto E = EdgeEnergies::zeros(g.size());
  for (std::size_t u = 0; u < g.size(); ++u)
    for (std::size_t v = 0; v < g.size(); ++v)
      if (u != v && g.has_edge(u, v)) E.at(u, v) = proj.energy(u, v);
  return E;
}

enum class PredictionKind { Clique, Tree, Path };

inline const char* kind_name(PredictionKind k) {
  switch (k) {
    case PredictionKind::Clique: return "clique";
    case PredictionKind::Tree: return "tree";
    case PredictionKind::Path: return "path";
  }
  return "?";
}

struct Prediction {
  PredictionKind kind = PredictionKind::Clique;
  std::vector<std::size_t> nodes;  // sorted node ids
  double energy = 0.0;
  std::size_t seed = 0;
  /// Directed energy-carrying edges (tree: parent -> child; path: in order).
  /// Empty for cliques, whose edges are all ordered pairs of nodes.
  std::vector<std::pair<std::size_t, std::size_t>> edges;
};

/// Sum over every directed edge among `nodes`.
inline double clique_energy(const SentenceGraph& g, const EdgeEnergies& E, const std::vector<std::size_t>& nodes) {
  double s = 0.0;
  for (auto u : nodes)
    for (auto v : nodes)
      if (u != v && g.has_edge(u, v)) s += E(u, v);
  return s;
}

/// Grows a clique from `seed`: repeatedly adds the compatible vertex whose
/// edges into the current clique have the least summed energy, discarding
/// vertices incompatible with it, until no candidate remains.
inline Prediction greedy_clique_from_seed(const SentenceGraph& g, const EdgeEnergies& E, std::size_t seed) {
  const std::size_t N = g.size();
  std::vector<char> candidate(N, 0);
  std::vector<double> cost(N, 0.0);
  for (std::size_t x = 0; x < N; ++x) {
    candidate[x] = x != seed && g.compatible(x, seed);
    if (candidate[x] && g.has_edge(x, seed)) cost[x] = E(x, seed);
  }
  Prediction p;
  p.kind = PredictionKind::Clique;
  p.seed = seed;
  p.nodes.push_back(seed);
  for (;;) {
    std::size_t best = N;
    for (std::size_t x = 0; x < N; ++x)
      if (candidate[x] && (best == N || cost[x] < cost[best])) best = x;
    if (best == N) break;
    p.nodes.push_back(best);
    candidate[best] = 0;
    for (std::size_t y = 0; y < N; ++y) {
      if (!candidate[y]) continue;
      if (!g.compatible(y, best)) {
        candidate[y] = 0;
      } else if (g.has_edge(y, best)) {
        cost[y] += E(y, best);
      }
    }
  }
  std::sort(p.nodes.begin(), p.nodes.end());
  p.energy = clique_energy(g, E, p.nodes);
  return p;
}

struct SampledPredictions {
  Prediction best;
  std::vector<Prediction> samples;  // distinct node sets, in order of first seed
};

namespace detail {

/// Minimum by (energy, seed), plus de-duplication by node set.
inline SampledPredictions reduce_samples(std::vector<Prediction> per_seed) {
  SampledPredictions out;
  std::size_t best = 0;
  for (std::size_t i = 1; i < per_seed.size(); ++i)
    if (per_seed[i].energy < per_seed[best].energy ||
        (per_seed[i].energy == per_seed[best].energy && per_seed[i].seed < per_seed[best].seed))
      best = i;
  out.best = per_seed[best];
  std::set<std::vector<std::size_t>> seen;
  for (auto& p : per_seed)
    if (seen.insert(p.nodes).second) out.samples.push_back(std::move(p));
  return out;
}

}  // namespace detail

/// Runs the greedy heuristic from every node and keeps the least-energy clique.
inline SampledPredictions greedy_inference(const SentenceGraph& g, const EdgeEnergies& E, std::size_t workers = 1) {
  if (g.size() == 0) throw data_error("cannot decode an empty graph");
  std::vector<Prediction> per_seed(g.size());
  parallel_for(g.size(), workers, [&](std::size_t s) { per_seed[s] = greedy_clique_from_seed(g, E, s); });
  return detail::reduce_samples(std::move(per_seed));
}

/// All maximal cliques of the compatibility relation (Bron-Kerbosch with
/// Tomita pivoting), each sorted, in lexicographic order.
inline std::vector<std::vector<std::size_t>> exact_maximal_cliques(const SentenceGraph& g, std::size_t limit = 25) {
  const std::size_t N = g.size();
  if (N > limit || N > 64)
    throw usage_error("graph '" + g.id + "' has " + std::to_string(N) + " nodes, above the exact enumeration limit of " +
                      std::to_string(std::min<std::size_t>(limit, 64)));
  using Mask = std::uint64_t;
  std::vector<Mask> adj(N, 0);
  for (std::size_t u = 0; u < N; ++u)
    for (std::size_t v = 0; v < N; ++v)
      if (u != v && g.compatible(u, v)) adj[u] |= Mask{1} << v;

  std::vector<std::vector<std::size_t>> out;
  auto expand = [&](auto&& self, Mask r, Mask p, Mask x) -> void {
    if (p == 0 && x == 0) {
      std::vector<std::size_t> c;
      for (Mask m = r; m; m &= m - 1) c.push_back(static_cast<std::size_t>(std::countr_zero(m)));
      out.push_back(std::move(c));
      return;
    }
    std::size_t pivot = 0;
    int best = -1;
    for (Mask m = p | x; m; m &= m - 1) {
      const auto u = static_cast<std::size_t>(std::countr_zero(m));
      const int c = std::popcount(p & adj[u]);
      if (c > best) {
        best = c;
        pivot = u;
      }
    }
    for (Mask m = p & ~adj[pivot]; m; m &= m - 1) {
      const auto v = static_cast<std::size_t>(std::countr_zero(m));
      const Mask bit = Mask{1} << v;
      self(self, r | bit, p & adj[v], x & adj[v]);
      p &= ~bit;
      x |= bit;
    }
  };
  const Mask all = N == 64 ? ~Mask{0} : ((Mask{1} << N) - 1);
  expand(expand, 0, all, 0);
  std::sort(out.begin(), out.end());
  return out;
}

/// Prim-style tree growth from `seed`: attach the compatible vertex reachable
/// through the single cheapest edge (either direction) to any tree vertex,
/// discard vertices
/// incompatible with it, and stop when no candidate remains. The energy is the
/// sum over tree edges only.
inline Prediction steiner_tree_from_seed(const SentenceGraph& g, const EdgeEnergies& E, std::size_t seed) {
  const std::size_t N = g.size();
  constexpr double kInf = std::numeric_limits<double>::infinity();
  std::vector<char> candidate(N, 0);
  std::vector<double> cost(N, kInf);
  std::vector<std::pair<std::size_t, std::size_t>> via(N, {N, N});
  // Tree edges are undirected; each attachment uses the cheaper direction.
  auto relax = [&](std::size_t from) {
    for (std::size_t y = 0; y < N; ++y) {
      if (!candidate[y] || !g.has_edge(from, y)) continue;
      const double fwd = E(from, y), bwd = E(y, from);
      const double w = std::min(fwd, bwd);
      if (w < cost[y]) {
        cost[y] = w;
        via[y] = fwd <= bwd ? std::make_pair(from, y) : std::make_pair(y, from);
      }
    }
  };
  for (std::size_t x = 0; x < N; ++x) candidate[x] = x != seed && g.compatible(x, seed);
  relax(seed);

  Prediction p;
  p.kind = PredictionKind::Tree;
  p.seed = seed;
  p.nodes.push_back(seed);
  for (;;) {
    std::size_t best = N;
    for (std::size_t x = 0; x < N; ++x)
      if (candidate[x] && (best == N || cost[x] < cost[best])) best = x;
    if (best == N) break;
    candidate[best] = 0;
    p.nodes.push_back(best);
    // A vertex with no surviving edge to the tree (possible only after
    // pruning) joins without an edge.
    if (via[best].first != N) {
      p.edges.push_back(via[best]);
      p.energy += cost[best];
    }
    for (std::size_t y = 0; y < N; ++y)
      if (candidate[y] && !g.compatible(y, best)) candidate[y] = 0;
    relax(best);
  }
  std::sort(p.nodes.begin(), p.nodes.end());
  return p;
}

inline SampledPredictions steiner_tree_inference(const SentenceGraph& g, const EdgeEnergies& E,
                                                 std::size_t workers = 1) {
  if (g.size() == 0) throw data_error("cannot decode an empty graph");
  std::vector<Prediction> per_seed(g.size());
  parallel_for(g.size(), workers, [&](std::size_t s) { per_seed[s] = steiner_tree_from_seed(g, E, s); });
  return detail::reduce_samples(std::move(per_seed));
}

// ---------------------------------------------------------------------------
// Lattice decoding

/// Energies aligned with Lattice::succ.
struct LatticeEnergies {
  std::vector<std::vector<double>> succ;
};

inline LatticeEnergies score_lattice(const Lattice& lat, const ProjectedEnergies& proj) {
  LatticeEnergies le;
  le.succ.resize(lat.size());
  for (std::size_t u = 0; u < lat.size(); ++u)
    for (std::size_t v : lat.succ[u]) le.succ[u].push_back(proj.energy(u, v));
  return le;
}

namespace detail {

inline Prediction path_prediction(const Lattice& lat, const std::vector<std::size_t>& path, double energy) {
  Prediction p;
  p.kind = PredictionKind::Path;
  p.energy = energy;
  for (std::size_t i = 0; i + 1 < path.size(); ++i) p.edges.emplace_back(path[i], path[i + 1]);
  for (auto u : path)
    if (u != lat.start() && u != lat.end()) p.nodes.push_back(u - 1);
  std::sort(p.nodes.begin(), p.nodes.end());
  p.seed = path.size() > 1 ? path[1] - 1 : 0;
  return p;
}

}  // namespace detail

/// Up to B least-energy start-to-end paths, best first. Each node keeps its
/// B best partial paths; node ids are already in topological order.
inline std::vector<Prediction> lattice_beam(const Lattice& lat, const LatticeEnergies& le, std::size_t beam) {
  if (beam == 0) throw usage_error("beam size must be at least 1");
  struct Entry {
    double energy;
    std::size_t prev_node;
    std::size_t prev_entry;
  };
  const std::size_t L = lat.size();
  std::vector<std::vector<Entry>> best(L);
  best[lat.start()].push_back({0.0, L, 0});
  for (std::size_t u = 0; u < L; ++u) {
    auto& here = best[u];
    std::stable_sort(here.begin(), here.end(), [](const Entry& a, const Entry& b) { return a.energy < b.energy; });
    if (here.size() > beam) here.resize(beam);
    for (std::size_t k = 0; k < lat.succ[u].size(); ++k) {
      const std::size_t v = lat.succ[u][k];
      for (std::size_t i = 0; i < here.size(); ++i) best[v].push_back({here[i].energy + le.succ[u][k], u, i});
    }
  }
  if (best[lat.end()].empty()) throw data_error("sentence '" + lat.id + "': uncoverable input, lattice has no path");

  std::vector<Prediction> out;
  for (std::size_t i = 0; i < best[lat.end()].size(); ++i) {
    std::vector<std::size_t> path;
    std::size_t node = lat.end(), entry = i;
    while (node != L) {
      path.push_back(node);
      const auto& e = best[node][entry];
      node = e.prev_node;
      entry = e.prev_entry;
    }
    std::reverse(path.begin(), path.end());
    out.push_back(detail::path_prediction(lat, path, best[lat.end()][i].energy));
  }
  return out;
}

/// Minimum-energy start-to-end path by dynamic programming.
inline Prediction lattice_decode(const Lattice& lat, const LatticeEnergies& le) {
  const std::size_t L = lat.size();
  constexpr double kInf = std::numeric_limits<double>::infinity();
  std::vector<double> dist(L, kInf);
  std::vector<std::size_t> back(L, L);
  dist[lat.start()] = 0.0;
  for (std::size_t u = 0; u < L; ++u) {
    if (dist[u] == kInf) continue;
    for (std::size_t k = 0; k < lat.succ[u].size(); ++k) {
      const std::size_t v = lat.succ[u][k];
      const double d = dist[u] + le.succ[u][k];
      if (d < dist[v]) {
        dist[v] = d;
        back[v] = u;
      }
    }
  }
  if (dist[lat.end()] == kInf) throw data_error("sentence '" + lat.id + "': uncoverable input, lattice has no path");
  std::vector<std::size_t> path;
  for (std::size_t v = lat.end(); v != L; v = back[v]) path.push_back(v);
  std::reverse(path.begin(), path.end());
  return detail::path_prediction(lat, path, dist[lat.end()]);
}

}  // namespace cliqueseg
