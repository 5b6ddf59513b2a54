#pragma once

// Structured hinge training for the clique, tree and lattice variants.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <functional>
#include <limits>
#include <map>
#include <numeric>
#include <optional>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "cliqueseg/core.hpp"
#include "cliqueseg/energy.hpp"
#include "cliqueseg/eval.hpp"
#include "cliqueseg/features.hpp"
#include "cliqueseg/graph.hpp"
#include "cliqueseg/inference.hpp"

namespace cliqueseg {

enum class Variant { Clique, Tree, Lattice, LatticeBeam };

inline const char* variant_name(Variant v) {
  switch (v) {
    case Variant::Clique: return "clique";
    case Variant::Tree: return "tree";
    case Variant::Lattice: return "lattice";
    case Variant::LatticeBeam: return "lattice_beam";
  }
  return "?";
}

inline Variant parse_variant(const std::string& s) {
  if (s == "clique") return Variant::Clique;
  if (s == "tree") return Variant::Tree;
  if (s == "lattice") return Variant::Lattice;
  if (s == "lattice_beam" || s == "lattice-beam") return Variant::LatticeBeam;
  throw usage_error("unknown variant '" + s + "' (expected clique, tree, lattice or lattice_beam)");
}

inline bool is_lattice(Variant v) { return v == Variant::Lattice || v == Variant::LatticeBeam; }

inline constexpr std::size_t kMaxBeam = 128;

struct TrainConfig {
  double learning_rate = 1e-4;
  std::size_t epochs = 30;
  std::size_t hidden = 50;
  double alpha = 0.01;
  std::size_t beam = kMaxBeam;
  std::uint64_t seed = 1;
  Variant variant = Variant::Clique;
  std::size_t patience = 5;
  std::size_t workers = 1;

  void validate() const {
    if (!(learning_rate > 0) || !std::isfinite(learning_rate)) throw usage_error("learning rate must be positive");
    if (epochs == 0) throw usage_error("epochs must be at least 1");
    if (hidden == 0) throw usage_error("hidden size must be at least 1");
    if (!(alpha >= 0) || alpha >= 1) throw usage_error("alpha must be in [0, 1)");
    if (beam == 0 || beam > kMaxBeam) throw usage_error("beam must be in [1, " + std::to_string(kMaxBeam) + "]");
    if (patience == 0) throw usage_error("patience must be at least 1");
  }
};

inline nlohmann::json train_config_to_json(const TrainConfig& c) {
  return {{"learning_rate", c.learning_rate}, {"epochs", c.epochs}, {"hidden", c.hidden}, {"alpha", c.alpha},
          {"beam", c.beam},   {"seed", c.seed},   {"variant", variant_name(c.variant)},   {"patience", c.patience}};
}

// ---------------------------------------------------------------------------
// Loss

/// Squared number of predicted nodes absent from gold.
inline double margin(const std::vector<std::size_t>& predicted, const std::vector<std::size_t>& gold) {
  std::vector<std::size_t> p = predicted, g = gold;
  std::sort(p.begin(), p.end());
  p.erase(std::unique(p.begin(), p.end()), p.end());
  std::sort(g.begin(), g.end());
  std::size_t wrong = 0;
  for (auto x : p) wrong += !std::binary_search(g.begin(), g.end(), x);
  return static_cast<double>(wrong * wrong);
}

struct HingeResult {
  double loss = 0.0;
  std::size_t offending = 0;
};

/// max(0, gold - min_i(energy_i - margin_i)); ties go to the lowest index.
inline HingeResult hinge_loss(double gold_energy, const std::vector<std::pair<double, double>>& candidates) {
  if (candidates.empty()) throw usage_error("hinge loss needs at least one candidate");
  HingeResult r;
  double best = candidates[0].first - candidates[0].second;
  for (std::size_t i = 1; i < candidates.size(); ++i) {
    const double v = candidates[i].first - candidates[i].second;
    if (v < best) {
      best = v;
      r.offending = i;
    }
  }
  r.loss = std::max(0.0, gold_energy - best);
  return r;
}

struct TreeEdges {
  std::vector<std::pair<std::size_t, std::size_t>> edges;  // directed, cheaper direction
  double energy = 0.0;
};

/// Minimum spanning tree over the gold nodes, weighting each pair by the
/// cheaper of its two directed energies.
inline TreeEdges gold_min_tree(const SentenceGraph& g, const std::vector<std::size_t>& gold, const EdgeEnergies& E) {
  for (std::size_t i = 0; i < gold.size(); ++i)
    for (std::size_t j = i + 1; j < gold.size(); ++j)
      if (!g.has_edge(gold[i], gold[j]))
        throw data_error("sentence '" + g.id + "': gold nodes are not pairwise adjacent");
  TreeEdges t;
  if (gold.size() < 2) return t;
  constexpr double kInf = std::numeric_limits<double>::infinity();
  const std::size_t n = gold.size();
  std::vector<char> in(n, 0);
  std::vector<double> best(n, kInf);
  std::vector<std::pair<std::size_t, std::size_t>> via(n);
  auto relax = [&](std::size_t i) {
    for (std::size_t j = 0; j < n; ++j) {
      if (in[j]) continue;
      const std::size_t u = gold[i], v = gold[j];
      const double fwd = E(u, v), bwd = E(v, u);
      const double w = std::min(fwd, bwd);
      if (w < best[j]) {
        best[j] = w;
        via[j] = fwd <= bwd ? std::make_pair(u, v) : std::make_pair(v, u);
      }
    }
  };
  in[0] = 1;
  relax(0);
  for (std::size_t step = 1; step < n; ++step) {
    std::size_t pick = n;
    for (std::size_t j = 0; j < n; ++j)
      if (!in[j] && (pick == n || best[j] < best[pick])) pick = j;
    in[pick] = 1;
    t.edges.push_back(via[pick]);
    t.energy += best[pick];
    relax(pick);
  }
  return t;
}

// ---------------------------------------------------------------------------
// Prepared sentences

/// A sentence graph with its node features computed once. Lattice variants
/// additionally carry the lattice and its node features.
struct TrainInstance {
  SentenceGraph graph;
  NodeFeatureParts parts;
  std::optional<Lattice> lattice;
  NodeFeatureParts lattice_parts;
};

inline TrainInstance prepare_instance(SentenceGraph g, const FeatureSpec& spec, const FeatureContext& ctx,
                                      bool with_lattice) {
  TrainInstance inst;
  inst.parts = node_parts(spec, ctx, g.nodes);
  if (with_lattice) {
    inst.lattice = to_lattice(g);
    inst.lattice_parts = node_parts(spec, ctx, inst.lattice->nodes);
  }
  inst.graph = std::move(g);
  return inst;
}

/// Whether the instance's gold is usable for training with `v`.
inline bool gold_aligned(const TrainInstance& inst, Variant v) {
  if (!inst.graph.gold_valid) return false;
  if (is_lattice(v)) return inst.lattice && !inst.lattice->gold_path.empty();
  return true;
}

inline Prediction decode(const TrainInstance& inst, const EnergyModel& m, Variant v, std::size_t workers = 1) {
  if (is_lattice(v)) {
    if (!inst.lattice) throw usage_error("lattice decoding needs a prepared lattice");
    ProjectedEnergies proj(m, inst.lattice_parts);
    return lattice_decode(*inst.lattice, score_lattice(*inst.lattice, proj));
  }
  ProjectedEnergies proj(m, inst.parts);
  const auto E = score_graph(inst.graph, proj);
  return v == Variant::Tree ? steiner_tree_inference(inst.graph, E, workers).best
                            : greedy_inference(inst.graph, E, workers).best;
}

inline SentencePrediction to_sentence_prediction(const SentenceGraph& g, const Prediction& p) {
  SentencePrediction sp;
  sp.id = g.id;
  sp.energy = p.energy;
  sp.kind = kind_name(p.kind);
  for (auto u : p.nodes) sp.segments.push_back(g.nodes[u]);
  return sp;
}

// ---------------------------------------------------------------------------
// Per-sentence update

namespace detail {

using EdgeMultipliers = std::map<std::pair<std::size_t, std::size_t>, double>;

inline void add_clique_edges(EdgeMultipliers& mult, const SentenceGraph& g, const std::vector<std::size_t>& nodes,
                             double sign) {
  for (auto u : nodes)
    for (auto v : nodes)
      if (u != v && g.has_edge(u, v)) mult[{u, v}] += sign;
}

inline void add_edges(EdgeMultipliers& mult, const std::vector<std::pair<std::size_t, std::size_t>>& edges,
                      double sign) {
  for (const auto& e : edges) mult[e] += sign;
}

/// Applies lr * sum(mult * d energy) as a descent step; false when every
/// multiplier cancelled.
inline bool apply_multipliers(EnergyModel& m, ProjectedEnergies& proj, const EdgeMultipliers& mult, double lr) {
  EnergyGradient grad(m);
  bool any = false;
  for (const auto& [e, k] : mult) {
    if (k == 0.0) continue;
    proj.accumulate(e.first, e.second, k, grad);
    any = true;
  }
  if (!any) return false;
  proj.flush(grad);
  apply_gradient(m, grad, lr);
  if (!m.finite()) throw numeric_error("model parameters became non-finite; lower the learning rate");
  return true;
}

inline double path_energy(const Lattice& lat, const LatticeEnergies& le, const std::vector<std::size_t>& path) {
  double s = 0.0;
  for (std::size_t i = 0; i + 1 < path.size(); ++i) {
    const auto& succ = lat.succ[path[i]];
    const auto k = static_cast<std::size_t>(std::find(succ.begin(), succ.end(), path[i + 1]) - succ.begin());
    s += le.succ[path[i]][k];
  }
  return s;
}

}  // namespace detail

struct StepResult {
  double loss = 0.0;
  bool updated = false;
};

/// One subgradient step on one sentence. The instance's gold must be aligned.
inline StepResult train_step(const TrainInstance& inst, EnergyModel& m, const TrainConfig& cfg) {
  const auto& g = inst.graph;
  StepResult r;
  detail::EdgeMultipliers mult;

  if (is_lattice(cfg.variant)) {
    const auto& lat = *inst.lattice;
    ProjectedEnergies proj(m, inst.lattice_parts);
    const auto le = score_lattice(lat, proj);
    const double gold_e = detail::path_energy(lat, le, lat.gold_path);
    std::vector<std::pair<std::size_t, std::size_t>> gold_edges;
    for (std::size_t i = 0; i + 1 < lat.gold_path.size(); ++i) gold_edges.emplace_back(lat.gold_path[i], lat.gold_path[i + 1]);
    const std::vector<Prediction> cands =
        cfg.variant == Variant::Lattice ? std::vector<Prediction>{lattice_decode(lat, le)} : lattice_beam(lat, le, cfg.beam);
    for (const auto& c : cands) {
      const double d = margin(c.nodes, g.gold);
      const double l = std::max(0.0, gold_e - (c.energy - d));
      if (l <= 0) continue;
      r.loss += l;
      detail::add_edges(mult, gold_edges, +1.0);
      detail::add_edges(mult, c.edges, -1.0);
    }
    if (r.loss > 0) r.updated = detail::apply_multipliers(m, proj, mult, cfg.learning_rate);
    return r;
  }

  ProjectedEnergies proj(m, inst.parts);
  const auto E = score_graph(g, proj);
  const auto samples =
      cfg.variant == Variant::Tree ? steiner_tree_inference(g, E, cfg.workers) : greedy_inference(g, E, cfg.workers);
  std::vector<std::pair<double, double>> cands;
  for (const auto& s : samples.samples) cands.emplace_back(s.energy, margin(s.nodes, g.gold));

  double gold_e = 0.0;
  TreeEdges gold_tree;
  if (cfg.variant == Variant::Tree) {
    gold_tree = gold_min_tree(g, g.gold, E);
    gold_e = gold_tree.energy;
  } else {
    gold_e = clique_energy(g, E, g.gold);
  }
  const auto h = hinge_loss(gold_e, cands);
  r.loss = h.loss;
  if (h.loss <= 0) return r;
  const auto& worst = samples.samples[h.offending];
  if (cfg.variant == Variant::Tree) {
    detail::add_edges(mult, gold_tree.edges, +1.0);
    detail::add_edges(mult, worst.edges, -1.0);
  } else {
    detail::add_clique_edges(mult, g, g.gold, +1.0);
    detail::add_clique_edges(mult, g, worst.nodes, -1.0);
  }
  r.updated = detail::apply_multipliers(m, proj, mult, cfg.learning_rate);
  return r;
}

// ---------------------------------------------------------------------------
// Loop

struct EpochRecord {
  std::size_t epoch = 0;
  double mean_loss = 0.0;
  std::size_t updates = 0;
  std::size_t trained = 0;
  std::optional<double> dev_wpt_f, dev_wp3t_f;
  double seconds = 0.0;
};

inline nlohmann::json epoch_to_json(const EpochRecord& e) {
  nlohmann::json j{{"epoch", e.epoch}, {"mean_loss", e.mean_loss}, {"updates", e.updates},
                   {"trained", e.trained}, {"seconds", e.seconds}};
  j["dev_wpt_f"] = e.dev_wpt_f ? nlohmann::json(round2(*e.dev_wpt_f)) : nlohmann::json(nullptr);
  j["dev_wp3t_f"] = e.dev_wp3t_f ? nlohmann::json(round2(*e.dev_wp3t_f)) : nlohmann::json(nullptr);
  return j;
}

struct DevSet {
  const std::vector<TrainInstance>* instances = nullptr;
  const std::vector<GoldSentence>* gold = nullptr;
};

struct TrainResult {
  EnergyModel model;
  std::vector<EpochRecord> log;
  std::vector<std::string> skipped;  // ids whose gold failed alignment
  std::size_t best_epoch = 0;
};

inline std::vector<SentencePrediction> predict_all(const std::vector<TrainInstance>& data, const EnergyModel& m,
                                                   Variant v, std::size_t workers) {
  std::vector<SentencePrediction> out(data.size());
  parallel_for(data.size(), workers, [&](std::size_t i) {
    out[i] = to_sentence_prediction(data[i].graph, decode(data[i], m, v, 1));
  });
  return out;
}

using EpochCallback = std::function<void(const EpochRecord&)>;
using WarningCallback = std::function<void(const std::string&)>;

/// Per-sentence SGD over shuffled epochs. With a dev set, stops after
/// `patience` epochs without a dev WPT F improvement and returns the best
/// model seen.
inline TrainResult train(const std::vector<TrainInstance>& data, const TrainConfig& cfg, EnergyModel init,
                         const DevSet& dev = {}, const EpochCallback& on_epoch = {},
                         const WarningCallback& warn = {}) {
  cfg.validate();
  TrainResult res;
  res.model = std::move(init);
  std::vector<std::size_t> usable;
  for (std::size_t i = 0; i < data.size(); ++i) {
    if (gold_aligned(data[i], cfg.variant)) {
      usable.push_back(i);
    } else {
      res.skipped.push_back(data[i].graph.id);
      if (warn)
        warn("sentence '" + data[i].graph.id + "' skipped: gold is not " +
             (is_lattice(cfg.variant) ? "a lattice path" : "a maximal clique") + " of its candidate graph");
    }
  }
  if (usable.empty()) throw data_error("no training sentence has an aligned gold analysis");

  EnergyModel best = res.model;
  double best_f = -1.0;
  std::size_t since_best = 0;
  for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
    const auto t0 = std::chrono::steady_clock::now();
    std::mt19937_64 rng(derive_seed(cfg.seed, epoch));
    auto order = usable;
    shuffle(rng, order);
    EpochRecord rec;
    rec.epoch = epoch;
    for (auto i : order) {
      const auto s = train_step(data[i], res.model, cfg);
      if (!std::isfinite(s.loss)) throw numeric_error("non-finite loss on sentence '" + data[i].graph.id + "'");
      rec.mean_loss += s.loss;
      rec.updates += s.updated;
    }
    rec.trained = order.size();
    rec.mean_loss /= static_cast<double>(order.size());
    if (dev.instances && dev.gold && !dev.instances->empty()) {
      const auto preds = predict_all(*dev.instances, res.model, cfg.variant, cfg.workers);
      rec.dev_wpt_f = score(preds, *dev.gold, Task::WPT).macro_f;
      rec.dev_wp3t_f = score(preds, *dev.gold, Task::WP3T).macro_f;
    }
    rec.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    res.log.push_back(rec);
    if (on_epoch) on_epoch(rec);

    if (rec.dev_wpt_f) {
      const double f = *rec.dev_wpt_f + 1e-3 * *rec.dev_wp3t_f;
      if (f > best_f) {
        best_f = f;
        best = res.model;
        res.best_epoch = epoch;
        since_best = 0;
      } else if (++since_best >= cfg.patience) {
        break;
      }
    } else {
      res.best_epoch = epoch;
    }
  }
  if (best_f >= 0) res.model = std::move(best);
  return res;
}

inline TrainResult train_clique_ebm(const std::vector<TrainInstance>& data, TrainConfig cfg, EnergyModel init,
                                    const DevSet& dev = {}) {
  cfg.variant = Variant::Clique;
  return train(data, cfg, std::move(init), dev);
}

inline TrainResult train_tree_ebm(const std::vector<TrainInstance>& data, TrainConfig cfg, EnergyModel init,
                                  const DevSet& dev = {}) {
  cfg.variant = Variant::Tree;
  return train(data, cfg, std::move(init), dev);
}

/// Vanilla hinge when `beam` is empty, multi-margin over the beam otherwise.
inline TrainResult train_lattice_ebm(const std::vector<TrainInstance>& data, TrainConfig cfg, EnergyModel init,
                                     std::optional<std::size_t> beam = {}, const DevSet& dev = {}) {
  cfg.variant = beam ? Variant::LatticeBeam : Variant::Lattice;
  if (beam) cfg.beam = *beam;
  return train(data, cfg, std::move(init), dev);
}

}  // namespace cliqueseg
