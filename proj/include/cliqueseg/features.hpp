#pragma once

// Constraint-conditioned co-occurrence features for directed edges, OOV
// handling, and mutual-information feature selection.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <random>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "cliqueseg/core.hpp"
#include "cliqueseg/corpus.hpp"
#include "cliqueseg/parallel.hpp"

namespace cliqueseg {

/// One feature: evidence of the source node's `source` attribute and the
/// target node's `target` attribute, conditioned on a morphological constraint.
struct FeatureTemplate {
  AttrKind source = AttrKind::Word;
  std::size_t constraint = 0;
  AttrKind target = AttrKind::Word;

  bool operator==(const FeatureTemplate&) const = default;
};

/// Position of a template in the full 3 x |MC| x 3 space.
inline std::size_t template_index(const FeatureTemplate& t, std::size_t num_constraints) {
  return (static_cast<std::size_t>(t.source) * num_constraints + t.constraint) * 3 + static_cast<std::size_t>(t.target);
}

inline FeatureTemplate template_at(std::size_t index, std::size_t num_constraints) {
  FeatureTemplate t;
  t.target = static_cast<AttrKind>(index % 3);
  index /= 3;
  t.constraint = index % num_constraints;
  t.source = static_cast<AttrKind>(index / num_constraints);
  return t;
}

inline std::vector<FeatureTemplate> full_template_space(const MorphConstraintSet& mcs) {
  std::vector<FeatureTemplate> out;
  out.reserve(9 * mcs.size());
  for (std::size_t i = 0; i < 9 * mcs.size(); ++i) out.push_back(template_at(i, mcs.size()));
  return out;
}

/// Ordered list of selected templates. The order is the edge-vector layout.
struct FeatureSpec {
  static constexpr int kVersion = 1;

  std::vector<FeatureTemplate> templates;
  std::uint64_t constraint_fingerprint = 0;

  std::size_t dimension() const noexcept { return templates.size(); }

  std::uint64_t fingerprint() const {
    std::uint64_t h = fnv1a("cliqueseg-featurespec-v1");
    h = fnv1a(hex64(constraint_fingerprint), h);
    for (const auto& t : templates) {
      h = fnv1a(attr_name(t.source), h);
      h = fnv1a(std::to_string(t.constraint), h);
      h = fnv1a(attr_name(t.target), h);
    }
    return h;
  }
};

using EdgeVector = std::vector<double>;

/// Attribute values a node contributes to lookups after OOV back-off.
struct EffectiveAttrs {
  std::array<ValueId, 3> id{kNoValue, kNoValue, kNoValue};
  std::array<AttrKind, 3> kind{AttrKind::Word, AttrKind::Root, AttrKind::Class};
  bool word_backed_off = false;
};

/// Probability lookups over corpus statistics with add-1 smoothing for zero
/// evidence: (count(a,b) + 1) / (count(a) + |domain of b|).
class FeatureContext {
 public:
  FeatureContext(const CooccurrenceStats& stats, const MorphConstraintSet& mcs)
      : stats_(&stats), mcs_(&mcs), evidence_(stats, mcs) {}

  const CooccurrenceStats& stats() const { return *stats_; }
  const MorphConstraintSet& constraints() const { return *mcs_; }
  const ConstraintEvidence& evidence() const { return evidence_; }

  /// OOV surface forms use the node's root evidence; OOV roots stay unseen
  /// and fall through to smoothing.
  EffectiveAttrs handle_oov(const Segment& node) const {
    if (node.lemma.empty()) throw data_error("segment '" + node.surface + "' has an empty root");
    EffectiveAttrs e;
    auto lookup = [&](AttrKind k, const std::string& v) {
      auto id = stats_->id(k, v);
      return id ? *id : kNoValue;
    };
    e.id[1] = lookup(AttrKind::Root, node.lemma);
    e.id[2] = lookup(AttrKind::Class, node.morph_class);
    e.id[0] = lookup(AttrKind::Word, node.surface);
    if (e.id[0] == kNoValue) {
      e.id[0] = e.id[1];
      e.kind[0] = AttrKind::Root;
      e.word_backed_off = true;
    }
    return e;
  }

  /// P_co(value | g).
  double p_value_given_constraint(std::size_t g, ValueId value, AttrKind kind) const {
    const double joint = static_cast<double>(evidence_.joint(g, value));
    const double cg = static_cast<double>(evidence_.count(g));
    if (joint > 0) return joint / cg;
    return 1.0 / (cg + static_cast<double>(std::max<std::size_t>(1, stats_->vocab.size(kind))));
  }

  /// P_co(g | value). Summed partial-constraint evidence can exceed the
  /// value's own count; the ratio is capped at 1.
  double p_constraint_given_value(std::size_t g, ValueId value) const {
    const double joint = static_cast<double>(evidence_.joint(g, value));
    const double cv = static_cast<double>(stats_->count(value));
    if (joint > 0) return std::min(1.0, joint / cv);
    return 1.0 / (cv + static_cast<double>(mcs_->size()));
  }

  /// -log(P_co(n_j | g) * P_co(g | n_i)) with n_i the source attribute of
  /// `src` and n_j the target attribute of `dst`.
  double feature_value(const FeatureTemplate& t, const EffectiveAttrs& src, const EffectiveAttrs& dst) const {
    const auto si = static_cast<std::size_t>(t.source);
    const auto ti = static_cast<std::size_t>(t.target);
    return out_part(t.constraint, src.id[si]) + in_part(t.constraint, dst.id[ti], dst.kind[ti]);
  }

  double feature_value(const FeatureTemplate& t, const Segment& src, const Segment& dst) const {
    return feature_value(t, handle_oov(src), handle_oov(dst));
  }

  /// Source-side term -log P_co(g | n_i).
  double out_part(std::size_t g, ValueId value) const { return -std::log(p_constraint_given_value(g, value)); }
  /// Target-side term -log P_co(n_j | g).
  double in_part(std::size_t g, ValueId value, AttrKind kind) const {
    return -std::log(p_value_given_constraint(g, value, kind));
  }

 private:
  const CooccurrenceStats* stats_;
  const MorphConstraintSet* mcs_;
  ConstraintEvidence evidence_;
};

inline EdgeVector edge_vector(const FeatureSpec& spec, const FeatureContext& ctx, const Segment& src,
                              const Segment& dst) {
  const auto s = ctx.handle_oov(src);
  const auto d = ctx.handle_oov(dst);
  EdgeVector x(spec.dimension());
  for (std::size_t k = 0; k < spec.dimension(); ++k) x[k] = ctx.feature_value(spec.templates[k], s, d);
  return x;
}

/// Every edge vector decomposes into a source-node part plus a target-node
/// part: x(u -> v) = out[u] + in[v]. Nodes are featurized once; edges are sums.
struct NodeFeatureParts {
  std::size_t dim = 0;
  std::size_t num_nodes = 0;
  std::vector<double> out;  // num_nodes x dim
  std::vector<double> in;   // num_nodes x dim

  std::span<const double> out_of(std::size_t u) const { return {out.data() + u * dim, dim}; }
  std::span<const double> in_of(std::size_t v) const { return {in.data() + v * dim, dim}; }

  EdgeVector edge(std::size_t u, std::size_t v) const {
    EdgeVector x(dim);
    for (std::size_t k = 0; k < dim; ++k) x[k] = out[u * dim + k] + in[v * dim + k];
    return x;
  }
};

inline NodeFeatureParts node_parts(const FeatureSpec& spec, const FeatureContext& ctx,
                                   std::span<const Segment> nodes) {
  NodeFeatureParts p;
  p.dim = spec.dimension();
  p.num_nodes = nodes.size();
  p.out.resize(p.num_nodes * p.dim);
  p.in.resize(p.num_nodes * p.dim);
  for (std::size_t u = 0; u < nodes.size(); ++u) {
    const auto e = ctx.handle_oov(nodes[u]);
    for (std::size_t k = 0; k < p.dim; ++k) {
      const auto& t = spec.templates[k];
      const auto si = static_cast<std::size_t>(t.source);
      const auto ti = static_cast<std::size_t>(t.target);
      p.out[u * p.dim + k] = ctx.out_part(t.constraint, e.id[si]);
      p.in[u * p.dim + k] = ctx.in_part(t.constraint, e.id[ti], e.kind[ti]);
    }
  }
  return p;
}

// ---------------------------------------------------------------------------
// Mutual-information feature selection

/// Equal-frequency discretization. Equal values always share a bin.
inline std::vector<std::uint16_t> equal_frequency_bins(std::span<const double> x, std::size_t bins) {
  const std::size_t n = x.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return x[a] < x[b]; });
  std::vector<std::uint16_t> out(n, 0);
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    while (j < n && x[order[j]] == x[order[i]]) ++j;
    const auto bin = static_cast<std::uint16_t>(std::min(bins - 1, i * bins / n));
    for (std::size_t r = i; r < j; ++r) out[order[r]] = bin;
    i = j;
  }
  return out;
}

/// Plug-in mutual information (nats) between two discretized columns.
inline double mutual_information(std::span<const std::uint16_t> a, std::span<const std::uint16_t> b,
                                 std::size_t bins) {
  const std::size_t n = a.size();
  if (n == 0) return 0.0;
  std::vector<double> joint(bins * bins, 0.0), pa(bins, 0.0), pb(bins, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    joint[a[i] * bins + b[i]] += 1.0;
    pa[a[i]] += 1.0;
    pb[b[i]] += 1.0;
  }
  double mi = 0.0;
  for (std::size_t i = 0; i < bins; ++i) {
    for (std::size_t j = 0; j < bins; ++j) {
      const double c = joint[i * bins + j];
      if (c > 0) mi += c / n * std::log(c * n / (pa[i] * pb[j]));
    }
  }
  return std::max(0.0, mi);
}

/// Column indices ranked by MI with the label, highest first; ties keep the
/// lower column index first.
inline std::vector<std::size_t> rank_by_mutual_information(const std::vector<std::vector<double>>& columns,
                                                           std::span<const double> label, std::size_t bins) {
  const auto lb = equal_frequency_bins(label, bins);
  std::vector<double> score(columns.size());
  for (std::size_t c = 0; c < columns.size(); ++c)
    score[c] = mutual_information(equal_frequency_bins(columns[c], bins), lb, bins);
  std::vector<std::size_t> order(columns.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return score[a] > score[b]; });
  return order;
}

struct SelectionConfig {
  std::size_t k = 64;
  std::size_t bins = 16;
  std::size_t min_samples = 50;
  std::size_t max_samples = 10000;
  std::uint64_t seed = 1;
  std::size_t workers = 1;
};

struct SelectionResult {
  FeatureSpec spec;
  std::vector<double> scores;  // MI per template in the full space
};

/// Scores all 3 x |MC| x 3 templates on sampled (source, target) node pairs
/// against the label P_co(word_target | word_source) and keeps the top k.
inline SelectionResult select_features(std::vector<std::pair<Segment, Segment>> pairs, const FeatureContext& ctx,
                                       const SelectionConfig& cfg) {
  if (pairs.size() < cfg.min_samples)
    throw data_error("feature selection needs at least " + std::to_string(cfg.min_samples) + " sampled pairs, got " +
                     std::to_string(pairs.size()));
  if (cfg.bins < 2 || cfg.bins > 65535) throw usage_error("bin count must be in [2, 65535]");
  if (pairs.size() > cfg.max_samples) {
    std::mt19937_64 rng(cfg.seed);
    for (std::size_t i = 0; i < cfg.max_samples; ++i) {
      std::size_t j = i + uniform_index(rng, pairs.size() - i);
      std::swap(pairs[i], pairs[j]);
    }
    pairs.resize(cfg.max_samples);
  }

  const std::size_t n = pairs.size();
  const std::size_t mc = ctx.constraints().size();
  const auto& st = ctx.stats();
  std::vector<EffectiveAttrs> src(n), dst(n);
  std::vector<double> label(n);
  for (std::size_t i = 0; i < n; ++i) {
    src[i] = ctx.handle_oov(pairs[i].first);
    dst[i] = ctx.handle_oov(pairs[i].second);
    auto wu = st.id(AttrKind::Word, pairs[i].first.surface);
    auto wv = st.id(AttrKind::Word, pairs[i].second.surface);
    label[i] = (wu && wv) ? st.conditional(*wv, *wu) : 0.0;
  }
  const auto label_bins = equal_frequency_bins(label, cfg.bins);

  const std::size_t space = 9 * mc;
  SelectionResult res;
  res.scores.assign(space, 0.0);
  parallel_for(space, cfg.workers, [&](std::size_t idx) {
    const auto t = template_at(idx, mc);
    std::vector<double> col(n);
    for (std::size_t i = 0; i < n; ++i) col[i] = ctx.feature_value(t, src[i], dst[i]);
    res.scores[idx] = mutual_information(equal_frequency_bins(col, cfg.bins), label_bins, cfg.bins);
  });

  std::vector<std::size_t> order(space);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return res.scores[a] > res.scores[b]; });
  order.resize(std::min(cfg.k, space));
  res.spec.constraint_fingerprint = ctx.constraints().fingerprint;
  for (std::size_t idx : order) res.spec.templates.push_back(template_at(idx, mc));
  return res;
}

}  // namespace cliqueseg
