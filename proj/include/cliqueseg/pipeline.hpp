#pragma once

// End-to-end helpers shared by the CLI and the benchmark harness: graphs from
// candidate spaces, feature selection pairs, and train/evaluate runs.

#include <chrono>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "cliqueseg/corpus.hpp"
#include "cliqueseg/energy.hpp"
#include "cliqueseg/eval.hpp"
#include "cliqueseg/features.hpp"
#include "cliqueseg/graph.hpp"
#include "cliqueseg/parallel.hpp"
#include "cliqueseg/synthlang.hpp"
#include "cliqueseg/training.hpp"

namespace cliqueseg {

inline std::vector<SentenceGraph> build_graphs(const std::vector<CandidateSpace>& spaces, const GraphConfig& cfg,
                                               std::size_t workers = 1) {
  std::vector<SentenceGraph> out(spaces.size());
  parallel_for(spaces.size(), workers, [&](std::size_t i) { out[i] = build_graph(spaces[i], cfg); });
  return out;
}

/// (source, target) segments of every directed edge.
inline std::vector<std::pair<Segment, Segment>> edge_pairs(const std::vector<SentenceGraph>& graphs) {
  std::vector<std::pair<Segment, Segment>> out;
  for (const auto& g : graphs)
    for (std::size_t u = 0; u < g.size(); ++u)
      for (std::size_t v = 0; v < g.size(); ++v)
        if (u != v && g.has_edge(u, v)) out.emplace_back(g.nodes[u], g.nodes[v]);
  return out;
}

inline std::vector<TrainInstance> prepare_instances(std::vector<SentenceGraph> graphs, const FeatureSpec& spec,
                                                    const FeatureContext& ctx, bool with_lattice,
                                                    std::size_t workers = 1) {
  std::vector<TrainInstance> out(graphs.size());
  parallel_for(graphs.size(), workers,
               [&](std::size_t i) { out[i] = prepare_instance(std::move(graphs[i]), spec, ctx, with_lattice); });
  return out;
}

/// Statistics, constraints and selected features derived from a training split.
struct FeatureSetup {
  MorphConstraintSet constraints;
  CooccurrenceStats stats;
  FeatureSpec spec;
};

/// Keeps the stats and constraints at stable addresses for the context.
class FeaturePipeline {
 public:
  FeaturePipeline(const MorphSchema& schema, const std::vector<GoldSentence>& train_corpus)
      : setup_{enumerate_constraints(schema), build_stats(TaggedCorpus::from_sentences(train_corpus)), {}},
        ctx_(setup_.stats, setup_.constraints) {}

  FeaturePipeline(MorphConstraintSet mcs, CooccurrenceStats stats, FeatureSpec spec)
      : setup_{std::move(mcs), std::move(stats), std::move(spec)}, ctx_(setup_.stats, setup_.constraints) {}

  FeaturePipeline(const FeaturePipeline&) = delete;
  FeaturePipeline& operator=(const FeaturePipeline&) = delete;

  const FeatureContext& context() const { return ctx_; }
  const FeatureSetup& setup() const { return setup_; }
  const FeatureSpec& spec() const { return setup_.spec; }

  SelectionResult select(const std::vector<SentenceGraph>& train_graphs, const SelectionConfig& cfg) {
    auto r = select_features(edge_pairs(train_graphs), ctx_, cfg);
    setup_.spec = r.spec;
    return r;
  }

 private:
  FeatureSetup setup_;
  FeatureContext ctx_;
};

struct BenchmarkConfig {
  GraphConfig graph;
  SelectionConfig selection{1500, 16, 50, 10000, 1, 1};
  TrainConfig train;
  std::optional<std::size_t> prune_k;  // applied at test-time decoding
};

struct BenchmarkRun {
  TrainResult result;
  EvalReport wpt, wp3t;
  std::vector<SentencePrediction> predictions;
  double seconds = 0.0;
};

/// Trains `cfg.train.variant` on the train split (dev for early stopping) and
/// scores the test split.
inline BenchmarkRun run_benchmark(const SynthBenchmark& bench, const BenchmarkConfig& cfg,
                                  const EpochCallback& on_epoch = {}) {
  const auto t0 = std::chrono::steady_clock::now();
  const std::size_t workers = cfg.train.workers;
  FeaturePipeline fp(bench.schema, bench.train.sentences);
  auto train_graphs = build_graphs(bench.train.spaces, cfg.graph, workers);
  fp.select(train_graphs, cfg.selection);
  const bool lat = is_lattice(cfg.train.variant);
  auto train_set = prepare_instances(std::move(train_graphs), fp.spec(), fp.context(), lat, workers);
  auto dev = prepare_instances(build_graphs(bench.dev.spaces, cfg.graph, workers), fp.spec(), fp.context(), lat,
                               workers);
  std::vector<SentenceGraph> test_graphs = build_graphs(bench.test.spaces, cfg.graph, workers);
  if (cfg.prune_k)
    for (auto& g : test_graphs) g = prune_edges(g, cfg.prune_k);
  auto test = prepare_instances(std::move(test_graphs), fp.spec(), fp.context(), lat, workers);

  EnergyModel init = EnergyModel::initialized(fp.spec().dimension(), cfg.train.hidden, cfg.train.alpha, cfg.train.seed);
  init.spec_fingerprint = fp.spec().fingerprint();
  BenchmarkRun run;
  run.result = train(train_set, cfg.train, std::move(init), DevSet{&dev, &bench.dev.sentences}, on_epoch);
  run.predictions = predict_all(test, run.result.model, cfg.train.variant, workers);
  run.wpt = score(run.predictions, bench.test.sentences, Task::WPT);
  run.wp3t = score(run.predictions, bench.test.sentences, Task::WP3T);
  run.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return run;
}

}  // namespace cliqueseg
