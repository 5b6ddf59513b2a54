#pragma once

// Command-line front end: synth, stats, featgen, train, infer, eval.

#include <CLI11.hpp>

#include <filesystem>
#include <iostream>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "cliqueseg/io.hpp"
#include "cliqueseg/pipeline.hpp"

namespace cliqueseg {

inline constexpr const char* kToolVersion = "0.1.0";

namespace cli {

inline std::string config_fingerprint(const json& config) { return hex64(fnv1a(config.dump())); }

inline json versions() {
  return {{"tool", kToolVersion},
          {"file_format", kFileVersion},
          {"feature_spec", FeatureSpec::kVersion},
          {"model", EnergyModel::kVersion}};
}

/// Records what produced an output: subcommand, full configuration, seed and versions.
inline void write_manifest(const std::string& path, const std::string& subcommand, const json& config,
                           std::optional<std::uint64_t> seed, const std::vector<std::string>& outputs) {
  json m{{"subcommand", subcommand},
         {"config", config},
         {"config_fingerprint", config_fingerprint(config)},
         {"versions", versions()},
         {"outputs", outputs}};
  m["seed"] = seed ? json(*seed) : json(nullptr);
  write_json_file(path, m);
}

inline std::string manifest_path(const std::string& output) { return output + ".manifest.json"; }

inline void ensure_parent(const std::string& path) {
  const auto parent = std::filesystem::path(path).parent_path();
  if (!parent.empty()) std::filesystem::create_directories(parent);
}

inline GraphConfig graph_config(std::size_t overlap, std::size_t gap) {
  GraphConfig g;
  g.allow_overlap = overlap;
  g.allow_gap = gap;
  return g;
}

inline json graph_config_to_json(const GraphConfig& g) {
  return {{"allow_overlap", g.allow_overlap}, {"allow_gap", g.allow_gap}};
}

inline std::unique_ptr<FeaturePipeline> load_pipeline(const std::string& schema_path, const std::string& stats_path,
                                                      const std::optional<std::string>& spec_path) {
  auto mcs = enumerate_constraints(schema_from_json(read_json_file(schema_path), schema_path));
  auto stats = stats_from_json(read_json_file(stats_path), stats_path);
  FeatureSpec spec;
  if (spec_path) spec = feature_spec_from_json(read_json_file(*spec_path), &mcs, *spec_path);
  return std::make_unique<FeaturePipeline>(std::move(mcs), std::move(stats), std::move(spec));
}

struct Options {
  std::size_t workers = 0;
  std::size_t overlap = 1, gap = 1;

  // synth
  SynthConfig synth;
  std::vector<std::string> rules;
  std::string out_dir;

  // shared paths
  std::string corpus, schema, stats, features, candidates, model, out, predictions, gold;
  std::string dev_candidates, dev_gold, log;

  // featgen
  SelectionConfig selection{1500, 16, 50, 10000, 1, 1};

  // train / infer
  TrainConfig train;
  std::string variant = "clique";
  std::optional<std::size_t> prune_k;

  // eval
  std::string task = "both";
  std::string group;
  bool json_out = false;
};

inline std::size_t resolve_workers(std::size_t flag) { return flag > 0 ? flag : default_workers(); }

inline int run_synth(Options& o, std::ostream& out) {
  SynthConfig cfg = o.synth;
  if (!o.rules.empty()) {
    cfg.rules.rules.clear();
    for (const auto& r : o.rules) cfg.rules.rules.push_back(parse_rule(r));
  }
  cfg.workers = resolve_workers(o.workers);
  const auto bench = generate(cfg);
  json config = synth_config_to_json(cfg);
  config.erase("workers");
  const std::string fp = config_fingerprint(config);
  const std::filesystem::path dir(o.out_dir);
  std::filesystem::create_directories(dir);
  std::vector<std::string> outputs;
  write_json_file((dir / "schema.json").string(), schema_to_json(bench.schema));
  outputs.push_back("schema.json");
  const std::pair<const char*, const SynthSplit*> splits[] = {
      {"train", &bench.train}, {"dev", &bench.dev}, {"test", &bench.test}};
  for (const auto& [name, split] : splits) {
    write_corpus((dir / (std::string(name) + ".corpus.jsonl")).string(), split->sentences, fp);
    write_candidates((dir / (std::string(name) + ".candidates.jsonl")).string(), split->spaces, fp);
    outputs.push_back(std::string(name) + ".corpus.jsonl");
    outputs.push_back(std::string(name) + ".candidates.jsonl");
  }
  write_manifest((dir / "manifest.json").string(), "synth", config, cfg.seed, outputs);
  out << "wrote " << bench.train.sentences.size() << "/" << bench.dev.sentences.size() << "/"
      << bench.test.sentences.size() << " sentences to " << dir.string() << "\n";
  return 0;
}

inline int run_stats(Options& o, std::ostream& out) {
  const auto corpus = read_corpus(o.corpus);
  const auto stats = build_stats(TaggedCorpus::from_sentences(corpus));
  ensure_parent(o.out);
  json config{{"corpus", o.corpus}};
  json j = stats_to_json(stats);
  j["config_fingerprint"] = config_fingerprint(config);
  write_json_file(o.out, j);
  write_manifest(manifest_path(o.out), "stats", config, std::nullopt, {o.out});
  out << "counted " << stats.num_sentences << " sentences, " << stats.vocab.size() << " values\n";
  return 0;
}

inline int run_featgen(Options& o, std::ostream& out) {
  auto fp = load_pipeline(o.schema, o.stats, std::nullopt);
  const auto gcfg = graph_config(o.overlap, o.gap);
  o.selection.workers = resolve_workers(o.workers);
  const auto graphs = build_graphs(read_candidates(o.candidates), gcfg, o.selection.workers);
  const auto r = fp->select(graphs, o.selection);
  ensure_parent(o.out);
  json config{{"schema", o.schema},
              {"stats", o.stats},
              {"candidates", o.candidates},
              {"graph", graph_config_to_json(gcfg)},
              {"k", o.selection.k},
              {"bins", o.selection.bins},
              {"min_samples", o.selection.min_samples},
              {"max_samples", o.selection.max_samples}};
  write_json_file(o.out, feature_spec_to_json(r.spec));
  write_manifest(manifest_path(o.out), "featgen", config, o.selection.seed, {o.out});
  out << "selected " << r.spec.dimension() << " of " << 3 * fp->setup().constraints.size() * 3
      << " templates\n";
  return 0;
}

inline int run_train(Options& o, std::ostream& out, std::ostream& err) {
  auto fp = load_pipeline(o.schema, o.stats, o.features);
  const auto gcfg = graph_config(o.overlap, o.gap);
  TrainConfig cfg = o.train;
  cfg.variant = parse_variant(o.variant);
  cfg.workers = resolve_workers(o.workers);
  cfg.validate();
  const bool lat = is_lattice(cfg.variant);
  auto data = prepare_instances(build_graphs(read_candidates(o.candidates), gcfg, cfg.workers), fp->spec(),
                                fp->context(), lat, cfg.workers);
  std::vector<TrainInstance> dev;
  std::vector<GoldSentence> dev_gold;
  if (!o.dev_candidates.empty()) {
    if (o.dev_gold.empty()) throw usage_error("--dev-candidates needs --dev-gold");
    dev = prepare_instances(build_graphs(read_candidates(o.dev_candidates), gcfg, cfg.workers), fp->spec(),
                            fp->context(), lat, cfg.workers);
    dev_gold = read_corpus(o.dev_gold);
  }
  EnergyModel init = EnergyModel::initialized(fp->spec().dimension(), cfg.hidden, cfg.alpha, cfg.seed);
  init.spec_fingerprint = fp->spec().fingerprint();

  std::optional<AtomicWriter> log;
  if (!o.log.empty()) {
    ensure_parent(o.log);
    log.emplace(o.log);
  }
  auto result = train(
      data, cfg, std::move(init), dev.empty() ? DevSet{} : DevSet{&dev, &dev_gold},
      [&](const EpochRecord& e) {
        const auto j = epoch_to_json(e);
        err << j.dump() << "\n";
        if (log) log->stream() << j.dump() << "\n";
      },
      [&](const std::string& w) { err << "warning: " << w << "\n"; });
  ensure_parent(o.model);
  write_json_file(o.model, model_to_json(result.model));
  if (log) log->commit();
  json config{{"schema", o.schema},         {"stats", o.stats}, {"features", o.features},
              {"candidates", o.candidates}, {"graph", graph_config_to_json(gcfg)},
              {"train", train_config_to_json(cfg)}};
  config["train"].erase("workers");
  config["dev_candidates"] = o.dev_candidates;
  write_manifest(manifest_path(o.model), "train", config, cfg.seed, {o.model});
  out << "trained " << variant_name(cfg.variant) << " on " << data.size() - result.skipped.size() << " sentences ("
      << result.skipped.size() << " skipped), best epoch " << result.best_epoch << "\n";
  return 0;
}

inline int run_infer(Options& o, std::ostream& out, std::ostream& err) {
  auto fp = load_pipeline(o.schema, o.stats, o.features);
  const auto model = model_from_json(read_json_file(o.model), fp->spec().fingerprint());
  const auto gcfg = graph_config(o.overlap, o.gap);
  const Variant variant = parse_variant(o.variant);
  const std::size_t workers = resolve_workers(o.workers);
  auto graphs = build_graphs(read_candidates(o.candidates), gcfg, workers);
  if (o.prune_k) {
    std::size_t before = 0, after = 0;
    for (auto& g : graphs) {
      before += g.edge_count();
      g = prune_edges(g, o.prune_k);
      after += g.edge_count();
    }
    err << "prune-k " << *o.prune_k << ": edges " << before << " -> " << after << "\n";
  }
  const auto data = prepare_instances(std::move(graphs), fp->spec(), fp->context(), is_lattice(variant), workers);
  const auto preds = predict_all(data, model, variant, workers);
  json config{{"schema", o.schema},       {"stats", o.stats},         {"features", o.features},
              {"model", o.model},         {"candidates", o.candidates}, {"variant", variant_name(variant)},
              {"graph", graph_config_to_json(gcfg)}};
  config["prune_k"] = o.prune_k ? json(*o.prune_k) : json(nullptr);
  ensure_parent(o.out);
  write_predictions(o.out, preds, config_fingerprint(config));
  write_manifest(manifest_path(o.out), "infer", config, std::nullopt, {o.out});
  out << "decoded " << preds.size() << " sentences\n";
  return 0;
}

inline int run_eval(Options& o, std::ostream& out) {
  const auto preds = read_predictions(o.predictions);
  const auto golds = read_corpus(o.gold);
  std::vector<Task> tasks;
  if (o.task == "both" || o.task == "BOTH") {
    tasks = {Task::WPT, Task::WP3T};
  } else {
    tasks = {parse_task(o.task)};
  }
  json result = json::object();
  for (Task t : tasks) {
    const auto report = score(preds, golds, t);
    result[task_name(t)] = report_to_json(report);
    if (!o.json_out) out << format_report(report);
  }
  if (!o.group.empty()) {
    const Grouping grouping = parse_grouping(o.group);
    GroupingInputs inputs;
    std::optional<MorphConstraintSet> mcs;
    if (grouping == Grouping::CoarsePos) {
      if (o.schema.empty()) throw usage_error("--group pos needs --schema");
      mcs = enumerate_constraints(schema_from_json(read_json_file(o.schema), o.schema));
      inputs.pos_of = [&](const Segment& s) { return mcs->paradigm_of(s.morph_class); };
    } else if (grouping == Grouping::NodeCount) {
      if (o.candidates.empty()) throw usage_error("--group nodes needs --candidates");
      for (const auto& g : build_graphs(read_candidates(o.candidates), graph_config(o.overlap, o.gap)))
        inputs.node_counts[g.id] = g.size();
    }
    json groups = json::object();
    for (Task t : tasks) {
      const auto slices = grouped_report(preds, golds, t, grouping, inputs);
      json arr = json::array();
      for (const auto& s : slices) arr.push_back(slice_to_json(s, grouping));
      groups[task_name(t)] = arr;
      if (!o.json_out) out << format_slices(slices, grouping);
    }
    result["groups"] = groups;
  }
  if (o.json_out) out << result.dump(1) << "\n";
  if (!o.out.empty()) {
    ensure_parent(o.out);
    write_json_file(o.out, result);
    json config{{"predictions", o.predictions}, {"gold", o.gold}, {"task", o.task}, {"group", o.group}};
    write_manifest(manifest_path(o.out), "eval", config, std::nullopt, {o.out});
  }
  return 0;
}

}  // namespace cli

/// Runs the tool; returns 0 on success, 1 on usage errors, 2 on data errors
/// and 3 on numeric failures.
inline int cli_main(int argc, const char* const* argv, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
  cli::Options o;
  CLI::App app{"Joint word segmentation and morphological tagging with clique energy models", "cliqueseg"};
  app.set_version_flag("--version", kToolVersion);
  app.require_subcommand(1);
  app.fallthrough();
  app.add_option("--workers", o.workers, "Worker threads (default: CLIQUESEG_WORKERS or the core count)");

  auto add_graph = [&](CLI::App* c) {
    c->add_option("--allow-overlap", o.overlap, "Characters two chained words may share")->capture_default_str();
    c->add_option("--allow-gap", o.gap, "Characters allowed between chained words")->capture_default_str();
  };
  auto add_features = [&](CLI::App* c) {
    c->add_option("--schema", o.schema, "Morphological schema (JSON)")->required()->check(CLI::ExistingFile);
    c->add_option("--stats", o.stats, "Co-occurrence statistics (JSON)")->required()->check(CLI::ExistingFile);
  };

  auto* synth = app.add_subcommand("synth", "Generate a synthetic benchmark");
  synth->add_option("--out", o.out_dir, "Output directory")->required();
  synth->add_option("--seed", o.synth.seed)->capture_default_str();
  synth->add_option("--lemmas", o.synth.lemmas)->capture_default_str();
  synth->add_option("--train", o.synth.train)->capture_default_str();
  synth->add_option("--dev", o.synth.dev)->capture_default_str();
  synth->add_option("--test", o.synth.test)->capture_default_str();
  synth->add_option("--min-words", o.synth.min_words)->capture_default_str();
  synth->add_option("--max-words", o.synth.max_words)->capture_default_str();
  synth->add_option("--syncretism", o.synth.syncretism)->check(CLI::Range(0.0, 1.0))->capture_default_str();
  synth->add_option("--homonymy", o.synth.homonymy)->check(CLI::Range(0.0, 1.0))->capture_default_str();
  synth->add_option("--topics", o.synth.topics)->capture_default_str();
  synth->add_option("--topic-purity", o.synth.topic_purity)->check(CLI::Range(0.0, 1.0))->capture_default_str();
  synth->add_option("--agreement", o.synth.agreement)->check(CLI::Range(0.0, 1.0))->capture_default_str();
  synth->add_option("--rule", o.rules, "Sandhi rule u|v>f (repeatable; replaces the defaults)");

  auto* stats = app.add_subcommand("stats", "Count co-occurrences in a tagged corpus");
  stats->add_option("--corpus", o.corpus, "Tagged corpus (JSONL)")->required()->check(CLI::ExistingFile);
  stats->add_option("--out", o.out, "Statistics file")->required();

  auto* featgen = app.add_subcommand("featgen", "Select edge feature templates");
  add_features(featgen);
  add_graph(featgen);
  featgen->add_option("--candidates", o.candidates, "Training candidate spaces")->required()->check(CLI::ExistingFile);
  featgen->add_option("--out", o.out, "Feature spec file")->required();
  featgen->add_option("-k,--k", o.selection.k, "Templates to keep")->capture_default_str();
  featgen->add_option("--bins", o.selection.bins)->capture_default_str();
  featgen->add_option("--min-samples", o.selection.min_samples)->capture_default_str();
  featgen->add_option("--max-samples", o.selection.max_samples)->capture_default_str();
  featgen->add_option("--seed", o.selection.seed)->capture_default_str();

  auto* train = app.add_subcommand("train", "Train an energy model");
  add_features(train);
  add_graph(train);
  train->add_option("--features", o.features, "Feature spec")->required()->check(CLI::ExistingFile);
  train->add_option("--candidates", o.candidates, "Training candidate spaces with gold")
      ->required()
      ->check(CLI::ExistingFile);
  train->add_option("--dev-candidates", o.dev_candidates, "Dev candidate spaces for early stopping")
      ->check(CLI::ExistingFile);
  train->add_option("--dev-gold", o.dev_gold, "Dev tagged corpus")->check(CLI::ExistingFile);
  train->add_option("--out", o.model, "Model file")->required();
  train->add_option("--log", o.log, "Per-epoch log (JSONL)");
  train->add_option("--variant", o.variant, "clique, tree, lattice or lattice_beam")->capture_default_str();
  train->add_option("--lr", o.train.learning_rate)->capture_default_str();
  train->add_option("--epochs", o.train.epochs)->capture_default_str();
  train->add_option("--hidden", o.train.hidden)->capture_default_str();
  train->add_option("--alpha", o.train.alpha, "Leaky ReLU slope")->capture_default_str();
  train->add_option("--beam", o.train.beam)->capture_default_str();
  train->add_option("--patience", o.train.patience)->capture_default_str();
  train->add_option("--seed", o.train.seed)->capture_default_str();

  auto* infer = app.add_subcommand("infer", "Decode candidate spaces with a trained model");
  add_features(infer);
  add_graph(infer);
  infer->add_option("--features", o.features, "Feature spec")->required()->check(CLI::ExistingFile);
  infer->add_option("--model", o.model, "Model file")->required()->check(CLI::ExistingFile);
  infer->add_option("--candidates", o.candidates, "Candidate spaces")->required()->check(CLI::ExistingFile);
  infer->add_option("--out", o.out, "Predictions file")->required();
  infer->add_option("--variant", o.variant, "clique, tree, lattice or lattice_beam")->capture_default_str();
  infer->add_option("--prune-k", o.prune_k, "Keep only edges between nodes within k characters");

  auto* eval = app.add_subcommand("eval", "Score predictions against gold");
  eval->add_option("--predictions", o.predictions)->required()->check(CLI::ExistingFile);
  eval->add_option("--gold", o.gold, "Tagged corpus")->required()->check(CLI::ExistingFile);
  eval->add_option("--task", o.task, "wpt, wp3t or both")->capture_default_str();
  eval->add_option("--group", o.group, "words, pos or nodes");
  eval->add_option("--schema", o.schema, "Schema (for --group pos)")->check(CLI::ExistingFile);
  eval->add_option("--candidates", o.candidates, "Candidate spaces (for --group nodes)")->check(CLI::ExistingFile);
  add_graph(eval);
  eval->add_option("--out", o.out, "Write the report as JSON");
  eval->add_flag("--json", o.json_out, "Print JSON instead of tables");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? 0 : 1;
  }

  try {
    if (*synth) return cli::run_synth(o, out);
    if (*stats) return cli::run_stats(o, out);
    if (*featgen) return cli::run_featgen(o, out);
    if (*train) return cli::run_train(o, out, err);
    if (*infer) return cli::run_infer(o, out, err);
    if (*eval) return cli::run_eval(o, out);
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return static_cast<int>(e.kind());
  } catch (const std::filesystem::filesystem_error& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  }
  return 1;
}

inline int cli_main(const std::vector<std::string>& args, std::ostream& out = std::cout,
                    std::ostream& err = std::cerr) {
  std::vector<const char*> argv{"cliqueseg"};
  for (const auto& a : args) argv.push_back(a.c_str());
  return cli_main(static_cast<int>(argv.size()), argv.data(), out, err);
}

}  // namespace cliqueseg
