#pragma once

// A toy agglutinating language with juncture rewriting ("sandhi"),
// syncretism and homonymy. Produces tagged corpora with known gold analyses
// and candidate spaces from a lexicon-driven analyzer that inverts the rules.
//
// Juncture model: when the first rule u|v -> f matches the last character of
// the left word and the first character of the right word, both characters are
// replaced by f and the words share that one character (a 1-character span
// overlap). Otherwise a space separates the words (a 1-character gap).

#include <algorithm>
#include <cstdint>
#include <map>
#include <optional>
#include <random>
#include <set>
#include <string>
#include <tuple>
#include <unordered_map>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "cliqueseg/core.hpp"
#include "cliqueseg/corpus.hpp"
#include "cliqueseg/graph.hpp"
#include "cliqueseg/parallel.hpp"

namespace cliqueseg {

struct SandhiRule {
  char u = 0;  // last character of the left word
  char v = 0;  // first character of the right word
  char f = 0;  // replacement for both

  bool operator==(const SandhiRule&) const = default;
};

struct SandhiRuleSet {
  std::vector<SandhiRule> rules;

  static SandhiRuleSet defaults() {
    return {{{'a', 'a', 'a'}, {'a', 'i', 'e'}, {'a', 'u', 'o'}, {'i', 'a', 'y'}, {'u', 'a', 'v'}}};
  }

  /// Index of the first rule applying between two words, if any.
  std::optional<std::size_t> first_rule(const std::string& left, const std::string& right) const {
    if (left.empty() || right.empty()) return std::nullopt;
    for (std::size_t i = 0; i < rules.size(); ++i)
      if (rules[i].u == left.back() && rules[i].v == right.front()) return i;
    return std::nullopt;
  }
};

/// Joins surfaces left to right; returns the raw string and each word's span.
inline std::pair<std::string, std::vector<std::pair<std::size_t, std::size_t>>> apply_sandhi(
    const std::vector<std::string>& words, const SandhiRuleSet& rules) {
  std::string raw;
  std::vector<std::pair<std::size_t, std::size_t>> spans;
  for (std::size_t i = 0; i < words.size(); ++i) {
    const auto& w = words[i];
    if (w.empty()) throw data_error("empty word in sandhi input");
    if (i == 0) {
      spans.emplace_back(0, w.size());
      raw = w;
      continue;
    }
    if (auto r = rules.first_rule(words[i - 1], w)) {
      raw.back() = rules.rules[*r].f;
      const std::size_t start = raw.size() - 1;
      raw.append(w, 1, std::string::npos);
      spans.emplace_back(start, raw.size());
    } else {
      raw.push_back(' ');
      const std::size_t start = raw.size();
      raw += w;
      spans.emplace_back(start, raw.size());
    }
  }
  return {raw, spans};
}

// ---------------------------------------------------------------------------
// Schemas

/// 20 classes: nouns (case x gender x number), verbs (person x number),
/// one indeclinable class and one compound class.
inline MorphSchema default_synth_schema() {
  return {{
      {"noun", {{"case", {"nom", "acc", "gen"}}, {"gender", {"m", "f"}}, {"number", {"sg", "pl"}}}},
      {"verb", {{"person", {"1", "2", "3"}}, {"number", {"sg", "pl"}}}},
      {"indeclinable", {{"indecl", {"adv"}}}},
      {"compound", {{"cpd", {"stem"}}}},
  }};
}

/// Sanskrit-like inventory: 8 cases x 3 genders x 3 numbers for nominals,
/// 7 tense/mood forms x 2 voices x 3 persons x 3 numbers for verbs, four
/// indeclinable types and a compound class. Yields 528 constraints.
inline MorphSchema sanskrit_like_schema() {
  return {{
      {"noun",
       {{"case", {"nom", "acc", "ins", "dat", "abl", "gen", "loc", "voc"}},
        {"gender", {"m", "f", "n"}},
        {"number", {"sg", "du", "pl"}}}},
      {"verb",
       {{"tense", {"pres", "impf", "opt", "impv", "fut", "perf", "aor"}},
        {"voice", {"act", "mid"}},
        {"person", {"1", "2", "3"}},
        {"number", {"sg", "du", "pl"}}}},
      {"indeclinable", {{"indecl", {"adv", "conj", "part", "prep"}}}},
      {"compound", {{"cpd", {"iic"}}}},
  }};
}

// ---------------------------------------------------------------------------
// Lexicon

struct SynthConfig {
  std::uint64_t seed = 1;
  std::size_t lemmas = 200;
  std::size_t train = 500, dev = 100, test = 100;
  std::size_t min_words = 3, max_words = 12;
  double syncretism = 0.2;
  double homonymy = 0.1;
  std::size_t topics = 10;
  double topic_purity = 0.8;
  double agreement = 0.85;
  SandhiRuleSet rules = SandhiRuleSet::defaults();
  std::size_t workers = 1;
};

inline nlohmann::json synth_config_to_json(const SynthConfig& c) {
  nlohmann::json rules = nlohmann::json::array();
  for (const auto& r : c.rules.rules)
    rules.push_back(std::string(1, r.u) + "|" + std::string(1, r.v) + ">" + std::string(1, r.f));
  return {{"seed", c.seed},           {"lemmas", c.lemmas},       {"train", c.train},
          {"dev", c.dev},             {"test", c.test},           {"min_words", c.min_words},
          {"max_words", c.max_words}, {"syncretism", c.syncretism}, {"homonymy", c.homonymy},
          {"topics", c.topics},       {"topic_purity", c.topic_purity}, {"agreement", c.agreement},
          {"rules", rules}};
}

/// Parses "u|v>f" rule strings.
inline SandhiRule parse_rule(const std::string& s) {
  if (s.size() != 5 || s[1] != '|' || s[3] != '>')
    throw usage_error("malformed sandhi rule '" + s + "' (expected u|v>f with single characters)");
  if (s[0] == ' ' || s[2] == ' ' || s[4] == ' ') throw usage_error("sandhi rules cannot involve spaces");
  return {s[0], s[2], s[4]};
}

struct LexemeEntry {
  std::string name;
  std::string pos;  // paradigm name
  std::string gender;
  std::size_t topic = 0;
  std::vector<std::string> classes;   // class labels this lemma inflects for
  std::vector<std::string> surfaces;  // parallel to classes
  std::vector<Segment> parts;         // compounds: the two noun forms it fuses
};

struct Analysis {
  std::string lemma;
  std::string morph_class;
  bool operator==(const Analysis&) const = default;
  auto operator<=>(const Analysis&) const = default;
};

struct ToyLexicon {
  std::vector<LexemeEntry> lemmas;
  std::map<std::string, std::vector<Analysis>> analyses;  // surface -> analyses, sorted
  std::size_t min_length = 0, max_length = 0;

  const LexemeEntry* find(const std::string& name) const {
    for (const auto& l : lemmas)
      if (l.name == name) return &l;
    return nullptr;
  }

  void index() {
    analyses.clear();
    min_length = SIZE_MAX;
    max_length = 0;
    for (const auto& l : lemmas) {
      for (std::size_t i = 0; i < l.classes.size(); ++i) {
        analyses[l.surfaces[i]].push_back({l.name, l.classes[i]});
        min_length = std::min(min_length, l.surfaces[i].size());
        max_length = std::max(max_length, l.surfaces[i].size());
      }
    }
    for (auto& [s, a] : analyses) {
      std::sort(a.begin(), a.end());
      a.erase(std::unique(a.begin(), a.end()), a.end());
    }
    if (lemmas.empty()) min_length = 0;
  }
};

namespace detail {

inline const char* kConsonants = "ktpmnrsd";
inline const char* kStemVowels = "aiueo";
inline const char* kInitialVowels = "aiu";

/// Suffix per class label; gender is inherent to a noun lemma.
inline const std::map<std::string, std::string>& noun_suffixes(const std::string& gender) {
  static const std::map<std::string, std::string> m{
      {"case=nom|gender=m|number=sg", "ak"},  {"case=acc|gender=m|number=sg", "am"},
      {"case=gen|gender=m|number=sg", "asi"}, {"case=nom|gender=m|number=pl", "an"},
      {"case=acc|gender=m|number=pl", "anu"}, {"case=gen|gender=m|number=pl", "anam"}};
  static const std::map<std::string, std::string> f{
      {"case=nom|gender=f|number=sg", "i"},   {"case=acc|gender=f|number=sg", "im"},
      {"case=gen|gender=f|number=sg", "ayu"}, {"case=nom|gender=f|number=pl", "is"},
      {"case=acc|gender=f|number=pl", "ira"}, {"case=gen|gender=f|number=pl", "inam"}};
  return gender == "m" ? m : f;
}

inline const std::map<std::string, std::string>& verb_suffixes() {
  static const std::map<std::string, std::string> v{
      {"number=sg|person=1", "ami"}, {"number=sg|person=2", "asi"}, {"number=sg|person=3", "ati"},
      {"number=pl|person=1", "amu"}, {"number=pl|person=2", "atha"}, {"number=pl|person=3", "anti"}};
  return v;
}

inline constexpr const char* kIndeclClass = "indecl=adv";
inline constexpr const char* kCompoundClass = "cpd=stem";

template <class Rng>
std::string random_stem(Rng& rng) {
  std::string s;
  if (uniform01(rng) < 0.5) s += kInitialVowels[uniform_index(rng, 3)];
  s += kConsonants[uniform_index(rng, 8)];
  s += kStemVowels[uniform_index(rng, 5)];
  s += kConsonants[uniform_index(rng, 8)];
  return s;
}

}  // namespace detail

/// Builds the lexicon: 50% nouns, 25% verbs, 15% indeclinables, 10%
/// compounds (fusions of two noun forms, which the analyzer can also read as
/// two words).
template <class Rng>
ToyLexicon build_lexicon(const SynthConfig& cfg, Rng& rng, const SandhiRuleSet& rules) {
  if (cfg.lemmas < 4) throw usage_error("the synthetic lexicon needs at least 4 lemmas");
  if (cfg.topics == 0) throw usage_error("topic count must be at least 1");
  ToyLexicon lex;
  const std::size_t n_noun = std::max<std::size_t>(1, cfg.lemmas / 2);
  const std::size_t n_verb = std::max<std::size_t>(1, cfg.lemmas / 4);
  const std::size_t n_indecl = std::max<std::size_t>(1, cfg.lemmas * 15 / 100);
  const std::size_t n_cpd = cfg.lemmas > n_noun + n_verb + n_indecl ? cfg.lemmas - n_noun - n_verb - n_indecl : 0;

  std::set<std::string> used_stems;
  std::map<std::string, std::vector<std::string>> stems_by_kind;  // "noun/m" -> stems
  std::map<std::string, std::size_t> name_count;
  auto fresh_stem = [&](const std::string& kind) {
    auto& pool = stems_by_kind[kind];
    if (!pool.empty() && uniform01(rng) < cfg.homonymy) return pool[uniform_index(rng, pool.size())];
    for (int tries = 0; tries < 10000; ++tries) {
      std::string s = detail::random_stem(rng);
      if (used_stems.insert(s).second) {
        pool.push_back(s);
        return s;
      }
    }
    throw usage_error("cannot draw enough distinct stems for the requested lexicon size");
  };
  auto lemma_name = [&](const std::string& stem) {
    const std::size_t k = ++name_count[stem];
    return k == 1 ? stem : stem + "#" + std::to_string(k);
  };
  auto syncretize = [&](LexemeEntry& e) {
    for (std::size_t i = 1; i < e.surfaces.size(); ++i)
      if (uniform01(rng) < cfg.syncretism) e.surfaces[i] = e.surfaces[uniform_index(rng, i)];
  };
  auto topic = [&](std::size_t i) { return i % cfg.topics; };

  for (std::size_t i = 0; i < n_noun; ++i) {
    LexemeEntry e;
    e.pos = "noun";
    e.gender = uniform01(rng) < 0.5 ? "m" : "f";
    const std::string stem = fresh_stem("noun/" + e.gender);
    e.name = lemma_name(stem);
    e.topic = topic(i);
    for (const auto& [cls, suf] : detail::noun_suffixes(e.gender)) {
      e.classes.push_back(cls);
      e.surfaces.push_back(stem + suf);
    }
    syncretize(e);
    lex.lemmas.push_back(std::move(e));
  }
  for (std::size_t i = 0; i < n_verb; ++i) {
    LexemeEntry e;
    e.pos = "verb";
    const std::string stem = fresh_stem("verb");
    e.name = lemma_name(stem);
    e.topic = topic(i);
    for (const auto& [cls, suf] : detail::verb_suffixes()) {
      e.classes.push_back(cls);
      e.surfaces.push_back(stem + suf);
    }
    syncretize(e);
    lex.lemmas.push_back(std::move(e));
  }
  for (std::size_t i = 0; i < n_indecl; ++i) {
    LexemeEntry e;
    e.pos = "indeclinable";
    const std::string stem = fresh_stem("indecl");
    e.name = lemma_name(stem);
    e.topic = topic(i);
    e.classes.push_back(detail::kIndeclClass);
    e.surfaces.push_back(stem + "u");
    lex.lemmas.push_back(std::move(e));
  }
  for (std::size_t i = 0; i < n_cpd; ++i) {
    // Members share a topic; the compound itself belongs to a different one,
    // so the fused and the two-word reading are told apart by context.
    for (int tries = 0; tries < 1000; ++tries) {
      const auto& a = lex.lemmas[uniform_index(rng, n_noun)];
      const auto& b = lex.lemmas[uniform_index(rng, n_noun)];
      const std::size_t ia = uniform_index(rng, a.surfaces.size());
      const std::size_t ib = uniform_index(rng, b.surfaces.size());
      const auto& sa = a.surfaces[ia];
      const auto& sb = b.surfaces[ib];
      if (&a == &b || (cfg.topics > 1 && a.topic != b.topic) || !rules.first_rule(sa, sb)) continue;
      LexemeEntry e;
      e.pos = "compound";
      e.name = lemma_name(a.name + "+" + b.name);
      e.topic = cfg.topics > 1 ? (a.topic + 1 + uniform_index(rng, cfg.topics - 1)) % cfg.topics : a.topic;
      e.classes.push_back(detail::kCompoundClass);
      e.surfaces.push_back(apply_sandhi({sa, sb}, rules).first);
      e.parts = {{sa, a.name, a.classes[ia], 0, 0}, {sb, b.name, b.classes[ib], 0, 0}};
      lex.lemmas.push_back(std::move(e));
      break;
    }
  }
  lex.index();
  return lex;
}

// ---------------------------------------------------------------------------
// Analyzer

/// One way a lexicon surface can occupy [start, end) of the raw string. The
/// left and right sides record how the word meets its neighbours: the string
/// boundary, a space, or a rule whose replacement character sits at the edge.
struct Occurrence {
  static constexpr std::size_t kBoundary = SIZE_MAX;      // start or end of input
  static constexpr std::size_t kSpace = SIZE_MAX - 1;     // adjacent space
  std::string surface;
  std::size_t start = 0, end = 0;
  std::size_t left = kBoundary;   // rule index, kSpace or kBoundary
  std::size_t right = kBoundary;  // rule index, kSpace or kBoundary
};

struct AnalyzerResult {
  std::vector<Occurrence> occurrences;       // on at least one full path
  std::vector<std::vector<std::size_t>> next;  // occurrence -> successors (path links)
  std::vector<std::size_t> initial;          // occurrences starting a path
  bool analyzable = false;
};

namespace detail {

inline bool links(const Occurrence& a, const Occurrence& b, const SandhiRuleSet& rules) {
  const auto r = rules.first_rule(a.surface, b.surface);
  if (a.right == Occurrence::kSpace && b.left == Occurrence::kSpace) return b.start == a.end + 1 && !r;
  if (a.right < rules.rules.size() && a.right == b.left) return b.start + 1 == a.end && r && *r == a.right;
  return false;
}

}  // namespace detail

/// Word-occurrence DAG of `raw` restricted to occurrences on some complete
/// start-to-end path. Links respect forward determinism: two words join
/// through rule r only if r is the first rule applying to them, and through a
/// space only if no rule applies.
inline AnalyzerResult analyze_occurrences(const std::string& raw, const ToyLexicon& lex, const SandhiRuleSet& rules) {
  AnalyzerResult res;
  const std::size_t n = raw.size();
  if (n == 0) return res;
  std::vector<Occurrence> occ;
  for (const auto& [surface, _] : lex.analyses) {
    const std::size_t L = surface.size();
    if (L < 2 || L > n) continue;  // one-character words are not supported
    for (std::size_t s = 0; s + L <= n; ++s) {
      const std::size_t e = s + L;
      // Interior characters must match exactly.
      bool ok = true;
      for (std::size_t k = 1; k + 1 < L && ok; ++k) ok = raw[s + k] == surface[k];
      if (!ok) continue;
      std::vector<std::size_t> lefts, rights;
      if (s == 0) {
        if (raw[0] == surface[0]) lefts.push_back(Occurrence::kBoundary);
      } else {
        if (raw[s - 1] == ' ' && raw[s] == surface[0]) lefts.push_back(Occurrence::kSpace);
        for (std::size_t r = 0; r < rules.rules.size(); ++r)
          if (rules.rules[r].f == raw[s] && rules.rules[r].v == surface[0]) lefts.push_back(r);
      }
      if (e == n) {
        if (raw[n - 1] == surface[L - 1]) rights.push_back(Occurrence::kBoundary);
      } else {
        if (raw[e] == ' ' && raw[e - 1] == surface[L - 1]) rights.push_back(Occurrence::kSpace);
        for (std::size_t r = 0; r < rules.rules.size(); ++r)
          if (rules.rules[r].f == raw[e - 1] && rules.rules[r].u == surface[L - 1]) rights.push_back(r);
      }
      for (auto l : lefts)
        for (auto r : rights) occ.push_back({surface, s, e, l, r});
    }
  }
  std::sort(occ.begin(), occ.end(), [](const Occurrence& a, const Occurrence& b) {
    return std::tie(a.start, a.end, a.surface, a.left, a.right) < std::tie(b.start, b.end, b.surface, b.left, b.right);
  });

  const std::size_t m = occ.size();
  std::vector<std::vector<std::size_t>> next(m);
  std::unordered_map<std::size_t, std::vector<std::size_t>> by_start;
  for (std::size_t i = 0; i < m; ++i) by_start[occ[i].start].push_back(i);
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t s : {occ[i].end - 1, occ[i].end + 1}) {
      auto it = by_start.find(s);
      if (it == by_start.end()) continue;
      for (std::size_t j : it->second)
        if (detail::links(occ[i], occ[j], rules)) next[i].push_back(j);
    }
    std::sort(next[i].begin(), next[i].end());
  }
  // Index order is topological (successors start later).
  std::vector<char> fwd(m, 0), bwd(m, 0);
  for (std::size_t i = 0; i < m; ++i)
    if (occ[i].start == 0 && occ[i].left == Occurrence::kBoundary) fwd[i] = 1;
  for (std::size_t i = 0; i < m; ++i)
    if (fwd[i])
      for (auto j : next[i]) fwd[j] = 1;
  for (std::size_t i = m; i-- > 0;) {
    if (occ[i].end == n && occ[i].right == Occurrence::kBoundary) bwd[i] = 1;
    for (auto j : next[i]) bwd[i] = bwd[i] || bwd[j];
  }
  std::vector<std::size_t> remap(m, SIZE_MAX);
  for (std::size_t i = 0; i < m; ++i) {
    if (fwd[i] && bwd[i]) {
      remap[i] = res.occurrences.size();
      res.occurrences.push_back(occ[i]);
    }
  }
  res.next.resize(res.occurrences.size());
  for (std::size_t i = 0; i < m; ++i) {
    if (remap[i] == SIZE_MAX) continue;
    for (auto j : next[i])
      if (remap[j] != SIZE_MAX) res.next[remap[i]].push_back(remap[j]);
    if (occ[i].start == 0 && occ[i].left == Occurrence::kBoundary) res.initial.push_back(remap[i]);
  }
  res.analyzable = !res.initial.empty();
  return res;
}

/// Candidate space of `raw`: every surface occurrence on some complete
/// analysis, expanded into one segment per (lemma, class) analysis. Sorted by
/// (start, end, surface, lemma, class). Empty when `raw` is not analyzable.
inline CandidateSpace analyze(const std::string& id, const std::string& raw, const ToyLexicon& lex,
                              const SandhiRuleSet& rules) {
  CandidateSpace cs;
  cs.id = id;
  cs.input = raw;
  const auto res = analyze_occurrences(raw, lex, rules);
  std::set<std::tuple<std::size_t, std::size_t, std::string>> spans;
  for (const auto& o : res.occurrences) spans.insert({o.start, o.end, o.surface});
  for (const auto& [s, e, surface] : spans)
    for (const auto& a : lex.analyses.at(surface)) cs.segments.push_back({surface, a.lemma, a.morph_class, s, e});
  return cs;
}

/// Up to `limit` complete analyses of `raw` as occurrence sequences.
inline std::vector<std::vector<Occurrence>> analysis_paths(const std::string& raw, const ToyLexicon& lex,
                                                           const SandhiRuleSet& rules, std::size_t limit = 1000) {
  const auto res = analyze_occurrences(raw, lex, rules);
  std::vector<std::vector<Occurrence>> out;
  std::vector<std::size_t> path;
  auto dfs = [&](auto&& self, std::size_t i) -> void {
    if (out.size() >= limit) return;
    path.push_back(i);
    const auto& o = res.occurrences[i];
    if (o.end == raw.size() && o.right == Occurrence::kBoundary) {
      std::vector<Occurrence> p;
      for (auto k : path) p.push_back(res.occurrences[k]);
      out.push_back(std::move(p));
    }
    for (auto j : res.next[i]) self(self, j);
    path.pop_back();
  };
  for (auto i : res.initial) dfs(dfs, i);
  return out;
}

// ---------------------------------------------------------------------------
// Corpus generation

struct SynthSplit {
  std::vector<GoldSentence> sentences;
  std::vector<CandidateSpace> spaces;  // parallel to sentences, gold indices set
};

struct SynthBenchmark {
  SynthConfig config;
  MorphSchema schema;
  ToyLexicon lexicon;
  SynthSplit train, dev, test;
};

namespace detail {

struct LatentSentence {
  std::size_t topic;
  std::string number;
  std::string person;
  std::string case_;
};

template <class Rng>
const LexemeEntry& pick_lemma(Rng& rng, const std::vector<const LexemeEntry*>& pool,
                              const std::vector<const LexemeEntry*>& in_topic, double purity) {
  if (!in_topic.empty() && uniform01(rng) < purity) return *in_topic[uniform_index(rng, in_topic.size())];
  return *pool[uniform_index(rng, pool.size())];
}

inline std::string agree(const std::string& want, const std::vector<std::string>& values, double p, double u,
                         std::size_t pick) {
  if (u < p) return want;
  return values[pick % values.size()];
}

}  // namespace detail

/// Samples one sentence's gold words. Deterministic in `seed`.
inline std::vector<Segment> sample_words(const ToyLexicon& lex, const SynthConfig& cfg, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  static const std::vector<std::string> cases{"nom", "acc", "gen"};
  static const std::vector<std::string> numbers{"sg", "pl"};
  static const std::vector<std::string> persons{"1", "2", "3"};
  // Each topic has a preferred case, number and person, so that lemmas of a
  // topic co-occur with characteristic morphology.
  const std::size_t t = uniform_index(rng, cfg.topics);
  const bool typical = uniform01(rng) < cfg.topic_purity;
  detail::LatentSentence z{t, numbers[typical ? (t / 3) % 2 : uniform_index(rng, 2)],
                           persons[typical ? (t / 2) % 3 : uniform_index(rng, 3)],
                           cases[typical ? t % 3 : uniform_index(rng, 3)]};
  std::map<std::string, std::vector<const LexemeEntry*>> pool, in_topic;
  for (const auto& l : lex.lemmas) {
    pool[l.pos].push_back(&l);
    if (l.topic == z.topic) in_topic[l.pos].push_back(&l);
  }
  const std::size_t len = cfg.min_words + uniform_index(rng, cfg.max_words - cfg.min_words + 1);
  // A compound slot holds either a compound or the two-word phrase sharing its
  // surface; phrases belong to the topic of their members.
  std::vector<std::vector<Segment>> fused, fused_in_topic;
  for (const auto& l : lex.lemmas) {
    if (l.pos != "compound") continue;
    std::vector<Segment> c{{l.surfaces.front(), l.name, l.classes.front(), 0, 0}};
    if (l.topic == z.topic) fused_in_topic.push_back(c);
    fused.push_back(std::move(c));
    if (l.parts.size() == 2) {
      const LexemeEntry* head = lex.find(l.parts.front().lemma);
      if (head && head->topic == z.topic) fused_in_topic.push_back(l.parts);
      fused.push_back(l.parts);
    }
  }
  std::vector<std::vector<Segment>> units;
  for (std::size_t i = 0; i < len; ++i) {
    const double r = uniform01(rng);
    std::string pos = r < 0.55 ? "noun" : r < 0.75 ? "verb" : r < 0.9 ? "indeclinable" : "compound";
    if (pos == "compound") {
      if (fused.empty()) {
        pos = "noun";
      } else {
        const auto& src = !fused_in_topic.empty() && uniform01(rng) < cfg.topic_purity ? fused_in_topic : fused;
        units.push_back(src[uniform_index(rng, src.size())]);
        continue;
      }
    }
    const auto& lemma = detail::pick_lemma(rng, pool[pos], in_topic[pos], cfg.topic_purity);
    std::string cls;
    if (pos == "noun") {
      const std::string case_ = detail::agree(z.case_, cases, cfg.agreement, uniform01(rng), uniform_index(rng, 3));
      const std::string number =
          detail::agree(z.number, numbers, cfg.agreement, uniform01(rng), uniform_index(rng, 2));
      cls = "case=" + case_ + "|gender=" + lemma.gender + "|number=" + number;
    } else if (pos == "verb") {
      const std::string person =
          detail::agree(z.person, persons, cfg.agreement, uniform01(rng), uniform_index(rng, 3));
      const std::string number =
          detail::agree(z.number, numbers, cfg.agreement, uniform01(rng), uniform_index(rng, 2));
      cls = "number=" + number + "|person=" + person;
    } else {
      cls = lemma.classes.front();
    }
    const auto it = std::find(lemma.classes.begin(), lemma.classes.end(), cls);
    const std::string& surface = lemma.surfaces[static_cast<std::size_t>(it - lemma.classes.begin())];
    units.push_back({{surface, lemma.name, cls, 0, 0}});
  }
  shuffle(rng, units);
  std::vector<Segment> words;
  for (auto& u : units)
    for (auto& w : u) words.push_back(std::move(w));
  return words;
}

/// Builds the gold sentence and candidate space for a word sequence.
inline std::pair<GoldSentence, CandidateSpace> realize_sentence(const std::string& id, std::vector<Segment> words,
                                                                const ToyLexicon& lex, const SandhiRuleSet& rules) {
  std::vector<std::string> surfaces;
  for (const auto& w : words) surfaces.push_back(w.surface);
  auto [raw, spans] = apply_sandhi(surfaces, rules);
  for (std::size_t i = 0; i < words.size(); ++i) std::tie(words[i].start, words[i].end) = spans[i];
  GoldSentence gs{id, raw, words};
  CandidateSpace cs = analyze(id, raw, lex, rules);
  std::vector<std::size_t> gold;
  for (const auto& w : words) {
    auto it = std::find(cs.segments.begin(), cs.segments.end(), w);
    if (it == cs.segments.end())
      throw data_error("sentence '" + id + "': gold word '" + w.surface + "' missing from the analyzer output");
    gold.push_back(static_cast<std::size_t>(it - cs.segments.begin()));
  }
  cs.gold = std::move(gold);
  return {std::move(gs), std::move(cs)};
}

inline SynthBenchmark generate(const SynthConfig& cfg) {
  if (cfg.min_words == 0 || cfg.min_words > cfg.max_words) throw usage_error("invalid sentence length range");
  if (cfg.train + cfg.dev + cfg.test == 0) throw usage_error("configuration yields zero sentences");
  SynthBenchmark b;
  b.config = cfg;
  b.schema = default_synth_schema();
  std::mt19937_64 rng(derive_seed(cfg.seed, 0xffffffffULL));
  b.lexicon = build_lexicon(cfg, rng, cfg.rules);
  const auto mcs = enumerate_constraints(b.schema);
  for (const auto& l : b.lexicon.lemmas)
    for (const auto& c : l.classes)
      if (!mcs.find_class(c)) throw data_error("lexicon class '" + c + "' is not a class of the schema");

  const std::size_t total = cfg.train + cfg.dev + cfg.test;
  std::vector<GoldSentence> gold(total);
  std::vector<CandidateSpace> spaces(total);
  parallel_for(total, cfg.workers, [&](std::size_t i) {
    const std::string id = (i < cfg.train ? "train-" : i < cfg.train + cfg.dev ? "dev-" : "test-") +
                           std::to_string(i < cfg.train ? i : i < cfg.train + cfg.dev ? i - cfg.train
                                                                                        : i - cfg.train - cfg.dev);
    auto words = sample_words(b.lexicon, cfg, derive_seed(cfg.seed, i));
    std::tie(gold[i], spaces[i]) = realize_sentence(id, std::move(words), b.lexicon, cfg.rules);
  });
  auto take = [&](SynthSplit& s, std::size_t from, std::size_t count) {
    for (std::size_t i = from; i < from + count; ++i) {
      s.sentences.push_back(std::move(gold[i]));
      s.spaces.push_back(std::move(spaces[i]));
    }
  };
  take(b.train, 0, cfg.train);
  take(b.dev, cfg.train, cfg.dev);
  take(b.test, cfg.train + cfg.dev, cfg.test);
  return b;
}

// ---------------------------------------------------------------------------
// Random candidate spaces (structure tests)

struct RandomSpaceConfig {
  std::size_t min_length = 12, max_length = 30;
  std::size_t chains = 4;           // seeded covering chains
  std::size_t extra_segments = 4;   // free-floating segments (often pruned)
  std::size_t max_word = 5;
  std::size_t classes = 2;          // analyses drawn per span
  GraphConfig graph;
};

/// A candidate space made of several random covering chains plus noise.
/// Surfaces and lemmas are span names, so segments sharing a span differ only
/// in class.
template <class Rng>
CandidateSpace random_candidate_space(Rng& rng, const RandomSpaceConfig& cfg, const std::string& id = "rand") {
  const std::size_t n = cfg.min_length + uniform_index(rng, cfg.max_length - cfg.min_length + 1);
  CandidateSpace cs;
  cs.id = id;
  cs.input.assign(n, 'x');
  auto add = [&](std::size_t s, std::size_t e) {
    const std::string name = "w" + std::to_string(s) + "_" + std::to_string(e);
    cs.segments.push_back({name, name, "c" + std::to_string(uniform_index(rng, cfg.classes)), s, e});
  };
  for (std::size_t c = 0; c < cfg.chains; ++c) {
    std::size_t s = 0;
    std::size_t prev_end = 0;
    bool first = true;
    for (;;) {
      std::size_t len = 2 + uniform_index(rng, cfg.max_word - 1);
      std::size_t e = std::min(n, s + len);
      if (!first && e <= prev_end) e = prev_end + 1;
      if (e > n) break;
      add(s, e);
      if (e == n) break;
      prev_end = e;
      first = false;
      // Next start: overlap, touch or gap.
      const std::size_t lo = e >= cfg.graph.allow_overlap ? e - cfg.graph.allow_overlap : 0;
      std::size_t ns = lo + uniform_index(rng, e + cfg.graph.allow_gap - lo + 1);
      ns = std::max(ns, s + 1);
      if (ns >= n) {
        const std::size_t last = cs.segments.back().start;
        cs.segments.pop_back();
        add(last, n);
        break;
      }
      s = ns;
    }
  }
  for (std::size_t i = 0; i < cfg.extra_segments; ++i) {
    const std::size_t s = uniform_index(rng, n - 1);
    const std::size_t e = std::min(n, s + 2 + uniform_index(rng, cfg.max_word - 1));
    add(s, e);
  }
  return cs;
}

}  // namespace cliqueseg
