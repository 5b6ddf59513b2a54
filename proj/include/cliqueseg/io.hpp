#pragma once

// Line-delimited JSON files for corpora, candidate spaces and predictions,
// plus JSON documents for schemas, statistics and feature specs. Every file
// starts with a header record naming its format, version and the fingerprint
// of the configuration that produced it.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "cliqueseg/core.hpp"
#include "cliqueseg/corpus.hpp"
#include "cliqueseg/eval.hpp"
#include "cliqueseg/features.hpp"
#include "cliqueseg/graph.hpp"

namespace cliqueseg {

using nlohmann::json;

inline constexpr int kFileVersion = 1;
inline constexpr const char* kCorpusFormat = "cliqueseg-corpus";
inline constexpr const char* kCandidatesFormat = "cliqueseg-candidates";
inline constexpr const char* kPredictionsFormat = "cliqueseg-predictions";
inline constexpr const char* kSchemaFormat = "cliqueseg-schema";
inline constexpr const char* kStatsFormat = "cliqueseg-stats";
inline constexpr const char* kFeatureSpecFormat = "cliqueseg-featurespec";

struct FileHeader {
  std::string format;
  int version = kFileVersion;
  std::string config_fingerprint;  // hex, may be empty
};

inline json header_to_json(const FileHeader& h) {
  return {{"header", {{"format", h.format}, {"version", h.version}, {"config_fingerprint", h.config_fingerprint}}}};
}

/// Checks format and version; returns the header.
inline FileHeader check_header(const json& j, const std::string& expected_format, const std::string& where) {
  try {
    const json& h = j.contains("header") ? j.at("header") : j;
    FileHeader out{h.at("format").get<std::string>(), h.at("version").get<int>(),
                   h.value("config_fingerprint", std::string())};
    if (out.format != expected_format)
      throw data_error(where + ": expected a " + expected_format + " file, found " + out.format);
    if (out.version != kFileVersion)
      throw data_error(where + ": unsupported " + out.format + " version " + std::to_string(out.version));
    return out;
  } catch (const json::exception& e) {
    throw data_error(where + ": malformed header: " + e.what());
  }
}

/// Writes to `path.tmp` and renames on commit; an uncommitted file is removed.
class AtomicWriter {
 public:
  explicit AtomicWriter(std::string path) : path_(std::move(path)), tmp_(path_ + ".tmp") {
    out_.open(tmp_);
    if (!out_) throw data_error("cannot write '" + path_ + "'");
  }
  AtomicWriter(const AtomicWriter&) = delete;
  AtomicWriter& operator=(const AtomicWriter&) = delete;
  ~AtomicWriter() {
    if (!committed_) {
      out_.close();
      std::error_code ec;
      std::filesystem::remove(tmp_, ec);
    }
  }

  std::ofstream& stream() { return out_; }

  void commit() {
    out_.close();
    if (!out_) throw data_error("failed writing '" + path_ + "'");
    std::filesystem::rename(tmp_, path_);
    committed_ = true;
  }

 private:
  std::string path_, tmp_;
  std::ofstream out_;
  bool committed_ = false;
};

inline void write_json_file(const std::string& path, const json& j) {
  AtomicWriter w(path);
  w.stream() << j.dump(1) << '\n';
  w.commit();
}

inline json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw data_error("cannot open '" + path + "'");
  try {
    json j;
    in >> j;
    return j;
  } catch (const json::exception& e) {
    throw data_error("'" + path + "' is not valid JSON: " + e.what());
  }
}

// ---------------------------------------------------------------------------
// Segments

inline json segment_to_json(const Segment& s) {
  return {{"surface", s.surface}, {"lemma", s.lemma}, {"class", s.morph_class}, {"start", s.start}, {"end", s.end}};
}

inline Segment segment_from_json(const json& j) {
  Segment s{j.at("surface").get<std::string>(), j.at("lemma").get<std::string>(), j.at("class").get<std::string>(),
            j.at("start").get<std::size_t>(), j.at("end").get<std::size_t>()};
  if (s.start >= s.end) throw data_error("segment '" + s.surface + "' has an empty span");
  return s;
}

inline json segments_to_json(const std::vector<Segment>& v) {
  json a = json::array();
  for (const auto& s : v) a.push_back(segment_to_json(s));
  return a;
}

inline std::vector<Segment> segments_from_json(const json& a) {
  std::vector<Segment> out;
  for (const auto& s : a) out.push_back(segment_from_json(s));
  return out;
}

// ---------------------------------------------------------------------------
// Line-delimited files

namespace detail {

template <class Record, class Parse>
std::vector<Record> read_jsonl(const std::string& path, const std::string& format, Parse&& parse,
                               FileHeader* header_out = nullptr) {
  std::ifstream in(path);
  if (!in) throw data_error("cannot open '" + path + "'");
  std::vector<Record> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const std::string where = path + ":" + std::to_string(lineno);
    json j;
    try {
      j = json::parse(line);
    } catch (const json::exception& e) {
      throw data_error(where + ": malformed record: " + e.what());
    }
    if (j.contains("header")) {
      if (lineno != 1 && !out.empty()) throw data_error(where + ": header record after data");
      auto h = check_header(j, format, where);
      if (header_out) *header_out = h;
      continue;
    }
    try {
      out.push_back(parse(j));
    } catch (const json::exception& e) {
      throw data_error(where + ": malformed record: " + e.what());
    } catch (const Error& e) {
      throw Error(e.kind(), where + ": " + e.what());
    }
  }
  return out;
}

template <class Record, class Emit>
void write_jsonl(const std::string& path, const FileHeader& header, const std::vector<Record>& records, Emit&& emit) {
  AtomicWriter w(path);
  w.stream() << header_to_json(header).dump() << '\n';
  for (const auto& r : records) w.stream() << emit(r).dump() << '\n';
  w.commit();
}

}  // namespace detail

inline json gold_sentence_to_json(const GoldSentence& s) {
  return {{"id", s.id}, {"raw", s.raw}, {"segments", segments_to_json(s.segments)}};
}

inline GoldSentence gold_sentence_from_json(const json& j) {
  GoldSentence s{j.at("id").get<std::string>(), j.at("raw").get<std::string>(), segments_from_json(j.at("segments"))};
  for (const auto& seg : s.segments)
    if (seg.end > s.raw.size()) throw data_error("sentence '" + s.id + "': segment beyond the raw string");
  return s;
}

inline void write_corpus(const std::string& path, const std::vector<GoldSentence>& v, const std::string& fp = {}) {
  detail::write_jsonl(path, {kCorpusFormat, kFileVersion, fp}, v, gold_sentence_to_json);
}

inline std::vector<GoldSentence> read_corpus(const std::string& path, FileHeader* header = nullptr) {
  return detail::read_jsonl<GoldSentence>(path, kCorpusFormat, gold_sentence_from_json, header);
}

inline json candidate_space_to_json(const CandidateSpace& c) {
  json j{{"id", c.id}, {"input", c.input}, {"segments", segments_to_json(c.segments)}};
  j["gold"] = c.gold ? json(*c.gold) : json(nullptr);
  return j;
}

inline CandidateSpace candidate_space_from_json(const json& j) {
  CandidateSpace c;
  c.id = j.at("id").get<std::string>();
  c.input = j.at("input").get<std::string>();
  c.segments = segments_from_json(j.at("segments"));
  if (j.contains("gold") && !j.at("gold").is_null()) c.gold = j.at("gold").get<std::vector<std::size_t>>();
  if (c.gold)
    for (auto g : *c.gold)
      if (g >= c.segments.size()) throw data_error("sentence '" + c.id + "': gold index out of range");
  return c;
}

inline void write_candidates(const std::string& path, const std::vector<CandidateSpace>& v,
                             const std::string& fp = {}) {
  detail::write_jsonl(path, {kCandidatesFormat, kFileVersion, fp}, v, candidate_space_to_json);
}

inline std::vector<CandidateSpace> read_candidates(const std::string& path, FileHeader* header = nullptr) {
  return detail::read_jsonl<CandidateSpace>(path, kCandidatesFormat, candidate_space_from_json, header);
}

inline json prediction_to_json(const SentencePrediction& p) {
  return {{"id", p.id}, {"kind", p.kind}, {"energy", p.energy}, {"segments", segments_to_json(p.segments)}};
}

inline SentencePrediction prediction_from_json(const json& j) {
  return {j.at("id").get<std::string>(), segments_from_json(j.at("segments")), j.value("energy", 0.0),
          j.value("kind", std::string())};
}

inline void write_predictions(const std::string& path, const std::vector<SentencePrediction>& v,
                              const std::string& fp = {}) {
  detail::write_jsonl(path, {kPredictionsFormat, kFileVersion, fp}, v, prediction_to_json);
}

inline std::vector<SentencePrediction> read_predictions(const std::string& path, FileHeader* header = nullptr) {
  return detail::read_jsonl<SentencePrediction>(path, kPredictionsFormat, prediction_from_json, header);
}

// ---------------------------------------------------------------------------
// Documents

inline json schema_to_json(const MorphSchema& s) {
  json ps = json::array();
  for (const auto& p : s.paradigms) {
    json cats = json::array();
    for (const auto& c : p.categories) cats.push_back({{"name", c.name}, {"values", c.values}});
    ps.push_back({{"name", p.name}, {"categories", cats}});
  }
  return {{"format", kSchemaFormat}, {"version", kFileVersion}, {"paradigms", ps}};
}

inline MorphSchema schema_from_json(const json& j, const std::string& where = "schema") {
  check_header(j, kSchemaFormat, where);
  try {
    MorphSchema s;
    for (const auto& p : j.at("paradigms")) {
      Paradigm par{p.at("name").get<std::string>(), {}};
      for (const auto& c : p.at("categories"))
        par.categories.push_back({c.at("name").get<std::string>(), c.at("values").get<std::vector<std::string>>()});
      s.paradigms.push_back(std::move(par));
    }
    return s;
  } catch (const json::exception& e) {
    throw data_error(where + ": malformed schema: " + e.what());
  }
}

inline json feature_spec_to_json(const FeatureSpec& s) {
  json t = json::array();
  for (const auto& f : s.templates)
    t.push_back({{"source", attr_name(f.source)}, {"constraint", f.constraint}, {"target", attr_name(f.target)}});
  return {{"format", kFeatureSpecFormat},
          {"version", FeatureSpec::kVersion},
          {"constraint_fingerprint", hex64(s.constraint_fingerprint)},
          {"fingerprint", hex64(s.fingerprint())},
          {"templates", t}};
}

/// Rejects specs built against a different constraint set when
/// `constraints` is given.
inline FeatureSpec feature_spec_from_json(const json& j, const MorphConstraintSet* constraints = nullptr,
                                          const std::string& where = "feature spec") {
  check_header(j, kFeatureSpecFormat, where);
  try {
    FeatureSpec s;
    s.constraint_fingerprint = parse_hex64(j.at("constraint_fingerprint").get<std::string>());
    for (const auto& t : j.at("templates"))
      s.templates.push_back({parse_attr(t.at("source").get<std::string>()), t.at("constraint").get<std::size_t>(),
                             parse_attr(t.at("target").get<std::string>())});
    if (j.contains("fingerprint") && parse_hex64(j.at("fingerprint").get<std::string>()) != s.fingerprint())
      throw data_error(where + ": fingerprint does not match its templates");
    if (constraints) {
      if (constraints->fingerprint != s.constraint_fingerprint)
        throw data_error(where + ": built against constraint set " + hex64(s.constraint_fingerprint) +
                         ", but the schema yields " + hex64(constraints->fingerprint));
      for (const auto& t : s.templates)
        if (t.constraint >= constraints->size()) throw data_error(where + ": constraint index out of range");
    }
    return s;
  } catch (const json::exception& e) {
    throw data_error(where + ": malformed feature spec: " + e.what());
  }
}

inline json stats_to_json(const CooccurrenceStats& st) {
  json values = json::array();
  for (ValueId i = 0; i < st.vocab.size(); ++i) values.push_back({attr_name(st.vocab.kind(i)), st.vocab.name(i)});
  std::vector<std::pair<std::uint64_t, std::uint32_t>> pairs(st.pairwise.begin(), st.pairwise.end());
  std::sort(pairs.begin(), pairs.end());
  json pw = json::array();
  for (const auto& [k, c] : pairs) pw.push_back({k >> 32, k & 0xffffffffu, c});
  return {{"format", kStatsFormat}, {"version", kFileVersion}, {"sentences", st.num_sentences},
          {"values", values},       {"unary", st.unary},      {"pairwise", pw}};
}

inline CooccurrenceStats stats_from_json(const json& j, const std::string& where = "stats") {
  check_header(j, kStatsFormat, where);
  try {
    CooccurrenceStats st;
    for (const auto& v : j.at("values")) st.vocab.intern(parse_attr(v.at(0).get<std::string>()), v.at(1).get<std::string>());
    st.unary = j.at("unary").get<std::vector<std::uint32_t>>();
    st.num_sentences = j.at("sentences").get<std::size_t>();
    if (st.unary.size() != st.vocab.size()) throw data_error(where + ": unary counts do not match the value list");
    for (const auto& p : j.at("pairwise")) {
      const auto a = p.at(0).get<ValueId>(), b = p.at(1).get<ValueId>();
      if (a >= st.vocab.size() || b >= st.vocab.size() || a == b) throw data_error(where + ": bad pair entry");
      st.pairwise[CooccurrenceStats::pair_key(a, b)] = p.at(2).get<std::uint32_t>();
    }
    return st;
  } catch (const json::exception& e) {
    throw data_error(where + ": malformed statistics: " + e.what());
  }
}

}  // namespace cliqueseg
