#pragma once

// WPT / WP3T scoring: per-sentence multiset matching, sentence-level macro
// P/R/F, perfect-match rate, and grouped slices.

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <functional>
#include <map>
#include <set>
#include <string>
#include <tuple>
#include <unordered_map>
#include <vector>

#include <nlohmann/json.hpp>

#include "cliqueseg/core.hpp"
#include "cliqueseg/corpus.hpp"

namespace cliqueseg {

enum class Task { WPT, WP3T };

inline const char* task_name(Task t) { return t == Task::WPT ? "WPT" : "WP3T"; }

inline Task parse_task(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::tolower(c); });
  if (s == "wpt") return Task::WPT;
  if (s == "wp3t") return Task::WP3T;
  throw usage_error("unknown task '" + s + "' (expected wpt or wp3t)");
}

/// Predicted segments for one sentence.
struct SentencePrediction {
  std::string id;
  std::vector<Segment> segments;
  double energy = 0.0;
  std::string kind;
};

struct SentenceScore {
  std::string id;
  std::size_t predicted = 0;
  std::size_t gold = 0;
  std::size_t matched = 0;
  double p = 0.0, r = 0.0, f = 0.0;  // fractions
  bool perfect = false;
};

struct EvalReport {
  Task task = Task::WPT;
  double macro_p = 0.0, macro_r = 0.0, macro_f = 0.0, pm = 0.0;  // percentages
  std::vector<SentenceScore> rows;
};

using MatchKey = std::tuple<std::string, std::size_t, std::size_t, std::string, std::string>;

inline MatchKey match_key(const Segment& s, Task task) {
  if (task == Task::WPT) return {s.surface, s.start, s.end, {}, {}};
  return {s.surface, s.start, s.end, s.lemma, s.morph_class};
}

/// Multiset intersection size under the task key.
inline std::size_t count_matches(const std::vector<Segment>& pred, const std::vector<Segment>& gold, Task task) {
  std::map<MatchKey, std::size_t> bag;
  for (const auto& g : gold) ++bag[match_key(g, task)];
  std::size_t m = 0;
  for (const auto& p : pred) {
    auto it = bag.find(match_key(p, task));
    if (it != bag.end() && it->second > 0) {
      --it->second;
      ++m;
    }
  }
  return m;
}

inline SentenceScore score_sentence(const std::string& id, const std::vector<Segment>& pred,
                                    const std::vector<Segment>& gold, Task task) {
  SentenceScore s;
  s.id = id;
  s.predicted = pred.size();
  s.gold = gold.size();
  s.matched = count_matches(pred, gold, task);
  s.p = pred.empty() ? 0.0 : static_cast<double>(s.matched) / pred.size();
  s.r = gold.empty() ? 0.0 : static_cast<double>(s.matched) / gold.size();
  s.f = (s.p + s.r) > 0 ? 2 * s.p * s.r / (s.p + s.r) : 0.0;
  s.perfect = s.matched == s.predicted && s.matched == s.gold;
  return s;
}

inline double round2(double x) { return std::round(x * 100.0) / 100.0; }

namespace detail {

inline EvalReport summarize(Task task, std::vector<SentenceScore> rows) {
  EvalReport r;
  r.task = task;
  r.rows = std::move(rows);
  if (r.rows.empty()) return r;
  for (const auto& s : r.rows) {
    r.macro_p += s.p;
    r.macro_r += s.r;
    r.macro_f += s.f;
    r.pm += s.perfect ? 1.0 : 0.0;
  }
  const double n = static_cast<double>(r.rows.size());
  r.macro_p = 100.0 * r.macro_p / n;
  r.macro_r = 100.0 * r.macro_r / n;
  r.macro_f = 100.0 * r.macro_f / n;
  r.pm = 100.0 * r.pm / n;
  return r;
}

/// Pairs predictions with gold by id, in gold order. Both sides must cover
/// the same ids.
inline std::vector<std::pair<const SentencePrediction*, const GoldSentence*>> align(
    const std::vector<SentencePrediction>& preds, const std::vector<GoldSentence>& golds) {
  std::unordered_map<std::string, const SentencePrediction*> by_id;
  for (const auto& p : preds)
    if (!by_id.emplace(p.id, &p).second) throw data_error("duplicate prediction id '" + p.id + "'");
  std::vector<std::pair<const SentencePrediction*, const GoldSentence*>> out;
  std::vector<std::string> missing;
  std::set<std::string> gold_ids;
  for (const auto& g : golds) {
    gold_ids.insert(g.id);
    auto it = by_id.find(g.id);
    if (it == by_id.end()) {
      missing.push_back(g.id);
      continue;
    }
    out.emplace_back(it->second, &g);
  }
  std::vector<std::string> extra;
  for (const auto& p : preds)
    if (!gold_ids.count(p.id)) extra.push_back(p.id);
  if (!missing.empty() || !extra.empty()) {
    auto join = [](const std::vector<std::string>& v) {
      std::string s;
      for (std::size_t i = 0; i < v.size() && i < 20; ++i) s += (i ? ", " : "") + v[i];
      if (v.size() > 20) s += ", ... (" + std::to_string(v.size()) + " total)";
      return s;
    };
    std::string msg = "prediction/gold id mismatch;";
    if (!missing.empty()) msg += " gold ids without prediction: " + join(missing) + ";";
    if (!extra.empty()) msg += " prediction ids without gold: " + join(extra) + ";";
    throw data_error(msg);
  }
  return out;
}

}  // namespace detail

inline EvalReport score(const std::vector<SentencePrediction>& preds, const std::vector<GoldSentence>& golds,
                        Task task) {
  std::vector<SentenceScore> rows;
  for (const auto& [p, g] : detail::align(preds, golds)) rows.push_back(score_sentence(g->id, p->segments, g->segments, task));
  return detail::summarize(task, std::move(rows));
}

enum class Grouping { GoldWordCount, CoarsePos, NodeCount };

inline Grouping parse_grouping(const std::string& s) {
  if (s == "words" || s == "gold_word_count") return Grouping::GoldWordCount;
  if (s == "pos" || s == "coarse_pos") return Grouping::CoarsePos;
  if (s == "nodes" || s == "node_count") return Grouping::NodeCount;
  throw usage_error("unknown grouping '" + s + "' (expected words, pos or nodes)");
}

inline const char* grouping_name(Grouping g) {
  switch (g) {
    case Grouping::GoldWordCount: return "gold_word_count";
    case Grouping::CoarsePos: return "coarse_pos";
    case Grouping::NodeCount: return "node_count";
  }
  return "?";
}

struct GroupSlice {
  std::string bucket;
  std::size_t sentences = 0;
  EvalReport report;
  /// Coarse-POS grouping only: matched / total gold items of this class.
  std::size_t gold_items = 0;
  std::size_t matched_items = 0;
  double micro_recall = 0.0;  // percentage
};

struct GroupingInputs {
  /// Coarse class of a gold segment; required for CoarsePos.
  std::function<std::string(const Segment&)> pos_of;
  /// Candidate-graph node count per sentence id; required for NodeCount.
  std::map<std::string, std::size_t> node_counts;
};

/// Node counts are bucketed into bins of `node_bin` nodes.
inline std::vector<GroupSlice> grouped_report(const std::vector<SentencePrediction>& preds,
                                              const std::vector<GoldSentence>& golds, Task task, Grouping grouping,
                                              const GroupingInputs& in = {}, std::size_t node_bin = 10) {
  const auto pairs = detail::align(preds, golds);
  std::vector<GroupSlice> out;

  if (grouping == Grouping::CoarsePos) {
    if (!in.pos_of) throw usage_error("coarse POS grouping needs a class-to-POS mapping");
    std::map<std::string, GroupSlice> slices;
    std::map<std::string, std::vector<SentenceScore>> rows;
    for (const auto& [p, g] : pairs) {
      std::map<std::string, std::vector<Segment>> gold_by_pos;
      for (const auto& s : g->segments) gold_by_pos[in.pos_of(s)].push_back(s);
      for (const auto& [pos, items] : gold_by_pos) {
        auto& sl = slices[pos];
        sl.bucket = pos;
        ++sl.sentences;
        sl.gold_items += items.size();
        sl.matched_items += count_matches(p->segments, items, task);
        rows[pos].push_back(score_sentence(g->id, p->segments, g->segments, task));
      }
    }
    for (auto& [pos, sl] : slices) {
      sl.report = detail::summarize(task, std::move(rows[pos]));
      sl.micro_recall = sl.gold_items ? 100.0 * sl.matched_items / sl.gold_items : 0.0;
      out.push_back(std::move(sl));
    }
    return out;
  }

  std::map<std::size_t, std::vector<SentenceScore>> buckets;
  for (const auto& [p, g] : pairs) {
    std::size_t key = 0;
    if (grouping == Grouping::GoldWordCount) {
      key = g->segments.size();
    } else {
      auto it = in.node_counts.find(g->id);
      if (it == in.node_counts.end()) throw data_error("no node count for sentence '" + g->id + "'");
      key = it->second / node_bin;
    }
    buckets[key].push_back(score_sentence(g->id, p->segments, g->segments, task));
  }
  for (auto& [key, rows] : buckets) {
    GroupSlice sl;
    sl.bucket = grouping == Grouping::GoldWordCount
                    ? std::to_string(key)
                    : std::to_string(key * node_bin) + "-" + std::to_string((key + 1) * node_bin - 1);
    sl.sentences = rows.size();
    for (const auto& r : rows) {
      sl.gold_items += r.gold;
      sl.matched_items += r.matched;
    }
    sl.micro_recall = sl.gold_items ? 100.0 * sl.matched_items / sl.gold_items : 0.0;
    sl.report = detail::summarize(task, std::move(rows));
    out.push_back(std::move(sl));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Output

inline nlohmann::json report_to_json(const EvalReport& r, bool with_rows = false) {
  nlohmann::json j{{"task", task_name(r.task)},
                   {"sentences", r.rows.size()},
                   {"P", round2(r.macro_p)},
                   {"R", round2(r.macro_r)},
                   {"F", round2(r.macro_f)},
                   {"PM", round2(r.pm)}};
  if (with_rows) {
    j["rows"] = nlohmann::json::array();
    for (const auto& s : r.rows)
      j["rows"].push_back({{"id", s.id}, {"predicted", s.predicted}, {"gold", s.gold}, {"matched", s.matched},
                           {"P", 100 * s.p}, {"R", 100 * s.r}, {"F", 100 * s.f}, {"perfect", s.perfect}});
  }
  return j;
}

inline nlohmann::json slice_to_json(const GroupSlice& s, Grouping g) {
  auto j = report_to_json(s.report);
  j["grouping"] = grouping_name(g);
  j["bucket"] = s.bucket;
  j["gold_items"] = s.gold_items;
  j["matched_items"] = s.matched_items;
  j["micro_recall"] = round2(s.micro_recall);
  return j;
}

inline std::string format_report(const EvalReport& r) {
  char buf[160];
  std::snprintf(buf, sizeof buf, "%-5s %9s %7s %7s %7s %7s\n", "task", "sentences", "P", "R", "F", "PM");
  std::string out = buf;
  std::snprintf(buf, sizeof buf, "%-5s %9zu %7.2f %7.2f %7.2f %7.2f\n", task_name(r.task), r.rows.size(), r.macro_p,
                r.macro_r, r.macro_f, r.pm);
  return out + buf;
}

inline std::string format_slices(const std::vector<GroupSlice>& slices, Grouping g) {
  char buf[200];
  std::snprintf(buf, sizeof buf, "%-16s %9s %7s %7s %7s %7s %9s\n", grouping_name(g), "sentences", "P", "R", "F",
                "PM", "micro-R");
  std::string out = buf;
  for (const auto& s : slices) {
    std::snprintf(buf, sizeof buf, "%-16s %9zu %7.2f %7.2f %7.2f %7.2f %9.2f\n", s.bucket.c_str(), s.sentences,
                  s.report.macro_p, s.report.macro_r, s.report.macro_f, s.report.pm, s.micro_recall);
    out += buf;
  }
  return out;
}

}  // namespace cliqueseg
