#pragma once

// Tagged corpus, morphological constraint enumeration and sentence-level
// co-occurrence statistics.

#include <algorithm>
#include <array>
#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "cliqueseg/core.hpp"

namespace cliqueseg {

struct GoldSentence {
  std::string id;
  std::string raw;
  std::vector<Segment> segments;
};

/// The three node attributes. Values of different kinds live in separate
/// namespaces, so a root spelled like a surface form never collides with it.
enum class AttrKind : std::uint8_t { Word = 0, Root = 1, Class = 2 };
inline constexpr std::array<AttrKind, 3> kAttrKinds = {AttrKind::Word, AttrKind::Root, AttrKind::Class};

inline const char* attr_name(AttrKind k) {
  switch (k) {
    case AttrKind::Word: return "word";
    case AttrKind::Root: return "root";
    case AttrKind::Class: return "class";
  }
  return "?";
}

inline AttrKind parse_attr(const std::string& s) {
  if (s == "word") return AttrKind::Word;
  if (s == "root") return AttrKind::Root;
  if (s == "class") return AttrKind::Class;
  throw data_error("unknown attribute kind '" + s + "'");
}

inline const std::string& attr_value(const Segment& s, AttrKind k) {
  switch (k) {
    case AttrKind::Word: return s.surface;
    case AttrKind::Root: return s.lemma;
    case AttrKind::Class: return s.morph_class;
  }
  return s.surface;
}

using ValueId = std::uint32_t;
inline constexpr ValueId kNoValue = std::numeric_limits<ValueId>::max();

/// Interns (kind, string) pairs into dense ids.
class Vocabulary {
 public:
  ValueId intern(AttrKind kind, const std::string& value) {
    auto& index = index_[static_cast<int>(kind)];
    auto [it, inserted] = index.try_emplace(value, static_cast<ValueId>(names_.size()));
    if (inserted) {
      names_.push_back(value);
      kinds_.push_back(kind);
      ++per_kind_[static_cast<int>(kind)];
    }
    return it->second;
  }

  std::optional<ValueId> find(AttrKind kind, const std::string& value) const {
    const auto& index = index_[static_cast<int>(kind)];
    auto it = index.find(value);
    if (it == index.end()) return std::nullopt;
    return it->second;
  }

  bool contains(AttrKind kind, const std::string& value) const { return find(kind, value).has_value(); }
  std::size_t size() const noexcept { return names_.size(); }
  std::size_t size(AttrKind kind) const noexcept { return per_kind_[static_cast<int>(kind)]; }
  AttrKind kind(ValueId id) const { return kinds_.at(id); }
  const std::string& name(ValueId id) const { return names_.at(id); }

 private:
  std::array<std::unordered_map<std::string, ValueId>, 3> index_;
  std::vector<std::string> names_;
  std::vector<AttrKind> kinds_;
  std::array<std::size_t, 3> per_kind_{};
};

struct TaggedCorpus {
  std::vector<GoldSentence> sentences;
  std::set<std::string> vocab_w;
  std::set<std::string> vocab_r;
  std::set<std::string> vocab_m;

  static TaggedCorpus from_sentences(std::vector<GoldSentence> sentences) {
    TaggedCorpus c;
    c.sentences = std::move(sentences);
    for (const auto& s : c.sentences) {
      for (const auto& seg : s.segments) {
        c.vocab_w.insert(seg.surface);
        c.vocab_r.insert(seg.lemma);
        c.vocab_m.insert(seg.morph_class);
      }
    }
    return c;
  }
};

// ---------------------------------------------------------------------------
// Morphological schema and constraints

struct Category {
  std::string name;
  std::vector<std::string> values;
};

/// A word class family (noun, verb, ...) whose morphological classes are the
/// cartesian product of its categories' values.
struct Paradigm {
  std::string name;
  std::vector<Category> categories;
};

struct MorphSchema {
  std::vector<Paradigm> paradigms;
};

using Assignment = std::vector<std::pair<std::string, std::string>>;

inline std::string assignment_label(const Assignment& a) {
  std::string out;
  for (const auto& [cat, val] : a) {
    if (!out.empty()) out += '|';
    out += cat;
    out += '=';
    out += val;
  }
  return out;
}

struct MorphConstraint {
  Assignment assignment;
  std::string label;
  bool complete = false;
  /// Indices into MorphConstraintSet::classes of every class this constraint denotes.
  std::vector<std::size_t> members;
};

struct MorphConstraintSet {
  std::vector<std::string> classes;          // complete class labels
  std::vector<std::string> class_paradigm;   // paradigm name per class
  std::vector<MorphConstraint> constraints;  // complete classes first, then partials
  std::uint64_t fingerprint = 0;

  std::size_t size() const noexcept { return constraints.size(); }

  std::optional<std::size_t> find_class(const std::string& label) const {
    auto it = class_index.find(label);
    if (it == class_index.end()) return std::nullopt;
    return it->second;
  }

  std::optional<std::size_t> find_constraint(const std::string& label) const {
    for (std::size_t i = 0; i < constraints.size(); ++i)
      if (constraints[i].label == label) return i;
    return std::nullopt;
  }

  /// Paradigm name of a class label, or "unknown".
  std::string paradigm_of(const std::string& class_label) const {
    auto c = find_class(class_label);
    return c ? class_paradigm[*c] : std::string("unknown");
  }

  std::unordered_map<std::string, std::size_t> class_index;
};

/// Enumerates every complete class and every valid partial combination
/// (a non-empty proper sub-assignment of at least one class).
inline MorphConstraintSet enumerate_constraints(const MorphSchema& schema) {
  if (schema.paradigms.empty()) throw data_error("empty morphological schema");

  // Global category order: first appearance across paradigms.
  std::map<std::string, std::size_t> cat_order;
  for (const auto& p : schema.paradigms) {
    if (p.categories.empty()) throw data_error("paradigm '" + p.name + "' has no categories");
    for (const auto& c : p.categories) {
      if (c.values.empty()) throw data_error("category '" + c.name + "' has no values");
      cat_order.try_emplace(c.name, cat_order.size());
    }
  }
  auto canonical = [&](Assignment a) {
    std::sort(a.begin(), a.end(), [&](const auto& x, const auto& y) {
      return cat_order.at(x.first) < cat_order.at(y.first);
    });
    return a;
  };

  MorphConstraintSet out;
  std::vector<Assignment> class_assign;
  for (const auto& p : schema.paradigms) {
    std::vector<std::size_t> idx(p.categories.size(), 0);
    for (;;) {
      Assignment a;
      for (std::size_t c = 0; c < p.categories.size(); ++c)
        a.emplace_back(p.categories[c].name, p.categories[c].values[idx[c]]);
      a = canonical(std::move(a));
      std::string label = assignment_label(a);
      if (out.class_index.count(label)) throw data_error("duplicate morphological class '" + label + "'");
      out.class_index[label] = out.classes.size();
      out.classes.push_back(label);
      out.class_paradigm.push_back(p.name);
      class_assign.push_back(std::move(a));
      std::size_t c = 0;
      while (c < idx.size() && ++idx[c] == p.categories[c].values.size()) idx[c++] = 0;
      if (c == idx.size()) break;
    }
  }

  std::map<Assignment, bool> seen;  // assignment -> complete?
  for (std::size_t k = 0; k < class_assign.size(); ++k) {
    const auto& a = class_assign[k];
    seen[a] = true;
    const std::size_t n = a.size();
    for (std::uint32_t mask = 1; mask + 1 < (1u << n); ++mask) {
      Assignment sub;
      for (std::size_t b = 0; b < n; ++b)
        if (mask & (1u << b)) sub.push_back(a[b]);
      seen.try_emplace(std::move(sub), false);
    }
  }

  auto contains = [](const Assignment& whole, const Assignment& part) {
    return std::all_of(part.begin(), part.end(), [&](const auto& kv) {
      return std::find(whole.begin(), whole.end(), kv) != whole.end();
    });
  };
  auto make = [&](const Assignment& a, bool complete) {
    MorphConstraint mc;
    mc.assignment = a;
    mc.label = assignment_label(a);
    mc.complete = complete;
    for (std::size_t k = 0; k < class_assign.size(); ++k)
      if (contains(class_assign[k], a)) mc.members.push_back(k);
    return mc;
  };

  for (const auto& a : class_assign) out.constraints.push_back(make(a, true));
  std::vector<Assignment> partials;
  for (const auto& [a, complete] : seen)
    if (!complete) partials.push_back(a);
  std::sort(partials.begin(), partials.end(), [](const Assignment& x, const Assignment& y) {
    if (x.size() != y.size()) return x.size() < y.size();
    return assignment_label(x) < assignment_label(y);
  });
  for (const auto& a : partials) out.constraints.push_back(make(a, false));

  std::uint64_t h = fnv1a("cliqueseg-constraints-v1");
  for (const auto& c : out.constraints) {
    h = fnv1a(c.label, h);
    h = fnv1a(c.complete ? "!" : "?", h);
  }
  out.fingerprint = h;
  return out;
}

// ---------------------------------------------------------------------------
// Co-occurrence statistics

/// Sentence-level, per-sentence-binarized counts over words, roots and classes.
struct CooccurrenceStats {
  Vocabulary vocab;
  std::vector<std::uint32_t> unary;
  std::unordered_map<std::uint64_t, std::uint32_t> pairwise;  // key: (min id, max id), ids distinct
  std::size_t num_sentences = 0;

  static std::uint64_t pair_key(ValueId a, ValueId b) noexcept {
    if (a > b) std::swap(a, b);
    return (static_cast<std::uint64_t>(a) << 32) | b;
  }

  std::uint32_t count(ValueId a) const { return a == kNoValue ? 0 : unary.at(a); }

  std::uint32_t count(ValueId a, ValueId b) const {
    if (a == kNoValue || b == kNoValue) return 0;
    if (a == b) return unary.at(a);
    auto it = pairwise.find(pair_key(a, b));
    return it == pairwise.end() ? 0 : it->second;
  }

  std::optional<ValueId> id(AttrKind kind, const std::string& value) const { return vocab.find(kind, value); }

  /// P_co(b | a) = count(b, a) / count(a); 0 when a is unseen.
  double conditional(ValueId b, ValueId a) const {
    const std::uint32_t ca = count(a);
    return ca == 0 ? 0.0 : static_cast<double>(count(a, b)) / ca;
  }

  /// Records one sentence's distinct value ids (already interned).
  void add_sentence(std::vector<ValueId> ids) {
    std::sort(ids.begin(), ids.end());
    ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
    if (unary.size() < vocab.size()) unary.resize(vocab.size(), 0);
    for (std::size_t i = 0; i < ids.size(); ++i) {
      ++unary[ids[i]];
      for (std::size_t j = i + 1; j < ids.size(); ++j) ++pairwise[pair_key(ids[i], ids[j])];
    }
    ++num_sentences;
  }
};

inline CooccurrenceStats build_stats(const TaggedCorpus& corpus) {
  if (corpus.sentences.empty()) throw data_error("cannot build statistics from an empty corpus");
  CooccurrenceStats st;
  for (const auto& s : corpus.sentences) {
    if (s.segments.empty()) throw data_error("sentence '" + s.id + "' has no gold segments");
    std::vector<ValueId> ids;
    ids.reserve(3 * s.segments.size());
    for (const auto& seg : s.segments)
      for (AttrKind k : kAttrKinds) ids.push_back(st.vocab.intern(k, attr_value(seg, k)));
    st.add_sentence(std::move(ids));
  }
  return st;
}

/// Corpus evidence of morphological constraints. The evidence of a constraint
/// is the sum of the evidence of the classes it denotes, both for its own
/// count and for its joint count with any value.
class ConstraintEvidence {
 public:
  ConstraintEvidence() = default;

  ConstraintEvidence(const CooccurrenceStats& stats, const MorphConstraintSet& mcs)
      : num_values_(stats.vocab.size()), count_(mcs.size(), 0), joint_(mcs.size() * stats.vocab.size(), 0) {
    // class value id -> constraints containing that class
    std::unordered_map<ValueId, std::vector<std::size_t>> member_of;
    for (std::size_t g = 0; g < mcs.size(); ++g) {
      for (std::size_t cls : mcs.constraints[g].members) {
        auto id = stats.vocab.find(AttrKind::Class, mcs.classes[cls]);
        if (id) member_of[*id].push_back(g);
      }
    }
    for (const auto& [cls_id, gs] : member_of) {
      const std::uint32_t c = stats.count(cls_id);
      for (std::size_t g : gs) {
        count_[g] += c;
        joint_[g * num_values_ + cls_id] += c;
      }
    }
    for (const auto& [key, c] : stats.pairwise) {
      const ValueId a = static_cast<ValueId>(key >> 32);
      const ValueId b = static_cast<ValueId>(key & 0xffffffffu);
      if (auto it = member_of.find(a); it != member_of.end())
        for (std::size_t g : it->second) joint_[g * num_values_ + b] += c;
      if (auto it = member_of.find(b); it != member_of.end())
        for (std::size_t g : it->second) joint_[g * num_values_ + a] += c;
    }
  }

  std::uint64_t count(std::size_t g) const { return count_.at(g); }

  std::uint64_t joint(std::size_t g, ValueId v) const {
    return v == kNoValue ? 0 : joint_[g * num_values_ + v];
  }

  std::size_t num_constraints() const noexcept { return count_.size(); }

 private:
  std::size_t num_values_ = 0;
  std::vector<std::uint64_t> count_;
  std::vector<std::uint64_t> joint_;
};

}  // namespace cliqueseg
