#include <gtest/gtest.h>

#include <map>
#include <set>

#include "test_util.hpp"

using namespace cliqueseg;
using testutil::Tok;
using testutil::tokens;

namespace {

ValueId word(const CooccurrenceStats& st, const std::string& w) { return *st.id(AttrKind::Word, w); }

MorphSchema toy_schema() { return {{{"p", {{"x", {"1", "2"}}, {"y", {"a", "b"}}}}}}; }

std::vector<GoldSentence> random_corpus(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  const std::vector<std::string> classes{"x=1|y=a", "x=1|y=b", "x=2|y=a", "x=2|y=b"};
  std::vector<GoldSentence> out;
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<Tok> toks;
    const std::size_t len = 1 + uniform_index(rng, 5);
    for (std::size_t k = 0; k < len; ++k) {
      const auto r = "r" + std::to_string(uniform_index(rng, 6));
      toks.push_back({r + "s" + std::to_string(uniform_index(rng, 2)), r, classes[uniform_index(rng, 4)]});
    }
    out.push_back(tokens("s" + std::to_string(i), toks));
  }
  return out;
}

}  // namespace

TEST(BuildStats, TwoSentenceExample) {
  auto st = build_stats(TaggedCorpus::from_sentences(
      {tokens("1", {{"a", "ra", "c"}, {"b", "rb", "c"}}), tokens("2", {{"a", "ra", "c"}})}));
  const auto a = word(st, "a"), b = word(st, "b");
  EXPECT_EQ(st.count(a), 2u);
  EXPECT_EQ(st.count(b), 1u);
  EXPECT_EQ(st.count(a, b), 1u);
  EXPECT_DOUBLE_EQ(st.conditional(b, a), 0.5);
  EXPECT_DOUBLE_EQ(st.conditional(a, b), 1.0);
}

TEST(BuildStats, SelfCooccurrenceIsOne) {
  auto st = build_stats(TaggedCorpus::from_sentences({tokens("1", {{"w", "r", "c"}})}));
  const auto w = word(st, "w");
  EXPECT_DOUBLE_EQ(st.conditional(w, w), 1.0);
}

TEST(BuildStats, RepeatedWordCountsOncePerSentence) {
  auto st = build_stats(TaggedCorpus::from_sentences({tokens("1", {{"w", "r", "c"}, {"w", "r", "c"}})}));
  EXPECT_EQ(st.count(word(st, "w")), 1u);
}

TEST(BuildStats, KindsAreSeparateNamespaces) {
  auto st = build_stats(TaggedCorpus::from_sentences({tokens("1", {{"same", "same", "same"}})}));
  const auto w = st.id(AttrKind::Word, "same"), r = st.id(AttrKind::Root, "same"), c = st.id(AttrKind::Class, "same");
  ASSERT_TRUE(w && r && c);
  EXPECT_NE(*w, *r);
  EXPECT_NE(*r, *c);
  EXPECT_EQ(st.vocab.size(), 3u);
}

TEST(BuildStats, RejectsEmptyInput) {
  EXPECT_THROW(build_stats(TaggedCorpus::from_sentences({})), Error);
  EXPECT_THROW(build_stats(TaggedCorpus::from_sentences({GoldSentence{"e", "x", {}}})), Error);
}

TEST(BuildStats, MatchesSetIntersectionRecount) {
  const auto corpus = random_corpus(50, 11);
  const auto st = build_stats(TaggedCorpus::from_sentences(corpus));
  // Oracle: per-sentence sets of (kind, value).
  using Key = std::pair<int, std::string>;
  std::vector<std::set<Key>> sets;
  for (const auto& s : corpus) {
    std::set<Key> k;
    for (const auto& w : s.segments) {
      k.insert({0, w.surface});
      k.insert({1, w.lemma});
      k.insert({2, w.morph_class});
    }
    sets.push_back(k);
  }
  std::set<Key> all;
  for (const auto& s : sets) all.insert(s.begin(), s.end());
  for (const auto& a : all) {
    const auto ia = *st.id(static_cast<AttrKind>(a.first), a.second);
    for (const auto& b : all) {
      const auto ib = *st.id(static_cast<AttrKind>(b.first), b.second);
      std::uint32_t ca = 0, cab = 0;
      for (const auto& s : sets) {
        ca += s.count(a);
        cab += s.count(a) && s.count(b);
      }
      ASSERT_EQ(st.count(ia, ib), cab);
      ASSERT_EQ(st.count(ia, ib), st.count(ib, ia));
      ASSERT_LE(st.count(ia, ib), std::min(st.count(ia), st.count(ib)));
      const double p = st.conditional(ib, ia);
      ASSERT_NEAR(p, static_cast<double>(cab) / ca, 1e-12);
      ASSERT_GE(p, 0.0);
      ASSERT_LE(p, 1.0);
    }
  }
}

TEST(BuildStats, VocabulariesCoverGold) {
  const auto corpus = TaggedCorpus::from_sentences(random_corpus(20, 2));
  for (const auto& s : corpus.sentences)
    for (const auto& w : s.segments) {
      EXPECT_TRUE(corpus.vocab_w.count(w.surface));
      EXPECT_TRUE(corpus.vocab_r.count(w.lemma));
      EXPECT_TRUE(corpus.vocab_m.count(w.morph_class));
    }
}

TEST(Constraints, ToySchemaHasFourCompleteAndFourPartial) {
  const auto mcs = enumerate_constraints(toy_schema());
  EXPECT_EQ(mcs.size(), 8u);
  EXPECT_EQ(mcs.classes.size(), 4u);
  std::size_t complete = 0;
  for (const auto& c : mcs.constraints) complete += c.complete;
  EXPECT_EQ(complete, 4u);
  EXPECT_TRUE(mcs.find_constraint("x=1"));
  EXPECT_TRUE(mcs.find_constraint("y=b"));
  EXPECT_TRUE(mcs.find_constraint("x=2|y=a"));
}

TEST(Constraints, SanskritLikeSchemaYields528) {
  const auto mcs = enumerate_constraints(sanskrit_like_schema());
  EXPECT_EQ(mcs.size(), 528u);
}

TEST(Constraints, GenitiveMasculineDenotesThreeClasses) {
  const auto mcs = enumerate_constraints(sanskrit_like_schema());
  const auto g = mcs.find_constraint("case=gen|gender=m");
  ASSERT_TRUE(g);
  EXPECT_FALSE(mcs.constraints[*g].complete);
  EXPECT_EQ(mcs.constraints[*g].members.size(), 3u);
  for (auto c : mcs.constraints[*g].members) {
    EXPECT_NE(mcs.classes[c].find("case=gen"), std::string::npos);
    EXPECT_NE(mcs.classes[c].find("gender=m"), std::string::npos);
  }
}

TEST(Constraints, StructuralInvariants) {
  for (const auto& schema : {toy_schema(), default_synth_schema(), sanskrit_like_schema()}) {
    const auto mcs = enumerate_constraints(schema);
    std::set<std::string> labels;
    for (const auto& c : mcs.constraints) {
      EXPECT_TRUE(labels.insert(c.label).second) << "duplicate " << c.label;
      ASSERT_FALSE(c.members.empty()) << c.label;
      if (c.complete) {
        EXPECT_EQ(c.members.size(), 1u);
        EXPECT_EQ(mcs.classes[c.members[0]], c.label);
      }
      // Every member class extends the constraint's assignment.
      for (auto m : c.members)
        for (const auto& [cat, val] : c.assignment)
          EXPECT_NE(mcs.classes[m].find(cat + "=" + val), std::string::npos);
    }
    std::size_t complete = 0;
    for (const auto& c : mcs.constraints) complete += c.complete;
    EXPECT_EQ(complete, mcs.classes.size());
  }
}

TEST(Constraints, DefaultSynthSchemaCounts) {
  const auto mcs = enumerate_constraints(default_synth_schema());
  EXPECT_EQ(mcs.classes.size(), 20u);
  EXPECT_EQ(mcs.size(), 46u);
  EXPECT_EQ(mcs.paradigm_of("number=sg|person=1"), "verb");
  EXPECT_EQ(mcs.paradigm_of("nonsense"), "unknown");
}

TEST(Constraints, RejectsEmptySchema) {
  EXPECT_THROW(enumerate_constraints(MorphSchema{}), Error);
  EXPECT_THROW(enumerate_constraints(MorphSchema{{{"p", {}}}}), Error);
  EXPECT_THROW(enumerate_constraints(MorphSchema{{{"p", {{"c", {}}}}}}), Error);
}

TEST(Constraints, FingerprintTracksSchema) {
  EXPECT_EQ(enumerate_constraints(toy_schema()).fingerprint, enumerate_constraints(toy_schema()).fingerprint);
  EXPECT_NE(enumerate_constraints(toy_schema()).fingerprint, enumerate_constraints(default_synth_schema()).fingerprint);
}

TEST(ConstraintEvidence, PartialEqualsSumOfMembers) {
  const auto corpus = random_corpus(60, 4);
  const auto st = build_stats(TaggedCorpus::from_sentences(corpus));
  const auto mcs = enumerate_constraints(toy_schema());
  const ConstraintEvidence ev(st, mcs);
  for (std::size_t g = 0; g < mcs.size(); ++g) {
    std::uint64_t count = 0;
    for (auto m : mcs.constraints[g].members)
      if (auto id = st.id(AttrKind::Class, mcs.classes[m])) count += st.count(*id);
    EXPECT_EQ(ev.count(g), count) << mcs.constraints[g].label;
    for (ValueId v = 0; v < st.vocab.size(); ++v) {
      std::uint64_t joint = 0;
      for (auto m : mcs.constraints[g].members)
        if (auto id = st.id(AttrKind::Class, mcs.classes[m])) joint += st.count(*id, v);
      ASSERT_EQ(ev.joint(g, v), joint) << mcs.constraints[g].label << " / " << st.vocab.name(v);
    }
  }
}
