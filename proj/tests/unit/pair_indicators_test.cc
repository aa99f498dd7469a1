#include "clc/pair_indicators.h"

#include <gtest/gtest.h>

#include "oracles.h"

namespace clc {
namespace {

const RelationVocabulary kVocab({"r0", "r1", "NA"}, 2);

IndicatorFlags flags_of(const Triple& m, const Triple& n, bool literal_co = false) {
  IndicatorOptions opts;
  opts.literal_co = literal_co;
  return indicators(m, n, kVocab, opts);
}

TEST(Indicators, SharedSubject) {
  auto f = flags_of({"a", 0, "b"}, {"a", 1, "c"});
  EXPECT_TRUE(f.ts);
  EXPECT_FALSE(f.to);
  EXPECT_FALSE(f.cs);
  EXPECT_TRUE(f.co);
}

TEST(Indicators, SharedObject) {
  auto f = flags_of({"a", 0, "b"}, {"c", 1, "b"});
  EXPECT_TRUE(f.to);
  EXPECT_TRUE(f.cs);
  EXPECT_FALSE(f.ts);
  EXPECT_FALSE(f.co);
}

TEST(Indicators, SubjectObjectChain) {
  EXPECT_TRUE(flags_of({"a", 0, "b"}, {"b", 1, "c"}).tso);
}

TEST(Indicators, IdenticalTriples) {
  auto f = flags_of({"a", 0, "b"}, {"a", 0, "b"});
  EXPECT_EQ(f, (IndicatorFlags{true, true, false, false, false}));
  auto loop = flags_of({"a", 0, "a"}, {"a", 0, "a"});
  EXPECT_EQ(loop, (IndicatorFlags{true, true, true, false, false}));
}

// The nine equality patterns: the subject of m matches the subject of n,
// the object of n, or neither; the object of m matches the object of n, the
// subject of n, or neither. Patterns that need both links on one entity use
// a self-loop triple for m.
struct Case {
  const char* name;
  Triple m, n;
  IndicatorFlags expected;
};

const Case kTruthTable[] = {
    {"subj=subj, obj=obj", {"a", 0, "b"}, {"a", 1, "b"}, {true, true, false, false, false}},
    {"subj=subj, obj=subj", {"a", 0, "a"}, {"a", 1, "c"}, {true, false, true, false, true}},
    {"subj=subj, obj free", {"a", 0, "b"}, {"a", 1, "c"}, {true, false, false, false, true}},
    {"subj=obj, obj=obj", {"a", 0, "a"}, {"c", 1, "a"}, {false, true, true, true, false}},
    {"subj=obj, obj=subj", {"a", 0, "b"}, {"b", 1, "a"}, {false, false, true, false, false}},
    {"subj=obj, obj free", {"a", 0, "b"}, {"c", 1, "a"}, {false, false, true, false, false}},
    {"subj free, obj=obj", {"a", 0, "b"}, {"c", 1, "b"}, {false, true, false, true, false}},
    {"subj free, obj=subj", {"a", 0, "b"}, {"b", 1, "c"}, {false, false, true, false, false}},
    {"subj free, obj free", {"a", 0, "b"}, {"c", 1, "d"}, {false, false, false, false, false}},
};

TEST(Indicators, NineCaseTruthTable) {
  for (const Case& c : kTruthTable) {
    EXPECT_EQ(flags_of(c.m, c.n), c.expected) << c.name;
    EXPECT_EQ(flags_of(c.n, c.m), c.expected) << c.name << " (swapped)";
  }
}

TEST(Indicators, LiteralCoInvertsOnlyCo) {
  for (const Case& c : kTruthTable) {
    IndicatorFlags expected = c.expected;
    expected.co = !c.expected.co;
    EXPECT_EQ(flags_of(c.m, c.n, true), expected) << c.name;
  }
}

TEST(Indicators, NaGatesEverything) {
  for (const Case& c : kTruthTable) {
    Triple m = c.m, n = c.n;
    m.rel = 2;
    EXPECT_FALSE(flags_of(m, n).any()) << c.name;
    EXPECT_FALSE(flags_of(n, m).any()) << c.name;
    EXPECT_FALSE(flags_of(m, n, true).any()) << c.name;
  }
}

TEST(Indicators, SymmetricOnRandomTriples) {
  Rng rng(11);
  for (int i = 0; i < 500; ++i) {
    Triple m{oracle::entity(rng, 4), static_cast<RelationId>(rng.uniform_index(3)),
             oracle::entity(rng, 4)};
    Triple n{oracle::entity(rng, 4), static_cast<RelationId>(rng.uniform_index(3)),
             oracle::entity(rng, 4)};
    EXPECT_EQ(flags_of(m, n), flags_of(n, m));
    auto o = oracle::flags(m, n, kVocab);
    EXPECT_EQ(flags_of(m, n), (IndicatorFlags{o.ts, o.to, o.tso, o.cs, o.co}));
  }
}

TEST(TsoOrientation, Directions) {
  auto fwd = tso_orientation({"a", 0, "b"}, {"c", 0, "a"});
  EXPECT_TRUE(fwd.forward);
  EXPECT_FALSE(fwd.backward);
  auto back = tso_orientation({"a", 0, "b"}, {"b", 0, "c"});
  EXPECT_FALSE(back.forward);
  EXPECT_TRUE(back.backward);
}

}  // namespace
}  // namespace clc
