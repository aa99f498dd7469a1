#include "clc/constraint_loss.h"

#include <cmath>

#include <gtest/gtest.h>

#include "clc/error.h"
#include "oracles.h"

namespace clc {
namespace {

using Vec = std::vector<double>;

BinaryVector vec(std::initializer_list<int> bits) {
  BinaryVector v;
  for (int b : bits) v.push_back(static_cast<std::uint8_t>(b));
  return v;
}

Vec onehot(std::size_t r, std::size_t k) {
  Vec p(r, 0.0);
  p[k] = 1.0;
  return p;
}

const Vec kUniform4 = {0.25, 0.25, 0.25, 0.25};
const Vec kHalfHalf = {0.5, 0.5, 0.0, 0.0};

// ---------------------------------------------------------------------------
// Local kernels

TEST(CoherentTypeLocal, ExactMatchIsZero) {
  BinaryMatrix v(4);
  v.set(0, 1);
  EXPECT_EQ(coherent_type_local(onehot(4, 0), onehot(4, 1), v, true), 0.0);
}

TEST(CoherentTypeLocal, GatedOff) {
  BinaryMatrix v(4);
  EXPECT_EQ(coherent_type_local(kUniform4, kUniform4, v, false), 0.0);
}

TEST(CoherentTypeLocal, UniformCase) {
  BinaryMatrix v(4);
  v.set(0, 1);
  v.set(1, 0);
  // Oracle: brute-force double sum.
  double oracle = oracle::coherent_type(kUniform4, kUniform4, [](RelationId i, RelationId j) {
    return (i == 0 && j == 1) || (i == 1 && j == 0);
  }, kDefaultEps);
  EXPECT_NEAR(oracle, 2.0794415416798357, 1e-12);
  EXPECT_NEAR(coherent_type_local(kUniform4, kUniform4, v, true), 2.0794415416798357, 1e-9);
}

TEST(CoherentCardLocal, Values) {
  EXPECT_EQ(coherent_card_local(onehot(4, 0), onehot(4, 0), vec({1, 0, 0, 0}), true), 0.0);
  double oracle = oracle::coherent_card(kHalfHalf, kHalfHalf, {0}, kDefaultEps);
  EXPECT_NEAR(oracle, -std::log(0.25), 1e-12);
  EXPECT_NEAR(coherent_card_local(kHalfHalf, kHalfHalf, vec({1, 0, 0, 0}), true),
              1.3862943611198906, 1e-9);
}

TEST(CoherentCardLocal, AllZeroVectorClampsAtEps) {
  double loss = coherent_card_local(kHalfHalf, kHalfHalf, vec({0, 0, 0, 0}), true);
  EXPECT_DOUBLE_EQ(loss, -std::log(kDefaultEps));
  EXPECT_TRUE(std::isfinite(loss));
}

TEST(SemanticScoreType, Values) {
  EXPECT_EQ(semantic_score_type(onehot(4, 0), onehot(4, 1), vec({1, 1, 0, 0})), 1.0);
  EXPECT_EQ(semantic_score_type(onehot(4, 2), onehot(4, 3), vec({1, 1, 0, 0})), 0.0);
  EXPECT_NEAR(oracle::type_rule_score(kHalfHalf, kHalfHalf, 0, 1), 0.5625, 1e-15);
  EXPECT_NEAR(semantic_score_type(kHalfHalf, kHalfHalf, vec({1, 1, 0, 0})), 0.5625, 1e-9);
}

TEST(SemanticScoreCard, Values) {
  EXPECT_EQ(semantic_score_card(onehot(4, 0), onehot(4, 0), vec({1, 0, 0, 0})), 1.0);
  EXPECT_EQ(semantic_score_card(onehot(4, 0), onehot(4, 0), vec({0, 1, 0, 0})), 0.0);
  EXPECT_NEAR(oracle::card_rule_score(kHalfHalf, kHalfHalf, 0), 0.1875, 1e-15);
  EXPECT_NEAR(semantic_score_card(kHalfHalf, kHalfHalf, vec({1, 0, 0, 0})), 0.1875, 1e-9);
}

TEST(SemanticLocal, Values) {
  std::vector<BinaryVector> one = {vec({1, 1, 0, 0})};
  EXPECT_EQ(semantic_local(onehot(4, 0), onehot(4, 1), one, RuleKind::kType, true), 0.0);

  std::vector<BinaryVector> two = {vec({1, 0, 0, 0}), vec({0, 1, 0, 0})};
  double oracle = -std::log(oracle::card_rule_score(kHalfHalf, kHalfHalf, 0) +
                            oracle::card_rule_score(kHalfHalf, kHalfHalf, 1));
  EXPECT_NEAR(oracle, -std::log(0.375), 1e-12);
  EXPECT_NEAR(semantic_local(kHalfHalf, kHalfHalf, two, RuleKind::kCard, true),
              0.9808292530117262, 1e-9);

  std::vector<BinaryVector> miss = {vec({0, 0, 1, 0})};
  EXPECT_DOUBLE_EQ(semantic_local(onehot(4, 0), onehot(4, 0), miss, RuleKind::kCard, true),
                   -std::log(kDefaultEps));
  EXPECT_EQ(semantic_local(kHalfHalf, kHalfHalf, two, RuleKind::kCard, false), 0.0);
}

TEST(LocalKernels, DimensionMismatchThrows) {
  BinaryMatrix v(3);
  EXPECT_THROW(coherent_type_local(kUniform4, kUniform4, v, true), InputError);
  EXPECT_THROW(semantic_score_card(kUniform4, Vec{0.5, 0.5}, vec({1, 0, 0, 0})), InputError);
}

// Distinct one-hot cardinality rules are mutually exclusive.
TEST(SemanticScoreCard, MutualExclusivity) {
  for (std::size_t r = 2; r <= 8; ++r) {
    for (std::size_t a = 0; a < r; ++a) {
      BinaryVector first(r, 0);
      first[a] = 1;
      for (std::size_t b = 0; b < r; ++b) {
        if (b == a) continue;
        BinaryVector second(r, 0);
        second[b] = 1;
        EXPECT_EQ(semantic_score_card(onehot(r, a), onehot(r, a), first), 1.0);
        EXPECT_EQ(semantic_score_card(onehot(r, a), onehot(r, a), second), 0.0);
      }
    }
  }
}

// ---------------------------------------------------------------------------
// Gradients of the local kernels

TEST(CoherentTypeLocalGrad, MatchesHandFormula) {
  Rng rng(3);
  BinaryMatrix v(5);
  v.set(0, 1);
  v.set(2, 2);
  v.set(4, 0);
  v.set(3, 1);
  for (int trial = 0; trial < 20; ++trial) {
    Vec pm = oracle::interior_probs(rng, 5), pn = oracle::interior_probs(rng, 5);
    Vec gm(5, 0.0), gn(5, 0.0);
    double loss = coherent_type_local_grad(pm, pn, v, kDefaultEps, gm, gn);
    double inner = 0.0;
    for (std::size_t i = 0; i < 5; ++i) {
      for (std::size_t j = 0; j < 5; ++j) inner += v(i, j) * pm[i] * pn[j];
    }
    EXPECT_NEAR(loss, -std::log(inner), 1e-12);
    for (std::size_t i = 0; i < 5; ++i) {
      double row = 0.0, col = 0.0;
      for (std::size_t j = 0; j < 5; ++j) {
        row += v(i, j) * pn[j];
        col += v(j, i) * pm[j];
      }
      EXPECT_NEAR(gm[i], -row / inner, 1e-12);
      EXPECT_NEAR(gn[i], -col / inner, 1e-12);
    }
  }
}

TEST(LocalGrad, ClampedInnerSumHasZeroGradient) {
  Vec gm(4, 0.0), gn(4, 0.0);
  double loss = coherent_card_local_grad(onehot(4, 0), onehot(4, 1), vec({1, 1, 0, 0}),
                                         kDefaultEps, gm, gn);
  EXPECT_DOUBLE_EQ(loss, -std::log(kDefaultEps));
  for (double g : gm) EXPECT_EQ(g, 0.0);
  for (double g : gn) EXPECT_EQ(g, 0.0);
}

TEST(SemanticLocalGrad, MatchesFiniteDifferences) {
  Rng rng(17);
  for (RuleKind kind : {RuleKind::kType, RuleKind::kCard}) {
    std::vector<BinaryVector> rules = {vec({1, 1, 0, 0, 0}), vec({0, 0, 1, 0, 0}),
                                       vec({0, 0, 0, 1, 1})};
    for (int trial = 0; trial < 20; ++trial) {
      Vec pm = oracle::interior_probs(rng, 5), pn = oracle::interior_probs(rng, 5);
      Vec gm(5, 0.0), gn(5, 0.0);
      semantic_local_grad(pm, pn, rules, kind, kDefaultEps, gm, gn);
      const double h = 1e-6;
      for (std::size_t k = 0; k < 5; ++k) {
        Vec up = pm, down = pm;
        up[k] += h;
        down[k] -= h;
        double fd = (semantic_local(up, pn, rules, kind, true) -
                     semantic_local(down, pn, rules, kind, true)) / (2 * h);
        EXPECT_NEAR(gm[k], fd, 1e-6 * std::max(1.0, std::abs(fd)));
      }
    }
  }
}

// ---------------------------------------------------------------------------
// Batch loss

// Four relations, ts = {(almaMater, city)}, cs = {almaMater}; instance 0 and
// 1 share a subject, instance 0 and 2 share an object.
struct SharedEntitySetting {
  RelationVocabulary vocab{{"almaMater", "city", "r2", "r3"}};
  ConstraintSets sets{vocab};
  Batch batch;

  SharedEntitySetting() {
    sets.add_ts(0, 1);
    sets.add_cs(0);
    batch.instances = {{"i0", {"a", 0, "s"}, kUniform4},
                       {"i1", {"a", 1, "c"}, kUniform4},
                       {"i2", {"b", 0, "s"}, kUniform4}};
  }
};

TEST(BatchConstraintLoss, SharedEntitySettingCoherent) {
  SharedEntitySetting ex;
  auto report = batch_constraint_loss(ex.batch, ConstraintEncoding::coherent(ex.sets), ex.vocab);
  // ts on (i0, i1): 6 of 16 cells; to on (i0, i2): the 4 diagonal cells;
  // cs on (i0, i2): 1 cell; co is empty and gated.
  const double ts = -std::log(6.0 / 16.0), to = -std::log(4.0 / 16.0), cs = -std::log(1.0 / 16.0);
  EXPECT_NEAR(report.per_set[0], ts, 1e-12);
  EXPECT_NEAR(report.per_set[1], to, 1e-12);
  EXPECT_EQ(report.per_set[2], 0.0);
  EXPECT_NEAR(report.per_set[3], cs, 1e-12);
  EXPECT_EQ(report.per_set[4], 0.0);
  EXPECT_NEAR(report.total, ts + to + cs, 1e-12);
  EXPECT_EQ(report.active_pairs, 2u);

  oracle::LossSettings cfg{oracle::Method::kCoherent};
  EXPECT_NEAR(report.total, oracle::batch_total(ex.batch, ex.sets, ex.vocab, cfg), 1e-12);
}

TEST(BatchConstraintLoss, SharedEntitySettingSemantic) {
  SharedEntitySetting ex;
  auto report = batch_constraint_loss(ex.batch, ConstraintEncoding::semantic(ex.sets), ex.vocab);
  const double q = 1.0 - 0.75 * 0.75;  // either of two uniform predictions hits r
  const double single = q * std::pow(1 - q, 3), pair = q * q * std::pow(1 - q, 2);
  const double ts = -std::log(4 * single + pair);
  const double to = -std::log(4 * single);
  const double cs = -std::log(0.0625 * std::pow(1 - 0.0625, 3));
  EXPECT_NEAR(report.per_set[0], ts, 1e-12);
  EXPECT_NEAR(report.per_set[1], to, 1e-12);
  EXPECT_NEAR(report.per_set[3], cs, 1e-12);
  EXPECT_NEAR(report.total, ts + to + cs, 1e-12);

  oracle::LossSettings cfg{oracle::Method::kSemantic};
  EXPECT_NEAR(report.total, oracle::batch_total(ex.batch, ex.sets, ex.vocab, cfg), 1e-12);
}

TEST(BatchConstraintLoss, TrivialCases) {
  SharedEntitySetting ex;
  auto enc = ConstraintEncoding::semantic(ex.sets);
  Batch one;
  one.instances = {ex.batch.instances[0]};
  EXPECT_EQ(batch_constraint_loss(one, enc, ex.vocab).total, 0.0);

  Batch apart;
  apart.instances = {{"x", {"a", 0, "b"}, kUniform4}, {"y", {"c", 1, "d"}, kUniform4}};
  LossOptions opts;
  opts.want_grads = true;
  auto report = batch_constraint_loss(apart, enc, ex.vocab, opts);
  EXPECT_EQ(report.total, 0.0);
  for (const auto& g : report.grads) {
    for (double x : g) EXPECT_EQ(x, 0.0);
  }
  EXPECT_EQ(grad_check(apart, enc, ex.vocab, opts), 0.0);
}

TEST(BatchConstraintLoss, EmptySetGating) {
  RelationVocabulary vocab({"r0", "r1"});
  ConstraintSets sets(vocab);  // cs and co empty
  Batch batch;
  batch.instances = {{"x", {"a", 0, "s"}, {0.5, 0.5}}, {"y", {"b", 1, "s"}, {0.5, 0.5}}};
  for (auto enc : {ConstraintEncoding::coherent(sets), ConstraintEncoding::semantic(sets)}) {
    LossOptions opts;
    auto gated = batch_constraint_loss(batch, enc, vocab, opts);
    EXPECT_EQ(gated.per_set[3], 0.0);
    opts.penalize_empty_sets = true;
    auto charged = batch_constraint_loss(batch, enc, vocab, opts);
    EXPECT_DOUBLE_EQ(charged.per_set[3], -std::log(kDefaultEps));
    EXPECT_EQ(charged.per_set[1], gated.per_set[1]);
  }
}

TEST(BatchConstraintLoss, NaInstancesAreGated) {
  RelationVocabulary vocab({"r0", "r1", "NA"}, 2);
  ConstraintSets sets(vocab);
  sets.add_cs(0);
  Batch batch;
  Vec p = {0.3, 0.3, 0.4};
  batch.instances = {{"x", {"a", 2, "s"}, p}, {"y", {"b", 0, "s"}, p}};
  EXPECT_EQ(batch_constraint_loss(batch, ConstraintEncoding::semantic(sets), vocab).total, 0.0);
}

TEST(BatchConstraintLoss, InvalidInputs) {
  SharedEntitySetting ex;
  auto enc = ConstraintEncoding::semantic(ex.sets);
  Batch bad = ex.batch;
  bad.instances[1].probs = {0.5, 0.5, 0.5, 0.5};
  EXPECT_THROW(batch_constraint_loss(bad, enc, ex.vocab), InputError);
  bad.instances[1].probs = {0.5, 0.5};
  EXPECT_THROW(batch_constraint_loss(bad, enc, ex.vocab), InputError);
  bad.instances[1].probs = {std::nan(""), 0.5, 0.25, 0.25};
  EXPECT_THROW(batch_constraint_loss(bad, enc, ex.vocab), InputError);
  LossOptions opts;
  opts.eps = 0.0;
  EXPECT_THROW(batch_constraint_loss(ex.batch, enc, ex.vocab, opts), InputError);
  EXPECT_THROW(batch_constraint_loss(Batch{}, enc, ex.vocab), InputError);
}

// Random batches with heavy entity sharing.
Batch random_batch(Rng& rng, const RelationVocabulary& vocab, std::size_t size) {
  Batch batch;
  for (std::size_t i = 0; i < size; ++i) {
    Triple t{oracle::entity(rng, 4), static_cast<RelationId>(rng.uniform_index(vocab.size())),
             oracle::entity(rng, 4)};
    batch.instances.push_back({"i" + std::to_string(i), t,
                               oracle::interior_probs(rng, vocab.size())});
  }
  return batch;
}

TEST(BatchConstraintLoss, MatchesOracleOnRandomBatches) {
  Rng rng(42);
  for (int trial = 0; trial < 40; ++trial) {
    const std::size_t r = 3 + rng.uniform_index(5);
    std::optional<RelationId> na;
    if (trial % 3 == 0) na = static_cast<RelationId>(rng.uniform_index(r));
    auto vocab = oracle::numbered_vocab(r, na);
    auto sets = oracle::random_sets(rng, vocab, 0.35);
    auto batch = random_batch(rng, vocab, 2 + rng.uniform_index(8));
    for (auto method : {oracle::Method::kCoherent, oracle::Method::kSemantic}) {
      for (auto pairs : {PairMode::kUnordered, PairMode::kOrdered, PairMode::kOrderedWithSelf}) {
        auto enc = method == oracle::Method::kCoherent ? ConstraintEncoding::coherent(sets)
                                                       : ConstraintEncoding::semantic(sets);
        LossOptions opts;
        opts.pairs = pairs;
        opts.penalize_empty_sets = trial % 2 == 0;
        auto report = batch_constraint_loss(batch, enc, vocab, opts);
        oracle::LossSettings cfg{method, pairs, kDefaultEps, opts.penalize_empty_sets};
        auto expected = oracle::batch_loss(batch, sets, vocab, cfg);
        for (std::size_t k = 0; k < kNumKinds; ++k) {
          EXPECT_NEAR(report.per_set[k], expected[k], 1e-9 * std::max(1.0, expected[k]))
              << "trial " << trial << " set " << k;
        }
      }
    }
  }
}

TEST(BatchConstraintLoss, OrderedPairsDoubleTheUnorderedSum) {
  Rng rng(8);
  auto vocab = oracle::numbered_vocab(5);
  for (int trial = 0; trial < 10; ++trial) {
    auto sets = oracle::random_sets(rng, vocab, 0.4);
    auto batch = random_batch(rng, vocab, 6);
    for (auto enc : {ConstraintEncoding::coherent(sets), ConstraintEncoding::semantic(sets)}) {
      LossOptions unordered, ordered;
      ordered.pairs = PairMode::kOrdered;
      double a = batch_constraint_loss(batch, enc, vocab, unordered).total;
      double b = batch_constraint_loss(batch, enc, vocab, ordered).total;
      EXPECT_NEAR(b, 2 * a, 1e-9 * std::max(1.0, b));
    }
  }
}

TEST(BatchConstraintLoss, SymmetricInPairOrder) {
  Rng rng(12);
  auto vocab = oracle::numbered_vocab(4);
  for (int trial = 0; trial < 20; ++trial) {
    auto sets = oracle::random_sets(rng, vocab, 0.4);
    auto batch = random_batch(rng, vocab, 2);
    Batch swapped = batch;
    std::swap(swapped.instances[0], swapped.instances[1]);
    for (auto enc : {ConstraintEncoding::coherent(sets), ConstraintEncoding::semantic(sets)}) {
      EXPECT_NEAR(batch_constraint_loss(batch, enc, vocab).total,
                  batch_constraint_loss(swapped, enc, vocab).total, 1e-12);
    }
  }
}

TEST(BatchConstraintLoss, IdenticalAcrossThreadCounts) {
  Rng rng(21);
  auto vocab = oracle::numbered_vocab(8);
  auto sets = oracle::random_sets(rng, vocab, 0.3);
  auto batch = random_batch(rng, vocab, 40);
  for (auto enc : {ConstraintEncoding::coherent(sets), ConstraintEncoding::semantic(sets)}) {
    LossOptions opts;
    opts.want_grads = true;
    opts.want_pair_terms = true;
    auto base = batch_constraint_loss(batch, enc, vocab, opts);
    for (int threads : {2, 3, 8}) {
      opts.threads = threads;
      auto other = batch_constraint_loss(batch, enc, vocab, opts);
      EXPECT_EQ(other.total, base.total);
      EXPECT_EQ(other.per_set, base.per_set);
      EXPECT_EQ(other.grads, base.grads);
      ASSERT_EQ(other.per_pair.size(), base.per_pair.size());
      for (std::size_t i = 0; i < base.per_pair.size(); ++i) {
        EXPECT_EQ(other.per_pair[i].value, base.per_pair[i].value);
      }
    }
  }
}

TEST(BatchConstraintLoss, GradientsMatchOracleFiniteDifferences) {
  Rng rng(31);
  for (int trial = 0; trial < 20; ++trial) {
    auto vocab = oracle::numbered_vocab(4 + rng.uniform_index(4));
    auto sets = oracle::random_sets(rng, vocab, 0.4);
    auto batch = random_batch(rng, vocab, 2 + rng.uniform_index(6));
    for (auto method : {oracle::Method::kCoherent, oracle::Method::kSemantic}) {
      auto enc = method == oracle::Method::kCoherent ? ConstraintEncoding::coherent(sets)
                                                     : ConstraintEncoding::semantic(sets);
      LossOptions opts;
      opts.want_grads = true;
      auto report = batch_constraint_loss(batch, enc, vocab, opts);
      auto fd = oracle::finite_difference(batch, sets, vocab, {method}, 1e-5);
      for (std::size_t m = 0; m < fd.size(); ++m) {
        for (std::size_t k = 0; k < fd[m].size(); ++k) {
          double a = report.grads[m][k], f = fd[m][k];
          EXPECT_LT(std::abs(a - f) / std::max({std::abs(a), std::abs(f), 1.0}), 1e-6);
        }
      }
      EXPECT_LT(grad_check(batch, enc, vocab, opts), 1e-6);
    }
  }
}

}  // namespace
}  // namespace clc
