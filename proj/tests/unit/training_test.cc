#include "clc/training.h"

#include <cmath>

#include <gtest/gtest.h>

#include "clc/constraint_miner.h"
#include "clc/error.h"
#include "clc/random.h"
#include "test_util.h"

namespace clc {
namespace {

ScheduleConfig triangular(double alpha, int total) {
  ScheduleConfig s;
  s.mode = ScheduleMode::kTriangular;
  s.alpha = alpha;
  s.total_epochs = total;
  return s;
}

SyntheticDatasetSpec small_spec() {
  SyntheticDatasetSpec spec;
  spec.n_relations = 8;
  spec.n_entities_per_type = 30;
  spec.n_type_classes = 4;
  spec.n_instances = 600;
  spec.seed = 4;
  return spec;
}

TEST(LambdaAt, Triangular) {
  EXPECT_EQ(lambda_at(triangular(0.5, 10), 0), 0.0);
  EXPECT_EQ(lambda_at(triangular(0.5, 10), 5), 0.5);
  EXPECT_EQ(lambda_at(triangular(0.5, 10), 10), 0.0);
  EXPECT_NEAR(lambda_at(triangular(1e-4, 8), 2), 5e-5, 1e-20);
}

TEST(LambdaAt, ShapeOverWholeRange) {
  for (int total : {2, 4, 10, 40}) {
    auto s = triangular(0.3, total);
    EXPECT_EQ(lambda_at(s, total / 2), 0.3);
    for (int e = 0; e <= total; ++e) {
      double l = lambda_at(s, e);
      EXPECT_GE(l, 0.0);
      EXPECT_LE(l, 0.3);
      if (e > 0 && e <= total / 2) EXPECT_GT(l, lambda_at(s, e - 1));
    }
  }
}

TEST(LambdaAt, ConstantAndErrors) {
  ScheduleConfig c;
  c.lambda_const = 0.25;
  EXPECT_EQ(lambda_at(c, 0), 0.25);
  EXPECT_EQ(lambda_at(c, 1000), 0.25);
  EXPECT_THROW(lambda_at(triangular(0.5, 10), 11), InputError);
  EXPECT_THROW(lambda_at(triangular(0.5, 10), -1), InputError);
  EXPECT_THROW(lambda_at(triangular(0.5, 0), 0), InputError);
}

TEST(GenerateSynthetic, Deterministic) {
  auto a = generate_synthetic(small_spec());
  auto b = generate_synthetic(small_spec());
  ASSERT_EQ(a.instances.size(), b.instances.size());
  for (std::size_t i = 0; i < a.instances.size(); ++i) {
    EXPECT_EQ(a.instances[i].gold, b.instances[i].gold);
    EXPECT_EQ(a.instances[i].features, b.instances[i].features);
    EXPECT_EQ(a.instances[i].test, b.instances[i].test);
  }
  EXPECT_EQ(a.planted, b.planted);
  auto spec = small_spec();
  spec.seed = 5;
  EXPECT_NE(generate_synthetic(spec).instances[0].features, a.instances[0].features);
}

TEST(GenerateSynthetic, MinedConstraintsCoverPlanted) {
  for (std::uint64_t seed : {1, 2, 3}) {
    auto spec = small_spec();
    spec.seed = seed;
    auto data = generate_synthetic(spec);
    auto mined = mine_constraints(data.store, data.vocab);
    EXPECT_TRUE(mined.contains(data.planted)) << "seed " << seed;
    EXPECT_FALSE(data.planted.empty(ConstraintKind::kCs));
    EXPECT_FALSE(data.planted.empty(ConstraintKind::kCo));
  }
}

TEST(GenerateSynthetic, LabelNoiseOnlyTouchesTraining) {
  auto spec = small_spec();
  spec.label_noise = 0.3;
  auto data = generate_synthetic(spec);
  std::size_t flipped = 0, train = 0;
  for (const auto& inst : data.instances) {
    if (inst.test) {
      EXPECT_EQ(inst.gold.rel, inst.true_rel);
    } else {
      ++train;
      flipped += inst.gold.rel != inst.true_rel;
    }
  }
  EXPECT_GT(flipped, train / 5);
  EXPECT_LT(flipped, train * 2 / 5);

  spec.label_noise_mode = LabelNoiseMode::kCyclic;
  for (const auto& inst : generate_synthetic(spec).instances) {
    if (inst.gold.rel != inst.true_rel) {
      EXPECT_EQ(inst.gold.rel, (inst.true_rel + 1) % spec.n_relations);
    }
  }
}

TEST(GenerateSynthetic, InfeasibleSpecThrows) {
  auto spec = small_spec();
  spec.n_entities_per_type = 1;
  EXPECT_THROW(generate_synthetic(spec), InputError);
  spec = small_spec();
  spec.n_relations = 0;
  EXPECT_THROW(generate_synthetic(spec), InputError);
}

TrainConfig quick_config() {
  TrainConfig cfg;
  cfg.epochs = 6;
  cfg.batch_size = 20;
  cfg.learning_rate = 0.5;
  cfg.schedule.lambda_const = 0.0;
  return cfg;
}

TEST(Train, NoiselessDataIsLearnedExactly) {
  auto spec = small_spec();
  spec.feature_noise = 0.0;
  auto data = generate_synthetic(spec);
  auto cfg = quick_config();
  cfg.epochs = 20;
  auto train_set = data.split(false);
  auto result = train(train_set, data.planted, data.vocab, cfg);
  EXPECT_EQ(accuracy(result.model, train_set), 1.0);
}

TEST(Train, ZeroLearningRateKeepsInitialization) {
  auto data = generate_synthetic(small_spec());
  auto cfg = quick_config();
  cfg.epochs = 1;
  cfg.learning_rate = 0.0;
  cfg.schedule.lambda_const = 1e-2;
  auto result = train(data.instances, data.planted, data.vocab, cfg);

  Rng rng(cfg.seed);
  ClassifierModel init(data.vocab.size(), data.instances[0].features.size());
  for (double& w : init.weights()) w = cfg.init_scale * rng.normal();
  EXPECT_EQ(result.model, init);
}

TEST(Train, ZeroLambdaIgnoresConstraints) {
  auto data = generate_synthetic(small_spec());
  auto cfg = quick_config();
  auto with_sets = train(data.instances, data.planted, data.vocab, cfg);
  auto without = train(data.instances, ConstraintSets(data.vocab), data.vocab, cfg);
  EXPECT_EQ(with_sets.model, without.model);
  bool reported = false;
  for (const auto& rec : with_sets.history) reported = reported || rec.loss_c > 0.0;
  EXPECT_TRUE(reported);
}

TEST(Train, ReproducibleAndThreadIndependent) {
  auto data = generate_synthetic(small_spec());
  auto cfg = quick_config();
  cfg.schedule.lambda_const = 1e-2;
  auto a = train(data.instances, data.planted, data.vocab, cfg);
  auto b = train(data.instances, data.planted, data.vocab, cfg);
  cfg.threads = 4;
  auto c = train(data.instances, data.planted, data.vocab, cfg);
  EXPECT_EQ(a.model, b.model);
  EXPECT_EQ(a.model, c.model);
  ASSERT_EQ(a.history.size(), c.history.size());
  for (std::size_t i = 0; i < a.history.size(); ++i) {
    EXPECT_EQ(a.history[i].loss_c, c.history[i].loss_c);
    EXPECT_EQ(a.history[i].violations, c.history[i].violations);
  }
}

TEST(Train, TotalLossDecreasesOnNoiselessData) {
  auto data = generate_synthetic(small_spec());
  auto cfg = quick_config();
  cfg.epochs = 15;
  cfg.learning_rate = 0.2;
  cfg.schedule.lambda_const = 1e-3;
  auto result = train(data.instances, data.planted, data.vocab, cfg);
  ASSERT_EQ(result.history.size(), 15u);
  for (std::size_t e = 3; e < result.history.size(); ++e) {
    const auto& prev = result.history[e - 1];
    const auto& cur = result.history[e];
    EXPECT_EQ(cur.epoch, static_cast<int>(e));
    EXPECT_LE(cur.loss_o + cur.lambda * cur.loss_c,
              prev.loss_o + prev.lambda * prev.loss_c + 1e-3)
        << "epoch " << e;
  }
}

TEST(Train, InvalidConfigurations) {
  auto data = generate_synthetic(small_spec());
  auto cfg = quick_config();
  cfg.batch_size = 1;
  cfg.schedule.lambda_const = 1e-3;
  EXPECT_THROW(train(data.instances, data.planted, data.vocab, cfg), InputError);
  cfg.schedule.lambda_const = 0.0;
  EXPECT_NO_THROW(train(data.instances, data.planted, data.vocab, cfg));
  cfg = quick_config();
  cfg.epochs = 0;
  EXPECT_THROW(train(data.instances, data.planted, data.vocab, cfg), InputError);
  EXPECT_THROW(train({}, data.planted, data.vocab, quick_config()), InputError);
}

TEST(Train, NonFiniteLossAborts) {
  auto data = generate_synthetic(small_spec());
  for (auto& inst : data.instances) {
    for (double& x : inst.features) x *= 1e300;
  }
  auto cfg = quick_config();
  cfg.init_scale = 1e10;  // logits overflow
  EXPECT_THROW(train(data.instances, data.planted, data.vocab, cfg), NumericalError);
}

TEST(ClassifierModel, SaveLoadRoundTrip) {
  test::TempDir dir;
  ClassifierModel model(3, 4);
  Rng rng(1);
  for (double& w : model.weights()) w = rng.normal();
  for (double& b : model.bias()) b = rng.normal();
  model.save(dir.file("m.bin"));
  EXPECT_EQ(ClassifierModel::load(dir.file("m.bin")), model);
  EXPECT_THROW(ClassifierModel::load(dir.write("bad.bin", "nope")), InputError);
  EXPECT_THROW(ClassifierModel::load(dir.file("missing.bin")), InputError);
}

TEST(ClassifierModel, PredictIsASoftmax) {
  ClassifierModel model(3, 2);
  model.weight(0, 0) = 1.0;
  model.weight(2, 1) = 2.0;
  std::vector<double> x = {1.0, 1.0};
  auto p = model.predict(x);
  double z = std::exp(1.0) + 1.0 + std::exp(2.0);
  EXPECT_NEAR(p[0], std::exp(1.0) / z, 1e-15);
  EXPECT_NEAR(p[1], 1.0 / z, 1e-15);
  EXPECT_NEAR(p[2], std::exp(2.0) / z, 1e-15);
  EXPECT_THROW(model.predict(std::vector<double>{1.0}), InputError);
}

}  // namespace
}  // namespace clc
