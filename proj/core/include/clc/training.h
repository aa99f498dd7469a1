#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "clc/constraint_loss.h"
#include "clc/constraint_sets.h"
#include "clc/inference.h"
#include "clc/kb_store.h"

namespace clc {

// ---------------------------------------------------------------------------
// Constraint-loss weight schedule.

enum class ScheduleMode { kConstant, kTriangular };

struct ScheduleConfig {
  ScheduleMode mode = ScheduleMode::kConstant;
  double lambda_const = 1e-4;
  double alpha = 1e-4;    // peak of the triangular schedule
  int total_epochs = 1;
};

// Constant: lambda_const. Triangular: rises linearly from 0 at epoch 0 to
// alpha at total_epochs / 2 and falls back to 0 at total_epochs.
double lambda_at(const ScheduleConfig& schedule, int epoch);

// ---------------------------------------------------------------------------
// Synthetic data with planted constraint structure.

// How a noisy training label is chosen: uniformly among the other relations,
// or always the next relation index (cyclic), which biases the classifier
// towards one fixed wrong relation per class.
enum class LabelNoiseMode { kUniform, kCyclic };

struct SyntheticDatasetSpec {
  int n_relations = 12;
  int n_entities_per_type = 60;
  int n_type_classes = 4;
  int n_instances = 2400;
  double label_noise = 0.0;    // probability that a training label is flipped
  LabelNoiseMode label_noise_mode = LabelNoiseMode::kUniform;
  double feature_noise = 0.5;  // std-dev of Gaussian noise on every feature
  double type_signal = 1.0;    // scale of the argument-type features, 0 = none
  double test_fraction = 0.25;
  std::uint64_t seed = 1;
};

struct LabeledInstance {
  std::string id;
  Triple gold;              // observed (possibly flipped) label
  RelationId true_rel = 0;  // the relation the features were drawn from
  std::vector<double> features;
  bool test = false;
};

struct SyntheticDataset {
  RelationVocabulary vocab;
  TripleStore store;  // true KB triples, one per instance
  std::vector<LabeledInstance> instances;
  ConstraintSets planted;

  std::vector<LabeledInstance> split(bool test) const;
};

// Entities are split into type classes; each relation gets a subject type,
// an object type and a cardinality regime, and triples are sampled to respect
// them. A hub entity per type links every relation of that type so that the
// planted type rules are all witnessed. Features are a noisy one-hot of the
// true relation, followed (when type_signal > 0) by noisy one-hots of the
// subject and object types. Label noise flips training labels only.
SyntheticDataset generate_synthetic(const SyntheticDatasetSpec& spec);

// ---------------------------------------------------------------------------
// Linear softmax relation classifier.

class ClassifierModel {
 public:
  ClassifierModel() = default;
  ClassifierModel(std::size_t num_relations, std::size_t feature_dim);

  std::size_t num_relations() const { return num_relations_; }
  std::size_t feature_dim() const { return feature_dim_; }

  std::vector<double> predict(std::span<const double> features) const;
  void logits(std::span<const double> features, std::span<double> out) const;

  double& weight(std::size_t rel, std::size_t feature) {
    return weights_[rel * feature_dim_ + feature];
  }
  double weight(std::size_t rel, std::size_t feature) const {
    return weights_[rel * feature_dim_ + feature];
  }
  std::vector<double>& weights() { return weights_; }
  const std::vector<double>& weights() const { return weights_; }
  std::vector<double>& bias() { return bias_; }
  const std::vector<double>& bias() const { return bias_; }

  // Little-endian binary: "CLCM", u32 version, u32 |R|, u32 dim, weights,
  // bias as IEEE-754 doubles.
  void save(const std::filesystem::path& path) const;
  static ClassifierModel load(const std::filesystem::path& path);

  bool operator==(const ClassifierModel&) const = default;

 private:
  std::size_t num_relations_ = 0;
  std::size_t feature_dim_ = 0;
  std::vector<double> weights_;  // |R| x dim, row-major
  std::vector<double> bias_;
};

enum class OptimizerKind { kSgd, kAdam };

struct TrainConfig {
  int epochs = 10;
  int batch_size = 50;
  double learning_rate = 1e-3;
  std::uint64_t seed = 1;
  EncodingMethod encoding = EncodingMethod::kSemantic;
  double eps = kDefaultEps;
  ScheduleConfig schedule;
  OptimizerKind optimizer = OptimizerKind::kSgd;
  double init_scale = 0.01;  // std-dev of the initial weights
  int threads = 1;
};

struct EpochRecord {
  int epoch = 0;
  double loss_o = 0.0;    // mean cross-entropy per batch
  double loss_c = 0.0;    // mean constraint loss per batch
  double lambda = 0.0;
  std::size_t violations = 0;
};

struct TrainResult {
  ClassifierModel model;
  std::vector<EpochRecord> history;
};

// Mini-batch training of L_O + lambda(epoch) * L_C, where L_O is the batch
// mean cross-entropy and L_C the summed pairwise constraint loss. Violations
// in the history are counted on `eval` (or the training data when empty)
// from argmax predictions.
TrainResult train(std::span<const LabeledInstance> data,
                  const ConstraintSets& sets, const RelationVocabulary& vocab,
                  const TrainConfig& config,
                  std::span<const LabeledInstance> eval = {});

// Argmax predictions for a set of instances, gated by their gold labels.
PredictionSet predict_all(const ClassifierModel& model,
                          std::span<const LabeledInstance> data);

// Fraction of instances whose argmax equals true_rel.
double accuracy(const ClassifierModel& model, std::span<const LabeledInstance> data);

}  // namespace clc
