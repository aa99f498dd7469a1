#include "clc/training.h"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numeric>

#include "clc/error.h"
#include "clc/random.h"

namespace clc {

// ---------------------------------------------------------------------------
// ClassifierModel

ClassifierModel::ClassifierModel(std::size_t num_relations, std::size_t feature_dim)
    : num_relations_(num_relations),
      feature_dim_(feature_dim),
      weights_(num_relations * feature_dim, 0.0),
      bias_(num_relations, 0.0) {}

void ClassifierModel::logits(std::span<const double> features,
                             std::span<double> out) const {
  if (features.size() != feature_dim_) {
    throw InputError("feature vector has " + std::to_string(features.size()) +
                     " entries, model expects " + std::to_string(feature_dim_));
  }
  for (std::size_t r = 0; r < num_relations_; ++r) {
    const double* row = &weights_[r * feature_dim_];
    double z = bias_[r];
    for (std::size_t f = 0; f < feature_dim_; ++f) z += row[f] * features[f];
    out[r] = z;
  }
}

std::vector<double> ClassifierModel::predict(std::span<const double> features) const {
  std::vector<double> p(num_relations_);
  logits(features, p);
  const double top = *std::max_element(p.begin(), p.end());
  double sum = 0.0;
  for (double& z : p) {
    z = std::exp(z - top);
    sum += z;
  }
  for (double& z : p) z /= sum;
  return p;
}

namespace {

constexpr char kModelMagic[4] = {'C', 'L', 'C', 'M'};
constexpr std::uint32_t kModelVersion = 1;

static_assert(std::endian::native == std::endian::little,
              "model files are written in native little-endian order");

template <typename T>
void write_raw(std::ofstream& out, const T& value) {
  out.write(reinterpret_cast<const char*>(&value), sizeof(T));
}

template <typename T>
T read_raw(std::ifstream& in) {
  T value{};
  in.read(reinterpret_cast<char*>(&value), sizeof(T));
  return value;
}

}  // namespace

void ClassifierModel::save(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot write model file: " + path.string());
  out.write(kModelMagic, sizeof(kModelMagic));
  write_raw(out, kModelVersion);
  write_raw(out, static_cast<std::uint32_t>(num_relations_));
  write_raw(out, static_cast<std::uint32_t>(feature_dim_));
  for (double w : weights_) write_raw(out, w);
  for (double b : bias_) write_raw(out, b);
}

ClassifierModel ClassifierModel::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open model file: " + path.string());
  char magic[4];
  in.read(magic, sizeof(magic));
  if (!in || std::memcmp(magic, kModelMagic, sizeof(magic)) != 0) {
    throw InputError(path.string() + ": not a model file");
  }
  if (read_raw<std::uint32_t>(in) != kModelVersion) {
    throw InputError(path.string() + ": unsupported model version");
  }
  auto rels = read_raw<std::uint32_t>(in);
  auto dim = read_raw<std::uint32_t>(in);
  ClassifierModel model(rels, dim);
  for (double& w : model.weights_) w = read_raw<double>(in);
  for (double& b : model.bias_) b = read_raw<double>(in);
  if (!in) throw InputError(path.string() + ": truncated model file");
  return model;
}

// ---------------------------------------------------------------------------
// Training

namespace {

class Optimizer {
 public:
  Optimizer(OptimizerKind kind, double lr, std::size_t size)
      : kind_(kind), lr_(lr) {
    if (kind_ == OptimizerKind::kAdam) {
      m_.assign(size, 0.0);
      v_.assign(size, 0.0);
    }
  }

  // Applies one update to params. `slot` offsets into the moment buffers so
  // one optimizer can serve weights and bias.
  void step(std::vector<double>& params, const std::vector<double>& grad,
            std::size_t slot) {
    if (kind_ == OptimizerKind::kSgd) {
      for (std::size_t i = 0; i < params.size(); ++i) params[i] -= lr_ * grad[i];
      return;
    }
    const double c1 = 1.0 - std::pow(kBeta1, static_cast<double>(t_));
    const double c2 = 1.0 - std::pow(kBeta2, static_cast<double>(t_));
    for (std::size_t i = 0; i < params.size(); ++i) {
      double& m = m_[slot + i];
      double& v = v_[slot + i];
      m = kBeta1 * m + (1.0 - kBeta1) * grad[i];
      v = kBeta2 * v + (1.0 - kBeta2) * grad[i] * grad[i];
      params[i] -= lr_ * (m / c1) / (std::sqrt(v / c2) + kAdamEps);
    }
  }

  void tick() { ++t_; }

 private:
  static constexpr double kBeta1 = 0.9;
  static constexpr double kBeta2 = 0.999;
  static constexpr double kAdamEps = 1e-8;

  OptimizerKind kind_;
  double lr_;
  long t_ = 0;
  std::vector<double> m_;
  std::vector<double> v_;
};

bool constraint_weight_ever_positive(const TrainConfig& config) {
  const auto& s = config.schedule;
  return s.mode == ScheduleMode::kConstant ? s.lambda_const > 0.0 : s.alpha > 0.0;
}

void check_config(const TrainConfig& config, std::span<const LabeledInstance> data,
                  const RelationVocabulary& vocab, const ConstraintSets& sets) {
  if (config.epochs < 1) throw InputError("epochs must be >= 1");
  if (config.batch_size < 1) throw InputError("batch_size must be >= 1");
  if (!(config.learning_rate >= 0.0)) throw InputError("learning_rate must be >= 0");
  if (!(config.eps > 0.0)) throw InputError("eps must be positive");
  if (config.schedule.mode == ScheduleMode::kTriangular &&
      config.schedule.total_epochs < 1) {
    throw InputError("triangular schedule needs total_epochs >= 1");
  }
  if (config.batch_size < 2 && constraint_weight_ever_positive(config)) {
    throw InputError("batch_size must be >= 2 when the constraint loss is applied");
  }
  if (data.empty()) throw InputError("no training instances");
  if (sets.num_relations() != vocab.size()) {
    throw InputError("constraint sets and vocabulary disagree on relation count");
  }
  const std::size_t dim = data.front().features.size();
  for (const auto& inst : data) {
    if (inst.features.size() != dim) {
      throw InputError("instance '" + inst.id + "' has a different feature size");
    }
    if (!vocab.valid(inst.gold.rel)) {
      throw InputError("instance '" + inst.id + "' has an invalid label");
    }
  }
}

}  // namespace

PredictionSet predict_all(const ClassifierModel& model,
                          std::span<const LabeledInstance> data) {
  PredictionSet preds;
  preds.items.reserve(data.size());
  for (const auto& inst : data) {
    Prediction p;
    p.id = inst.id;
    p.subj = inst.gold.subj;
    p.obj = inst.gold.obj;
    p.gold_rel = inst.gold.rel;
    p.probs = model.predict(inst.features);
    p.predicted = argmax(p.probs);
    preds.items.push_back(std::move(p));
  }
  return preds;
}

double accuracy(const ClassifierModel& model, std::span<const LabeledInstance> data) {
  if (data.empty()) return 0.0;
  std::size_t hits = 0;
  for (const auto& inst : data) {
    if (argmax(model.predict(inst.features)) == inst.true_rel) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(data.size());
}

TrainResult train(std::span<const LabeledInstance> data, const ConstraintSets& sets,
                  const RelationVocabulary& vocab, const TrainConfig& config,
                  std::span<const LabeledInstance> eval) {
  check_config(config, data, vocab, sets);
  const std::size_t num_rel = vocab.size();
  const std::size_t dim = data.front().features.size();

  Rng rng(config.seed);
  TrainResult result;
  result.model = ClassifierModel(num_rel, dim);
  for (double& w : result.model.weights()) w = config.init_scale * rng.normal();

  const ConstraintEncoding encoding = ConstraintEncoding::make(config.encoding, sets);
  Optimizer optimizer(config.optimizer, config.learning_rate, num_rel * dim + num_rel);

  std::vector<std::size_t> order(data.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  const auto batch_size = static_cast<std::size_t>(config.batch_size);
  std::span<const LabeledInstance> audit = eval.empty() ? data : eval;

  std::vector<double> grad_w(num_rel * dim), grad_b(num_rel);
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    const double lambda = lambda_at(config.schedule, epoch);
    rng.shuffle(order);

    double sum_o = 0.0, sum_c = 0.0;
    std::size_t batches = 0;
    for (std::size_t start = 0; start < order.size(); start += batch_size) {
      const std::size_t end = std::min(start + batch_size, order.size());
      const std::size_t b = end - start;

      Batch batch;
      batch.instances.reserve(b);
      for (std::size_t i = start; i < end; ++i) {
        const LabeledInstance& inst = data[order[i]];
        batch.instances.push_back({inst.id, inst.gold, result.model.predict(inst.features)});
        for (double p : batch.instances.back().probs) {
          if (!std::isfinite(p)) {
            throw NumericalError("non-finite prediction at epoch " + std::to_string(epoch) +
                                 ", batch " + std::to_string(batches) + " (instance '" +
                                 inst.id + "')");
          }
        }
      }

      // Cross-entropy: d L_O / d z = (p - y) / b.
      std::vector<std::vector<double>> dz(b, std::vector<double>(num_rel));
      double loss_o = 0.0;
      for (std::size_t i = 0; i < b; ++i) {
        const auto& p = batch.instances[i].probs;
        const RelationId y = batch.instances[i].gold.rel;
        loss_o -= std::log(std::max(p[y], 1e-300));
        for (std::size_t r = 0; r < num_rel; ++r) {
          dz[i][r] = (p[r] - (static_cast<RelationId>(r) == y ? 1.0 : 0.0)) /
                     static_cast<double>(b);
        }
      }
      loss_o /= static_cast<double>(b);

      LossOptions loss_options;
      loss_options.eps = config.eps;
      loss_options.want_grads = lambda > 0.0;
      loss_options.threads = config.threads;
      const LossReport constraint =
          batch_constraint_loss(batch, encoding, vocab, loss_options);

      if (!std::isfinite(loss_o) || !std::isfinite(constraint.total)) {
        throw NumericalError("non-finite loss at epoch " + std::to_string(epoch) +
                             ", batch " + std::to_string(batches) + " (L_O=" +
                             std::to_string(loss_o) + ", L_C=" +
                             std::to_string(constraint.total) + ")");
      }
      sum_o += loss_o;
      sum_c += constraint.total;
      ++batches;

      if (lambda > 0.0) {
        // Back through the softmax: dz_r = p_r (g_r - <g, p>).
        for (std::size_t i = 0; i < b; ++i) {
          const auto& p = batch.instances[i].probs;
          const auto& g = constraint.grads[i];
          double dot = 0.0;
          for (std::size_t r = 0; r < num_rel; ++r) dot += g[r] * p[r];
          for (std::size_t r = 0; r < num_rel; ++r) {
            dz[i][r] += lambda * p[r] * (g[r] - dot);
          }
        }
      }

      std::fill(grad_w.begin(), grad_w.end(), 0.0);
      std::fill(grad_b.begin(), grad_b.end(), 0.0);
      for (std::size_t i = 0; i < b; ++i) {
        const auto& x = data[order[start + i]].features;
        for (std::size_t r = 0; r < num_rel; ++r) {
          const double d = dz[i][r];
          if (d == 0.0) continue;
          double* row = &grad_w[r * dim];
          for (std::size_t f = 0; f < dim; ++f) row[f] += d * x[f];
          grad_b[r] += d;
        }
      }
      optimizer.tick();
      optimizer.step(result.model.weights(), grad_w, 0);
      optimizer.step(result.model.bias(), grad_b, num_rel * dim);
    }

    EpochRecord record;
    record.epoch = epoch;
    record.loss_o = sum_o / static_cast<double>(batches);
    record.loss_c = sum_c / static_cast<double>(batches);
    record.lambda = lambda;
    record.violations = count_violations(predict_all(result.model, audit), sets, vocab).total;
    result.history.push_back(record);
  }
  return result;
}

}  // namespace clc
