#include <cmath>
#include <cstdio>
#include <random>
#include <set>

#include "clc/error.h"
#include "clc/random.h"
#include "clc/training.h"

namespace clc {
namespace {

enum class Regime { kOneToOne, kManyToOne, kOneToMany, kManyToMany };

bool subject_functional(Regime r) {
  return r == Regime::kOneToOne || r == Regime::kManyToOne;
}
bool object_functional(Regime r) {
  return r == Regime::kOneToOne || r == Regime::kOneToMany;
}

std::string entity_name(int type, int k) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "t%d_e%03d", type, k);
  return buf;
}

struct RelationShape {
  int subj_type = 0;
  int obj_type = 0;
  Regime regime = Regime::kOneToOne;
  std::set<std::string> subjects;
  std::set<std::string> objects;
};

class TripleSampler {
 public:
  explicit TripleSampler(std::vector<RelationShape>& shapes) : shapes_(shapes) {}

  bool try_add(RelationId r, const std::string& s, const std::string& o) {
    if (s == o) return false;
    Triple t{s, r, o};
    if (seen_.count(t)) return false;
    RelationShape& shape = shapes_[r];
    if (subject_functional(shape.regime) && shape.subjects.count(s)) return false;
    if (object_functional(shape.regime) && shape.objects.count(o)) return false;
    shape.subjects.insert(s);
    shape.objects.insert(o);
    seen_.insert(t);
    order_.push_back(std::move(t));
    return true;
  }

  const std::vector<Triple>& triples() const { return order_; }

 private:
  std::vector<RelationShape>& shapes_;
  std::set<Triple> seen_;
  std::vector<Triple> order_;  // insertion order
};

void check_spec(const SyntheticDatasetSpec& spec) {
  if (spec.n_relations < 1 || spec.n_type_classes < 1 || spec.n_instances < 1) {
    throw InputError("synthetic spec: counts must be positive");
  }
  if (spec.n_entities_per_type < 3) {
    throw InputError("synthetic spec: n_entities_per_type must be >= 3");
  }
  if (!(spec.label_noise >= 0.0 && spec.label_noise <= 1.0)) {
    throw InputError("synthetic spec: label_noise must be in [0, 1]");
  }
  if (!(spec.feature_noise >= 0.0) || !(spec.type_signal >= 0.0)) {
    throw InputError("synthetic spec: noise and signal scales must be >= 0");
  }
  if (!(spec.test_fraction >= 0.0 && spec.test_fraction < 1.0)) {
    throw InputError("synthetic spec: test_fraction must be in [0, 1)");
  }
  if (spec.label_noise > 0.0 && spec.n_relations < 2) {
    throw InputError("synthetic spec: label noise needs at least 2 relations");
  }
}

}  // namespace

std::vector<LabeledInstance> SyntheticDataset::split(bool test) const {
  std::vector<LabeledInstance> out;
  for (const auto& inst : instances) {
    if (inst.test == test) out.push_back(inst);
  }
  return out;
}

SyntheticDataset generate_synthetic(const SyntheticDatasetSpec& spec) {
  check_spec(spec);
  Rng rng(spec.seed);
  const int num_rel = spec.n_relations;
  const int num_types = spec.n_type_classes;
  const int per_type = spec.n_entities_per_type;

  std::vector<std::string> names;
  for (int r = 0; r < num_rel; ++r) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "rel%02d", r);
    names.emplace_back(buf);
  }

  std::vector<RelationShape> shapes(num_rel);
  for (int r = 0; r < num_rel; ++r) {
    shapes[r].subj_type = static_cast<int>(rng.uniform_index(num_types));
    shapes[r].obj_type = static_cast<int>(rng.uniform_index(num_types));
    shapes[r].regime = static_cast<Regime>(r % 4);
  }

  // Witness triples: entity 0 of every type is a hub that is the subject of
  // each relation with that subject type and the object of each relation
  // with that object type; entities 1 and 2 supply multiplicity witnesses.
  TripleSampler sampler(shapes);
  for (RelationId r = 0; r < num_rel; ++r) {
    const RelationShape& shape = shapes[r];
    const std::string hub_s = entity_name(shape.subj_type, 0);
    const std::string hub_o = entity_name(shape.obj_type, 0);
    sampler.try_add(r, hub_s, entity_name(shape.obj_type, 1));
    sampler.try_add(r, entity_name(shape.subj_type, 1), hub_o);
    if (!object_functional(shape.regime)) {
      sampler.try_add(r, entity_name(shape.subj_type, 2), hub_o);
    }
    if (!subject_functional(shape.regime)) {
      sampler.try_add(r, hub_s, entity_name(shape.obj_type, 2));
    }
  }
  if (sampler.triples().size() > static_cast<std::size_t>(spec.n_instances)) {
    throw InputError("synthetic spec: n_instances must be at least " +
                     std::to_string(sampler.triples().size()) +
                     " to hold the witness triples");
  }

  // Fill up with random triples. A relation that keeps rejecting samples
  // (its functional arguments are used up) drops out of the rotation.
  std::vector<RelationId> open(num_rel);
  for (int r = 0; r < num_rel; ++r) open[r] = r;
  std::vector<int> misses(num_rel, 0);
  constexpr int kMaxMisses = 200;
  while (sampler.triples().size() < static_cast<std::size_t>(spec.n_instances)) {
    if (open.empty()) {
      throw InputError("synthetic spec is infeasible: cannot place " +
                       std::to_string(spec.n_instances) +
                       " distinct triples; raise n_entities_per_type");
    }
    std::size_t slot = rng.uniform_index(open.size());
    RelationId r = open[slot];
    const RelationShape& shape = shapes[r];
    auto s = entity_name(shape.subj_type, static_cast<int>(rng.uniform_index(per_type)));
    auto o = entity_name(shape.obj_type, static_cast<int>(rng.uniform_index(per_type)));
    if (sampler.try_add(r, s, o)) {
      misses[r] = 0;
    } else if (++misses[r] >= kMaxMisses) {
      open.erase(open.begin() + static_cast<std::ptrdiff_t>(slot));
    }
  }

  SyntheticDataset data;
  data.vocab = RelationVocabulary(names);
  data.store = TripleStore(sampler.triples(), data.vocab.size());

  // Planted rules implied by the construction.
  data.planted = ConstraintSets(data.vocab);
  for (RelationId i = 0; i < num_rel; ++i) {
    for (RelationId j = 0; j < num_rel; ++j) {
      if (i < j && shapes[i].subj_type == shapes[j].subj_type) data.planted.add_ts(i, j);
      if (i < j && shapes[i].obj_type == shapes[j].obj_type) data.planted.add_to(i, j);
      if (shapes[i].subj_type == shapes[j].obj_type) data.planted.add_tso(i, j);
    }
    if (!object_functional(shapes[i].regime)) data.planted.add_cs(i);
    if (!subject_functional(shapes[i].regime)) data.planted.add_co(i);
  }

  // Instances, shuffled so that the test split is a random subset.
  std::vector<Triple> triples = sampler.triples();
  rng.shuffle(triples);
  const auto n = triples.size();
  const auto n_test = static_cast<std::size_t>(std::floor(spec.test_fraction * n));
  const bool typed = spec.type_signal > 0.0;
  const std::size_t dim = num_rel + (typed ? 2 * num_types : 0);
  data.instances.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    LabeledInstance inst;
    char buf[32];
    std::snprintf(buf, sizeof(buf), "i%05zu", i);
    inst.id = buf;
    inst.gold = triples[i];
    inst.true_rel = triples[i].rel;
    inst.test = i >= n - n_test;

    const RelationShape& shape = shapes[inst.true_rel];
    inst.features.assign(dim, 0.0);
    inst.features[inst.true_rel] = 1.0;
    if (typed) {
      inst.features[num_rel + shape.subj_type] = spec.type_signal;
      inst.features[num_rel + num_types + shape.obj_type] = spec.type_signal;
    }
    for (double& x : inst.features) x += spec.feature_noise * rng.normal();

    if (!inst.test && rng.uniform() < spec.label_noise) {
      if (spec.label_noise_mode == LabelNoiseMode::kCyclic) {
        inst.gold.rel = (inst.true_rel + 1) % num_rel;
      } else {
        auto other = static_cast<RelationId>(rng.uniform_index(num_rel - 1));
        inst.gold.rel = other >= inst.true_rel ? other + 1 : other;
      }
    }
    data.instances.push_back(std::move(inst));
  }
  return data;
}

}  // namespace clc
