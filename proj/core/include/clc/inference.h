#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "clc/constraint_sets.h"
#include "clc/kb_store.h"
#include "clc/pair_indicators.h"

namespace clc {

struct Prediction {
  std::string id;
  std::string subj;
  std::string obj;
  std::optional<RelationId> gold_rel;  // gates NA pairs when known
  std::vector<double> probs;
  RelationId predicted = 0;
};

struct PredictionSet {
  std::vector<Prediction> items;
};

// Lowest index wins ties.
RelationId argmax(std::span<const double> probs);

// Sets every item's prediction to the argmax of its probabilities.
void assign_argmax(PredictionSet& preds);

struct ViolationReport {
  std::array<std::size_t, kNumKinds> per_set{};
  std::size_t total = 0;

  std::size_t count(ConstraintKind kind) const {
    return per_set[static_cast<std::size_t>(kind)];
  }
  bool operator==(const ViolationReport&) const = default;
};

// Which sets a pair of predictions violates, given the predicted relations
// ra (for a) and rb (for b). A pair is gated by the indicators of its gold
// entities. A predicted NA never violates anything.
std::array<bool, kNumKinds> pair_violations(const Prediction& a, RelationId ra,
                                            const Prediction& b, RelationId rb,
                                            const ConstraintSets& sets,
                                            const RelationVocabulary& vocab,
                                            const IndicatorOptions& options = {});

// Counts contradictory unordered prediction pairs per constraint set:
//   ts / to : predicted pair not in the set (equal predictions never violate)
//   tso     : neither (a, b) nor (b, a) in tso
//   cs / co : equal predictions whose relation is not in the set
ViolationReport count_violations(const PredictionSet& preds,
                                 const ConstraintSets& sets,
                                 const RelationVocabulary& vocab,
                                 const IndicatorOptions& options = {});

struct RepairOptions {
  std::size_t group_limit = 12;
  IndicatorOptions indicator;
  int threads = 1;
};

struct RepairGroup {
  std::vector<std::size_t> members;  // indices into the prediction set
  bool exact = false;                // solved by exhaustive search
  bool infeasible = false;           // no violation-free assignment exists
  std::size_t changed = 0;
};

struct RepairResult {
  PredictionSet predictions;
  std::vector<RepairGroup> groups;

  std::size_t infeasible_groups() const;
  std::size_t changed() const;
};

// Reassigns predicted relations so that constraint-linked groups of
// instances become violation-free while keeping sum log p high. Groups up to
// group_limit members are solved exactly by branch and bound; larger groups
// are repaired greedily and never end with more violations than they started
// with. An exact group with no violation-free assignment is
// left at its argmax and flagged infeasible.
RepairResult repair_predictions(const PredictionSet& preds,
                                const ConstraintSets& sets,
                                const RelationVocabulary& vocab,
                                const RepairOptions& options = {});

}  // namespace clc
