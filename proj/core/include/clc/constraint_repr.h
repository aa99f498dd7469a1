#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <vector>

#include "clc/constraint_sets.h"

namespace clc {

// Dense |R| x |R| 0/1 matrix, row-major.
class BinaryMatrix {
 public:
  BinaryMatrix() = default;
  explicit BinaryMatrix(std::size_t n) : n_(n), cells_(n * n, 0) {}

  std::size_t dim() const { return n_; }
  std::uint8_t operator()(std::size_t i, std::size_t j) const {
    return cells_[i * n_ + j];
  }
  void set(std::size_t i, std::size_t j) { cells_[i * n_ + j] = 1; }
  std::size_t count() const;

  bool operator==(const BinaryMatrix&) const = default;

 private:
  std::size_t n_ = 0;
  std::vector<std::uint8_t> cells_;
};

using BinaryVector = std::vector<std::uint8_t>;

// One binary vector per constraint set. Type sets are kept as matrices
// (the flattened |R|^2 vectors); ts and to carry ones on the diagonal for
// every non-NA relation.
struct CoherentVectors {
  BinaryMatrix ts;
  BinaryMatrix to;
  BinaryMatrix tso;  // directional: (i, j) = subject side r_i, object side r_j
  BinaryVector cs;
  BinaryVector co;

  std::size_t num_relations() const { return cs.size(); }
  const BinaryMatrix& matrix(ConstraintKind kind) const;
  const BinaryVector& vector(ConstraintKind kind) const;

  bool operator==(const CoherentVectors&) const = default;
};

// One binary vector per rule. Type rules have ones at both relations (a
// single one for a diagonal rule); cardinality rules are one-hot. Rules are
// in canonical order: ascending (i, j) with i <= j for type sets, ascending
// index for cardinality sets. tso rules lose their direction here, so (i, j)
// and (j, i) collapse into one rule.
struct SemanticRuleSets {
  std::size_t num_relations = 0;
  std::vector<BinaryVector> ts;
  std::vector<BinaryVector> to;
  std::vector<BinaryVector> tso;
  std::vector<BinaryVector> cs;
  std::vector<BinaryVector> co;

  const std::vector<BinaryVector>& rules(ConstraintKind kind) const;

  bool operator==(const SemanticRuleSets&) const = default;
};

CoherentVectors build_coherent(const ConstraintSets& sets);
SemanticRuleSets build_semantic(const ConstraintSets& sets);

// Human-readable dump: one matrix row or rule per line as 0/1 digits, each
// set introduced by a "# <name>" header line.
void dump(const CoherentVectors& vectors, std::ostream& out);
void dump(const SemanticRuleSets& rules, std::ostream& out);

}  // namespace clc
