#include "clc/constraint_repr.h"

#include <numeric>
#include <ostream>

namespace clc {

std::size_t BinaryMatrix::count() const {
  return static_cast<std::size_t>(std::accumulate(cells_.begin(), cells_.end(), 0));
}

const BinaryMatrix& CoherentVectors::matrix(ConstraintKind kind) const {
  switch (kind) {
    case ConstraintKind::kTo: return to;
    case ConstraintKind::kTso: return tso;
    default: return ts;
  }
}

const BinaryVector& CoherentVectors::vector(ConstraintKind kind) const {
  return kind == ConstraintKind::kCo ? co : cs;
}

const std::vector<BinaryVector>& SemanticRuleSets::rules(ConstraintKind kind) const {
  switch (kind) {
    case ConstraintKind::kTs: return ts;
    case ConstraintKind::kTo: return to;
    case ConstraintKind::kTso: return tso;
    case ConstraintKind::kCs: return cs;
    case ConstraintKind::kCo: return co;
  }
  return ts;
}

CoherentVectors build_coherent(const ConstraintSets& sets) {
  const std::size_t n = sets.num_relations();
  CoherentVectors v{BinaryMatrix(n), BinaryMatrix(n), BinaryMatrix(n),
                    BinaryVector(n, 0), BinaryVector(n, 0)};
  for (std::size_t r = 0; r < n; ++r) {
    if (sets.na_index() && static_cast<std::size_t>(*sets.na_index()) == r) continue;
    v.ts.set(r, r);
    v.to.set(r, r);
  }
  for (const auto& [a, b] : sets.ts()) {
    v.ts.set(a, b);
    v.ts.set(b, a);
  }
  for (const auto& [a, b] : sets.to()) {
    v.to.set(a, b);
    v.to.set(b, a);
  }
  for (const auto& [a, b] : sets.tso()) v.tso.set(a, b);
  for (RelationId r : sets.cs()) v.cs[r] = 1;
  for (RelationId r : sets.co()) v.co[r] = 1;
  return v;
}

namespace {

BinaryVector rule_vector(std::size_t n, RelationId a, RelationId b) {
  BinaryVector u(n, 0);
  u[a] = 1;
  u[b] = 1;
  return u;
}

// Rules for an unordered type set, diagonals included, in (i <= j) order.
std::vector<BinaryVector> symmetric_rules(const ConstraintSets& sets,
                                          const std::set<RelationPair>& members) {
  const std::size_t n = sets.num_relations();
  std::set<RelationPair> all(members.begin(), members.end());
  for (std::size_t r = 0; r < n; ++r) {
    auto id = static_cast<RelationId>(r);
    if (sets.na_index() && *sets.na_index() == id) continue;
    all.insert({id, id});
  }
  std::vector<BinaryVector> rules;
  rules.reserve(all.size());
  for (const auto& [a, b] : all) rules.push_back(rule_vector(n, a, b));
  return rules;
}

std::vector<BinaryVector> one_hot_rules(std::size_t n,
                                        const std::set<RelationId>& members) {
  std::vector<BinaryVector> rules;
  rules.reserve(members.size());
  for (RelationId r : members) rules.push_back(rule_vector(n, r, r));
  return rules;
}

}  // namespace

SemanticRuleSets build_semantic(const ConstraintSets& sets) {
  const std::size_t n = sets.num_relations();
  SemanticRuleSets out;
  out.num_relations = n;
  out.ts = symmetric_rules(sets, sets.ts());
  out.to = symmetric_rules(sets, sets.to());

  std::set<RelationPair> tso;
  for (const auto& [a, b] : sets.tso()) {
    tso.insert(a < b ? RelationPair{a, b} : RelationPair{b, a});
  }
  for (const auto& [a, b] : tso) out.tso.push_back(rule_vector(n, a, b));

  out.cs = one_hot_rules(n, sets.cs());
  out.co = one_hot_rules(n, sets.co());
  return out;
}

namespace {

void write_row(const std::uint8_t* row, std::size_t n, std::ostream& out) {
  for (std::size_t i = 0; i < n; ++i) out << (row[i] ? '1' : '0');
  out << '\n';
}

}  // namespace

void dump(const CoherentVectors& vectors, std::ostream& out) {
  const std::size_t n = vectors.num_relations();
  for (ConstraintKind kind : kAllKinds) {
    out << "# " << kind_name(kind) << '\n';
    if (is_type_kind(kind)) {
      const BinaryMatrix& m = vectors.matrix(kind);
      BinaryVector row(n);
      for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) row[j] = m(i, j);
        write_row(row.data(), n, out);
      }
    } else {
      write_row(vectors.vector(kind).data(), n, out);
    }
  }
}

void dump(const SemanticRuleSets& rules, std::ostream& out) {
  for (ConstraintKind kind : kAllKinds) {
    out << "# " << kind_name(kind) << '\n';
    for (const auto& u : rules.rules(kind)) write_row(u.data(), u.size(), out);
  }
}

}  // namespace clc
