#pragma once

#include <array>
#include <cstddef>
#include <filesystem>
#include <optional>
#include <set>
#include <string_view>
#include <utility>

#include "clc/kb_store.h"

namespace clc {

// The five sub-category constraint sets.
enum class ConstraintKind { kTs = 0, kTo = 1, kTso = 2, kCs = 3, kCo = 4 };

inline constexpr std::array<ConstraintKind, 5> kAllKinds = {
    ConstraintKind::kTs, ConstraintKind::kTo, ConstraintKind::kTso,
    ConstraintKind::kCs, ConstraintKind::kCo};
inline constexpr std::size_t kNumKinds = kAllKinds.size();

constexpr std::string_view kind_name(ConstraintKind kind) {
  switch (kind) {
    case ConstraintKind::kTs: return "ts";
    case ConstraintKind::kTo: return "to";
    case ConstraintKind::kTso: return "tso";
    case ConstraintKind::kCs: return "cs";
    case ConstraintKind::kCo: return "co";
  }
  return "?";
}

constexpr bool is_type_kind(ConstraintKind kind) {
  return kind == ConstraintKind::kTs || kind == ConstraintKind::kTo ||
         kind == ConstraintKind::kTso;
}

using RelationPair = std::pair<RelationId, RelationId>;

// Positive relation rules mined from a KB.
//
// ts and to hold unordered pairs, stored as (min, max) with min < max; the
// diagonal (r, r) is a member of both for every non-NA relation and is never
// stored. tso holds ordered pairs (i, j) meaning "subject type of r_i equals
// object type of r_j", diagonal included only when mined. No member ever
// involves the NA relation.
class ConstraintSets {
 public:
  ConstraintSets() = default;
  ConstraintSets(std::size_t num_relations, std::optional<RelationId> na_index)
      : num_relations_(num_relations), na_index_(na_index) {}
  explicit ConstraintSets(const RelationVocabulary& vocab)
      : ConstraintSets(vocab.size(), vocab.na_index()) {}

  std::size_t num_relations() const { return num_relations_; }
  std::optional<RelationId> na_index() const { return na_index_; }

  void add_ts(RelationId a, RelationId b);
  void add_to(RelationId a, RelationId b);
  void add_tso(RelationId subj_side, RelationId obj_side);
  void add_cs(RelationId r);
  void add_co(RelationId r);

  bool in_ts(RelationId a, RelationId b) const;
  bool in_to(RelationId a, RelationId b) const;
  bool in_tso(RelationId subj_side, RelationId obj_side) const;
  bool in_cs(RelationId r) const;
  bool in_co(RelationId r) const;

  // Stored (off-diagonal) members, in canonical lexicographic order.
  const std::set<RelationPair>& ts() const { return ts_; }
  const std::set<RelationPair>& to() const { return to_; }
  const std::set<RelationPair>& tso() const { return tso_; }
  const std::set<RelationId>& cs() const { return cs_; }
  const std::set<RelationId>& co() const { return co_; }

  // True when the set has no member at all, counting implicit diagonals.
  bool empty(ConstraintKind kind) const;

  // Union with another set over the same vocabulary.
  void merge(const ConstraintSets& other);
  bool contains(const ConstraintSets& other) const;

  bool operator==(const ConstraintSets& other) const = default;

 private:
  void check(RelationId r) const;
  bool usable(RelationId r) const;

  std::size_t num_relations_ = 0;
  std::optional<RelationId> na_index_;
  std::set<RelationPair> ts_;
  std::set<RelationPair> to_;
  std::set<RelationPair> tso_;
  std::set<RelationId> cs_;
  std::set<RelationId> co_;
};

// JSON object with the relation list ("relations", "na") followed by arrays
// "ts", "to", "tso" of [name, name] and "cs", "co" of names. Diagonal ts/to
// members are implicit and not written. On load, an embedded relation list
// must match `vocab`; files without one are accepted.
void save_constraints(const ConstraintSets& sets, const RelationVocabulary& vocab,
                      const std::filesystem::path& path);
ConstraintSets load_constraints(const std::filesystem::path& path,
                                const RelationVocabulary& vocab);
// The relation list embedded in a constraint file.
RelationVocabulary load_constraint_vocabulary(const std::filesystem::path& path);

}  // namespace clc
