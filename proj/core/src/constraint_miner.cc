#include "clc/constraint_miner.h"

#include <map>

#include "clc/error.h"

namespace clc {
namespace {

std::size_t overlap(const EntitySet& a, const EntitySet& b) {
  // Both sets are sorted; a merge walk avoids materializing the intersection.
  std::size_t count = 0;
  auto ia = a.begin();
  auto ib = b.begin();
  while (ia != a.end() && ib != b.end()) {
    if (*ia < *ib) {
      ++ia;
    } else if (*ib < *ia) {
      ++ib;
    } else {
      ++count;
      ++ia;
      ++ib;
    }
  }
  return count;
}

void check_inputs(const TripleStore& store, const RelationVocabulary& vocab,
                  int threshold, const char* name) {
  if (threshold < 1) {
    throw InputError(std::string(name) + " must be >= 1");
  }
  if (store.num_relations() != vocab.size()) {
    throw InputError("triple store and vocabulary disagree on relation count");
  }
}

}  // namespace

ConstraintSets mine_type_constraints(const TripleStore& store,
                                     const RelationVocabulary& vocab,
                                     int min_overlap) {
  check_inputs(store, vocab, min_overlap, "min_overlap");
  if (store.empty()) throw InputError("cannot mine an empty triple store");

  const auto threshold = static_cast<std::size_t>(min_overlap);
  const auto n = static_cast<RelationId>(vocab.size());
  ConstraintSets sets(vocab);
  for (RelationId i = 0; i < n; ++i) {
    if (vocab.is_na(i)) continue;
    for (RelationId j = 0; j < n; ++j) {
      if (vocab.is_na(j)) continue;
      if (i < j) {
        if (overlap(store.subjects_of(i), store.subjects_of(j)) >= threshold) {
          sets.add_ts(i, j);
        }
        if (overlap(store.objects_of(i), store.objects_of(j)) >= threshold) {
          sets.add_to(i, j);
        }
      }
      if (overlap(store.subjects_of(i), store.objects_of(j)) >= threshold) {
        sets.add_tso(i, j);
      }
    }
  }
  return sets;
}

ConstraintSets mine_cardinality_constraints(const TripleStore& store,
                                            const RelationVocabulary& vocab,
                                            int min_count) {
  check_inputs(store, vocab, min_count, "min_count");

  // (relation, object) -> distinct subjects, and the mirror image.
  std::map<std::pair<RelationId, std::string>, std::size_t> subjects_per_object;
  std::map<std::pair<RelationId, std::string>, std::size_t> objects_per_subject;
  for (const Triple& t : store.triples()) {
    // Triples are unique, so each one adds a distinct subject for its object.
    ++subjects_per_object[{t.rel, t.obj}];
    ++objects_per_subject[{t.rel, t.subj}];
  }

  std::vector<int> multi_subject(vocab.size(), 0);
  std::vector<int> multi_object(vocab.size(), 0);
  for (const auto& [key, count] : subjects_per_object) {
    if (count >= 2) ++multi_subject[key.first];
  }
  for (const auto& [key, count] : objects_per_subject) {
    if (count >= 2) ++multi_object[key.first];
  }

  ConstraintSets sets(vocab);
  for (RelationId r = 0; r < static_cast<RelationId>(vocab.size()); ++r) {
    if (vocab.is_na(r)) continue;
    if (multi_subject[r] >= min_count) sets.add_cs(r);
    if (multi_object[r] >= min_count) sets.add_co(r);
  }
  return sets;
}

ConstraintSets mine_constraints(const TripleStore& store,
                                const RelationVocabulary& vocab,
                                const MiningOptions& options) {
  ConstraintSets sets = mine_type_constraints(store, vocab, options.min_overlap);
  sets.merge(mine_cardinality_constraints(store, vocab, options.min_count));
  return sets;
}

}  // namespace clc
