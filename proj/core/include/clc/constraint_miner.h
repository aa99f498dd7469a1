#pragma once

#include "clc/constraint_sets.h"
#include "clc/kb_store.h"

namespace clc {

struct MiningOptions {
  int min_overlap = 1;  // shared entities required for a type rule
  int min_count = 1;    // multi-valued entities required for a cardinality rule
};

// Fills ts, to and tso from entity sharing between relations:
//   (r_i, r_j) in ts  iff |subjects(r_i) & subjects(r_j)| >= min_overlap
//   (r_i, r_j) in to  iff |objects(r_i)  & objects(r_j)|  >= min_overlap
//   (r_i, r_j) in tso iff |subjects(r_i) & objects(r_j)|  >= min_overlap
// The NA relation is skipped.
ConstraintSets mine_type_constraints(const TripleStore& store,
                                     const RelationVocabulary& vocab,
                                     int min_overlap = 1);

// r in cs iff at least min_count distinct objects of r have >= 2 distinct
// subjects; r in co iff at least min_count distinct subjects have >= 2
// distinct objects.
ConstraintSets mine_cardinality_constraints(const TripleStore& store,
                                            const RelationVocabulary& vocab,
                                            int min_count = 1);

ConstraintSets mine_constraints(const TripleStore& store,
                                const RelationVocabulary& vocab,
                                const MiningOptions& options = {});

}  // namespace clc
