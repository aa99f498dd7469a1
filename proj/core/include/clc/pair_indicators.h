#pragma once

#include "clc/constraint_sets.h"
#include "clc/kb_store.h"

namespace clc {

// Which constraint sets apply to a pair of gold triples.
struct IndicatorFlags {
  bool ts = false;
  bool to = false;
  bool tso = false;
  bool cs = false;
  bool co = false;

  bool get(ConstraintKind kind) const {
    switch (kind) {
      case ConstraintKind::kTs: return ts;
      case ConstraintKind::kTo: return to;
      case ConstraintKind::kTso: return tso;
      case ConstraintKind::kCs: return cs;
      case ConstraintKind::kCo: return co;
    }
    return false;
  }
  bool any() const { return ts || to || tso || cs || co; }

  bool operator==(const IndicatorFlags&) const = default;
};

struct IndicatorOptions {
  // The co gate as literally printed: 0 on "same subject, different
  // objects" and 1 otherwise. Off by default; the default fires co exactly
  // on that case, mirroring cs.
  bool literal_co = false;
};

// ts: shared subject; to: shared object; tso: subject of one is object of the
// other; cs: shared object, different subjects; co: shared subject, different
// objects. All flags are 0 when either gold relation is NA.
IndicatorFlags indicators(const Triple& m, const Triple& n,
                          const RelationVocabulary& vocab,
                          const IndicatorOptions& options = {});

// The two tso orientations. `forward` (subj_m == obj_n) asks for
// (r_m, r_n) in tso; `backward` (obj_m == subj_n) asks for (r_n, r_m).
struct TsoOrientation {
  bool forward = false;
  bool backward = false;
};

inline TsoOrientation tso_orientation(const Triple& m, const Triple& n) {
  return {m.subj == n.obj, m.obj == n.subj};
}

}  // namespace clc
