#include "clc/pair_indicators.h"

namespace clc {

IndicatorFlags indicators(const Triple& m, const Triple& n,
                          const RelationVocabulary& vocab,
                          const IndicatorOptions& options) {
  if (vocab.is_na(m.rel) || vocab.is_na(n.rel)) return {};

  const bool same_subj = m.subj == n.subj;
  const bool same_obj = m.obj == n.obj;
  IndicatorFlags flags;
  flags.ts = same_subj;
  flags.to = same_obj;
  flags.tso = m.subj == n.obj || m.obj == n.subj;
  flags.cs = !same_subj && same_obj;
  flags.co = options.literal_co ? !(same_subj && !same_obj)
                                : same_subj && !same_obj;
  return flags;
}

}  // namespace clc
