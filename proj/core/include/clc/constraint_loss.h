#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "clc/constraint_repr.h"
#include "clc/constraint_sets.h"
#include "clc/kb_store.h"
#include "clc/pair_indicators.h"

namespace clc {

using ProbSpan = std::span<const double>;
using GradSpan = std::span<double>;

inline constexpr double kDefaultEps = 1e-12;
inline constexpr double kSimplexTolerance = 1e-6;

// Throws InputError unless p is a probability vector: finite entries in
// [0, 1] summing to 1 within kSimplexTolerance.
void validate_probabilities(ProbSpan p, const std::string& what = "probability vector");

// ---------------------------------------------------------------------------
// Local losses for one pair of predictions. All of them return 0 when the
// indicator is off and otherwise -log(max(inner, eps)).

// inner = sum_{i,j} v_ij p^m_i p^n_j
double coherent_type_local(ProbSpan pm, ProbSpan pn, const BinaryMatrix& v,
                           bool indicator, double eps = kDefaultEps);

// inner = sum_i v_i p^m_i p^n_i
double coherent_card_local(ProbSpan pm, ProbSpan pn, const BinaryVector& v,
                           bool indicator, double eps = kDefaultEps);

// prod_{u_i=1} q_i * prod_{u_i=0} (1 - q_i), q_i = p^m_i + p^n_i - p^m_i p^n_i
double semantic_score_type(ProbSpan pm, ProbSpan pn, const BinaryVector& u);

// prod_{u_i=1} p^m_i p^n_i * prod_{u_i=0} (1 - p^m_i p^n_i)
double semantic_score_card(ProbSpan pm, ProbSpan pn, const BinaryVector& u);

enum class RuleKind { kType, kCard };

// inner = sum over rules of the score above. An empty rule list with the
// indicator on yields -log(eps).
double semantic_local(ProbSpan pm, ProbSpan pn,
                      std::span<const BinaryVector> rules, RuleKind kind,
                      bool indicator, double eps = kDefaultEps);

// Gradient-producing forms of the local losses (indicator assumed on). The
// partials of the returned loss are added into grad_m and grad_n. When the
// inner sum is clamped by eps the gradient is zero.
double coherent_type_local_grad(ProbSpan pm, ProbSpan pn, const BinaryMatrix& v,
                                double eps, GradSpan grad_m, GradSpan grad_n);
double coherent_card_local_grad(ProbSpan pm, ProbSpan pn, const BinaryVector& v,
                                double eps, GradSpan grad_m, GradSpan grad_n);
double semantic_local_grad(ProbSpan pm, ProbSpan pn,
                           std::span<const BinaryVector> rules, RuleKind kind,
                           double eps, GradSpan grad_m, GradSpan grad_n);

// ---------------------------------------------------------------------------
// Batch-level loss.

struct Instance {
  std::string id;
  Triple gold;
  std::vector<double> probs;
};

struct Batch {
  std::vector<Instance> instances;
};

enum class EncodingMethod { kCoherent, kSemantic };

// A constraint set encoded for one method, together with which sets are
// empty (for empty-set gating).
class ConstraintEncoding {
 public:
  static ConstraintEncoding coherent(const ConstraintSets& sets);
  static ConstraintEncoding semantic(const ConstraintSets& sets);
  static ConstraintEncoding make(EncodingMethod method, const ConstraintSets& sets);

  EncodingMethod method() const { return method_; }
  std::size_t num_relations() const { return num_relations_; }
  bool set_empty(ConstraintKind kind) const {
    return empty_[static_cast<std::size_t>(kind)];
  }
  const CoherentVectors& coherent_vectors() const {
    return std::get<CoherentVectors>(data_);
  }
  const SemanticRuleSets& semantic_rules() const {
    return std::get<SemanticRuleSets>(data_);
  }

 private:
  EncodingMethod method_ = EncodingMethod::kCoherent;
  std::size_t num_relations_ = 0;
  std::array<bool, kNumKinds> empty_{};
  std::variant<CoherentVectors, SemanticRuleSets> data_;
};

// Which (m, n) pairs the batch sum runs over.
enum class PairMode {
  kUnordered,         // m < n
  kOrdered,           // m != n, both orders
  kOrderedWithSelf,   // every (m, n), including m == n
};

struct LossOptions {
  double eps = kDefaultEps;
  PairMode pairs = PairMode::kUnordered;
  // When false, an empty constraint set contributes nothing even with an
  // active indicator; when true it contributes -log(eps).
  bool penalize_empty_sets = false;
  bool want_grads = false;
  bool want_pair_terms = false;
  IndicatorOptions indicator;
  int threads = 1;
};

struct PairTerm {
  std::size_t m = 0;
  std::size_t n = 0;
  ConstraintKind kind = ConstraintKind::kTs;
  double value = 0.0;
};

struct LossReport {
  double total = 0.0;
  std::array<double, kNumKinds> per_set{};
  std::vector<PairTerm> per_pair;           // filled when want_pair_terms
  std::vector<std::vector<double>> grads;   // d total / d probs, when want_grads
  std::size_t active_pairs = 0;             // pairs with any indicator on
};

// Sums the gated local losses of every pair in the batch, in lexicographic
// (m, n) order, for all five sets. Results do not depend on `threads`.
LossReport batch_constraint_loss(const Batch& batch,
                                 const ConstraintEncoding& encoding,
                                 const RelationVocabulary& vocab,
                                 const LossOptions& options = {});

// Max relative error between the analytic gradient and central finite
// differences with step h. Both gradients are projected onto the tangent
// space of the simplex (per-instance mean removed) before comparison, and
// the error for each coordinate is |a - f| / max(|a|, |f|, 1).
double grad_check(const Batch& batch, const ConstraintEncoding& encoding,
                  const RelationVocabulary& vocab, const LossOptions& options,
                  double h = 1e-5);

}  // namespace clc
