#include "clc/constraint_loss.h"

#include <algorithm>
#include <cmath>
#include <thread>

#include "clc/error.h"

namespace clc {
namespace {

void check_dims(ProbSpan pm, ProbSpan pn, std::size_t n) {
  if (pm.size() != n || pn.size() != n) {
    throw InputError("dimension mismatch: probability vectors of size " +
                     std::to_string(pm.size()) + " and " +
                     std::to_string(pn.size()) + " against constraints over " +
                     std::to_string(n) + " relations");
  }
}

double clamped_neg_log(double inner, double eps) {
  return -std::log(std::max(inner, eps));
}

double type_score(ProbSpan pm, ProbSpan pn, const BinaryVector& u) {
  double f = 1.0;
  for (std::size_t i = 0; i < u.size(); ++i) {
    double q = pm[i] + pn[i] - pm[i] * pn[i];
    f *= u[i] ? q : 1.0 - q;
  }
  return f;
}

double card_score(ProbSpan pm, ProbSpan pn, const BinaryVector& u) {
  double f = 1.0;
  for (std::size_t i = 0; i < u.size(); ++i) {
    double both = pm[i] * pn[i];
    f *= u[i] ? both : 1.0 - both;
  }
  return f;
}

}  // namespace

void validate_probabilities(ProbSpan p, const std::string& what) {
  double sum = 0.0;
  for (double x : p) {
    if (!std::isfinite(x) || x < 0.0 || x > 1.0) {
      throw InputError(what + ": entries must be finite and in [0, 1]");
    }
    sum += x;
  }
  if (std::abs(sum - 1.0) > kSimplexTolerance) {
    throw InputError(what + ": entries sum to " + std::to_string(sum) +
                     ", expected 1");
  }
}

double coherent_type_local(ProbSpan pm, ProbSpan pn, const BinaryMatrix& v,
                           bool indicator, double eps) {
  check_dims(pm, pn, v.dim());
  if (!indicator) return 0.0;
  double inner = 0.0;
  for (std::size_t i = 0; i < v.dim(); ++i) {
    double row = 0.0;
    for (std::size_t j = 0; j < v.dim(); ++j) {
      if (v(i, j)) row += pn[j];
    }
    inner += pm[i] * row;
  }
  return clamped_neg_log(inner, eps);
}

double coherent_card_local(ProbSpan pm, ProbSpan pn, const BinaryVector& v,
                           bool indicator, double eps) {
  check_dims(pm, pn, v.size());
  if (!indicator) return 0.0;
  double inner = 0.0;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (v[i]) inner += pm[i] * pn[i];
  }
  return clamped_neg_log(inner, eps);
}

double semantic_score_type(ProbSpan pm, ProbSpan pn, const BinaryVector& u) {
  check_dims(pm, pn, u.size());
  return type_score(pm, pn, u);
}

double semantic_score_card(ProbSpan pm, ProbSpan pn, const BinaryVector& u) {
  check_dims(pm, pn, u.size());
  return card_score(pm, pn, u);
}

double semantic_local(ProbSpan pm, ProbSpan pn,
                      std::span<const BinaryVector> rules, RuleKind kind,
                      bool indicator, double eps) {
  for (const auto& u : rules) check_dims(pm, pn, u.size());
  if (pm.size() != pn.size()) check_dims(pm, pn, pm.size());
  if (!indicator) return 0.0;
  double inner = 0.0;
  for (const auto& u : rules) {
    inner += kind == RuleKind::kType ? type_score(pm, pn, u) : card_score(pm, pn, u);
  }
  return clamped_neg_log(inner, eps);
}

double coherent_type_local_grad(ProbSpan pm, ProbSpan pn, const BinaryMatrix& v,
                                double eps, GradSpan grad_m, GradSpan grad_n) {
  const std::size_t n = v.dim();
  check_dims(pm, pn, n);
  // row_i = sum_j v_ij p^n_j, col_j = sum_i v_ij p^m_i
  std::vector<double> row(n, 0.0), col(n, 0.0);
  double inner = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      if (!v(i, j)) continue;
      row[i] += pn[j];
      col[j] += pm[i];
    }
    inner += pm[i] * row[i];
  }
  if (inner <= eps) return -std::log(eps);
  for (std::size_t k = 0; k < n; ++k) {
    grad_m[k] -= row[k] / inner;
    grad_n[k] -= col[k] / inner;
  }
  return -std::log(inner);
}

double coherent_card_local_grad(ProbSpan pm, ProbSpan pn, const BinaryVector& v,
                                double eps, GradSpan grad_m, GradSpan grad_n) {
  const std::size_t n = v.size();
  check_dims(pm, pn, n);
  double inner = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    if (v[i]) inner += pm[i] * pn[i];
  }
  if (inner <= eps) return -std::log(eps);
  for (std::size_t k = 0; k < n; ++k) {
    if (!v[k]) continue;
    grad_m[k] -= pn[k] / inner;
    grad_n[k] -= pm[k] / inner;
  }
  return -std::log(inner);
}

double semantic_local_grad(ProbSpan pm, ProbSpan pn,
                           std::span<const BinaryVector> rules, RuleKind kind,
                           double eps, GradSpan grad_m, GradSpan grad_n) {
  const std::size_t n = pm.size();
  check_dims(pm, pn, n);
  for (const auto& u : rules) check_dims(pm, pn, u.size());

  // Each rule score is a product of per-relation factors a_k; the partial
  // of the score w.r.t. a_k is the product of the other factors, taken from
  // prefix and suffix products so that zero factors need no division.
  std::vector<double> base(n);  // q_k for type rules, p^m_k p^n_k for card
  for (std::size_t k = 0; k < n; ++k) {
    base[k] = kind == RuleKind::kType ? pm[k] + pn[k] - pm[k] * pn[k]
                                      : pm[k] * pn[k];
  }
  std::vector<double> factor(n), prefix(n + 1), suffix(n + 1);
  std::vector<double> d_base(n, 0.0);  // d inner / d base_k
  double inner = 0.0;
  for (const auto& u : rules) {
    for (std::size_t k = 0; k < n; ++k) factor[k] = u[k] ? base[k] : 1.0 - base[k];
    prefix[0] = 1.0;
    for (std::size_t k = 0; k < n; ++k) prefix[k + 1] = prefix[k] * factor[k];
    suffix[n] = 1.0;
    for (std::size_t k = n; k-- > 0;) suffix[k] = suffix[k + 1] * factor[k];
    inner += prefix[n];
    for (std::size_t k = 0; k < n; ++k) {
      double others = prefix[k] * suffix[k + 1];
      d_base[k] += u[k] ? others : -others;
    }
  }
  if (inner <= eps) return -std::log(eps);
  for (std::size_t k = 0; k < n; ++k) {
    // d base_k / d p^m_k is (1 - p^n_k) for q and p^n_k for the joint term.
    double dm = kind == RuleKind::kType ? 1.0 - pn[k] : pn[k];
    double dn = kind == RuleKind::kType ? 1.0 - pm[k] : pm[k];
    grad_m[k] -= d_base[k] * dm / inner;
    grad_n[k] -= d_base[k] * dn / inner;
  }
  return -std::log(inner);
}

// ---------------------------------------------------------------------------

ConstraintEncoding ConstraintEncoding::coherent(const ConstraintSets& sets) {
  return make(EncodingMethod::kCoherent, sets);
}

ConstraintEncoding ConstraintEncoding::semantic(const ConstraintSets& sets) {
  return make(EncodingMethod::kSemantic, sets);
}

ConstraintEncoding ConstraintEncoding::make(EncodingMethod method,
                                            const ConstraintSets& sets) {
  ConstraintEncoding enc;
  enc.method_ = method;
  enc.num_relations_ = sets.num_relations();
  for (ConstraintKind kind : kAllKinds) {
    enc.empty_[static_cast<std::size_t>(kind)] = sets.empty(kind);
  }
  if (method == EncodingMethod::kCoherent) {
    enc.data_ = build_coherent(sets);
  } else {
    enc.data_ = build_semantic(sets);
  }
  return enc;
}

namespace {

struct PairWork {
  std::size_t m;
  std::size_t n;
  IndicatorFlags flags;
  TsoOrientation orientation;
};

struct PairResult {
  std::array<double, kNumKinds> values{};
  std::vector<double> grad_m;
  std::vector<double> grad_n;
};

RuleKind rule_kind(ConstraintKind kind) {
  return is_type_kind(kind) ? RuleKind::kType : RuleKind::kCard;
}

// Local loss for one set and one pair, with gradients added to gm / gn when
// they are non-empty.
double local_term(const ConstraintEncoding& enc, ConstraintKind kind,
                  ProbSpan pm, ProbSpan pn, const PairWork& work, double eps,
                  GradSpan gm, GradSpan gn) {
  const bool grads = !gm.empty();
  std::vector<double> scratch_m, scratch_n;
  if (!grads) {
    scratch_m.assign(pm.size(), 0.0);
    scratch_n.assign(pn.size(), 0.0);
    gm = scratch_m;
    gn = scratch_n;
  }

  if (enc.method() == EncodingMethod::kSemantic) {
    const auto& rules = enc.semantic_rules().rules(kind);
    return semantic_local_grad(pm, pn, rules, rule_kind(kind), eps, gm, gn);
  }

  const CoherentVectors& v = enc.coherent_vectors();
  if (!is_type_kind(kind)) {
    return coherent_card_local_grad(pm, pn, v.vector(kind), eps, gm, gn);
  }
  if (kind != ConstraintKind::kTso) {
    return coherent_type_local_grad(pm, pn, v.matrix(kind), eps, gm, gn);
  }
  // tso is directional: score each orientation whose entity link holds.
  double value = 0.0;
  if (work.orientation.forward) {
    value += coherent_type_local_grad(pm, pn, v.tso, eps, gm, gn);
  }
  if (work.orientation.backward) {
    value += coherent_type_local_grad(pn, pm, v.tso, eps, gn, gm);
  }
  return value;
}

PairResult evaluate_pair(const Batch& batch, const ConstraintEncoding& enc,
                         const PairWork& work, const LossOptions& options) {
  const std::size_t r = enc.num_relations();
  PairResult result;
  if (options.want_grads) {
    result.grad_m.assign(r, 0.0);
    result.grad_n.assign(r, 0.0);
  }
  ProbSpan pm = batch.instances[work.m].probs;
  ProbSpan pn = batch.instances[work.n].probs;
  for (ConstraintKind kind : kAllKinds) {
    if (!work.flags.get(kind)) continue;
    if (enc.set_empty(kind) && !options.penalize_empty_sets) continue;
    result.values[static_cast<std::size_t>(kind)] =
        local_term(enc, kind, pm, pn, work, options.eps, result.grad_m,
                   result.grad_n);
  }
  return result;
}

std::vector<PairWork> active_pairs(const Batch& batch, const RelationVocabulary& vocab,
                                   const LossOptions& options) {
  std::vector<PairWork> pairs;
  const std::size_t count = batch.instances.size();
  for (std::size_t m = 0; m < count; ++m) {
    std::size_t first = 0;
    if (options.pairs == PairMode::kUnordered) first = m + 1;
    for (std::size_t n = first; n < count; ++n) {
      if (n == m && options.pairs != PairMode::kOrderedWithSelf) continue;
      const Triple& tm = batch.instances[m].gold;
      const Triple& tn = batch.instances[n].gold;
      IndicatorFlags flags = indicators(tm, tn, vocab, options.indicator);
      if (!flags.any()) continue;
      pairs.push_back({m, n, flags, tso_orientation(tm, tn)});
    }
  }
  return pairs;
}

LossReport evaluate(const Batch& batch, const ConstraintEncoding& enc,
                    const RelationVocabulary& vocab, const LossOptions& options) {
  const std::vector<PairWork> pairs = active_pairs(batch, vocab, options);
  std::vector<PairResult> results(pairs.size());

  const std::size_t workers = std::clamp<std::size_t>(
      static_cast<std::size_t>(std::max(options.threads, 1)), 1,
      std::max<std::size_t>(pairs.size(), 1));
  if (workers == 1) {
    for (std::size_t i = 0; i < pairs.size(); ++i) {
      results[i] = evaluate_pair(batch, enc, pairs[i], options);
    }
  } else {
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) {
      pool.emplace_back([&, w] {
        for (std::size_t i = w; i < pairs.size(); i += workers) {
          results[i] = evaluate_pair(batch, enc, pairs[i], options);
        }
      });
    }
    for (auto& t : pool) t.join();
  }

  // Reduction in fixed pair order.
  LossReport report;
  report.active_pairs = pairs.size();
  const std::size_t r = enc.num_relations();
  if (options.want_grads) {
    report.grads.assign(batch.instances.size(), std::vector<double>(r, 0.0));
  }
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    const PairWork& work = pairs[i];
    const PairResult& res = results[i];
    for (ConstraintKind kind : kAllKinds) {
      double value = res.values[static_cast<std::size_t>(kind)];
      report.per_set[static_cast<std::size_t>(kind)] += value;
      if (options.want_pair_terms && work.flags.get(kind)) {
        report.per_pair.push_back({work.m, work.n, kind, value});
      }
    }
    if (options.want_grads) {
      for (std::size_t k = 0; k < r; ++k) {
        report.grads[work.m][k] += res.grad_m[k];
        report.grads[work.n][k] += res.grad_n[k];
      }
    }
  }
  for (double v : report.per_set) report.total += v;
  return report;
}

void validate_batch(const Batch& batch, const ConstraintEncoding& enc,
                    const RelationVocabulary& vocab) {
  if (batch.instances.empty()) throw InputError("batch has no instances");
  if (enc.num_relations() != vocab.size()) {
    throw InputError("constraint encoding and vocabulary disagree on relation count");
  }
  for (const auto& inst : batch.instances) {
    if (inst.probs.size() != enc.num_relations()) {
      throw InputError("dimension mismatch: instance '" + inst.id + "' has " +
                       std::to_string(inst.probs.size()) +
                       " probabilities, expected " +
                       std::to_string(enc.num_relations()));
    }
    if (!vocab.valid(inst.gold.rel)) {
      throw InputError("instance '" + inst.id + "' has an invalid gold relation");
    }
    validate_probabilities(inst.probs, "instance '" + inst.id + "'");
  }
}

}  // namespace

LossReport batch_constraint_loss(const Batch& batch,
                                 const ConstraintEncoding& encoding,
                                 const RelationVocabulary& vocab,
                                 const LossOptions& options) {
  if (!(options.eps > 0.0)) throw InputError("eps must be positive");
  validate_batch(batch, encoding, vocab);
  LossReport report = evaluate(batch, encoding, vocab, options);
  if (!std::isfinite(report.total)) {
    throw NumericalError("constraint loss is not finite");
  }
  return report;
}

double grad_check(const Batch& batch, const ConstraintEncoding& encoding,
                  const RelationVocabulary& vocab, const LossOptions& options,
                  double h) {
  if (!(h > 0.0)) throw InputError("finite-difference step must be positive");
  LossOptions analytic_options = options;
  analytic_options.want_grads = true;
  analytic_options.want_pair_terms = false;
  const LossReport analytic =
      batch_constraint_loss(batch, encoding, vocab, analytic_options);

  LossOptions value_options = analytic_options;
  value_options.want_grads = false;
  Batch probe = batch;
  const std::size_t r = encoding.num_relations();
  double max_error = 0.0;
  std::vector<double> numeric(r);
  for (std::size_t m = 0; m < probe.instances.size(); ++m) {
    auto& p = probe.instances[m].probs;
    for (std::size_t k = 0; k < r; ++k) {
      const double saved = p[k];
      p[k] = saved + h;
      const double up = evaluate(probe, encoding, vocab, value_options).total;
      p[k] = saved - h;
      const double down = evaluate(probe, encoding, vocab, value_options).total;
      p[k] = saved;
      numeric[k] = (up - down) / (2.0 * h);
    }
    const auto& exact = analytic.grads[m];
    double mean_exact = 0.0, mean_numeric = 0.0;
    for (std::size_t k = 0; k < r; ++k) {
      mean_exact += exact[k];
      mean_numeric += numeric[k];
    }
    mean_exact /= static_cast<double>(r);
    mean_numeric /= static_cast<double>(r);
    for (std::size_t k = 0; k < r; ++k) {
      double a = exact[k] - mean_exact;
      double f = numeric[k] - mean_numeric;
      double scale = std::max({std::abs(a), std::abs(f), 1.0});
      max_error = std::max(max_error, std::abs(a - f) / scale);
    }
  }
  return max_error;
}

}  // namespace clc
