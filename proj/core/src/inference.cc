#include "clc/inference.h"

#include <algorithm>
#include <cfloat>
#include <cmath>
#include <functional>
#include <limits>
#include <map>
#include <numeric>
#include <thread>

#include "clc/error.h"

namespace clc {
namespace {

Triple gate_triple(const Prediction& p) {
  // An unknown gold relation never gates; -1 is not NA for any vocabulary.
  return {p.subj, p.gold_rel.value_or(-1), p.obj};
}

// For every instance, the later instances (index > m) it shares an entity
// with, in ascending order.
std::vector<std::vector<std::size_t>> later_neighbours(const PredictionSet& preds) {
  std::map<std::string_view, std::vector<std::size_t>> by_entity;
  for (std::size_t i = 0; i < preds.items.size(); ++i) {
    const auto& item = preds.items[i];
    by_entity[item.subj].push_back(i);
    if (item.obj != item.subj) by_entity[item.obj].push_back(i);
  }
  std::vector<std::vector<std::size_t>> out(preds.items.size());
  for (std::size_t m = 0; m < preds.items.size(); ++m) {
    const auto& item = preds.items[m];
    auto& nbrs = out[m];
    for (std::string_view e : {std::string_view(item.subj), std::string_view(item.obj)}) {
      for (std::size_t n : by_entity[e]) {
        if (n > m) nbrs.push_back(n);
      }
    }
    std::sort(nbrs.begin(), nbrs.end());
    nbrs.erase(std::unique(nbrs.begin(), nbrs.end()), nbrs.end());
  }
  return out;
}

std::size_t count_true(const std::array<bool, kNumKinds>& v) {
  return static_cast<std::size_t>(std::count(v.begin(), v.end(), true));
}

class DisjointSets {
 public:
  explicit DisjointSets(std::size_t n) : parent_(n) {
    std::iota(parent_.begin(), parent_.end(), std::size_t{0});
  }
  std::size_t find(std::size_t x) {
    while (parent_[x] != x) x = parent_[x] = parent_[parent_[x]];
    return x;
  }
  void join(std::size_t a, std::size_t b) {
    a = find(a);
    b = find(b);
    if (a == b) return;
    if (b < a) std::swap(a, b);
    parent_[b] = a;
  }

 private:
  std::vector<std::size_t> parent_;
};

struct Link {
  std::size_t other;  // local index within the group
  IndicatorFlags flags;
};

class GroupSolver {
 public:
  GroupSolver(const PredictionSet& preds, const ConstraintSets& sets,
              const RelationVocabulary& vocab, const IndicatorOptions& options,
              const std::vector<std::size_t>& members)
      : preds_(preds), sets_(sets), vocab_(vocab), options_(options),
        members_(members), r_(vocab.size()), links_(members.size()) {
    log_p_.resize(members.size());
    for (std::size_t i = 0; i < members.size(); ++i) {
      const auto& probs = preds.items[members[i]].probs;
      log_p_[i].resize(r_);
      for (std::size_t k = 0; k < r_; ++k) {
        log_p_[i][k] = std::log(std::max(probs[k], DBL_MIN));
      }
    }
    for (std::size_t i = 0; i < members.size(); ++i) {
      for (std::size_t j = i + 1; j < members.size(); ++j) {
        auto flags = indicators(gate_triple(item(i)), gate_triple(item(j)),
                                vocab, options);
        if (!flags.any()) continue;
        links_[i].push_back({j, flags});
        links_[j].push_back({i, flags});
      }
    }
  }

  bool consistent(std::size_t i, RelationId ri, std::size_t j, RelationId rj) const {
    return count_true(pair_violations(item(i), ri, item(j), rj, sets_, vocab_,
                                      options_)) == 0;
  }

  // Violating pairs touching member i under `assign`.
  std::size_t violations_at(std::size_t i, RelationId ri,
                            const std::vector<RelationId>& assign) const {
    std::size_t count = 0;
    for (const Link& link : links_[i]) {
      if (!consistent(i, ri, link.other, assign[link.other])) ++count;
    }
    return count;
  }

  // Branch and bound for the violation-free assignment maximizing sum log p.
  std::optional<std::vector<RelationId>> solve_exact() {
    const std::size_t g = members_.size();
    sort_candidates();
    std::vector<double> best_per_member(g);
    for (std::size_t i = 0; i < g; ++i) best_per_member[i] = log_p_[i][order_[i][0]];
    rest_bound_.assign(g + 1, 0.0);
    for (std::size_t i = g; i-- > 0;) {
      rest_bound_[i] = rest_bound_[i + 1] + best_per_member[i];
    }
    current_.assign(g, 0);
    best_score_ = -std::numeric_limits<double>::infinity();
    best_.reset();
    search(0, 0.0);
    return best_;
  }

  // Repeatedly moves the violating member whose cheapest violation-free
  // alternative costs least. When no member has one, the move that removes
  // the most of a member's violations is taken instead (cheapest first).
  // Every move lowers the group's violation total, so this terminates.
  std::vector<RelationId> solve_greedy(std::vector<RelationId> assign) {
    const std::size_t g = members_.size();
    sort_candidates();
    while (true) {
      bool clean_found = false, partial_found = false;
      double clean_cost = 0.0, partial_cost = 0.0;
      std::size_t clean_member = 0, partial_member = 0;
      RelationId clean_rel = 0, partial_rel = 0;
      std::size_t partial_gain = 0;
      for (std::size_t i = 0; i < g; ++i) {
        const std::size_t now = violations_at(i, assign[i], assign);
        if (now == 0) continue;
        for (RelationId rel : order_[i]) {
          if (rel == assign[i]) continue;
          const std::size_t after = violations_at(i, rel, assign);
          if (after >= now) continue;
          const double cost = log_p_[i][assign[i]] - log_p_[i][rel];
          if (after == 0) {
            // Candidates run in descending log p, so this is the member's
            // cheapest clean alternative. Strict comparison keeps the lowest
            // instance on ties.
            if (!clean_found || cost < clean_cost) {
              clean_found = true;
              clean_cost = cost;
              clean_member = i;
              clean_rel = rel;
            }
            break;
          }
          const std::size_t gain = now - after;
          if (!partial_found || gain > partial_gain ||
              (gain == partial_gain && cost < partial_cost)) {
            partial_found = true;
            partial_gain = gain;
            partial_cost = cost;
            partial_member = i;
            partial_rel = rel;
          }
        }
      }
      if (clean_found) {
        assign[clean_member] = clean_rel;
      } else if (partial_found) {
        assign[partial_member] = partial_rel;
      } else {
        return assign;
      }
    }
  }

 private:
  // Per member: relations by descending log p, lowest index first on ties.
  void sort_candidates() {
    order_.assign(members_.size(), {});
    for (std::size_t i = 0; i < members_.size(); ++i) {
      auto& order = order_[i];
      order.resize(r_);
      std::iota(order.begin(), order.end(), RelationId{0});
      std::stable_sort(order.begin(), order.end(), [&](RelationId a, RelationId b) {
        return log_p_[i][a] > log_p_[i][b];
      });
    }
  }

  const Prediction& item(std::size_t i) const { return preds_.items[members_[i]]; }

  void search(std::size_t depth, double score) {
    if (depth == members_.size()) {
      if (score > best_score_) {
        best_score_ = score;
        best_ = current_;
      }
      return;
    }
    for (RelationId rel : order_[depth]) {
      double next = score + log_p_[depth][rel];
      if (next + rest_bound_[depth + 1] <= best_score_) break;
      bool ok = true;
      for (const Link& link : links_[depth]) {
        if (link.other >= depth) continue;
        if (!consistent(depth, rel, link.other, current_[link.other])) {
          ok = false;
          break;
        }
      }
      if (!ok) continue;
      current_[depth] = rel;
      search(depth + 1, next);
    }
  }

  const PredictionSet& preds_;
  const ConstraintSets& sets_;
  const RelationVocabulary& vocab_;
  const IndicatorOptions& options_;
  const std::vector<std::size_t>& members_;
  std::size_t r_;
  std::vector<std::vector<Link>> links_;
  std::vector<std::vector<double>> log_p_;

  std::vector<std::vector<RelationId>> order_;
  std::vector<double> rest_bound_;
  std::vector<RelationId> current_;
  double best_score_ = 0.0;
  std::optional<std::vector<RelationId>> best_;
};

void check_predictions(const PredictionSet& preds, const RelationVocabulary& vocab) {
  for (const auto& item : preds.items) {
    if (item.probs.size() != vocab.size()) {
      throw InputError("prediction '" + item.id + "' has " +
                       std::to_string(item.probs.size()) +
                       " probabilities, expected " + std::to_string(vocab.size()));
    }
    if (!vocab.valid(item.predicted)) {
      throw InputError("prediction '" + item.id + "' has an invalid relation");
    }
  }
}

}  // namespace

RelationId argmax(std::span<const double> probs) {
  if (probs.empty()) throw InputError("argmax of an empty vector");
  return static_cast<RelationId>(std::max_element(probs.begin(), probs.end()) -
                                 probs.begin());
}

void assign_argmax(PredictionSet& preds) {
  for (auto& item : preds.items) item.predicted = argmax(item.probs);
}

std::array<bool, kNumKinds> pair_violations(const Prediction& a, RelationId ra,
                                            const Prediction& b, RelationId rb,
                                            const ConstraintSets& sets,
                                            const RelationVocabulary& vocab,
                                            const IndicatorOptions& options) {
  std::array<bool, kNumKinds> out{};
  if (vocab.is_na(ra) || vocab.is_na(rb)) return out;
  IndicatorFlags flags = indicators(gate_triple(a), gate_triple(b), vocab, options);
  if (!flags.any()) return out;
  auto at = [&](ConstraintKind k) -> bool& { return out[static_cast<std::size_t>(k)]; };
  at(ConstraintKind::kTs) = flags.ts && !sets.in_ts(ra, rb);
  at(ConstraintKind::kTo) = flags.to && !sets.in_to(ra, rb);
  at(ConstraintKind::kTso) =
      flags.tso && !sets.in_tso(ra, rb) && !sets.in_tso(rb, ra);
  at(ConstraintKind::kCs) = flags.cs && ra == rb && !sets.in_cs(ra);
  at(ConstraintKind::kCo) = flags.co && ra == rb && !sets.in_co(ra);
  return out;
}

ViolationReport count_violations(const PredictionSet& preds,
                                 const ConstraintSets& sets,
                                 const RelationVocabulary& vocab,
                                 const IndicatorOptions& options) {
  check_predictions(preds, vocab);
  ViolationReport report;
  const auto neighbours = later_neighbours(preds);
  for (std::size_t m = 0; m < preds.items.size(); ++m) {
    const auto& a = preds.items[m];
    for (std::size_t n : neighbours[m]) {
      const auto& b = preds.items[n];
      auto v = pair_violations(a, a.predicted, b, b.predicted, sets, vocab, options);
      for (std::size_t k = 0; k < kNumKinds; ++k) report.per_set[k] += v[k];
    }
  }
  for (std::size_t c : report.per_set) report.total += c;
  return report;
}

std::size_t RepairResult::infeasible_groups() const {
  return static_cast<std::size_t>(std::count_if(
      groups.begin(), groups.end(), [](const RepairGroup& g) { return g.infeasible; }));
}

std::size_t RepairResult::changed() const {
  std::size_t total = 0;
  for (const auto& g : groups) total += g.changed;
  return total;
}

RepairResult repair_predictions(const PredictionSet& preds,
                                const ConstraintSets& sets,
                                const RelationVocabulary& vocab,
                                const RepairOptions& options) {
  check_predictions(preds, vocab);
  const std::size_t count = preds.items.size();

  // Groups are connected components of the constraint-linked pair graph.
  DisjointSets dsu(count);
  const auto neighbours = later_neighbours(preds);
  for (std::size_t m = 0; m < count; ++m) {
    for (std::size_t n : neighbours[m]) {
      const auto& a = preds.items[m];
      const auto& b = preds.items[n];
      if (indicators(gate_triple(a), gate_triple(b), vocab, options.indicator).any()) {
        dsu.join(m, n);
      }
    }
  }
  std::map<std::size_t, std::size_t> root_to_group;
  RepairResult result;
  result.predictions = preds;
  for (std::size_t i = 0; i < count; ++i) {
    auto [it, inserted] = root_to_group.emplace(dsu.find(i), result.groups.size());
    if (inserted) result.groups.emplace_back();
    result.groups[it->second].members.push_back(i);
  }

  std::vector<std::vector<RelationId>> assignments(result.groups.size());
  auto solve = [&](std::size_t gi) {
    RepairGroup& group = result.groups[gi];
    std::vector<RelationId> start;
    for (std::size_t idx : group.members) start.push_back(preds.items[idx].predicted);
    group.exact = group.members.size() <= options.group_limit;
    if (group.members.size() == 1) {
      assignments[gi] = start;
      return;
    }
    GroupSolver solver(preds, sets, vocab, options.indicator, group.members);
    if (group.exact) {
      auto best = solver.solve_exact();
      if (best) {
        assignments[gi] = *best;
      } else {
        group.infeasible = true;
        std::vector<RelationId> fallback;
        for (std::size_t idx : group.members) {
          fallback.push_back(argmax(preds.items[idx].probs));
        }
        assignments[gi] = fallback;
      }
    } else {
      assignments[gi] = solver.solve_greedy(start);
    }
  };

  const std::size_t workers = std::clamp<std::size_t>(
      static_cast<std::size_t>(std::max(options.threads, 1)), 1,
      std::max<std::size_t>(result.groups.size(), 1));
  if (workers == 1) {
    for (std::size_t gi = 0; gi < result.groups.size(); ++gi) solve(gi);
  } else {
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < workers; ++w) {
      pool.emplace_back([&, w] {
        for (std::size_t gi = w; gi < result.groups.size(); gi += workers) solve(gi);
      });
    }
    for (auto& t : pool) t.join();
  }

  for (std::size_t gi = 0; gi < result.groups.size(); ++gi) {
    RepairGroup& group = result.groups[gi];
    for (std::size_t i = 0; i < group.members.size(); ++i) {
      auto& item = result.predictions.items[group.members[i]];
      if (item.predicted != assignments[gi][i]) ++group.changed;
      item.predicted = assignments[gi][i];
    }
  }
  return result;
}

}  // namespace clc
