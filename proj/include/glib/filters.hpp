#pragma once

#include <random>
#include <set>
#include <string>
#include <unordered_set>
#include <vector>

#include "glib/domain.hpp"
#include "glib/ndr.hpp"

namespace glib {

enum class GoalMode { Ground, Lifted };

struct StaleFilterError : SpecError {
  StaleFilterError() : SpecError("filter state is stale for this model") {}
};

namespace filter_detail {

inline std::string ground_pair_key(const Literal& a, const Literal& b) {
  std::string ka = a.str(), kb = b.str();
  return ka <= kb ? ka + "|" + kb : kb + "|" + ka;
}

inline std::string lifted_pair_key(const Literal& a, const Literal& b) {
  return canonical_lift(std::vector<Literal>{a, b}).str();
}

}  // namespace filter_detail

// Static predicates and approximate mutexes for the current learned model.
// Mutexes follow MMM: a pair is mutex iff its two literals never co-hold in
// any state sampled by random rollouts of the model. Ground pairs and
// canonical lifted pairs are both indexed so either goal mode can query.
class FilterState {
 public:
  FilterState() = default;

  static FilterState compute(const NDRSet& m,
                             const std::vector<Predicate>& predicates,
                             const std::vector<State>& initial_states,
                             int n_rollouts, int rollout_len,
                             std::mt19937& rng) {
    if (n_rollouts < 1) throw SpecError("n_rollouts must be >= 1");
    FilterState f;
    f.fingerprint_ = m.fingerprint();
    f.static_predicates_ = compute_static(m, predicates);

    std::set<State> visited;
    for (int r = 0; r < n_rollouts; ++r) {
      const State& init = initial_states[r % initial_states.size()];
      State s = init;
      visited.insert(s);
      auto actions = [&] {
        DomainSpec shim;
        shim.action_predicates = m.action_predicates();
        return all_ground_actions(shim, s.objects());
      }();
      for (int t = 0; t < rollout_len && !actions.empty(); ++t) {
        const Literal& a = actions[std::uniform_int_distribution<size_t>(
            0, actions.size() - 1)(rng)];
        s = m.sample_next(s, a, rng);  // noise samples as no change
        visited.insert(s);
      }
    }
    for (const auto& s : visited) f.record_coheld(s);
    return f;
  }

  // Predicates appearing in no effect set of any non-default rule.
  static std::set<Symbol> compute_static(
      const NDRSet& m, const std::vector<Predicate>& predicates) {
    std::set<Symbol> affected;
    for (const auto& [pred, ar] : m.rules()) {
      (void)pred;
      for (const auto& r : ar.rules)
        for (const auto& o : r.outcomes)
          for (const auto& e : o.effects) affected.insert(e.pred);
    }
    std::set<Symbol> statics;
    for (const auto& p : predicates)
      if (!affected.count(p.name)) statics.insert(p.name);
    return statics;
  }

  size_t fingerprint() const { return fingerprint_; }
  const std::set<Symbol>& static_predicates() const {
    return static_predicates_;
  }

  bool is_static(Symbol pred) const {
    return static_predicates_.count(pred) > 0;
  }

  bool is_mutex(const Literal& a, const Literal& b, GoalMode mode) const {
    if (mode == GoalMode::Ground)
      return !coheld_ground_.count(filter_detail::ground_pair_key(a, b));
    return !coheld_lifted_.count(filter_detail::lifted_pair_key(a, b));
  }

  size_t coheld_count(GoalMode mode) const {
    return mode == GoalMode::Ground ? coheld_ground_.size()
                                    : coheld_lifted_.size();
  }

 private:
  void record_coheld(const State& s) {
    const auto& lits = s.literals();
    for (size_t i = 0; i < lits.size(); ++i)
      for (size_t j = i + 1; j < lits.size(); ++j) {
        coheld_ground_.insert(filter_detail::ground_pair_key(lits[i], lits[j]));
        coheld_lifted_.insert(filter_detail::lifted_pair_key(lits[i], lits[j]));
      }
  }

  size_t fingerprint_ = 0;
  std::set<Symbol> static_predicates_;
  std::unordered_set<std::string> coheld_ground_;
  std::unordered_set<std::string> coheld_lifted_;
};

// Helper shim matching the operation-level API.
inline std::set<Symbol> compute_static(const NDRSet& m,
                                       const std::vector<Predicate>& preds) {
  return FilterState::compute_static(m, preds);
}

// Materialized mutex pairs over a candidate pair universe (used by tests and
// inspection; goal filtering queries FilterState::is_mutex directly).
inline std::vector<std::pair<Literal, Literal>> compute_mutexes(
    const FilterState& f,
    const std::vector<std::pair<Literal, Literal>>& candidates,
    GoalMode mode) {
  std::vector<std::pair<Literal, Literal>> out;
  for (const auto& [a, b] : candidates)
    if (f.is_mutex(a, b, mode)) out.push_back({a, b});
  return out;
}

// A goal passes unless every literal is static or some literal pair is
// mutex. The filter must have been computed from the current model.
inline bool goal_passes(const Conjunction& goal, const FilterState& f,
                        size_t current_model_fingerprint, GoalMode mode) {
  if (f.fingerprint() != current_model_fingerprint) throw StaleFilterError();
  bool all_static = !goal.literals.empty();
  for (const auto& l : goal.literals)
    if (!f.is_static(l.pred)) all_static = false;
  if (all_static) return false;
  for (size_t i = 0; i < goal.literals.size(); ++i)
    for (size_t j = i + 1; j < goal.literals.size(); ++j)
      if (f.is_mutex(goal.literals[i], goal.literals[j], mode)) return false;
  return true;
}

}  // namespace glib
