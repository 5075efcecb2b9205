#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <map>
#include <optional>
#include <set>
#include <vector>

#include "glib/ndr.hpp"
#include "glib/transition.hpp"

namespace glib {

struct LearnerConfig {
  double complexity_penalty = 0.5;  // alpha
  double noise_floor = 1e-8;        // p_min
  int max_search_iters = 1000;
  double time_budget_seconds = 180.0;

  void validate() const {
    if (complexity_penalty <= 0 || noise_floor <= 0 || noise_floor >= 1 ||
        max_search_iters <= 0 || time_budget_seconds <= 0)
      throw SpecError("invalid learner config");
  }
};

namespace lndr_detail {

// Lifts the delta between t.s and t.s_next through the inverse of the
// covering binding. Returns nullopt when some changed object is outside the
// rule's deictic scope; such transitions can only be explained by noise.
inline std::optional<std::vector<Literal>> lifted_delta(const Transition& t,
                                                        const Binding& b) {
  auto invert = [&](const Term& obj) -> std::optional<Term> {
    for (const auto& [var, o] : b.pairs())
      if (o == obj) return var;  // first var wins on aliased objects
    return std::nullopt;
  };
  std::vector<Literal> effects;
  auto lift_into = [&](const Literal& l, bool negated) {
    Literal lifted = l;
    lifted.negated = negated;
    for (auto& a : lifted.args) {
      auto v = invert(a);
      if (!v) return false;
      a = *v;
    }
    effects.push_back(std::move(lifted));
    return true;
  };
  for (const auto& l : t.s_next.literals())
    if (!t.s.contains(l) && !lift_into(l, false)) return std::nullopt;
  for (const auto& l : t.s.literals())
    if (!t.s_next.contains(l) && !lift_into(l, true)) return std::nullopt;
  std::sort(effects.begin(), effects.end());
  return effects;
}

inline bool explains(const Transition& t, const Binding& b,
                     const std::vector<Literal>& effects) {
  std::vector<Literal> ground;
  ground.reserve(effects.size());
  for (const auto& e : effects) {
    Literal g = b.apply(e);
    if (!g.is_ground()) return false;
    ground.push_back(g);
  }
  return t.s.apply_effects(ground) == t.s_next;
}

struct CoveredTransition {
  const Transition* t;
  Binding binding;
};

// Per-action evaluation of a candidate rule list: transition->rule
// assignment (uniqueness enforced), outcome re-estimation, and the
// penalized log-likelihood score.
struct Evaluation {
  bool valid = false;
  double score = -std::numeric_limits<double>::infinity();
  std::vector<NDR> rules;  // with re-estimated outcome probabilities
};

inline std::vector<Outcome> estimate_outcome_probs(
    const NDR& rule, const std::vector<CoveredTransition>& covered,
    double p_min) {
  if (covered.empty()) return {Outcome::noise(1.0)};
  std::map<std::vector<Literal>, int> counts;
  int noise_count = 0;
  for (const auto& ct : covered) {
    auto delta = lifted_delta(*ct.t, ct.binding);
    if (delta && explains(*ct.t, ct.binding, *delta))
      counts[*delta] += 1;
    else
      ++noise_count;
  }
  double total = static_cast<double>(covered.size());
  double p_noise = std::max(noise_count / total, p_min);
  double concrete_mass = 1.0 - p_noise;
  double concrete_total = total - noise_count;
  std::vector<Outcome> out;
  for (const auto& [effects, n] : counts)
    out.push_back(Outcome{concrete_total > 0
                              ? concrete_mass * n / concrete_total
                              : 0.0,
                          effects, false});
  out.push_back(Outcome::noise(p_noise));
  (void)rule;
  return out;
}

inline double transition_log_likelihood(const Transition& t, const NDR& rule,
                                        const Binding& b, double p_min) {
  double explained = 0.0;
  double noise_mass = rule.is_default ? 1.0 : rule.noise_probability();
  for (const auto& o : rule.outcomes) {
    if (o.is_noise || o.probability <= 0.0) continue;
    if (explains(t, b, o.effects)) explained += o.probability;
  }
  double p = explained + noise_mass * p_min;
  if (p <= 0.0) return -1e18;
  return std::log(std::min(p, 1.0));
}

inline int complexity(const std::vector<NDR>& rules) {
  int c = 0;
  for (const auto& r : rules) {
    c += static_cast<int>(r.preconditions.literals.size());
    for (const auto& o : r.outcomes)
      c += static_cast<int>(o.effects.size());
  }
  return c;
}

inline Evaluation evaluate_rules(std::vector<NDR> rules, const NDR& def,
                                 const std::vector<const Transition*>& data,
                                 const LearnerConfig& cfg) {
  Evaluation ev;
  // Assign transitions to rules; more than one covering rule is invalid.
  std::vector<std::vector<CoveredTransition>> covered(rules.size());
  std::vector<std::pair<const Transition*, int>> assignment;  // -1 = default
  for (const Transition* t : data) {
    int found = -1;
    Binding fb;
    for (size_t i = 0; i < rules.size(); ++i) {
      if (auto b = rules[i].covers(t->s, t->action)) {
        if (found >= 0) return ev;  // exactly-one-cover violated
        found = static_cast<int>(i);
        fb = *b;
      }
    }
    if (found >= 0) covered[found].push_back({t, fb});
    assignment.emplace_back(t, found);
  }
  for (size_t i = 0; i < rules.size(); ++i)
    rules[i].outcomes = estimate_outcome_probs(rules[i], covered[i],
                                               cfg.noise_floor);
  double ll = 0.0;
  std::vector<size_t> next(rules.size(), 0);
  for (auto& [t, idx] : assignment) {
    if (idx < 0) {
      Binding b;  // default rule: empty effects, implicit full-mass noise
      ll += transition_log_likelihood(*t, def, b, cfg.noise_floor);
    } else {
      const auto& ct = covered[idx][next[idx]++];
      ll += transition_log_likelihood(*t, rules[idx], ct.binding,
                                      cfg.noise_floor);
    }
  }
  ev.valid = true;
  ev.score = ll - cfg.complexity_penalty * complexity(rules);
  ev.rules = std::move(rules);
  return ev;
}

// Rule induction from a single transition: action arguments become
// positional variables; preconditions are the state literals within one
// deictic hop of the action objects; effects are the observed delta.
inline std::optional<NDR> explain_transition(const Transition& t) {
  NDR r;
  std::vector<std::pair<Term, Term>> obj_to_var;  // object -> variable
  auto var_for = [&](const Term& obj) -> std::optional<Term> {
    for (const auto& [o, v] : obj_to_var)
      if (o == obj) return v;
    return std::nullopt;
  };
  auto fresh_var = [&](const Term& obj) {
    Term v = Term::variable("x" + std::to_string(obj_to_var.size()), obj.type);
    obj_to_var.push_back({obj, v});
    return v;
  };

  r.action = t.action;
  for (auto& a : r.action.args) a = fresh_var(a);
  size_t n_action_vars = obj_to_var.size();

  // One deictic hop: state literals touching an action object may introduce
  // new variables for their other arguments.
  std::vector<Literal> preconds;
  for (const auto& l : t.s.literals()) {
    bool touches = l.args.empty();
    for (const auto& a : l.args) {
      for (size_t i = 0; i < n_action_vars; ++i)
        if (obj_to_var[i].first == a) touches = true;
    }
    if (!touches) continue;
    Literal lifted = l;
    for (auto& a : lifted.args) {
      auto v = var_for(a);
      a = v ? *v : fresh_var(a);
    }
    preconds.push_back(lifted);
  }
  std::sort(preconds.begin(), preconds.end());
  r.preconditions = Conjunction(preconds);

  Binding b;
  for (const auto& [o, v] : obj_to_var) b.bind(v, o);
  auto delta = lifted_delta(t, b);
  if (!delta || delta->empty()) return std::nullopt;
  if (!explains(t, b, *delta)) return std::nullopt;
  r.outcomes = {Outcome{1.0, *delta, false}};
  return r;
}

// Candidate precondition literals over the rule's in-scope variables, both
// polarities, drawn from the predicate vocabulary observed in the data.
inline std::vector<Literal> candidate_preconditions(
    const NDR& rule, const std::vector<Predicate>& vocabulary) {
  std::vector<Term> scope = rule.scope_variables();
  std::vector<Literal> out;
  for (const auto& p : vocabulary) {
    std::vector<Term> args(p.arity);
    std::function<void(int)> rec = [&](int i) {
      if (i == p.arity) {
        Literal pos(p.name, args, false);
        Literal neg(p.name, args, true);
        const auto& existing = rule.preconditions.literals;
        bool have_pos = std::find(existing.begin(), existing.end(), pos) !=
                        existing.end();
        bool have_neg = std::find(existing.begin(), existing.end(), neg) !=
                        existing.end();
        if (!have_pos && !have_neg) {
          out.push_back(pos);
          out.push_back(neg);
        }
        return;
      }
      for (const auto& v : scope) {
        if (v.type != p.arg_types[i]) continue;
        args[i] = v;
        rec(i + 1);
      }
    };
    rec(0);
  }
  return out;
}

// Dropping a precondition may orphan effect variables; those drops are
// not legal neighbors.
inline bool drop_keeps_scope(const NDR& rule, size_t drop_index) {
  NDR candidate = rule;
  candidate.preconditions.literals.erase(
      candidate.preconditions.literals.begin() + drop_index);
  candidate.preconditions.collect_variables();
  auto scope = candidate.scope_variables();
  for (const auto& o : rule.outcomes)
    for (const auto& e : o.effects)
      for (const auto& t : e.args)
        if (t.is_variable &&
            std::find(scope.begin(), scope.end(), t) == scope.end())
          return false;
  return true;
}

}  // namespace lndr_detail

// Penalized data log-likelihood of a full model on a dataset. Transitions
// explained only by noise contribute log(p_noise * p_min); complexity counts
// precondition and effect literals of non-default rules.
inline double score(const NDRSet& m, const Dataset& d,
                    const LearnerConfig& cfg = {}) {
  double ll = 0.0;
  int cx = 0;
  for (const auto& [pred, ar] : m.rules())
    cx += lndr_detail::complexity(ar.rules);
  for (const auto& t : d.all()) {
    auto [rule, binding] = m.covering_rule(t.s, t.action);
    ll += lndr_detail::transition_log_likelihood(t, *rule, binding,
                                                 cfg.noise_floor);
  }
  return ll - cfg.complexity_penalty * cx;
}

inline std::vector<Outcome> estimate_outcome_probs(
    const NDR& rule, const std::vector<lndr_detail::CoveredTransition>& cov,
    double p_min = 1e-8) {
  return lndr_detail::estimate_outcome_probs(rule, cov, p_min);
}

// Greedy hill-climbing over per-action rule sets: ExplainTransition,
// DropRule, Drop/AddPreconditionLiteral, with outcome re-estimation after
// every edit. Warm start seeds the search with the previous model.
inline NDRSet learn(const Dataset& d, const NDRSet& warm_start,
                    const LearnerConfig& cfg = {}) {
  using namespace lndr_detail;
  cfg.validate();
  auto deadline = std::chrono::steady_clock::now() +
                  std::chrono::duration<double>(cfg.time_budget_seconds);

  // Predicate vocabulary observed in the data.
  std::vector<Predicate> vocabulary;
  {
    std::set<Symbol> seen;
    for (const auto& t : d.all()) {
      for (const auto& l : t.s.literals()) {
        if (seen.insert(l.pred).second) {
          std::vector<Symbol> types;
          for (const auto& a : l.args) types.push_back(a.type);
          vocabulary.push_back(Predicate(l.pred, types));
        }
      }
    }
    std::sort(vocabulary.begin(), vocabulary.end(),
              [](const Predicate& a, const Predicate& b) {
                return a.name.str() < b.name.str();
              });
  }

  NDRSet result = warm_start;
  for (const auto& ap : warm_start.action_predicates()) {
    auto data = d.for_action(ap.name);
    if (data.empty()) continue;
    const NDR def = NDRSet::make_default(ap);

    auto eval = [&](std::vector<NDR> rules) {
      return evaluate_rules(std::move(rules), def, data, cfg);
    };

    Evaluation current = eval(warm_start.rules_for(ap.name).rules);
    if (!current.valid) current = eval({});
    if (!current.valid) continue;  // cannot happen: default always valid

    for (int iter = 0; iter < cfg.max_search_iters; ++iter) {
      if (std::chrono::steady_clock::now() > deadline) break;
      Evaluation best_neighbor;

      auto consider = [&](std::vector<NDR> rules) {
        Evaluation ev = eval(std::move(rules));
        if (ev.valid && ev.score > best_neighbor.score) best_neighbor = ev;
      };

      // ExplainTransition: induce a rule from transitions the current model
      // explains only as noise (or as a wrong default prediction).
      int explain_budget = 8;
      std::set<std::vector<Literal>> tried;
      for (const Transition* t : data) {
        if (explain_budget == 0) break;
        bool unexplained = true;
        for (const auto& r : current.rules) {
          if (auto b = r.covers(t->s, t->action)) {
            for (const auto& o : r.outcomes)
              if (!o.is_noise && o.probability > 0 &&
                  explains(*t, *b, o.effects))
                unexplained = false;
            break;
          }
        }
        if (unexplained && t->s == t->s_next) unexplained = false;
        if (!unexplained) continue;
        auto rule = explain_transition(*t);
        if (!rule) continue;
        if (!tried.insert(rule->outcomes[0].effects).second) continue;
        --explain_budget;
        std::vector<NDR> rules = current.rules;
        rules.push_back(*rule);
        consider(std::move(rules));
      }

      for (size_t i = 0; i < current.rules.size(); ++i) {
        // DropRule
        {
          std::vector<NDR> rules = current.rules;
          rules.erase(rules.begin() + i);
          consider(std::move(rules));
        }
        // DropPreconditionLiteral
        for (size_t j = 0; j < current.rules[i].preconditions.literals.size();
             ++j) {
          if (!drop_keeps_scope(current.rules[i], j)) continue;
          std::vector<NDR> rules = current.rules;
          rules[i].preconditions.literals.erase(
              rules[i].preconditions.literals.begin() + j);
          rules[i].preconditions.collect_variables();
          consider(std::move(rules));
        }
        // AddPreconditionLiteral
        for (const auto& lit :
             candidate_preconditions(current.rules[i], vocabulary)) {
          std::vector<NDR> rules = current.rules;
          rules[i].preconditions.literals.push_back(lit);
          std::sort(rules[i].preconditions.literals.begin(),
                    rules[i].preconditions.literals.end());
          rules[i].preconditions.collect_variables();
          consider(std::move(rules));
        }
      }

      if (!best_neighbor.valid || best_neighbor.score <= current.score + 1e-9)
        break;
      current = std::move(best_neighbor);
    }
    result.set_rules(ap.name, current.rules);
  }
  return result;
}

// Retrain trigger: the new transition disagrees with the model's most
// likely prediction (no prediction counts as disagreement).
inline bool should_retrain(const NDRSet& m, const Transition& t) {
  auto pred = m.most_likely_next(t.s, t.action);
  return !pred || *pred != t.s_next;
}

}  // namespace glib
