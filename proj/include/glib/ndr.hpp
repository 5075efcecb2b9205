#pragma once

#include <cmath>
#include <map>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "glib/domain.hpp"
#include "glib/relational.hpp"

namespace glib {

struct ModelInvalidError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct Outcome {
  double probability = 0.0;
  std::vector<Literal> effects;  // lifted, possibly negated; empty allowed
  bool is_noise = false;

  static Outcome noise(double p) { return {p, {}, true}; }
};

// Noisy deictic rule: lifted action, conjunctive (possibly negated)
// preconditions, categorical distribution over effect sets. Effect variables
// must appear in the action or preconditions.
struct NDR {
  Literal action;
  Conjunction preconditions;
  std::vector<Outcome> outcomes;
  bool is_default = false;

  double noise_probability() const {
    for (const auto& o : outcomes)
      if (o.is_noise) return o.probability;
    return 0.0;
  }

  std::vector<Term> scope_variables() const {
    std::vector<Term> vars;
    auto add = [&](const Term& t) {
      if (t.is_variable &&
          std::find(vars.begin(), vars.end(), t) == vars.end())
        vars.push_back(t);
    };
    for (const auto& a : action.args) add(a);
    for (const auto& l : preconditions.literals)
      for (const auto& a : l.args) add(a);
    return vars;
  }

  void validate() const {
    double total = 0.0;
    int noise_count = 0;
    auto scope = scope_variables();
    for (const auto& o : outcomes) {
      if (o.probability < -1e-12 || o.probability > 1.0 + 1e-12)
        throw ModelInvalidError("outcome probability out of [0,1]");
      total += o.probability;
      noise_count += o.is_noise;
      for (const auto& e : o.effects)
        for (const auto& t : e.args)
          if (t.is_variable &&
              std::find(scope.begin(), scope.end(), t) == scope.end())
            throw ModelInvalidError("effect variable " + t.str() +
                                    " outside deictic scope");
    }
    if (std::abs(total - 1.0) > 1e-9)
      throw ModelInvalidError("outcome probabilities sum to " +
                              std::to_string(total));
    if (noise_count > 1)
      throw ModelInvalidError("more than one noise outcome");
  }

  // Binding under which this rule covers (s, a), if any. Deterministic:
  // first binding in enumeration order.
  std::optional<Binding> covers(const State& s, const Literal& a) const {
    if (a.pred != action.pred) return std::nullopt;
    Binding b;
    for (size_t i = 0; i < action.args.size(); ++i) {
      const Term& pat = action.args[i];
      if (pat.is_variable) {
        if (!b.bind(pat, a.args[i])) return std::nullopt;
      } else if (pat != a.args[i]) {
        return std::nullopt;
      }
    }
    return find_first_binding(preconditions, s, b);
  }

  std::string str() const {
    std::string out = action.str() + " :- " + preconditions.str() + " ->";
    char buf[32];
    for (const auto& o : outcomes) {
      std::snprintf(buf, sizeof buf, " [%.6g ", o.probability);
      out += buf;
      out += o.is_noise ? "<noise>" : Conjunction(o.effects).str();
      out += "]";
    }
    return out;
  }
};

// Prediction outcome: a concrete next state or the symbolic noise outcome.
struct PredictedOutcome {
  double probability = 0.0;
  std::optional<State> state;  // nullopt = NOISE
};

// Action-indexed rule collection. For every (s, a), exactly one rule covers
// once the per-action default rule is counted.
class NDRSet {
 public:
  struct ActionRules {
    std::vector<NDR> rules;  // non-default
    NDR default_rule;
  };

  NDRSet() = default;

  // Fresh model: default-only rules predicting empty effects.
  explicit NDRSet(const std::vector<Predicate>& action_predicates) {
    for (const auto& ap : action_predicates) {
      ActionRules ar;
      ar.default_rule = make_default(ap);
      rules_.emplace(ap.name, std::move(ar));
      action_preds_.push_back(ap);
    }
  }

  static NDR make_default(const Predicate& ap) {
    NDR d;
    std::vector<Term> args;
    for (int i = 0; i < ap.arity; ++i)
      args.push_back(
          Term::variable("x" + std::to_string(i), ap.arg_types[i]));
    d.action = Literal(ap.name, args);
    d.outcomes = {Outcome{1.0, {}, false}};
    d.is_default = true;
    return d;
  }

  const std::map<Symbol, ActionRules>& rules() const { return rules_; }
  const std::vector<Predicate>& action_predicates() const {
    return action_preds_;
  }

  bool has_action(Symbol pred) const { return rules_.count(pred) > 0; }

  const ActionRules& rules_for(Symbol pred) const {
    auto it = rules_.find(pred);
    if (it == rules_.end())
      throw ModelInvalidError("unknown action predicate " + pred.str());
    return it->second;
  }

  void set_rules(Symbol pred, std::vector<NDR> nondefault) {
    auto it = rules_.find(pred);
    if (it == rules_.end())
      throw ModelInvalidError("unknown action predicate " + pred.str());
    for (auto& r : nondefault) r.validate();
    it->second.rules = std::move(nondefault);
  }

  // The unique covering rule with its binding; the default rule covers when
  // no other does. Two distinct covering non-default rules invalidate the
  // model.
  std::pair<const NDR*, Binding> covering_rule(const State& s,
                                               const Literal& a) const {
    const ActionRules& ar = rules_for(a.pred);
    const NDR* found = nullptr;
    Binding found_binding;
    for (const auto& r : ar.rules) {
      if (auto b = r.covers(s, a)) {
        if (found)
          throw ModelInvalidError("multiple rules cover " + a.str() +
                                  " in state {" + s.str() + "}");
        found = &r;
        found_binding = *b;
      }
    }
    if (found) return {found, found_binding};
    Binding b;
    for (size_t i = 0; i < ar.default_rule.action.args.size(); ++i)
      b.bind(ar.default_rule.action.args[i], a.args[i]);
    return {&ar.default_rule, b};
  }

  std::vector<PredictedOutcome> predict_distribution(const State& s,
                                                     const Literal& a) const {
    auto [rule, binding] = covering_rule(s, a);
    std::vector<PredictedOutcome> out;
    for (const auto& o : rule->outcomes) {
      if (o.probability <= 0.0) continue;
      if (o.is_noise) {
        merge(out, {o.probability, std::nullopt});
        continue;
      }
      std::vector<Literal> ground;
      ground.reserve(o.effects.size());
      for (const auto& e : o.effects) {
        Literal g = binding.apply(e);
        if (!g.is_ground())
          throw ModelInvalidError("unbound variable in effect " + e.str());
        ground.push_back(g);
      }
      merge(out, {o.probability, s.apply_effects(ground)});
    }
    return out;
  }

  // Argmax of the predicted distribution. Concrete states beat noise on
  // ties; concrete ties go to the lexicographically smallest serialization.
  // A strict noise argmax yields no prediction.
  std::optional<State> most_likely_next(const State& s,
                                        const Literal& a) const {
    auto dist = predict_distribution(s, a);
    const PredictedOutcome* best = nullptr;
    for (const auto& po : dist) {
      if (!best) {
        best = &po;
        continue;
      }
      if (po.probability > best->probability + 1e-12) {
        best = &po;
      } else if (std::abs(po.probability - best->probability) <= 1e-12) {
        if (!best->state && po.state) {
          best = &po;
        } else if (best->state && po.state &&
                   po.state->str() < best->state->str()) {
          best = &po;
        }
      }
    }
    if (!best || !best->state) return std::nullopt;
    return best->state;
  }

  // Samples a successor; the noise outcome maps to "no change".
  State sample_next(const State& s, const Literal& a,
                    std::mt19937& rng) const {
    auto dist = predict_distribution(s, a);
    double u = std::uniform_real_distribution<double>(0.0, 1.0)(rng);
    double acc = 0.0;
    for (const auto& po : dist) {
      acc += po.probability;
      if (u <= acc) return po.state ? *po.state : s;
    }
    return dist.empty() || !dist.back().state ? s : *dist.back().state;
  }

  std::string str() const {
    std::string out;
    for (const auto& [pred, ar] : rules_) {
      for (const auto& r : ar.rules) out += r.str() + "\n";
      out += ar.default_rule.str() + "\n";
    }
    return out;
  }

  // Stable content hash used to detect model updates.
  size_t fingerprint() const { return std::hash<std::string>{}(str()); }

 private:
  static void merge(std::vector<PredictedOutcome>& out, PredictedOutcome po) {
    for (auto& existing : out) {
      bool same = (!existing.state && !po.state) ||
                  (existing.state && po.state && *existing.state == *po.state);
      if (same) {
        existing.probability += po.probability;
        return;
      }
    }
    out.push_back(std::move(po));
  }

  std::map<Symbol, ActionRules> rules_;
  std::vector<Predicate> action_preds_;
};

// Ground-truth NDRs from a parsed domain: one rule per operator, no noise
// outcome; inapplicable actions fall through to identity default rules.
inline NDRSet compile_ground_truth(const DomainSpec& d) {
  NDRSet m(d.action_predicates);
  std::map<Symbol, std::vector<NDR>> per_action;
  for (const auto& op : d.operators) {
    NDR r;
    r.action = op.action_literal();
    r.preconditions = op.preconditions;
    for (const auto& [p, effects] : op.outcomes)
      r.outcomes.push_back(Outcome{p, effects, false});
    r.validate();
    per_action[op.name].push_back(std::move(r));
  }
  for (auto& [pred, rules] : per_action) {
    // Syntactic overlap check: identical action signature with one
    // precondition set subsuming another under identity renaming.
    for (size_t i = 0; i < rules.size(); ++i) {
      for (size_t j = 0; j < rules.size(); ++j) {
        if (i == j || rules[i].action != rules[j].action) continue;
        const auto& small = rules[i].preconditions.literals;
        const auto& big = rules[j].preconditions.literals;
        bool subset = std::all_of(small.begin(), small.end(),
                                  [&](const Literal& l) {
                                    return std::find(big.begin(), big.end(),
                                                     l) != big.end();
                                  });
        if (subset)
          throw ModelInvalidError("operators for " + pred.str() +
                                  " have overlapping preconditions");
      }
    }
    m.set_rules(pred, std::move(rules));
  }
  return m;
}

}  // namespace glib
