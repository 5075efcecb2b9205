#pragma once

#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include "glib/relational.hpp"

namespace glib {

struct SpecError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// One ground-truth operator: conjunctive (possibly negated) preconditions
// and a categorical distribution over effect sets.
struct GroundTruthOperator {
  Symbol name;
  std::vector<Term> parameters;  // variables
  Conjunction preconditions;
  std::vector<std::pair<double, std::vector<Literal>>> outcomes;

  Literal action_literal() const { return Literal(name, parameters); }

  void validate() const {
    double total = 0.0;
    for (const auto& [p, effects] : outcomes) {
      if (p <= 0.0 || p > 1.0)
        throw SpecError("operator " + name.str() +
                        ": outcome probability out of (0,1]");
      total += p;
      (void)effects;
    }
    if (std::abs(total - 1.0) > 1e-9)
      throw SpecError("operator " + name.str() +
                      ": outcome probabilities sum to " +
                      std::to_string(total));
  }
};

struct DomainSpec {
  Symbol name;
  std::vector<Symbol> types;
  std::vector<Predicate> predicates;         // state predicates
  std::vector<Predicate> action_predicates;  // one per operator name
  std::vector<GroundTruthOperator> operators;

  const Predicate* find_predicate(Symbol n) const {
    for (const auto& p : predicates)
      if (p.name == n) return &p;
    return nullptr;
  }
  const Predicate* find_action_predicate(Symbol n) const {
    for (const auto& p : action_predicates)
      if (p.name == n) return &p;
    return nullptr;
  }

  void validate() const {
    for (const auto& op : operators) op.validate();
  }
};

struct ProblemSpec {
  Symbol name;
  std::vector<Term> objects;
  State init;
  Conjunction goal;
};

// Every ground instantiation of the domain's action predicates over the
// given objects, in a fixed deterministic order.
inline std::vector<Literal> all_ground_actions(
    const DomainSpec& d, const std::vector<Term>& objects) {
  std::vector<Literal> out;
  for (const auto& ap : d.action_predicates) {
    std::vector<Term> args(ap.arity);
    std::function<void(int)> rec = [&](int i) {
      if (i == ap.arity) {
        out.emplace_back(ap.name, args);
        return;
      }
      for (const auto& o : objects) {
        if (o.type != ap.arg_types[i]) continue;
        args[i] = o;
        rec(i + 1);
      }
    };
    rec(0);
  }
  return out;
}

}  // namespace glib
