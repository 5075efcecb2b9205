#pragma once

#include <algorithm>
#include <cassert>
#include <functional>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "glib/symbols.hpp"

namespace glib {

inline Symbol default_type() { return Symbol::intern("object"); }

enum class PredicateKind { State, Action };

struct Predicate {
  Symbol name;
  int arity = 0;
  std::vector<Symbol> arg_types;  // length == arity
  PredicateKind kind = PredicateKind::State;

  Predicate() = default;
  Predicate(Symbol n, int a, PredicateKind k = PredicateKind::State)
      : name(n), arity(a), arg_types(a, default_type()), kind(k) {}
  Predicate(Symbol n, std::vector<Symbol> types,
            PredicateKind k = PredicateKind::State)
      : name(n), arity(static_cast<int>(types.size())),
        arg_types(std::move(types)), kind(k) {}
};

// An object or a variable. Variables serialize with a '?' prefix, which keeps
// the two lexical spaces disjoint.
struct Term {
  Symbol name;
  Symbol type;
  bool is_variable = false;

  static Term object(std::string_view n, Symbol t = default_type()) {
    return {Symbol::intern(n), t, false};
  }
  static Term variable(std::string_view n, Symbol t = default_type()) {
    return {Symbol::intern(n), t, true};
  }

  std::string str() const {
    return is_variable ? "?" + name.str() : name.str();
  }

  friend bool operator==(const Term& a, const Term& b) {
    return a.is_variable == b.is_variable && a.name == b.name &&
           a.type == b.type;
  }
  friend bool operator!=(const Term& a, const Term& b) { return !(a == b); }
  friend bool operator<(const Term& a, const Term& b) {
    if (a.is_variable != b.is_variable) return a.is_variable < b.is_variable;
    if (a.name != b.name) return a.name.str() < b.name.str();
    return a.type.str() < b.type.str();
  }
};

struct TermHash {
  size_t operator()(const Term& t) const noexcept {
    return (static_cast<size_t>(t.name.id()) << 1) ^ t.is_variable;
  }
};

struct Literal {
  Symbol pred;
  std::vector<Term> args;
  bool negated = false;

  Literal() = default;
  Literal(Symbol p, std::vector<Term> a, bool neg = false)
      : pred(p), args(std::move(a)), negated(neg) {}
  Literal(std::string_view p, std::vector<Term> a, bool neg = false)
      : pred(Symbol::intern(p)), args(std::move(a)), negated(neg) {}

  bool is_ground() const {
    return std::none_of(args.begin(), args.end(),
                        [](const Term& t) { return t.is_variable; });
  }

  Literal positive() const { return Literal(pred, args, false); }
  Literal negation() const { return Literal(pred, args, !negated); }

  std::string str() const {
    std::string inner = "(" + pred.str();
    for (const auto& a : args) inner += " " + a.str();
    inner += ")";
    return negated ? "(not " + inner + ")" : inner;
  }

  friend bool operator==(const Literal& a, const Literal& b) {
    return a.pred == b.pred && a.negated == b.negated && a.args == b.args;
  }
  friend bool operator!=(const Literal& a, const Literal& b) {
    return !(a == b);
  }
  friend bool operator<(const Literal& a, const Literal& b) {
    if (a.pred != b.pred) return a.pred.str() < b.pred.str();
    if (a.args != b.args)
      return std::lexicographical_compare(a.args.begin(), a.args.end(),
                                          b.args.begin(), b.args.end());
    return a.negated < b.negated;
  }
};

struct LiteralHash {
  size_t operator()(const Literal& l) const noexcept {
    size_t h = l.pred.id() * 2654435761u + l.negated;
    TermHash th;
    for (const auto& t : l.args) h = h * 1000003u + th(t);
    return h;
  }
};

// Set of true positive ground literals plus the episode's object universe.
// Closed world: anything absent is false. Literals kept sorted.
class State {
 public:
  State() = default;
  State(std::vector<Literal> lits, std::vector<Term> objs)
      : literals_(std::move(lits)), objects_(std::move(objs)) {
    normalize();
  }

  const std::vector<Literal>& literals() const { return literals_; }
  const std::vector<Term>& objects() const { return objects_; }

  bool contains(const Literal& l) const {
    return std::binary_search(literals_.begin(), literals_.end(),
                              l.positive());
  }

  // Applies an effect set: adds positive literals, removes negated ones.
  State apply_effects(const std::vector<Literal>& effects) const {
    std::vector<Literal> lits = literals_;
    for (const auto& e : effects) {
      if (e.negated) {
        auto it = std::lower_bound(lits.begin(), lits.end(), e.positive());
        if (it != lits.end() && *it == e.positive()) lits.erase(it);
      }
    }
    for (const auto& e : effects) {
      if (!e.negated) {
        auto it = std::lower_bound(lits.begin(), lits.end(), e);
        if (it == lits.end() || *it != e) lits.insert(it, e);
      }
    }
    State s;
    s.literals_ = std::move(lits);
    s.objects_ = objects_;
    return s;
  }

  std::string str() const {
    std::string out;
    for (const auto& l : literals_) {
      if (!out.empty()) out += " ";
      out += l.str();
    }
    return out;
  }

  friend bool operator==(const State& a, const State& b) {
    return a.literals_ == b.literals_;
  }
  friend bool operator!=(const State& a, const State& b) { return !(a == b); }
  friend bool operator<(const State& a, const State& b) {
    return a.literals_ < b.literals_;
  }

 private:
  void normalize() {
    for (const auto& l : literals_) {
      if (l.negated || !l.is_ground())
        throw std::invalid_argument("state literals must be positive ground");
    }
    std::sort(literals_.begin(), literals_.end());
    literals_.erase(std::unique(literals_.begin(), literals_.end()),
                    literals_.end());
    std::sort(objects_.begin(), objects_.end());
    objects_.erase(std::unique(objects_.begin(), objects_.end()),
                   objects_.end());
  }

  std::vector<Literal> literals_;
  std::vector<Term> objects_;
};

struct StateHash {
  size_t operator()(const State& s) const noexcept {
    size_t h = 14695981039346656037ull;
    LiteralHash lh;
    for (const auto& l : s.literals()) h = (h ^ lh(l)) * 1099511628211ull;
    return h;
  }
};

// Ordered literal list under one outer existential block.
struct Conjunction {
  std::vector<Literal> literals;
  std::vector<Term> variables;  // quantified; empty for ground conjunctions

  Conjunction() = default;
  explicit Conjunction(std::vector<Literal> lits)
      : literals(std::move(lits)) {
    collect_variables();
  }
  Conjunction(std::vector<Literal> lits, std::vector<Term> vars)
      : literals(std::move(lits)), variables(std::move(vars)) {}

  bool is_ground() const { return variables.empty(); }

  void collect_variables() {
    variables.clear();
    for (const auto& l : literals)
      for (const auto& t : l.args)
        if (t.is_variable &&
            std::find(variables.begin(), variables.end(), t) ==
                variables.end())
          variables.push_back(t);
  }

  std::string str() const {
    std::string out = "(and";
    for (const auto& l : literals) out += " " + l.str();
    out += ")";
    return out;
  }

  friend bool operator==(const Conjunction& a, const Conjunction& b) {
    return a.literals == b.literals;
  }
  friend bool operator<(const Conjunction& a, const Conjunction& b) {
    return a.literals < b.literals;
  }
};

// Map from variables to objects; sorted by variable for stable compare.
class Binding {
 public:
  Binding() = default;

  static Binding single(const Term& var, const Term& obj) {
    Binding b;
    b.bind(var, obj);
    return b;
  }

  bool bind(const Term& var, const Term& obj) {
    assert(var.is_variable && !obj.is_variable);
    if (var.type != obj.type) return false;  // type-respecting
    auto it = std::lower_bound(
        pairs_.begin(), pairs_.end(), var,
        [](const auto& p, const Term& v) { return p.first < v; });
    if (it != pairs_.end() && it->first == var) return it->second == obj;
    pairs_.insert(it, {var, obj});
    return true;
  }

  std::optional<Term> lookup(const Term& var) const {
    auto it = std::lower_bound(
        pairs_.begin(), pairs_.end(), var,
        [](const auto& p, const Term& v) { return p.first < v; });
    if (it != pairs_.end() && it->first == var) return it->second;
    return std::nullopt;
  }

  bool contains(const Term& var) const { return lookup(var).has_value(); }
  size_t size() const { return pairs_.size(); }
  bool empty() const { return pairs_.empty(); }
  const std::vector<std::pair<Term, Term>>& pairs() const { return pairs_; }

  Term apply(const Term& t) const {
    if (!t.is_variable) return t;
    auto v = lookup(t);
    return v ? *v : t;
  }

  Literal apply(const Literal& l) const {
    Literal out = l;
    for (auto& a : out.args) a = apply(a);
    return out;
  }

  friend bool operator==(const Binding& a, const Binding& b) {
    return a.pairs_ == b.pairs_;
  }
  friend bool operator<(const Binding& a, const Binding& b) {
    return a.pairs_ < b.pairs_;
  }

 private:
  std::vector<std::pair<Term, Term>> pairs_;
};

// Replaces bound variables, shrinking the quantifier block accordingly.
// Binding entries must name quantified variables of c and respect types.
inline Conjunction substitute(const Conjunction& c, const Binding& b) {
  for (const auto& [var, obj] : b.pairs()) {
    auto it = std::find(c.variables.begin(), c.variables.end(), var);
    if (it == c.variables.end())
      throw std::invalid_argument("binding names variable not in conjunction: " +
                                  var.str());
    if (var.type != obj.type)
      throw std::invalid_argument("type mismatch binding " + var.str() +
                                  " to " + obj.str());
  }
  Conjunction out;
  out.literals.reserve(c.literals.size());
  for (const auto& l : c.literals) out.literals.push_back(b.apply(l));
  for (const auto& v : c.variables)
    if (!b.contains(v)) out.variables.push_back(v);
  return out;
}

namespace detail {

// Backtracking matcher. Positive literals bind variables against state
// literals; variables left free afterwards range over the state's objects;
// negative literals are checked last under the full binding. The visit
// callback returns false to stop enumeration.
class BindingSearch {
 public:
  BindingSearch(const Conjunction& c, const State& s, const Binding& initial,
                const std::function<bool(const Binding&)>& visit)
      : state_(s), visit_(visit), binding_(initial) {
    for (const auto& l : c.literals)
      (l.negated ? negatives_ : positives_).push_back(&l);
    for (const auto& v : c.variables) vars_.push_back(v);
  }

  bool run() { return match_positive(0); }

 private:
  bool match_positive(size_t i) {
    if (i == positives_.size()) return enumerate_free(0);
    const Literal& lit = *positives_[i];
    Literal grounded = binding_.apply(lit);
    if (grounded.is_ground()) {
      if (!state_.contains(grounded)) return true;  // dead branch, keep going
      return match_positive(i + 1);
    }
    for (const auto& sl : state_.literals()) {
      if (sl.pred != grounded.pred) continue;
      Binding saved = binding_;
      bool ok = true;
      for (size_t j = 0; j < grounded.args.size(); ++j) {
        const Term& pat = grounded.args[j];
        const Term& tgt = sl.args[j];
        if (pat.is_variable) {
          if (!binding_.bind(pat, tgt)) {
            ok = false;
            break;
          }
        } else if (pat != tgt) {
          ok = false;
          break;
        }
      }
      if (ok && !match_positive(i + 1)) return false;
      binding_ = saved;
    }
    return true;
  }

  bool enumerate_free(size_t vi) {
    while (vi < vars_.size() && binding_.contains(vars_[vi])) ++vi;
    if (vi == vars_.size()) return check_negatives();
    const Term& var = vars_[vi];
    for (const auto& obj : state_.objects()) {
      if (obj.type != var.type) continue;
      Binding saved = binding_;
      if (binding_.bind(var, obj)) {
        if (!enumerate_free(vi + 1)) return false;
      }
      binding_ = saved;
    }
    return true;
  }

  bool check_negatives() {
    for (const Literal* l : negatives_) {
      Literal grounded = binding_.apply(*l);
      assert(grounded.is_ground());
      if (state_.contains(grounded)) return true;
    }
    return visit_(binding_);
  }

  const State& state_;
  const std::function<bool(const Binding&)>& visit_;
  Binding binding_;
  std::vector<const Literal*> positives_;
  std::vector<const Literal*> negatives_;
  std::vector<Term> vars_;
};

}  // namespace detail

// All type-respecting bindings of c's variables under which c holds in s,
// sorted lexicographically (variables in quantifier order, objects by name).
inline std::vector<Binding> find_bindings(const Conjunction& c, const State& s,
                                          const Binding& initial = {}) {
  std::vector<Binding> out;
  std::function<bool(const Binding&)> visit = [&](const Binding& b) {
    out.push_back(b);
    return true;
  };
  detail::BindingSearch(c, s, initial, visit).run();
  auto key = [&](const Binding& b) {
    std::vector<Term> vals;
    for (const auto& v : c.variables)
      if (auto t = b.lookup(v)) vals.push_back(*t);
    return vals;
  };
  std::sort(out.begin(), out.end(), [&](const Binding& a, const Binding& b) {
    return key(a) < key(b);
  });
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

inline std::optional<Binding> find_first_binding(const Conjunction& c,
                                                 const State& s,
                                                 const Binding& initial = {}) {
  auto all = find_bindings(c, s, initial);
  if (all.empty()) return std::nullopt;
  return all.front();
}

inline bool holds(const Conjunction& c, const State& s,
                  const Binding& initial = {}) {
  bool found = false;
  std::function<bool(const Binding&)> visit = [&](const Binding&) {
    found = true;
    return false;  // stop at first witness
  };
  detail::BindingSearch(c, s, initial, visit).run();
  return found;
}

inline bool holds(const Literal& ground_lit, const State& s) {
  return ground_lit.negated ? !s.contains(ground_lit) : s.contains(ground_lit);
}

// Canonical lifted form of a small ground literal set: objects become
// variables preserving co-reference; among all literal orderings (variables
// named by first occurrence) the lexicographically least serialization wins.
// Two sets lift identically iff they are isomorphic under object renaming.
inline Conjunction canonical_lift(const std::vector<Literal>& ground_lits) {
  std::vector<Literal> lits = ground_lits;
  std::sort(lits.begin(), lits.end());
  lits.erase(std::unique(lits.begin(), lits.end()), lits.end());

  auto lift_in_order = [](const std::vector<Literal>& ordered) {
    std::vector<std::pair<Term, Term>> map;  // object -> variable
    Conjunction out;
    for (const auto& l : ordered) {
      Literal lifted = l;
      for (auto& a : lifted.args) {
        auto it = std::find_if(map.begin(), map.end(),
                               [&](const auto& p) { return p.first == a; });
        if (it == map.end()) {
          Term v = Term::variable("x" + std::to_string(map.size()), a.type);
          map.push_back({a, v});
          a = v;
        } else {
          a = it->second;
        }
      }
      out.literals.push_back(lifted);
    }
    out.collect_variables();
    return out;
  };

  std::vector<size_t> perm(lits.size());
  for (size_t i = 0; i < perm.size(); ++i) perm[i] = i;
  std::optional<Conjunction> best;
  std::string best_key;
  do {
    std::vector<Literal> ordered;
    ordered.reserve(lits.size());
    for (size_t i : perm) ordered.push_back(lits[i]);
    Conjunction cand = lift_in_order(ordered);
    std::string key = cand.str();
    if (!best || key < best_key) {
      best = cand;
      best_key = key;
    }
  } while (std::next_permutation(perm.begin(), perm.end()));
  return best ? *best : Conjunction{};
}

inline Conjunction canonical_lift(const Conjunction& ground) {
  return canonical_lift(ground.literals);
}

}  // namespace glib
