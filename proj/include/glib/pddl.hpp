#pragma once

#include <algorithm>
#include <cctype>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "glib/domain.hpp"
#include "glib/ndr.hpp"

namespace glib {

struct ParseError : SpecError {
  int line, column;
  ParseError(const std::string& msg, int l, int c)
      : SpecError(msg + " at line " + std::to_string(l) + ", column " +
                  std::to_string(c)),
        line(l), column(c) {}
};

struct UnsupportedFeatureError : ParseError {
  UnsupportedFeatureError(const std::string& construct, int l, int c)
      : ParseError("unsupported construct: " + construct, l, c) {}
};

namespace pddl_detail {

inline std::string lowered(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(),
                 [](unsigned char c) { return std::tolower(c); });
  return s;
}

struct Sexp {
  bool is_list = false;
  std::string atom;
  std::vector<Sexp> items;
  int line = 0, column = 0;

  bool is_atom() const { return !is_list; }
  // Keywords are case-insensitive; identifiers are case-preserved.
  bool is_keyword(const std::string& kw) const {
    return is_atom() && lowered(atom) == kw;
  }
  const Sexp& at(size_t i) const {
    if (!is_list || i >= items.size())
      throw ParseError("malformed expression", line, column);
    return items[i];
  }
};

class Lexer {
 public:
  explicit Lexer(std::string_view text) : text_(text) {}

  Sexp parse_all_one() {
    skip_ws();
    Sexp root = parse();
    skip_ws();
    if (pos_ < text_.size())
      throw ParseError("trailing content after expression", line_, col_);
    return root;
  }

 private:
  Sexp parse() {
    skip_ws();
    if (pos_ >= text_.size())
      throw ParseError("unexpected end of input", line_, col_);
    int l = line_, c = col_;
    if (text_[pos_] == '(') {
      advance();
      Sexp s;
      s.is_list = true;
      s.line = l;
      s.column = c;
      while (true) {
        skip_ws();
        if (pos_ >= text_.size())
          throw ParseError("unclosed parenthesis", l, c);
        if (text_[pos_] == ')') {
          advance();
          return s;
        }
        s.items.push_back(parse());
      }
    }
    if (text_[pos_] == ')')
      throw ParseError("unmatched ')'", line_, col_);
    Sexp s;
    s.line = l;
    s.column = c;
    while (pos_ < text_.size() && !std::isspace((unsigned char)text_[pos_]) &&
           text_[pos_] != '(' && text_[pos_] != ')' && text_[pos_] != ';') {
      s.atom += text_[pos_];
      advance();
    }
    return s;
  }

  void skip_ws() {
    while (pos_ < text_.size()) {
      char ch = text_[pos_];
      if (ch == ';') {
        while (pos_ < text_.size() && text_[pos_] != '\n') advance();
      } else if (std::isspace((unsigned char)ch)) {
        advance();
      } else {
        break;
      }
    }
  }

  void advance() {
    if (text_[pos_] == '\n') {
      ++line_;
      col_ = 1;
    } else {
      ++col_;
    }
    ++pos_;
  }

  std::string_view text_;
  size_t pos_ = 0;
  int line_ = 1, col_ = 1;
};

// A `?x ?y - type ?z` style list; untyped names default to `object`.
inline std::vector<std::pair<std::string, Symbol>> parse_typed_list(
    const Sexp& list, size_t from = 0) {
  std::vector<std::pair<std::string, Symbol>> out;
  std::vector<std::string> pending;
  for (size_t i = from; i < list.items.size(); ++i) {
    const Sexp& it = list.items[i];
    if (!it.is_atom())
      throw ParseError("expected name in typed list", it.line, it.column);
    if (it.atom == "-") {
      if (++i >= list.items.size())
        throw ParseError("missing type after '-'", it.line, it.column);
      Symbol type = Symbol::intern(list.items[i].atom);
      for (auto& n : pending) out.emplace_back(n, type);
      pending.clear();
    } else {
      pending.push_back(it.atom);
    }
  }
  for (auto& n : pending) out.emplace_back(n, default_type());
  return out;
}

}  // namespace pddl_detail

class PddlParser {
 public:
  DomainSpec parse_domain(std::string_view text) {
    using pddl_detail::Sexp;
    Sexp root = pddl_detail::Lexer(text).parse_all_one();
    if (!root.is_list || root.items.empty() ||
        !root.at(0).is_keyword("define"))
      throw ParseError("expected (define (domain ...) ...)", root.line,
                       root.column);
    DomainSpec d;
    const Sexp& head = root.at(1);
    if (!head.is_list || head.items.size() != 2 ||
        !head.at(0).is_keyword("domain"))
      throw ParseError("expected (domain <name>)", head.line, head.column);
    d.name = Symbol::intern(head.at(1).atom);

    for (size_t i = 2; i < root.items.size(); ++i) {
      const Sexp& sec = root.items[i];
      if (!sec.is_list || sec.items.empty() || !sec.at(0).is_atom())
        throw ParseError("expected domain section", sec.line, sec.column);
      std::string kw = pddl_detail::lowered(sec.at(0).atom);
      if (kw == ":requirements") {
        check_requirements(sec);
      } else if (kw == ":types") {
        auto typed = pddl_detail::parse_typed_list(sec, 1);
        for (auto& [n, super] : typed) {
          (void)super;  // flat types only
          d.types.push_back(Symbol::intern(n));
        }
      } else if (kw == ":predicates") {
        for (size_t j = 1; j < sec.items.size(); ++j)
          d.predicates.push_back(parse_predicate_decl(sec.items[j]));
      } else if (kw == ":action") {
        parse_action(sec, d);
      } else if (kw == ":constants" || kw == ":functions") {
        throw UnsupportedFeatureError(kw, sec.line, sec.column);
      } else {
        throw ParseError("unknown domain section " + kw, sec.line,
                         sec.column);
      }
    }
    for (size_t i = 0; i < d.predicates.size(); ++i)
      for (size_t j = i + 1; j < d.predicates.size(); ++j)
        if (d.predicates[i].name == d.predicates[j].name)
          throw SpecError("duplicate predicate " +
                          d.predicates[i].name.str());
    d.validate();
    return d;
  }

  ProblemSpec parse_problem(std::string_view text, const DomainSpec& d) {
    using pddl_detail::Sexp;
    Sexp root = pddl_detail::Lexer(text).parse_all_one();
    if (!root.is_list || root.items.empty() ||
        !root.at(0).is_keyword("define"))
      throw ParseError("expected (define (problem ...) ...)", root.line,
                       root.column);
    ProblemSpec p;
    const Sexp& head = root.at(1);
    if (!head.is_list || head.items.size() != 2 ||
        !head.at(0).is_keyword("problem"))
      throw ParseError("expected (problem <name>)", head.line, head.column);
    p.name = Symbol::intern(head.at(1).atom);

    std::vector<Literal> init;
    for (size_t i = 2; i < root.items.size(); ++i) {
      const Sexp& sec = root.items[i];
      if (!sec.is_list || sec.items.empty() || !sec.at(0).is_atom())
        throw ParseError("expected problem section", sec.line, sec.column);
      std::string kw = pddl_detail::lowered(sec.at(0).atom);
      if (kw == ":domain") {
        if (sec.at(1).atom != d.name.str())
          throw SpecError("problem references domain " + sec.at(1).atom +
                          ", expected " + d.name.str());
      } else if (kw == ":objects") {
        for (auto& [n, t] : pddl_detail::parse_typed_list(sec, 1))
          p.objects.push_back(Term::object(n, t));
      } else if (kw == ":init") {
        for (size_t j = 1; j < sec.items.size(); ++j) {
          Literal l = parse_literal(sec.items[j], d, p.objects, nullptr);
          if (l.negated)
            throw ParseError("negated literal in :init", sec.items[j].line,
                             sec.items[j].column);
          init.push_back(l);
        }
      } else if (kw == ":goal") {
        std::vector<Literal> goal_lits;
        parse_condition(sec.at(1), d, p.objects, nullptr, goal_lits);
        p.goal = Conjunction(goal_lits);
      } else {
        throw UnsupportedFeatureError(kw, sec.line, sec.column);
      }
    }
    p.init = State(init, p.objects);
    return p;
  }

 private:
  using Sexp = pddl_detail::Sexp;

  static void check_requirements(const Sexp& sec) {
    static const std::vector<std::string> supported = {
        ":strips", ":typing", ":equality", ":negative-preconditions",
        ":probabilistic-effects"};
    for (size_t i = 1; i < sec.items.size(); ++i) {
      std::string r = pddl_detail::lowered(sec.items[i].atom);
      if (std::find(supported.begin(), supported.end(), r) == supported.end())
        throw UnsupportedFeatureError(r, sec.items[i].line,
                                      sec.items[i].column);
    }
  }

  static Predicate parse_predicate_decl(const Sexp& s) {
    if (!s.is_list || s.items.empty() || !s.at(0).is_atom())
      throw ParseError("expected predicate declaration", s.line, s.column);
    auto typed = pddl_detail::parse_typed_list(s, 1);
    std::vector<Symbol> types;
    for (auto& [n, t] : typed) {
      if (n.empty() || n[0] != '?')
        throw ParseError("predicate parameter must be a variable", s.line,
                         s.column);
      types.push_back(t);
    }
    return Predicate(Symbol::intern(s.at(0).atom), std::move(types));
  }

  void parse_action(const Sexp& sec, DomainSpec& d) {
    GroundTruthOperator op;
    op.name = Symbol::intern(sec.at(1).atom);
    std::vector<Literal> precond;
    bool saw_effect = false;
    for (size_t i = 2; i < sec.items.size(); i += 2) {
      const Sexp& key = sec.items[i];
      if (i + 1 >= sec.items.size())
        throw ParseError("dangling action keyword", key.line, key.column);
      const Sexp& val = sec.items[i + 1];
      std::string kw = pddl_detail::lowered(key.atom);
      if (kw == ":parameters") {
        for (auto& [n, t] : pddl_detail::parse_typed_list(val)) {
          if (n.empty() || n[0] != '?')
            throw ParseError("parameter must be a variable", val.line,
                             val.column);
          op.parameters.push_back(Term::variable(n.substr(1), t));
        }
      } else if (kw == ":precondition") {
        parse_condition(val, d, {}, &op.parameters, precond);
      } else if (kw == ":effect") {
        op.outcomes = parse_effect(val, d, op.parameters);
        saw_effect = true;
      } else {
        throw UnsupportedFeatureError(kw, key.line, key.column);
      }
    }
    if (!saw_effect) op.outcomes = {{1.0, {}}};
    // Precondition variables not in :parameters are deictic (implicitly
    // existentially quantified), matching NDR semantics.
    op.preconditions = Conjunction(precond);
    std::vector<Symbol> arg_types;
    for (const auto& pm : op.parameters) arg_types.push_back(pm.type);
    if (const Predicate* ap = d.find_action_predicate(op.name)) {
      if (ap->arity != (int)op.parameters.size())
        throw SpecError("action " + op.name.str() +
                        " redeclared with different arity");
    } else {
      d.action_predicates.push_back(
          Predicate(op.name, arg_types, PredicateKind::Action));
    }
    d.operators.push_back(std::move(op));
  }

  // Conjunctive condition with negation: literal | (not lit) | (and ...).
  void parse_condition(const Sexp& s, const DomainSpec& d,
                       const std::vector<Term>& objects,
                       const std::vector<Term>* params,
                       std::vector<Literal>& out) {
    if (!s.is_list || s.items.empty())
      throw ParseError("expected condition", s.line, s.column);
    if (s.at(0).is_keyword("and")) {
      for (size_t i = 1; i < s.items.size(); ++i)
        parse_condition(s.items[i], d, objects, params, out);
      return;
    }
    for (const char* bad : {"or", "forall", "exists", "imply", "when", "="})
      if (s.at(0).is_keyword(bad))
        throw UnsupportedFeatureError(bad, s.line, s.column);
    out.push_back(parse_literal(s, d, objects, params));
  }

  // probabilistic | (and ...) | literal | (not lit)
  std::vector<std::pair<double, std::vector<Literal>>> parse_effect(
      const Sexp& s, const DomainSpec& d, const std::vector<Term>& params) {
    if (!s.is_list || s.items.empty())
      throw ParseError("expected effect", s.line, s.column);
    if (s.at(0).is_keyword("probabilistic")) {
      std::vector<std::pair<double, std::vector<Literal>>> outcomes;
      double total = 0.0;
      for (size_t i = 1; i < s.items.size(); i += 2) {
        if (i + 1 >= s.items.size())
          throw ParseError("probabilistic effect missing outcome", s.line,
                           s.column);
        double p;
        try {
          p = std::stod(s.items[i].atom);
        } catch (...) {
          throw ParseError("expected probability, got '" + s.items[i].atom +
                               "'",
                           s.items[i].line, s.items[i].column);
        }
        std::vector<Literal> effects;
        collect_effect_literals(s.items[i + 1], d, params, effects);
        total += p;
        outcomes.emplace_back(p, std::move(effects));
      }
      if (total > 1.0 + 1e-9)
        throw ParseError("probabilistic effect mass exceeds 1", s.line, s.column);
      // Residual probability mass maps to the implicit empty outcome.
      if (total < 1.0 - 1e-9)
        outcomes.emplace_back(1.0 - total, std::vector<Literal>{});
      return outcomes;
    }
    std::vector<Literal> effects;
    collect_effect_literals(s, d, params, effects);
    return {{1.0, std::move(effects)}};
  }

  void collect_effect_literals(const Sexp& s, const DomainSpec& d,
                               const std::vector<Term>& params,
                               std::vector<Literal>& out) {
    if (!s.is_list)
      throw ParseError("expected effect literal", s.line, s.column);
    if (!s.items.empty() && s.at(0).is_keyword("and")) {
      for (size_t i = 1; i < s.items.size(); ++i)
        collect_effect_literals(s.items[i], d, params, out);
      return;
    }
    if (!s.items.empty())
      for (const char* bad :
           {"when", "forall", "probabilistic", "increase", "decrease"})
        if (s.at(0).is_keyword(bad))
          throw UnsupportedFeatureError(std::string(bad) + " inside effect",
                                        s.line, s.column);
    out.push_back(parse_literal(s, d, {}, &params));
  }

  // params == nullptr forbids variables (problem files).
  Literal parse_literal(const Sexp& s, const DomainSpec& d,
                        const std::vector<Term>& objects,
                        const std::vector<Term>* params) {
    if (!s.is_list || s.items.empty() || !s.at(0).is_atom())
      throw ParseError("expected literal", s.line, s.column);
    if (s.at(0).is_keyword("not")) {
      Literal inner = parse_literal(s.at(1), d, objects, params);
      inner.negated = !inner.negated;
      return inner;
    }
    Symbol pred = Symbol::intern(s.at(0).atom);
    const Predicate* decl = d.find_predicate(pred);
    if (!decl)
      throw ParseError("undeclared predicate " + pred.str(), s.line,
                       s.column);
    if ((int)s.items.size() - 1 != decl->arity)
      throw ParseError("arity mismatch for " + pred.str() + ": expected " +
                           std::to_string(decl->arity) + ", got " +
                           std::to_string(s.items.size() - 1),
                       s.line, s.column);
    std::vector<Term> args;
    for (size_t i = 1; i < s.items.size(); ++i) {
      const std::string& a = s.items[i].atom;
      if (!a.empty() && a[0] == '?') {
        if (!params)
          throw ParseError("variable " + a + " not allowed here",
                           s.items[i].line, s.items[i].column);
        Term v = Term::variable(a.substr(1), decl->arg_types[i - 1]);
        auto it = std::find_if(params->begin(), params->end(),
                               [&](const Term& t) { return t.name == v.name; });
        if (it != params->end()) v.type = it->type;
        args.push_back(v);
      } else {
        Term obj = Term::object(a, decl->arg_types[i - 1]);
        if (!objects.empty()) {
          auto it = std::find_if(
              objects.begin(), objects.end(),
              [&](const Term& t) { return t.name == obj.name; });
          if (it == objects.end())
            throw ParseError("undeclared object " + a, s.items[i].line,
                             s.items[i].column);
          obj = *it;
        }
        args.push_back(obj);
      }
    }
    return Literal(pred, std::move(args));
  }
};

inline DomainSpec parse_domain(std::string_view text) {
  return PddlParser().parse_domain(text);
}

inline ProblemSpec parse_problem(std::string_view text, const DomainSpec& d) {
  return PddlParser().parse_problem(text, d);
}

inline std::string read_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw SpecError("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// Serializes a learned NDR set as PPDDL. A noise outcome becomes an empty
// effect carrying its probability, flagged with a structured comment so
// re-parsing it as a ground-truth domain is an explicit choice.
inline std::string write_ndrs(const NDRSet& m,
                              const std::string& domain_name = "learned") {
  std::ostringstream out;
  out << "(define (domain " << domain_name << ")\n";
  out << "  (:requirements :strips :typing :probabilistic-effects)\n";

  // Predicate declarations recovered from rule bodies.
  std::map<Symbol, const Literal*> preds;
  auto note = [&](const Literal& l) {
    if (!preds.count(l.pred)) preds.emplace(l.pred, &l);
  };
  for (const auto& [pred, ar] : m.rules()) {
    (void)pred;
    for (const auto& r : ar.rules) {
      for (const auto& l : r.preconditions.literals) note(l);
      for (const auto& o : r.outcomes)
        for (const auto& l : o.effects) note(l);
    }
  }
  out << "  (:predicates";
  for (const auto& [pred, lit] : preds) {
    out << " (" << pred.str();
    for (size_t i = 0; i < lit->args.size(); ++i)
      out << " ?a" << i << " - " << lit->args[i].type.str();
    out << ")";
  }
  out << ")\n";

  auto write_effects = [&](std::ostream& os, const std::vector<Literal>& es) {
    os << "(and";
    for (const auto& e : es) os << " " << e.str();
    os << ")";
  };

  auto write_rule = [&](const NDR& r) {
    out << "  (:action " << r.action.pred.str() << "\n";
    out << "    :parameters (";
    bool first = true;
    for (const auto& v : r.action.args) {
      if (!first) out << " ";
      first = false;
      out << v.str() << " - " << v.type.str();
    }
    out << ")\n";
    out << "    :precondition (and";
    for (const auto& l : r.preconditions.literals) out << " " << l.str();
    out << ")\n";
    double noise = r.noise_probability();
    std::vector<const Outcome*> concrete;
    for (const auto& o : r.outcomes)
      if (!o.is_noise && o.probability > 0.0) concrete.push_back(&o);
    out << "    :effect ";
    if (noise <= 1e-12 && concrete.size() == 1 &&
        std::abs(concrete[0]->probability - 1.0) <= 1e-9) {
      write_effects(out, concrete[0]->effects);
    } else {
      if (noise > 1e-12)
        out << ";; noise-outcome probability=" << noise
            << " (serialized as residual empty effect)\n    ";
      out << "(probabilistic";
      for (const auto* o : concrete) {
        out << " " << o->probability << " ";
        write_effects(out, o->effects);
      }
      out << ")";
    }
    out << ")\n";
  };

  for (const auto& [pred, ar] : m.rules()) {
    (void)pred;
    if (ar.rules.empty()) {
      write_rule(ar.default_rule);
    } else {
      for (const auto& r : ar.rules) write_rule(r);
    }
  }
  out << ")\n";
  return out.str();
}

}  // namespace glib
