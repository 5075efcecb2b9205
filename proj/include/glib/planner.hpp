#pragma once

#include <chrono>
#include <cmath>
#include <limits>
#include <map>
#include <optional>
#include <queue>
#include <unordered_map>
#include <unordered_set>
#include <variant>
#include <vector>

#include "glib/ndr.hpp"

namespace glib {

struct DetRule {
  Literal action;  // lifted
  Conjunction preconditions;
  std::vector<Literal> effects;  // single deterministic outcome
};

struct DeterminizedModel {
  std::map<Symbol, std::vector<DetRule>> rules;
  std::vector<Predicate> action_predicates;
  size_t source_fingerprint = 0;

  // Deterministic transition: first covering rule (rule order, then first
  // binding), identity when nothing applies.
  State apply(const State& s, const Literal& a) const {
    auto it = rules.find(a.pred);
    if (it == rules.end()) return s;
    for (const auto& r : it->second) {
      Binding b;
      bool head_ok = true;
      for (size_t i = 0; i < r.action.args.size(); ++i) {
        const Term& pat = r.action.args[i];
        if (pat.is_variable) {
          if (!b.bind(pat, a.args[i])) { head_ok = false; break; }
        } else if (pat != a.args[i]) {
          head_ok = false;
          break;
        }
      }
      if (!head_ok) continue;
      auto full = find_first_binding(r.preconditions, s, b);
      if (!full) continue;
      std::vector<Literal> ground;
      ground.reserve(r.effects.size());
      for (const auto& e : r.effects) ground.push_back(full->apply(e));
      return s.apply_effects(ground);
    }
    return s;
  }
};

// Single-outcome determinization: per non-default rule keep the most
// probable non-noise outcome (ties: largest effect set, then lexicographic).
// Noise-only rules and default rules are dropped.
inline DeterminizedModel determinize(const NDRSet& m) {
  DeterminizedModel dm;
  dm.action_predicates = m.action_predicates();
  dm.source_fingerprint = m.fingerprint();
  for (const auto& [pred, ar] : m.rules()) {
    std::vector<DetRule> out;
    for (const auto& r : ar.rules) {
      const Outcome* best = nullptr;
      for (const auto& o : r.outcomes) {
        if (o.is_noise || o.probability <= 0.0) continue;
        if (!best || o.probability > best->probability + 1e-12) {
          best = &o;
        } else if (std::abs(o.probability - best->probability) <= 1e-12) {
          if (o.effects.size() > best->effects.size() ||
              (o.effects.size() == best->effects.size() &&
               Conjunction(o.effects).str() <
                   Conjunction(best->effects).str()))
            best = &o;
        }
      }
      if (!best) continue;
      out.push_back(DetRule{r.action, r.preconditions, best->effects});
    }
    if (!out.empty()) dm.rules.emplace(pred, std::move(out));
  }
  return dm;
}

enum class PlanFailure { Timeout, Unreachable };

struct Plan {
  std::vector<Literal> actions;  // ground
  Conjunction goal;
  size_t model_fingerprint = 0;
};

using PlanResult = std::variant<Plan, PlanFailure>;

inline bool plan_found(const PlanResult& r) {
  return std::holds_alternative<Plan>(r);
}

namespace planner_detail {

struct GroundRule {
  Literal action;
  std::vector<Literal> precond_pos;
  std::vector<Literal> add_effects;  // positive effects only (relaxed view)
};

// Fully ground rule instances (including deictic bindings), relaxed to
// positive preconditions and add effects. Used by the heuristic only.
inline std::vector<GroundRule> ground_relaxed(const DeterminizedModel& dm,
                                              const std::vector<Term>& objs) {
  std::vector<GroundRule> out;
  for (const auto& [pred, rules] : dm.rules) {
    (void)pred;
    for (const auto& r : rules) {
      std::vector<Term> vars;
      auto add_var = [&](const Term& t) {
        if (t.is_variable &&
            std::find(vars.begin(), vars.end(), t) == vars.end())
          vars.push_back(t);
      };
      for (const auto& a : r.action.args) add_var(a);
      for (const auto& l : r.preconditions.literals)
        for (const auto& a : l.args) add_var(a);
      std::vector<Term> assignment(vars.size());
      std::function<void(size_t)> rec = [&](size_t i) {
        if (i == vars.size()) {
          Binding b;
          for (size_t j = 0; j < vars.size(); ++j) b.bind(vars[j], assignment[j]);
          GroundRule g;
          g.action = b.apply(r.action);
          for (const auto& l : r.preconditions.literals)
            if (!l.negated) g.precond_pos.push_back(b.apply(l));
          for (const auto& e : r.effects)
            if (!e.negated) g.add_effects.push_back(b.apply(e));
          out.push_back(std::move(g));
          return;
        }
        for (const auto& o : objs) {
          if (o.type != vars[i].type) continue;
          assignment[i] = o;
          rec(i + 1);
        }
      };
      rec(0);
    }
  }
  return out;
}

constexpr double kInf = std::numeric_limits<double>::infinity();

// Additive-cost relaxed reachability plus FF-style relaxed plan extraction.
class RelaxedPlanHeuristic {
 public:
  RelaxedPlanHeuristic(const DeterminizedModel& dm,
                       const std::vector<Term>& objs, const Conjunction& goal)
      : rules_(ground_relaxed(dm, objs)), objects_(objs), goal_(goal) {}

  struct Result {
    double h = kInf;
    std::vector<const GroundRule*> relaxed_plan;
  };

  Result evaluate(const State& s) const {
    std::unordered_map<Literal, double, LiteralHash> cost;
    std::unordered_map<Literal, const GroundRule*, LiteralHash> supporter;
    for (const auto& l : s.literals()) cost[l] = 0.0;

    auto fact_cost = [&](const Literal& l) {
      auto it = cost.find(l);
      return it == cost.end() ? kInf : it->second;
    };
    auto rule_cost = [&](const GroundRule& g) {
      double c = 0.0;
      for (const auto& p : g.precond_pos) {
        double fc = fact_cost(p);
        if (fc == kInf) return kInf;
        c += fc;
      }
      return c;
    };

    bool changed = true;
    while (changed) {
      changed = false;
      for (const auto& g : rules_) {
        double c = rule_cost(g);
        if (c == kInf) continue;
        for (const auto& e : g.add_effects) {
          if (c + 1.0 < fact_cost(e) - 1e-12) {
            cost[e] = c + 1.0;
            supporter[e] = &g;
            changed = true;
          }
        }
      }
    }

    // Cheapest goal grounding under additive costs.
    double best_total = kInf;
    std::optional<std::vector<Literal>> best_goal_lits;
    std::function<bool(const Binding&)> visit_all = [&](const Binding& b) {
      double total = 0.0;
      std::vector<Literal> lits;
      for (const auto& gl : goal_.literals) {
        Literal g = b.apply(gl);
        if (g.negated) continue;  // negatives ignored in the relaxation
        double fc = fact_cost(g);
        if (fc == kInf) return true;
        total += fc;
        lits.push_back(g);
      }
      if (total < best_total) {
        best_total = total;
        best_goal_lits = lits;
      }
      return true;
    };
    enumerate_goal_bindings(visit_all);
    Result res;
    if (!best_goal_lits) return res;

    // Backchain through supporters to extract a relaxed plan.
    std::unordered_set<const GroundRule*> plan;
    std::vector<Literal> agenda = *best_goal_lits;
    std::unordered_set<Literal, LiteralHash> done;
    while (!agenda.empty()) {
      Literal f = agenda.back();
      agenda.pop_back();
      if (done.count(f)) continue;
      done.insert(f);
      auto it = supporter.find(f);
      if (it == supporter.end()) continue;  // true in s
      if (plan.insert(it->second).second)
        for (const auto& p : it->second->precond_pos) agenda.push_back(p);
    }
    res.h = static_cast<double>(plan.size());
    res.relaxed_plan.assign(plan.begin(), plan.end());
    return res;
  }

 private:
  // All type-respecting groundings of the goal's variables over objects;
  // negative goal literals constrain nothing in the relaxation.
  void enumerate_goal_bindings(
      const std::function<bool(const Binding&)>& visit) const {
    std::vector<Term> vars = goal_.variables;
    Binding b;
    std::function<bool(size_t)> rec = [&](size_t i) -> bool {
      if (i == vars.size()) return visit(b);
      for (const auto& o : objects_) {
        if (o.type != vars[i].type) continue;
        Binding saved = b;
        if (b.bind(vars[i], o)) {
          if (!rec(i + 1)) return false;
        }
        b = saved;
      }
      return true;
    };
    rec(0);
  }

  std::vector<GroundRule> rules_;
  std::vector<Term> objects_;
  Conjunction goal_;
};

}  // namespace planner_detail

// Greedy best-first search with the relaxed-plan heuristic and
// helpful-action preference. Returned plans are verified by forward
// simulation in dm before being handed back.
inline PlanResult plan(const State& start, const Conjunction& goal,
                       const DeterminizedModel& dm, double timeout_seconds,
                       int horizon, long max_expansions = 50000,
                       long* expansions_used = nullptr) {
  using namespace planner_detail;
  if (expansions_used) *expansions_used = 0;
  auto deadline = std::chrono::steady_clock::now() +
                  std::chrono::duration<double>(timeout_seconds);

  if (holds(goal, start))
    return Plan{{}, goal, dm.source_fingerprint};

  // Rule-driven successor generation: only ground actions covered by some
  // determinized rule can change the state, so enumerate covering bindings
  // instead of the full ground-action universe.
  std::vector<std::pair<const DetRule*, Conjunction>> rule_queries;
  for (const auto& [pred, rules] : dm.rules) {
    (void)pred;
    for (const auto& r : rules) {
      Conjunction q = r.preconditions;
      for (const auto& a : r.action.args)
        if (a.is_variable &&
            std::find(q.variables.begin(), q.variables.end(), a) ==
                q.variables.end())
          q.variables.push_back(a);
      rule_queries.emplace_back(&r, std::move(q));
    }
  }
  // Successor pairs (action, next state). Rule order matches dm.apply's
  // first-covering-rule semantics: the first rule to claim a ground action
  // keeps it.
  auto successors = [&](const State& st) {
    std::vector<std::pair<Literal, State>> out;
    std::unordered_set<Literal, LiteralHash> seen;
    std::vector<Literal> ground;
    for (const auto& [r, q] : rule_queries)
      for (const auto& b : find_bindings(q, st)) {
        Literal a = b.apply(r->action);
        if (!a.is_ground() || !seen.insert(a).second) continue;
        ground.clear();
        ground.reserve(r->effects.size());
        for (const auto& e : r->effects) ground.push_back(b.apply(e));
        out.emplace_back(std::move(a), st.apply_effects(ground));
      }
    return out;
  };
  RelaxedPlanHeuristic heuristic(dm, start.objects(), goal);

  struct Node {
    State state;
    int parent = -1;
    Literal action;
    int depth = 0;
  };
  struct Entry {
    double h;
    bool preferred;
    long order;
    int node;
    bool operator>(const Entry& o) const {
      if (h != o.h) return h > o.h;
      if (preferred != o.preferred) return !preferred;
      return order > o.order;
    }
  };

  std::vector<Node> nodes;
  std::priority_queue<Entry, std::vector<Entry>, std::greater<Entry>> open;
  std::unordered_set<State, StateHash> closed;
  long order = 0;
  bool hit_timeout = false;

  nodes.push_back(Node{start, -1, Literal(), 0});
  auto h0 = heuristic.evaluate(start);
  if (h0.h != kInf) open.push(Entry{h0.h, true, order++, 0});

  auto extract = [&](int idx) {
    std::vector<Literal> acts;
    for (int i = idx; nodes[i].parent >= 0; i = nodes[i].parent)
      acts.push_back(nodes[i].action);
    std::reverse(acts.begin(), acts.end());
    return acts;
  };

  long expansions = 0;
  struct ExpansionsReport {
    long* out;
    const long* n;
    ~ExpansionsReport() { if (out) *out = *n; }
  } report{expansions_used, &expansions};
  while (!open.empty()) {
    // The expansion budget is the primary limit: unlike the wall clock it is
    // deterministic, so identical seeds reproduce identical runs.
    if (++expansions > max_expansions ||
        std::chrono::steady_clock::now() > deadline) {
      hit_timeout = true;
      break;
    }
    Entry top = open.top();
    open.pop();
    Node node = nodes[top.node];
    if (!closed.insert(node.state).second) continue;
    if (node.depth >= horizon) continue;

    // Lazy evaluation: entries are queued under their parent's h and only
    // evaluated once, when popped.
    auto eval = heuristic.evaluate(node.state);
    if (eval.h == kInf) continue;  // relaxed-unreachable: a true dead end
    std::unordered_set<Literal, LiteralHash> helpful;
    for (const auto* g : eval.relaxed_plan) helpful.insert(g->action);

    for (auto& [a, next] : successors(node.state)) {
      if (next == node.state) continue;
      if (closed.count(next)) continue;
      if (holds(goal, next)) {
        nodes.push_back(Node{next, top.node, a, node.depth + 1});
        Plan p{extract(static_cast<int>(nodes.size()) - 1), goal,
               dm.source_fingerprint};
        // epsilon-soundness: validate by simulation before returning.
        State sim = start;
        for (const auto& act : p.actions) sim = dm.apply(sim, act);
        if (!holds(goal, sim)) return PlanFailure::Unreachable;
        return p;
      }
      nodes.push_back(Node{std::move(next), top.node, a, node.depth + 1});
      open.push(Entry{eval.h, helpful.count(a) > 0, order++,
                      static_cast<int>(nodes.size()) - 1});
    }
  }
  return hit_timeout ? PlanFailure::Timeout : PlanFailure::Unreachable;
}

struct TraceStep {
  State s;
  Literal action;
  State s_next;
  bool matched_prediction = true;
};

struct ExecutionTrace {
  std::vector<TraceStep> steps;
  int replans = 0;
  bool reached_goal = false;
  bool plan_failure = false;
};

// FF-Replan execution: follow the plan, replan when an observed transition
// deviates from the determinized prediction. env_step must return the next
// environment state.
inline ExecutionTrace replan_policy(
    const State& s0, const Conjunction& goal, const NDRSet& m,
    const std::function<State(const Literal&)>& env_step, int horizon,
    double plan_timeout_seconds = 10.0) {
  DeterminizedModel dm = determinize(m);
  ExecutionTrace trace;
  State s = s0;
  int steps_left = horizon;
  bool need_plan = true;
  std::vector<Literal> pending;
  size_t next_action = 0;

  while (steps_left > 0) {
    if (holds(goal, s)) {
      trace.reached_goal = true;
      return trace;
    }
    if (need_plan || next_action >= pending.size()) {
      PlanResult pr = plan(s, goal, dm, plan_timeout_seconds, steps_left);
      if (!plan_found(pr)) {
        trace.plan_failure = true;
        return trace;
      }
      if (!trace.steps.empty()) ++trace.replans;
      pending = std::get<Plan>(pr).actions;
      next_action = 0;
      need_plan = false;
      if (pending.empty()) {
        trace.reached_goal = holds(goal, s);
        return trace;
      }
    }
    Literal a = pending[next_action++];
    State predicted = dm.apply(s, a);
    State observed = env_step(a);
    bool matched = observed == predicted;
    trace.steps.push_back(TraceStep{s, a, observed, matched});
    s = std::move(observed);
    --steps_left;
    if (!matched) need_plan = true;
  }
  trace.reached_goal = holds(goal, s);
  return trace;
}

}  // namespace glib
