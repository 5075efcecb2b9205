#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <queue>
#include <random>
#include <set>

#include "doctest.h"
#include "glib/pddl.hpp"
#include "glib/planner.hpp"

using namespace glib;

namespace {

const char* kThreeBlocks = R"((define (problem blocks-3)
  (:domain blocks)
  (:objects a - block b - block c - block)
  (:init (ontable a) (ontable b) (on c a) (clear c) (clear b) (handempty))
  (:goal (and (on a b)))))";

struct Fixture {
  DomainSpec domain;
  ProblemSpec problem;
  NDRSet truth;
  Fixture() {
    domain = parse_domain(read_file("assets/blocks/domain.ppddl"));
    problem = parse_problem(kThreeBlocks, domain);
    truth = compile_ground_truth(domain);
  }
};

Term var(const char* n) { return Term::variable(n); }
Term obj(const char* n) { return Term::object(n); }
Term blk(const char* n) {
  return Term::object(n, Symbol::intern("block"));
}

Literal lit(const char* pred, std::vector<Term> args, bool neg = false) {
  Literal l(Symbol::intern(pred), std::move(args));
  l.negated = neg;
  return l;
}

// Synthetic single-action model whose rule has the given outcomes.
NDRSet one_rule_model(std::vector<Outcome> outcomes) {
  Predicate ap(Symbol::intern("flip"), 1, PredicateKind::Action);
  NDRSet m({ap});
  NDR r;
  r.action = lit("flip", {var("x")});
  r.preconditions = Conjunction({lit("up", {var("x")})});
  r.outcomes = std::move(outcomes);
  m.set_rules(ap.name, {r});
  return m;
}

// Shortest distances to every reachable state, by breadth-first search over
// the deterministic ground-truth transitions.
std::vector<std::pair<State, int>> bfs_distances(const Fixture& f) {
  auto actions = all_ground_actions(f.domain, f.problem.objects);
  std::set<std::string> seen;
  std::vector<std::pair<State, int>> out;
  std::queue<size_t> frontier;
  seen.insert(Conjunction(f.problem.init.literals()).str());
  out.emplace_back(f.problem.init, 0);
  frontier.push(0);
  while (!frontier.empty()) {
    size_t idx = frontier.front();
    frontier.pop();
    for (const auto& a : actions) {
      auto next = f.truth.most_likely_next(out[idx].first, a);
      REQUIRE(next.has_value());
      if (seen.insert(Conjunction(next->literals()).str()).second) {
        out.emplace_back(*next, out[idx].second + 1);
        frontier.push(out.size() - 1);
      }
    }
  }
  return out;
}

bool simulate_reaches(const DeterminizedModel& dm, State s,
                      const std::vector<Literal>& actions,
                      const Conjunction& goal) {
  for (const auto& a : actions) s = dm.apply(s, a);
  return holds(goal, s);
}

}  // namespace

TEST_CASE("determinization keeps the most probable concrete outcome") {
  auto m = one_rule_model({{0.35, {lit("down", {var("x")})}, false},
                           {0.40, {lit("up", {var("x")}, true)}, false},
                           Outcome::noise(0.25)});
  DeterminizedModel dm = determinize(m);
  auto it = dm.rules.find(Symbol::intern("flip"));
  REQUIRE(it != dm.rules.end());
  REQUIRE(it->second.size() == 1);
  const DetRule& r = it->second[0];
  REQUIRE(r.effects.size() == 1);
  CHECK(r.effects[0].str() == "(not (up ?x))");
  CHECK(dm.source_fingerprint == m.fingerprint());
}

TEST_CASE("determinization tie-break prefers the larger effect set") {
  auto m = one_rule_model(
      {{0.5, {lit("down", {var("x")})}, false},
       {0.5, {lit("down", {var("x")}), lit("up", {var("x")}, true)},
        false}});
  DeterminizedModel dm = determinize(m);
  const auto& r = dm.rules.at(Symbol::intern("flip"))[0];
  CHECK(r.effects.size() == 2);
}

TEST_CASE("determinization tie-break falls back to lexicographic order") {
  auto m = one_rule_model({{0.5, {lit("down", {var("x")})}, false},
                           {0.5, {lit("up", {var("x")}, true)}, false}});
  DeterminizedModel dm = determinize(m);
  const auto& r = dm.rules.at(Symbol::intern("flip"))[0];
  REQUIRE(r.effects.size() == 1);
  // "(down ?x)" < "(not (up ?x))"
  CHECK(r.effects[0].str() == "(down ?x)");
}

TEST_CASE("noise-only rules and default rules are dropped") {
  auto m = one_rule_model({Outcome::noise(1.0)});
  CHECK(determinize(m).rules.empty());

  Predicate ap(Symbol::intern("flip"), 1, PredicateKind::Action);
  NDRSet fresh({ap});  // default-only model
  CHECK(determinize(fresh).rules.empty());
}

TEST_CASE("determinized apply uses the first covering rule or identity") {
  auto m = one_rule_model({{1.0, {lit("up", {var("x")}, true)}, false}});
  DeterminizedModel dm = determinize(m);
  State s({lit("up", {obj("p")})}, {obj("p")});
  State next = dm.apply(s, lit("flip", {obj("p")}));
  CHECK(next.literals().empty());
  // precondition fails -> identity
  State s2({lit("up", {obj("q")})}, {obj("p"), obj("q")});
  CHECK(dm.apply(s2, lit("flip", {obj("p")})) == s2);
  // unknown action -> identity
  CHECK(dm.apply(s, lit("warp", {obj("p")})) == s);
}

TEST_CASE("trivially satisfied goals yield the empty plan") {
  Fixture f;
  DeterminizedModel dm = determinize(f.truth);
  Conjunction goal({lit("on", {blk("c"), blk("a")})});
  PlanResult pr = plan(f.problem.init, goal, dm, 5.0, 25);
  REQUIRE(plan_found(pr));
  CHECK(std::get<Plan>(pr).actions.empty());
}

TEST_CASE("plans on the ground-truth model reach the goal under simulation") {
  Fixture f;
  DeterminizedModel dm = determinize(f.truth);
  Conjunction goal({lit("on", {blk("a"), blk("b")})});
  PlanResult pr = plan(f.problem.init, goal, dm, 10.0, 25);
  REQUIRE(plan_found(pr));
  const Plan& p = std::get<Plan>(pr);
  CHECK(!p.actions.empty());
  CHECK(simulate_reaches(dm, f.problem.init, p.actions, goal));
  for (const auto& a : p.actions) CHECK(a.is_ground());
  CHECK(p.model_fingerprint == f.truth.fingerprint());
}

TEST_CASE("every reachable state is plannable and every plan validates") {
  Fixture f;
  DeterminizedModel dm = determinize(f.truth);
  auto dist = bfs_distances(f);
  CHECK(dist.size() == 22);
  for (const auto& [target, d] : dist) {
    // the full state conjunction is the strongest possible goal
    Conjunction goal(std::vector<Literal>(target.literals().begin(),
                                          target.literals().end()));
    PlanResult pr = plan(f.problem.init, goal, dm, 10.0, 25);
    REQUIRE(plan_found(pr));
    const Plan& p = std::get<Plan>(pr);
    CHECK(simulate_reaches(dm, f.problem.init, p.actions, goal));
    // greedy search need not be optimal, but it can never beat the oracle
    CHECK(static_cast<int>(p.actions.size()) >= d);
  }
}

TEST_CASE("impossible goals exhaust the frontier and report Unreachable") {
  Fixture f;
  DeterminizedModel dm = determinize(f.truth);
  Conjunction goal({lit("on", {blk("a"), blk("a")})});
  PlanResult pr = plan(f.problem.init, goal, dm, 10.0, 25);
  REQUIRE(!plan_found(pr));
  CHECK(std::get<PlanFailure>(pr) == PlanFailure::Unreachable);
}

TEST_CASE("the expansion budget reports Timeout deterministically") {
  Fixture f;
  DeterminizedModel dm = determinize(f.truth);
  Conjunction goal({lit("on", {blk("a"), blk("b")}),
                    lit("on", {blk("b"), blk("c")})});
  PlanResult pr = plan(f.problem.init, goal, dm, 10.0, 25, 1);
  REQUIRE(!plan_found(pr));
  CHECK(std::get<PlanFailure>(pr) == PlanFailure::Timeout);
}

TEST_CASE("plans are deterministic across repeated invocations") {
  Fixture f;
  DeterminizedModel dm = determinize(f.truth);
  Conjunction goal({lit("on", {blk("b"), blk("c")}),
                    lit("on", {blk("c"), blk("a")})});
  PlanResult a = plan(f.problem.init, goal, dm, 10.0, 25);
  PlanResult b = plan(f.problem.init, goal, dm, 10.0, 25);
  REQUIRE(plan_found(a));
  REQUIRE(plan_found(b));
  CHECK(std::get<Plan>(a).actions == std::get<Plan>(b).actions);
}

TEST_CASE("replan policy follows the plan in a deterministic environment") {
  Fixture f;
  Conjunction goal({lit("on", {blk("a"), blk("b")}),
                    lit("on", {blk("b"), blk("c")})});
  State s = f.problem.init;
  auto env_step = [&](const Literal& a) {
    auto next = f.truth.most_likely_next(s, a);
    REQUIRE(next.has_value());
    s = *next;
    return s;
  };
  ExecutionTrace tr = replan_policy(f.problem.init, goal, f.truth, env_step,
                                    25, 10.0);
  CHECK(tr.reached_goal);
  CHECK(tr.replans == 0);
  CHECK(!tr.plan_failure);
  for (const auto& st : tr.steps) CHECK(st.matched_prediction);
}

TEST_CASE("replan policy recovers from stochastic deviations") {
  // (step ?x): 0.6 advance, 0.4 noise (modelled as no change by sampling)
  Predicate ap(Symbol::intern("step"), 1, PredicateKind::Action);
  NDRSet m({ap});
  NDR r;
  r.action = lit("step", {var("x")});
  r.preconditions = Conjunction({lit("at-start", {var("x")})});
  r.outcomes = {{0.6,
                 {lit("at-start", {var("x")}, true),
                  lit("at-goal", {var("x")})},
                false},
                Outcome::noise(0.4)};
  m.set_rules(ap.name, {r});

  Conjunction goal({lit("at-goal", {obj("p")})});
  std::mt19937 rng(7);
  int successes = 0;
  int total_replans = 0;
  for (int trial = 0; trial < 50; ++trial) {
    State s({lit("at-start", {obj("p")})}, {obj("p")});
    auto env_step = [&](const Literal& a) {
      s = m.sample_next(s, a, rng);
      return s;
    };
    ExecutionTrace tr = replan_policy(s, goal, m, env_step, 30, 5.0);
    if (tr.reached_goal) ++successes;
    total_replans += tr.replans;
  }
  // P(30 straight noise outcomes) = 0.4^30: all trials should succeed
  CHECK(successes == 50);
  CHECK(total_replans > 0);
}

TEST_CASE("replan policy reports failure when no plan exists") {
  Fixture f;
  Conjunction goal({lit("on", {blk("a"), blk("a")})});
  auto env_step = [&](const Literal&) -> State {
    FAIL("no action should be taken without a plan");
    return f.problem.init;
  };
  ExecutionTrace tr = replan_policy(f.problem.init, goal, f.truth, env_step,
                                    25, 10.0);
  CHECK(tr.plan_failure);
  CHECK(!tr.reached_goal);
  CHECK(tr.steps.empty());
}
