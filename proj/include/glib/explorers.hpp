#pragma once

#include <functional>
#include <memory>
#include <optional>
#include <random>
#include <string>
#include <unordered_set>
#include <vector>

#include "glib/domain.hpp"
#include "glib/filters.hpp"
#include "glib/ndr.hpp"
#include "glib/planner.hpp"

namespace glib {

struct GoalAction {
  Conjunction goal;
  Literal action;  // lifted in lifted mode, ground in ground mode
};

// Seen-conjunction index: contains the canonical forms of every <=k-subset
// of literals of every observed state. A goal is novel iff its form is
// absent.
class NoveltyCache {
 public:
  NoveltyCache(GoalMode mode, int k) : mode_(mode), k_(k) {}

  GoalMode mode() const { return mode_; }
  int k() const { return k_; }
  size_t size() const { return seen_.size(); }

  // Returns true when the state contributed at least one unseen conjunction.
  bool observe(const State& s) {
    if (!seen_states_.insert(Conjunction(s.literals()).str()).second)
      return false;
    size_t before = seen_.size();
    const auto& lits = s.literals();
    std::vector<Literal> subset;
    std::function<void(size_t)> rec = [&](size_t from) {
      if (!subset.empty()) seen_.insert(key(subset));
      if ((int)subset.size() == k_) return;
      for (size_t i = from; i < lits.size(); ++i) {
        subset.push_back(lits[i]);
        rec(i + 1);
        subset.pop_back();
      }
    };
    rec(0);
    return seen_.size() > before;
  }

  bool is_novel(const Conjunction& goal) const {
    return !seen_.count(key(goal.literals));
  }

  std::string key(const std::vector<Literal>& lits) const {
    if (mode_ == GoalMode::Lifted) return canonical_lift(lits).str();
    std::vector<Literal> sorted = lits;
    std::sort(sorted.begin(), sorted.end());
    sorted.erase(std::unique(sorted.begin(), sorted.end()), sorted.end());
    return Conjunction(sorted).str();
  }

 private:
  GoalMode mode_;
  int k_;
  std::unordered_set<std::string> seen_;
  std::unordered_set<std::string> seen_states_;
};

// Uniform over all ground instantiations of the action predicates with the
// episode's objects.
inline Literal action_babble(const State& s, const DomainSpec& d,
                             std::mt19937& rng) {
  if (s.objects().empty()) throw SpecError("no objects to babble actions over");
  auto actions = all_ground_actions(d, s.objects());
  if (actions.empty()) throw SpecError("no ground actions available");
  return actions[std::uniform_int_distribution<size_t>(0, actions.size() - 1)(
      rng)];
}

struct SamplerConfig {
  GoalMode mode = GoalMode::Lifted;
  int k = 2;            // ground mode default is 1
  int rejection_budget = 1000;  // 10 * N candidate draws before NONE
  bool use_filters = true;
};

// Samples a novel, filter-passing goal conjunction paired with a final
// action. Goals are positive-literal conjunctions only.
inline std::optional<GoalAction> sample_goal_action(
    const NoveltyCache& cache, const FilterState& filters,
    size_t model_fingerprint, const DomainSpec& d,
    const std::vector<Term>& objects, const SamplerConfig& cfg,
    std::mt19937& rng) {
  if (d.predicates.empty() || d.action_predicates.empty()) return std::nullopt;
  auto uniform = [&](size_t n) {
    return std::uniform_int_distribution<size_t>(0, n - 1)(rng);
  };

  for (int attempt = 0; attempt < cfg.rejection_budget; ++attempt) {
    int size = 1 + static_cast<int>(uniform(cfg.k));
    std::vector<Literal> lits;
    std::vector<Term> vars;
    bool ok = true;
    for (int i = 0; i < size && ok; ++i) {
      const Predicate& p = d.predicates[uniform(d.predicates.size())];
      std::vector<Term> args;
      for (int j = 0; j < p.arity; ++j) {
        if (cfg.mode == GoalMode::Ground) {
          std::vector<const Term*> pool;
          for (const auto& o : objects)
            if (o.type == p.arg_types[j]) pool.push_back(&o);
          if (pool.empty()) {
            ok = false;
            break;
          }
          args.push_back(*pool[uniform(pool.size())]);
        } else {
          // Uniformly either an existing compatible variable or a fresh one.
          std::vector<const Term*> pool;
          for (const auto& v : vars)
            if (v.type == p.arg_types[j]) pool.push_back(&v);
          size_t pick = uniform(pool.size() + 1);
          if (pick < pool.size()) {
            args.push_back(*pool[pick]);
          } else {
            Term v = Term::variable("g" + std::to_string(vars.size()),
                                    p.arg_types[j]);
            vars.push_back(v);
            args.push_back(v);
          }
        }
      }
      if (!ok) break;
      Literal lit(p.name, args);
      if (std::find(lits.begin(), lits.end(), lit) != lits.end()) {
        ok = false;
        break;
      }
      lits.push_back(lit);
    }
    if (!ok) continue;
    Conjunction goal(lits);
    if (!cache.is_novel(goal)) continue;
    if (cfg.use_filters &&
        !goal_passes(goal, filters, model_fingerprint, cfg.mode))
      continue;

    // Pair with an action: arguments are uniformly a compatible goal
    // variable or a fresh variable (lifted) / a random object (ground).
    const Predicate& ap =
        d.action_predicates[uniform(d.action_predicates.size())];
    std::vector<Term> aargs;
    bool aok = true;
    int fresh = 0;
    for (int j = 0; j < ap.arity; ++j) {
      if (cfg.mode == GoalMode::Ground) {
        std::vector<const Term*> pool;
        for (const auto& o : objects)
          if (o.type == ap.arg_types[j]) pool.push_back(&o);
        if (pool.empty()) {
          aok = false;
          break;
        }
        aargs.push_back(*pool[uniform(pool.size())]);
      } else {
        std::vector<const Term*> pool;
        for (const auto& v : goal.variables)
          if (v.type == ap.arg_types[j]) pool.push_back(&v);
        size_t pick = uniform(pool.size() + 1);
        if (pick < pool.size())
          aargs.push_back(*pool[pick]);
        else
          aargs.push_back(Term::variable("f" + std::to_string(fresh++),
                                         ap.arg_types[j]));
      }
    }
    if (!aok) continue;
    return GoalAction{std::move(goal), Literal(ap.name, aargs)};
  }
  return std::nullopt;
}

class Explorer {
 public:
  virtual ~Explorer() = default;
  // Chooses the next ground action; remaining = steps left in the episode.
  virtual Literal step(const State& s, const NDRSet& m, int remaining,
                       std::mt19937& rng) = 0;
  virtual void observe(const State&) {}
  virtual void on_episode_reset() {}
  virtual const char* name() const = 0;
};

class ActionBabbleExplorer : public Explorer {
 public:
  explicit ActionBabbleExplorer(const DomainSpec& d) : domain_(d) {}
  Literal step(const State& s, const NDRSet&, int, std::mt19937& rng) override {
    return action_babble(s, domain_, rng);
  }
  const char* name() const override { return "babble"; }

 private:
  const DomainSpec& domain_;
};

// Scans ground actions for a most-likely-prediction mismatch between the
// learned and ground-truth models; failing that, searches two steps ahead in
// the determinized models; failing that, babbles.
class OracleExplorer : public Explorer {
 public:
  OracleExplorer(const DomainSpec& d, const NDRSet& truth)
      : domain_(d), truth_(truth) {}

  Literal step(const State& s, const NDRSet& m, int,
               std::mt19937& rng) override {
    auto actions = all_ground_actions(domain_, s.objects());
    auto mismatch = [&](const State& st, const Literal& a) {
      auto pl = m.most_likely_next(st, a);
      auto pt = truth_.most_likely_next(st, a);
      if (pl.has_value() != pt.has_value()) return true;
      return pl && *pl != *pt;
    };
    for (const auto& a : actions)
      if (mismatch(s, a)) return a;
    DeterminizedModel dt = determinize(truth_);
    for (const auto& a1 : actions) {
      State s1 = dt.apply(s, a1);
      if (s1 == s) continue;
      for (const auto& a2 : actions)
        if (mismatch(s1, a2)) return a1;
    }
    return action_babble(s, domain_, rng);
  }
  const char* name() const override { return "oracle"; }

 private:
  const DomainSpec& domain_;
  const NDRSet& truth_;
};

struct GlibConfig {
  GoalMode mode = GoalMode::Lifted;
  int k = 2;           // ground mode uses k=1
  int n_tries = 100;   // N, plan attempts per decision
  bool use_filters = true;
  bool midpolicy_replan = true;
  double plan_timeout_seconds = 10.0;
  long max_expansions_per_plan = 700;  // deterministic search budget
  // Total search budget across one decision's babble loop. Converged models
  // make most novel goals unreachable; without this cap every decision pays
  // n_tries full failed searches.
  long max_expansions_per_decision = 6000;
  int mutex_rollouts = 30;
  int mutex_rollout_len = 25;  // matched to the episode length
};

// Goal-literal babbling (ground or lifted). Keeps a policy in progress, a
// novelty cache over observed states, and filter state recomputed whenever
// the model fingerprint changes.
class GlibExplorer : public Explorer {
 public:
  GlibExplorer(const DomainSpec& d, std::vector<State> initial_states,
               GlibConfig cfg, unsigned filter_seed = 0)
      : domain_(d), inits_(std::move(initial_states)), cfg_(cfg),
        cache_(cfg.mode, cfg.k), filter_rng_(filter_seed) {
    if (cfg_.n_tries < 1) throw SpecError("N must be >= 1");
  }

  const char* name() const override {
    return cfg_.mode == GoalMode::Ground ? "glib-g" : "glib-l";
  }

  const NoveltyCache& novelty_cache() const { return cache_; }
  const FilterState& filters() const { return filters_; }
  long planner_calls() const { return planner_calls_; }
  long fallback_actions() const { return fallback_actions_; }
  bool exhausted() const { return exhausted_; }

  void observe(const State& s) override {
    if (cache_.observe(s)) exhausted_ = false;
  }

  void on_episode_reset() override { policy_.reset(); }

  Literal step(const State& s, const NDRSet& m, int remaining,
               std::mt19937& rng) override {
    refresh_filters(m);

    if (policy_) {
      if (cfg_.midpolicy_replan && policy_->expected &&
          !(s == *policy_->expected)) {
        // Observed transition deviated from the determinized prediction.
        if (!replan_in_progress(s, remaining))
          policy_.reset();
      }
      if (policy_) {
        if (auto a = advance_policy(s, rng)) return *a;
        policy_.reset();
      }
    }

    SamplerConfig sc{cfg_.mode, cfg_.k, 10 * cfg_.n_tries, cfg_.use_filters};
    if (!exhausted_) {
      DeterminizedModel dm = determinize(m);
      long decision_budget = cfg_.max_expansions_per_decision;
      for (int t = 0; t < cfg_.n_tries && decision_budget > 0; ++t) {
        auto ga = sample_goal_action(cache_, filters_, m.fingerprint(),
                                     domain_, s.objects(), sc, rng);
        if (!ga) {
          // The sampler's rejection budget found nothing novel that passes
          // the filters; stay in fallback until a new state or model arrives.
          exhausted_ = true;
          break;
        }
        ++planner_calls_;
        long used = 0;
        PlanResult pr = plan(
            s, ga->goal, dm, cfg_.plan_timeout_seconds, remaining,
            std::min(cfg_.max_expansions_per_plan, decision_budget), &used);
        decision_budget -= used;
        if (!plan_found(pr)) continue;
        Plan p = std::get<Plan>(pr);
        Policy pol;
        pol.goal = ga->goal;
        pol.actions = p.actions;
        pol.final_action = ground_final_action(*ga, s, p, dm, rng);
        if (!pol.final_action) continue;
        pol.dm = dm;
        policy_ = std::move(pol);
        if (auto a = advance_policy(s, rng)) return *a;
        policy_.reset();
      }
    }
    ++fallback_actions_;
    return action_babble(s, domain_, rng);
  }

 private:
  struct Policy {
    Conjunction goal;
    std::vector<Literal> actions;
    size_t next = 0;
    std::optional<Literal> final_action;  // ground a_G
    std::optional<State> expected;        // predicted next state
    DeterminizedModel dm;
  };

  void refresh_filters(const NDRSet& m) {
    if (filters_fp_ != m.fingerprint()) exhausted_ = false;
    if (!cfg_.use_filters) {
      if (filters_.fingerprint() != m.fingerprint())
        filters_ = FilterState();  // placeholder; never queried
      filters_fp_ = m.fingerprint();
      return;
    }
    if (filters_fp_ == m.fingerprint() && have_filters_) return;
    filters_ = FilterState::compute(m, domain_.predicates, inits_,
                                    cfg_.mutex_rollouts,
                                    cfg_.mutex_rollout_len, filter_rng_);
    filters_fp_ = m.fingerprint();
    have_filters_ = true;
  }

  std::optional<Literal> advance_policy(const State& s, std::mt19937&) {
    if (policy_->next < policy_->actions.size()) {
      Literal a = policy_->actions[policy_->next++];
      policy_->expected = policy_->dm.apply(s, a);
      return a;
    }
    if (policy_->final_action) {
      Literal a = *policy_->final_action;
      policy_.reset();
      return a;
    }
    return std::nullopt;
  }

  bool replan_in_progress(const State& s, int remaining) {
    PlanResult pr = plan(s, policy_->goal, policy_->dm,
                         cfg_.plan_timeout_seconds, remaining,
                         cfg_.max_expansions_per_plan);
    ++planner_calls_;
    if (!plan_found(pr)) return false;
    policy_->actions = std::get<Plan>(pr).actions;
    policy_->next = 0;
    policy_->expected.reset();
    return true;
  }

  // Grounds a_G: goal-bound variables take values from the binding under
  // which the plan's simulated terminal state satisfies the goal; free
  // variables get uniform random objects.
  std::optional<Literal> ground_final_action(const GoalAction& ga,
                                             const State& s, const Plan& p,
                                             const DeterminizedModel& dm,
                                             std::mt19937& rng) {
    if (ga.action.is_ground()) return ga.action;
    State terminal = s;
    for (const auto& a : p.actions) terminal = dm.apply(terminal, a);
    auto binding = find_first_binding(ga.goal, terminal);
    if (!binding) return std::nullopt;
    Literal out = ga.action;
    for (auto& arg : out.args) {
      if (!arg.is_variable) continue;
      if (auto v = binding->lookup(arg)) {
        arg = *v;
        continue;
      }
      std::vector<const Term*> pool;
      for (const auto& o : s.objects())
        if (o.type == arg.type) pool.push_back(&o);
      if (pool.empty()) return std::nullopt;
      arg = *pool[std::uniform_int_distribution<size_t>(0, pool.size() - 1)(
          rng)];
    }
    return out;
  }

  const DomainSpec& domain_;
  std::vector<State> inits_;
  GlibConfig cfg_;
  NoveltyCache cache_;
  FilterState filters_;
  size_t filters_fp_ = 0;
  bool have_filters_ = false;
  std::optional<Policy> policy_;
  std::mt19937 filter_rng_;
  bool exhausted_ = false;
  long planner_calls_ = 0;
  long fallback_actions_ = 0;
};

inline Literal oracle_step(const State& s, const NDRSet& learned,
                           const NDRSet& truth, const DomainSpec& d,
                           std::mt19937& rng) {
  OracleExplorer ox(d, truth);
  return ox.step(s, learned, 0, rng);
}

}  // namespace glib
