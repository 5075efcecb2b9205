#pragma once

#include <chrono>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <memory>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "glib/environment.hpp"
#include "glib/explorers.hpp"
#include "glib/learner.hpp"
#include "glib/pddl.hpp"
#include "glib/planner.hpp"

namespace glib {

struct DomainAssets {
  DomainSpec domain;
  std::vector<ProblemSpec> pool;
  std::vector<ProblemSpec> suite;  // planning evaluation problems
};

inline DomainAssets load_domain_assets(const std::string& assets_root,
                                       const std::string& name,
                                       bool require_suite = true) {
  namespace fs = std::filesystem;
  DomainAssets out;
  fs::path root = fs::path(assets_root) / name;
  out.domain = parse_domain(read_file((root / "domain.ppddl").string()));
  auto load_dir = [&](const fs::path& dir, std::vector<ProblemSpec>& into) {
    if (!fs::exists(dir)) return;
    std::vector<fs::path> files;
    for (const auto& e : fs::directory_iterator(dir))
      if (e.path().extension() == ".ppddl") files.push_back(e.path());
    std::sort(files.begin(), files.end());
    for (const auto& f : files)
      into.push_back(parse_problem(read_file(f.string()), out.domain));
  };
  load_dir(root / "problems", out.pool);
  load_dir(root / "suite", out.suite);
  if (out.pool.empty())
    throw SpecError("no problems found under " + (root / "problems").string());
  if (require_suite && out.suite.empty())
    throw SpecError("no planning suite under " + (root / "suite").string());
  return out;
}

inline int default_episode_length(const std::string& domain_name) {
  return domain_name == "tireworld" ? 8 : 25;
}

struct ExperimentConfig {
  std::string assets_root = "assets";
  std::string domain = "blocks";
  std::string explorer = "glib-l";  // glib-g | glib-l | babble | oracle
  LearnerConfig learner;
  int episode_length = 0;  // 0 = per-domain default
  int total_interactions = 1000;
  int eval_interval = 100;
  int eval_samples = 100;
  std::vector<unsigned> seeds = {0};
  std::string out_dir = "out";
  bool use_filters = true;
  bool midpolicy_replan = true;
  unsigned eval_seed = 10007;  // shared across explorers for fair metrics
  double plan_timeout_seconds = 10.0;
  int glib_n_tries = 100;

  void validate() const {
    if (total_interactions < 1 || eval_interval < 1 || eval_samples < 1)
      throw SpecError("experiment counts must be positive");
    if (seeds.empty()) throw SpecError("seeds must be nonempty");
    learner.validate();
  }
};

// Flat key=value config text; '#' starts a comment line.
inline ExperimentConfig parse_experiment_config(const std::string& text) {
  ExperimentConfig c;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    auto trim = [](std::string s) {
      size_t a = s.find_first_not_of(" \t\r");
      size_t b = s.find_last_not_of(" \t\r");
      return a == std::string::npos ? std::string() : s.substr(a, b - a + 1);
    };
    line = trim(line);
    if (line.empty()) continue;
    auto eq = line.find('=');
    if (eq == std::string::npos)
      throw SpecError("config line " + std::to_string(lineno) +
                      ": expected key=value");
    std::string key = trim(line.substr(0, eq));
    std::string val = trim(line.substr(eq + 1));
    if (key == "assets_root") c.assets_root = val;
    else if (key == "domain") c.domain = val;
    else if (key == "explorer") c.explorer = val;
    else if (key == "episode_length") c.episode_length = std::stoi(val);
    else if (key == "total_interactions") c.total_interactions = std::stoi(val);
    else if (key == "eval_interval") c.eval_interval = std::stoi(val);
    else if (key == "eval_samples") c.eval_samples = std::stoi(val);
    else if (key == "out_dir") c.out_dir = val;
    else if (key == "use_filters") c.use_filters = (val == "true" || val == "1");
    else if (key == "midpolicy_replan")
      c.midpolicy_replan = (val == "true" || val == "1");
    else if (key == "eval_seed") c.eval_seed = std::stoul(val);
    else if (key == "plan_timeout_seconds")
      c.plan_timeout_seconds = std::stod(val);
    else if (key == "glib_n_tries") c.glib_n_tries = std::stoi(val);
    else if (key == "complexity_penalty")
      c.learner.complexity_penalty = std::stod(val);
    else if (key == "noise_floor") c.learner.noise_floor = std::stod(val);
    else if (key == "max_search_iters")
      c.learner.max_search_iters = std::stoi(val);
    else if (key == "learn_time_budget_seconds")
      c.learner.time_budget_seconds = std::stod(val);
    else if (key == "seeds") {
      c.seeds.clear();
      std::istringstream ss(val);
      std::string tok;
      while (std::getline(ss, tok, ','))
        if (!tok.empty()) c.seeds.push_back(std::stoul(tok));
    } else {
      throw SpecError("unknown config key '" + key + "'");
    }
  }
  return c;
}

struct CurvePoint {
  unsigned seed = 0;
  int interactions = 0;
  double prediction_error = 0.0;
  double planning_success = 0.0;
  double sec_per_iter = 0.0;
};

inline const char* kCsvHeader =
    "seed,interactions,prediction_error,planning_success,sec_per_iter";

inline std::string csv_line(const CurvePoint& p) {
  std::ostringstream os;
  os << p.seed << "," << p.interactions << "," << std::setprecision(10)
     << p.prediction_error << "," << p.planning_success << ","
     << p.sec_per_iter;
  return os.str();
}

// Fraction of eval transitions the model does not predict as most likely.
// NO_PREDICTION counts as an error.
inline double prediction_error_on(const NDRSet& m,
                                  const std::vector<Transition>& samples) {
  if (samples.empty()) throw SpecError("empty evaluation sample");
  int errors = 0;
  for (const auto& t : samples) {
    auto pred = m.most_likely_next(t.s, t.action);
    if (!pred || *pred != t.s_next) ++errors;
  }
  return static_cast<double>(errors) / samples.size();
}

inline double prediction_error(const NDRSet& m, const Environment& env, int n,
                               std::mt19937& rng) {
  return prediction_error_on(m, env.sample_eval_transitions(n, rng));
}

// Success fraction of FF-Replan execution with the given model on the suite,
// run against the real environment dynamics.
inline double planning_success(const NDRSet& m,
                               const std::vector<ProblemSpec>& suite,
                               const Environment& env, std::mt19937& rng,
                               double plan_timeout_seconds = 10.0) {
  if (suite.empty()) throw SpecError("empty planning suite");
  int ok = 0;
  for (const auto& p : suite) {
    if ((int)p.goal.literals.size() < 3)
      throw SpecError("suite goal shorter than 3 literals");
    Environment scratch = env;
    scratch.reset_to(p);
    auto step_fn = [&](const Literal& a) { return scratch.step(a, rng); };
    ExecutionTrace tr = replan_policy(p.init, p.goal, m, step_fn,
                                      env.episode_length(),
                                      plan_timeout_seconds);
    if (tr.reached_goal) ++ok;
  }
  return static_cast<double>(ok) / suite.size();
}

// Planning suite generation: roll the ground truth at least three effectful
// steps from a fresh init and conjoin >=3 changed literals as the goal, so
// every goal is solvable by construction and too long to be babbled.
inline std::vector<ProblemSpec> generate_suite(const DomainAssets& assets,
                                               int n_problems, int horizon,
                                               std::mt19937& rng) {
  const NDRSet truth = compile_ground_truth(assets.domain);
  std::vector<ProblemSpec> out;
  int guard = 0;
  while ((int)out.size() < n_problems && guard++ < n_problems * 200) {
    const ProblemSpec& base =
        assets.pool[std::uniform_int_distribution<size_t>(
            0, assets.pool.size() - 1)(rng)];
    State s = base.init;
    auto actions = all_ground_actions(assets.domain, base.objects);
    // Rejection-sample effectful actions so short horizons still move the
    // state far enough from the init to yield multi-literal goals.
    int effectful = 0;
    for (int t = 0; t < horizon; ++t) {
      for (int tries = 0; tries < 50; ++tries) {
        const Literal& a = actions[std::uniform_int_distribution<size_t>(
            0, actions.size() - 1)(rng)];
        State next = truth.sample_next(s, a, rng);
        if (next == s) continue;
        ++effectful;
        s = std::move(next);
        break;
      }
    }
    if (effectful < 3) continue;
    std::vector<Literal> changed;
    for (const auto& l : s.literals())
      if (!base.init.contains(l)) changed.push_back(l);
    if ((int)changed.size() < 3) continue;
    std::shuffle(changed.begin(), changed.end(), rng);
    int len = 3 + (changed.size() > 3 ? (int)std::uniform_int_distribution<
                                            size_t>(0, changed.size() - 3)(rng)
                                      : 0);
    len = std::min<int>(len, 4);
    changed.resize(len);
    ProblemSpec p;
    p.name = Symbol::intern(base.name.str() + "-goal" +
                            std::to_string(out.size()));
    p.objects = base.objects;
    p.init = base.init;
    p.goal = Conjunction(changed);
    out.push_back(std::move(p));
  }
  if ((int)out.size() < n_problems)
    throw SpecError("could not generate requested suite size");
  return out;
}

inline std::string write_problem(const ProblemSpec& p, Symbol domain_name) {
  std::ostringstream os;
  os << "(define (problem " << p.name.str() << ")\n";
  os << "  (:domain " << domain_name.str() << ")\n";
  os << "  (:objects";
  for (const auto& o : p.objects)
    os << " " << o.name.str() << " - " << o.type.str();
  os << ")\n  (:init";
  for (const auto& l : p.init.literals()) os << " " << l.str();
  os << ")\n  (:goal " << p.goal.str() << "))\n";
  return os.str();
}

inline std::unique_ptr<Explorer> make_explorer(const ExperimentConfig& cfg,
                                               const DomainAssets& assets,
                                               const Environment& env,
                                               int episode_length,
                                               unsigned seed) {
  if (cfg.explorer == "babble")
    return std::make_unique<ActionBabbleExplorer>(assets.domain);
  if (cfg.explorer == "oracle")
    return std::make_unique<OracleExplorer>(assets.domain,
                                            env.ground_truth());
  if (cfg.explorer == "glib-g" || cfg.explorer == "glib-l") {
    GlibConfig gc;
    gc.mode = cfg.explorer == "glib-g" ? GoalMode::Ground : GoalMode::Lifted;
    gc.k = cfg.explorer == "glib-g" ? 1 : 2;
    gc.n_tries = cfg.glib_n_tries;
    gc.use_filters = cfg.use_filters;
    gc.midpolicy_replan = cfg.midpolicy_replan;
    gc.plan_timeout_seconds = cfg.plan_timeout_seconds;
    gc.mutex_rollout_len = episode_length;
    std::vector<State> inits;
    for (const auto& p : assets.pool) inits.push_back(p.init);
    return std::make_unique<GlibExplorer>(assets.domain, std::move(inits), gc,
                                          seed * 7919 + 13);
  }
  throw SpecError("unknown explorer '" + cfg.explorer + "'");
}

struct RunResult {
  std::vector<CurvePoint> points;  // all seeds
  NDRSet final_model;              // last seed's final model
};

// The online-learning outer loop: explore, step, append, retrain on
// surprise, and evaluate at fixed intervals with the learner frozen.
inline RunResult run_experiment(const ExperimentConfig& cfg) {
  cfg.validate();
  DomainAssets assets = load_domain_assets(cfg.assets_root, cfg.domain);
  int T = cfg.episode_length > 0 ? cfg.episode_length
                                 : default_episode_length(cfg.domain);
  EnvConfig ec{cfg.domain, T, assets.pool};
  Environment env(assets.domain, ec);
  if (cfg.explorer == "oracle" && assets.domain.operators.empty())
    throw SpecError("oracle explorer requires ground-truth operators");

  // Shared evaluation data: identical across explorers and seeds.
  std::mt19937 eval_rng(cfg.eval_seed);
  auto eval_set = env.sample_eval_transitions(cfg.eval_samples, eval_rng);

  namespace fs = std::filesystem;
  fs::create_directories(cfg.out_dir);
  RunResult result;
  NDRSet last_model;

  std::ofstream merged(fs::path(cfg.out_dir) /
                       (cfg.explorer + "_" + cfg.domain + "_summary.csv"));
  merged << kCsvHeader << "\n";

  for (unsigned seed : cfg.seeds) {
    std::mt19937 rng(seed);
    NDRSet model(assets.domain.action_predicates);
    Dataset data;
    auto explorer = make_explorer(cfg, assets, env, T, seed);

    std::ofstream per_seed(fs::path(cfg.out_dir) /
                           (cfg.explorer + "_" + cfg.domain + "_seed" +
                            std::to_string(seed) + ".csv"));
    per_seed << kCsvHeader << "\n";

    double decision_seconds = 0.0;
    int decisions_since_eval = 0;
    State s;
    bool need_reset = true;

    for (int i = 1; i <= cfg.total_interactions; ++i) {
      if (need_reset || env.episode_done()) {
        s = env.reset(rng);
        explorer->on_episode_reset();
        explorer->observe(s);
        need_reset = false;
      }
      int remaining = T - env.steps_taken();
      auto t0 = std::chrono::steady_clock::now();
      Literal a = explorer->step(s, model, remaining, rng);
      decision_seconds +=
          std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
              .count();
      ++decisions_since_eval;
      State s_next = env.step(a, rng);
      Transition t{s, a, s_next};
      explorer->observe(s_next);
      data.append(t);
      if (should_retrain(model, t)) model = learn(data, model, cfg.learner);
      s = std::move(s_next);

      if (i % cfg.eval_interval == 0) {
        std::mt19937 metrics_rng(cfg.eval_seed ^ 0x9e3779b9u);
        CurvePoint p;
        p.seed = seed;
        p.interactions = i;
        p.prediction_error = prediction_error_on(model, eval_set);
        p.planning_success = planning_success(model, assets.suite, env,
                                              metrics_rng,
                                              cfg.plan_timeout_seconds);
        p.sec_per_iter = decision_seconds / decisions_since_eval;
        decision_seconds = 0.0;
        decisions_since_eval = 0;
        per_seed << csv_line(p) << std::endl;
        merged << csv_line(p) << std::endl;
        result.points.push_back(p);
      }
    }
    last_model = model;
  }
  result.final_model = last_model;
  return result;
}

}  // namespace glib
