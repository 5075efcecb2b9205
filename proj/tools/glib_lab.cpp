#include <filesystem>
#include <fstream>
#include <map>
#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "glib/harness.hpp"

namespace {

int cmd_run(const std::string& config_path, const std::string& explorer,
            int seeds, const std::string& out_dir, bool no_filters,
            bool no_midpolicy_replan) {
  glib::ExperimentConfig cfg;
  if (!config_path.empty())
    cfg = glib::parse_experiment_config(glib::read_file(config_path));
  if (!explorer.empty()) cfg.explorer = explorer;
  if (seeds > 0) {
    cfg.seeds.clear();
    for (int s = 0; s < seeds; ++s) cfg.seeds.push_back((unsigned)s);
  }
  if (!out_dir.empty()) cfg.out_dir = out_dir;
  if (no_filters) cfg.use_filters = false;
  if (no_midpolicy_replan) cfg.midpolicy_replan = false;

  glib::RunResult r = glib::run_experiment(cfg);
  std::filesystem::path model_path =
      std::filesystem::path(cfg.out_dir) /
      (cfg.explorer + "_" + cfg.domain + "_model.ppddl");
  std::ofstream(model_path) << glib::write_ndrs(r.final_model,
                                                 cfg.domain + "-learned");
  if (!r.points.empty()) {
    const auto& last = r.points.back();
    std::cout << "done: " << r.points.size() << " eval points; last seed "
              << last.seed << " prediction_error=" << last.prediction_error
              << " planning_success=" << last.planning_success << "\n";
  }
  std::cout << "wrote " << model_path.string() << " and CSVs under "
            << cfg.out_dir << "\n";
  return 0;
}

int cmd_eval_model(const std::string& model_path, const std::string& domain,
                   const std::string& assets_root, int samples,
                   unsigned eval_seed) {
  glib::DomainAssets assets =
      glib::load_domain_assets(assets_root, domain, /*require_suite=*/false);
  glib::DomainSpec learned =
      glib::parse_domain(glib::read_file(model_path));
  // Rebuild an NDR set from the serialized rule actions: each :action block
  // is one rule; the residual empty outcome is treated as noise.
  glib::NDRSet model(assets.domain.action_predicates);
  std::map<glib::Symbol, std::vector<glib::NDR>> by_action;
  for (const auto& op : learned.operators) {
    glib::NDR r;
    const auto* ap = assets.domain.find_action_predicate(op.name);
    if (!ap)
      throw glib::SpecError("model action '" + op.name.str() +
                            "' not in domain " + domain);
    if (op.parameters.size() != static_cast<size_t>(ap->arity))
      throw glib::SpecError("model action '" + op.name.str() +
                            "' arity mismatch");
    r.action = glib::Literal(op.name, op.parameters);
    r.preconditions = op.preconditions;
    for (const auto& [prob, effects] : op.outcomes) {
      if (effects.empty() && op.outcomes.size() > 1)
        r.outcomes.push_back(glib::Outcome::noise(prob));
      else
        r.outcomes.push_back(glib::Outcome{prob, effects, false});
    }
    // An all-default serialization round-trips as a bare identity rule;
    // skip it so the built-in default covers that action instead.
    if (r.preconditions.literals.empty() && r.outcomes.size() == 1 &&
        r.outcomes[0].effects.empty())
      continue;
    r.validate();
    by_action[op.name].push_back(std::move(r));
  }
  for (auto& [name, rules] : by_action)
    model.set_rules(name, std::move(rules));

  glib::EnvConfig ec{domain, glib::default_episode_length(domain),
                     assets.pool};
  glib::Environment env(assets.domain, ec);
  std::mt19937 rng(eval_seed);
  double err = glib::prediction_error(model, env, samples, rng);
  std::cout << "prediction_error=" << err << " over " << samples
            << " transitions\n";
  return 0;
}

int cmd_gen_suite(const std::string& domain, const std::string& assets_root,
                  int n_problems, unsigned seed) {
  glib::DomainAssets assets =
      glib::load_domain_assets(assets_root, domain, /*require_suite=*/false);
  std::mt19937 rng(seed);
  auto suite = glib::generate_suite(assets, n_problems,
                                    glib::default_episode_length(domain), rng);
  namespace fs = std::filesystem;
  fs::path dir = fs::path(assets_root) / domain / "suite";
  fs::create_directories(dir);
  for (size_t i = 0; i < suite.size(); ++i) {
    char buf[16];
    std::snprintf(buf, sizeof(buf), "g%02zu.ppddl", i + 1);
    std::ofstream(dir / buf) << glib::write_problem(
        suite[i], assets.domain.name);
  }
  std::cout << "wrote " << suite.size() << " problems to " << dir.string()
            << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"glib-lab: online learning of lifted stochastic action models"};
  app.require_subcommand(1);

  auto* run = app.add_subcommand("run", "run an online learning experiment");
  std::string config_path, explorer, out_dir;
  int seeds = 0;
  bool no_filters = false, no_midpolicy = false;
  run->add_option("--config", config_path, "experiment config file");
  run->add_option("--explorer", explorer,
                  "glib-g | glib-l | babble | oracle");
  run->add_option("--seeds", seeds, "number of seeds (0..n-1)");
  run->add_option("--out", out_dir, "output directory");
  run->add_flag("--no-goal-filters", no_filters,
                "disable static/mutex goal filtering");
  run->add_flag("--no-midpolicy-replan", no_midpolicy,
                "disable replanning on mid-policy prediction mismatch");

  auto* ev = app.add_subcommand("eval-model",
                                "score a serialized model's prediction error");
  std::string model_path, ev_domain = "blocks", assets_root = "assets";
  int ev_samples = 100;
  unsigned ev_seed = 10007;
  ev->add_option("--model", model_path, "model .ppddl file")->required();
  ev->add_option("--domain", ev_domain, "domain name");
  ev->add_option("--assets", assets_root, "assets root directory");
  ev->add_option("--samples", ev_samples, "number of evaluation transitions");
  ev->add_option("--seed", ev_seed, "evaluation RNG seed");

  auto* gs = app.add_subcommand("gen-suite",
                                "generate a planning evaluation suite");
  std::string gs_domain = "blocks", gs_assets = "assets";
  int gs_n = 5;
  unsigned gs_seed = 1;
  gs->add_option("--domain", gs_domain, "domain name");
  gs->add_option("--assets", gs_assets, "assets root directory");
  gs->add_option("--n", gs_n, "number of problems");
  gs->add_option("--seed", gs_seed, "generation RNG seed");

  CLI11_PARSE(app, argc, argv);
  try {
    if (run->parsed())
      return cmd_run(config_path, explorer, seeds, out_dir, no_filters,
                     no_midpolicy);
    if (ev->parsed())
      return cmd_eval_model(model_path, ev_domain, assets_root, ev_samples,
                            ev_seed);
    if (gs->parsed()) return cmd_gen_suite(gs_domain, gs_assets, gs_n, gs_seed);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
