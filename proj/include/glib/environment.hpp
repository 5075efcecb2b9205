#pragma once

#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "glib/domain.hpp"
#include "glib/ndr.hpp"
#include "glib/transition.hpp"

namespace glib {

struct EpisodeExhaustedError : SpecError {
  EpisodeExhaustedError() : SpecError("episode exhausted; call reset()") {}
};

struct EnvConfig {
  std::string domain_name;
  int episode_length = 25;  // Tireworld runs use 8
  std::vector<ProblemSpec> pool;

  void validate() const {
    if (episode_length < 1) throw SpecError("episode_length must be >= 1");
    if (pool.empty()) throw SpecError("problem pool is empty");
  }
};

// Episodic environment backed by ground-truth NDRs compiled from the domain.
// Inapplicable actions are identity transitions (default-rule semantics).
class Environment {
 public:
  Environment(const DomainSpec& domain, EnvConfig cfg)
      : domain_(domain), cfg_(std::move(cfg)),
        truth_(compile_ground_truth(domain)) {
    cfg_.validate();
  }

  const DomainSpec& domain() const { return domain_; }
  const NDRSet& ground_truth() const { return truth_; }
  const EnvConfig& config() const { return cfg_; }
  int episode_length() const { return cfg_.episode_length; }

  const State& reset(std::mt19937& rng) {
    size_t i = std::uniform_int_distribution<size_t>(
        0, cfg_.pool.size() - 1)(rng);
    return reset_to(cfg_.pool[i]);
  }

  const State& reset_to(const ProblemSpec& p) {
    current_problem_ = &p;
    state_ = p.init;
    steps_taken_ = 0;
    return state_;
  }

  const State& state() const { return state_; }
  bool episode_done() const { return steps_taken_ >= cfg_.episode_length; }
  int steps_taken() const { return steps_taken_; }
  const ProblemSpec& current_problem() const {
    if (!current_problem_) throw SpecError("environment not reset");
    return *current_problem_;
  }

  const State& step(const Literal& action, std::mt19937& rng) {
    if (episode_done()) throw EpisodeExhaustedError();
    state_ = truth_.sample_next(state_, action, rng);
    ++steps_taken_;
    return state_;
  }

  // Evaluation transitions, independent of any learner state: reset, roll a
  // uniform number of random actions in [0, T), then record one transition
  // under a uniform random action. Does not disturb the live episode.
  std::vector<Transition> sample_eval_transitions(int n,
                                                  std::mt19937& rng) const {
    if (n < 1) throw SpecError("sample_eval_transitions requires n >= 1");
    std::vector<Transition> out;
    out.reserve(n);
    for (int i = 0; i < n; ++i) {
      size_t pi = std::uniform_int_distribution<size_t>(
          0, cfg_.pool.size() - 1)(rng);
      State s = cfg_.pool[pi].init;
      auto actions = all_ground_actions(domain_, cfg_.pool[pi].objects);
      int rolls = std::uniform_int_distribution<int>(
          0, cfg_.episode_length - 1)(rng);
      auto random_action = [&]() {
        return actions[std::uniform_int_distribution<size_t>(
            0, actions.size() - 1)(rng)];
      };
      for (int r = 0; r < rolls; ++r)
        s = truth_.sample_next(s, random_action(), rng);
      Literal a = random_action();
      State s_next = truth_.sample_next(s, a, rng);
      out.push_back(Transition{std::move(s), std::move(a),
                               std::move(s_next)});
    }
    return out;
  }

 private:
  DomainSpec domain_;
  EnvConfig cfg_;
  NDRSet truth_;
  const ProblemSpec* current_problem_ = nullptr;
  State state_;
  int steps_taken_ = 0;
};

}  // namespace glib
