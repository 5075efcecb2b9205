#pragma once

#include <map>
#include <vector>

#include "glib/relational.hpp"

namespace glib {

struct Transition {
  State s;
  Literal action;  // ground
  State s_next;
};

// Append-only transition store, grouped by action predicate.
class Dataset {
 public:
  void append(Transition t) {
    by_action_[t.action.pred].push_back(all_.size());
    all_.push_back(std::move(t));
  }

  size_t size() const { return all_.size(); }
  const std::vector<Transition>& all() const { return all_; }
  const Transition& operator[](size_t i) const { return all_[i]; }

  std::vector<const Transition*> for_action(Symbol pred) const {
    std::vector<const Transition*> out;
    auto it = by_action_.find(pred);
    if (it == by_action_.end()) return out;
    out.reserve(it->second.size());
    for (size_t i : it->second) out.push_back(&all_[i]);
    return out;
  }

 private:
  std::vector<Transition> all_;
  std::map<Symbol, std::vector<size_t>> by_action_;
};

}  // namespace glib
