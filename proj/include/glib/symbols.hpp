#pragma once

#include <cstdint>
#include <deque>
#include <memory>
#include <mutex>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace glib {

// Interned string. Equality and ordering on the id; ids are assigned in
// intern order, so ordering is arbitrary but stable within a process.
// Use str() when lexicographic order matters.
class Symbol {
 public:
  Symbol() : id_(0) {}

  static Symbol intern(std::string_view s) {
    auto& t = table();
    std::lock_guard<std::mutex> lock(t.mutex);
    auto it = t.ids.find(std::string(s));
    if (it != t.ids.end()) return Symbol(it->second);
    uint32_t id = static_cast<uint32_t>(t.strings.size());
    t.strings.emplace_back(new std::string(s));
    t.ids.emplace(*t.strings.back(), id);
    return Symbol(id);
  }

  // Lock-free: entries are never mutated after intern() publishes them, and
  // the deque of owning pointers keeps the strings at stable addresses.
  const std::string& str() const { return *table().strings[id_]; }

  uint32_t id() const { return id_; }

  friend bool operator==(Symbol a, Symbol b) { return a.id_ == b.id_; }
  friend bool operator!=(Symbol a, Symbol b) { return a.id_ != b.id_; }
  friend bool operator<(Symbol a, Symbol b) { return a.id_ < b.id_; }

 private:
  explicit Symbol(uint32_t id) : id_(id) {}

  struct Table {
    std::mutex mutex;
    std::deque<std::unique_ptr<std::string>> strings;
    std::unordered_map<std::string, uint32_t> ids;
    Table() {
      strings.emplace_back(new std::string(""));
      ids.emplace("", 0);
    }
  };
  static Table& table() {
    static Table t;
    return t;
  }

  uint32_t id_;
};

}  // namespace glib

template <>
struct std::hash<glib::Symbol> {
  size_t operator()(glib::Symbol s) const noexcept { return s.id(); }
};
