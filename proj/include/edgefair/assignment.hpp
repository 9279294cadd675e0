#pragma once

#include <initializer_list>
#include <map>
#include <sstream>
#include <string>
#include <utility>

#include "edgefair/errors.hpp"

namespace edgefair {

/// A (possibly partial) binding of variable names to value indices.
/// Backed by an ordered map so iteration order is deterministic.
class Assignment {
 public:
  Assignment() = default;

  Assignment(std::initializer_list<std::pair<const std::string, int>> init)
      : bindings_(init) {}

  /// Parses "R=0,A=1,G=0". Whitespace around tokens is not accepted.
  static Assignment parse(const std::string& text) {
    Assignment a;
    if (text.empty()) return a;
    std::stringstream ss(text);
    std::string token;
    while (std::getline(ss, token, ',')) {
      auto eq = token.find('=');
      if (eq == std::string::npos || eq == 0) {
        throw ParseError("bad assignment token '" + token +
                         "', expected name=valueIndex");
      }
      const std::string name = token.substr(0, eq);
      const std::string value = token.substr(eq + 1);
      try {
        std::size_t used = 0;
        const int v = std::stoi(value, &used);
        if (used != value.size()) throw std::invalid_argument(value);
        a.set(name, v);
      } catch (const std::exception&) {
        throw ParseError("bad value index '" + value + "' for '" + name + "'");
      }
    }
    return a;
  }

  void set(const std::string& name, int value) { bindings_[name] = value; }

  bool contains(const std::string& name) const {
    return bindings_.count(name) > 0;
  }

  int at(const std::string& name) const {
    auto it = bindings_.find(name);
    if (it == bindings_.end()) {
      throw UnknownVariable("assignment does not bind '" + name + "'");
    }
    return it->second;
  }

  std::size_t size() const { return bindings_.size(); }
  bool empty() const { return bindings_.empty(); }

  const std::map<std::string, int>& bindings() const { return bindings_; }

  std::string to_string() const {
    std::string out;
    for (const auto& [name, value] : bindings_) {
      if (!out.empty()) out += ',';
      out += name + "=" + std::to_string(value);
    }
    return out;
  }

  friend bool operator==(const Assignment& a, const Assignment& b) {
    return a.bindings_ == b.bindings_;
  }

 private:
  std::map<std::string, int> bindings_;
};

}  // namespace edgefair
