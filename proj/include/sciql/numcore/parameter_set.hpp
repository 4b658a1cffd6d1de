#pragma once

#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>

#include "sciql/numcore/dense_array.hpp"

namespace sciql {

/// Named parameters of one network plus its Adam moments.
/// std::map keeps entry order deterministic (lexicographic), which is also
/// the serialization order.
struct ParameterSet {
  std::map<std::string, DenseArray> entries;
  std::map<std::string, DenseArray> adam_m;
  std::map<std::string, DenseArray> adam_v;
  std::int64_t step_count = 0;

  DenseArray& operator[](const std::string& name) { return entries.at(name); }
  const DenseArray& operator[](const std::string& name) const { return entries.at(name); }

  [[nodiscard]] bool contains(const std::string& name) const { return entries.contains(name); }

  void add(const std::string& name, DenseArray value) {
    adam_m[name] = DenseArray(value.shape);
    adam_v[name] = DenseArray(value.shape);
    entries[name] = std::move(value);
  }

  /// Same names and shapes, all values zero, no optimizer state.
  [[nodiscard]] ParameterSet zeros_like() const {
    ParameterSet out;
    for (const auto& [name, arr] : entries) out.entries[name] = DenseArray(arr.shape);
    return out;
  }

  [[nodiscard]] std::size_t parameter_count() const {
    std::size_t n = 0;
    for (const auto& [name, arr] : entries) n += arr.size();
    return n;
  }

  [[nodiscard]] bool all_finite() const {
    for (const auto& [name, arr] : entries) {
      if (!arr.all_finite()) return false;
    }
    return true;
  }

  void check_matches(const ParameterSet& other, const char* what) const {
    if (entries.size() != other.entries.size()) {
      throw std::invalid_argument(std::string(what) + ": entry count mismatch");
    }
    for (const auto& [name, arr] : entries) {
      auto it = other.entries.find(name);
      if (it == other.entries.end()) {
        throw std::invalid_argument(std::string(what) + ": missing entry '" + name + "'");
      }
      if (!arr.same_shape(it->second)) {
        throw std::invalid_argument(std::string(what) + ": shape mismatch for '" + name + "' " +
                                    shape_string(arr.shape) + " vs " +
                                    shape_string(it->second.shape));
      }
    }
  }

  bool operator==(const ParameterSet&) const = default;
};

}  // namespace sciql
