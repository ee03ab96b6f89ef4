#pragma once

// Strict reader over a JSON object: keys are optional, unexpected keys are errors.

#include <algorithm>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

namespace sparsestep::detail {

class JsonReader {
 public:
  JsonReader(const nlohmann::json& obj, std::string where) : obj_(obj), where_(std::move(where)) {
    if (!obj_.is_object()) throw std::invalid_argument(where_ + ": expected an object");
  }
  template <typename T>
  void get(const char* key, T& out) {
    seen_.push_back(key);
    if (!obj_.contains(key)) return;
    try {
      out = obj_.at(key).get<T>();
    } catch (const nlohmann::json::exception& e) {
      throw std::invalid_argument(where_ + "." + key + ": " + e.what());
    }
  }
  bool has(const char* key) const { return obj_.contains(key); }
  const nlohmann::json* child(const char* key) {
    seen_.push_back(key);
    return obj_.contains(key) ? &obj_.at(key) : nullptr;
  }
  void finish() const {
    for (const auto& [k, v] : obj_.items()) {
      if (std::find(seen_.begin(), seen_.end(), k) == seen_.end()) {
        throw std::invalid_argument(where_ + ": unknown key '" + k + "'");
      }
    }
  }
  const std::string& where() const { return where_; }

 private:
  const nlohmann::json& obj_;
  std::string where_;
  std::vector<std::string> seen_;
};

}  // namespace sparsestep::detail
