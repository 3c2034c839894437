#ifndef HEALTHSIM_TOOLS_CONFIG_HPP
#define HEALTHSIM_TOOLS_CONFIG_HPP

// JSON run configuration with tracking of which keys were read, so keys the
// selected model never looks at can be reported.

#include <filesystem>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "healthsim/csv.hpp"
#include "healthsim/error.hpp"

namespace healthsim::cli {

using nlohmann::json;

class Config {
 public:
  static Config load(const std::string& path) {
    const std::string text = csv::read_file(path);
    json j;
    try {
      j = json::parse(text);
    } catch (const json::parse_error& e) {
      throw ValidationError(path + ": invalid JSON: " + e.what());
    }
    if (!j.is_object()) throw ValidationError(path + ": configuration must be a JSON object");
    auto root = std::make_shared<json>(std::move(j));
    return Config(root, root.get(), "", std::make_shared<std::set<std::string>>(),
                  std::filesystem::path(path).parent_path());
  }

  static Config from_json(json j, std::filesystem::path base = ".") {
    auto root = std::make_shared<json>(std::move(j));
    return Config(root, root.get(), "", std::make_shared<std::set<std::string>>(), std::move(base));
  }

  bool has(const std::string& key) const { return node_->contains(key); }

  Config child(const std::string& key) const {
    const json& n = at(key);
    return Config(root_, &n, path_ + "/" + key, used_, base_);
  }
  std::optional<Config> child_opt(const std::string& key) const {
    if (!has(key)) return std::nullopt;
    return child(key);
  }
  std::vector<Config> items(const std::string& key) const {
    const json& n = at(key);
    if (!n.is_array()) throw ValidationError("config key '" + path_ + "/" + key + "' must be a list");
    std::vector<Config> out;
    for (size_t i = 0; i < n.size(); ++i) {
      const std::string p = path_ + "/" + key + "/" + std::to_string(i);
      used_->insert(p);
      out.push_back(Config(root_, &n[i], p, used_, base_));
    }
    return out;
  }

  template <typename T>
  T get(const std::string& key) const {
    const json& n = at(key);
    try {
      return n.get<T>();
    } catch (const json::exception&) {
      throw ValidationError("config key '" + path_ + "/" + key + "' has the wrong type");
    }
  }
  template <typename T>
  T get_or(const std::string& key, T fallback) const {
    return has(key) ? get<T>(key) : fallback;
  }

  /// A file path, resolved against the config file's directory.
  std::string path(const std::string& key) const {
    std::filesystem::path p(get<std::string>(key));
    return (p.is_absolute() ? p : base_ / p).lexically_normal().string();
  }
  std::string raw_path(const std::string& key) const { return get<std::string>(key); }

  /// Keys present but never read, as JSON-pointer-like paths.
  std::vector<std::string> unused() const {
    std::vector<std::string> out;
    walk(*node_, path_, out);
    return out;
  }

  const json& node() const { return *node_; }
  const std::string& where() const { return path_; }

 private:
  Config(std::shared_ptr<json> root, const json* node, std::string path, std::shared_ptr<std::set<std::string>> used,
         std::filesystem::path base)
      : root_(std::move(root)), node_(node), path_(std::move(path)), used_(std::move(used)), base_(std::move(base)) {}

  const json& at(const std::string& key) const {
    if (!node_->is_object() || !node_->contains(key))
      throw ValidationError("config is missing required key '" + path_ + "/" + key + "'");
    used_->insert(path_ + "/" + key);
    return (*node_)[key];
  }

  void walk(const json& n, const std::string& p, std::vector<std::string>& out) const {
    if (n.is_object()) {
      for (const auto& [k, v] : n.items()) {
        const std::string q = p + "/" + k;
        if (!used_->count(q)) out.push_back(q);
        else walk(v, q, out);
      }
    } else if (n.is_array()) {
      for (size_t i = 0; i < n.size(); ++i) {
        const std::string q = p + "/" + std::to_string(i);
        if (used_->count(q)) walk(n[i], q, out);
      }
    }
  }

  std::shared_ptr<json> root_;
  const json* node_;
  std::string path_;
  std::shared_ptr<std::set<std::string>> used_;
  std::filesystem::path base_;
};

}  // namespace healthsim::cli

#endif  // HEALTHSIM_TOOLS_CONFIG_HPP
