#pragma once

#include <charconv>
#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"

#include "grape/cli/presets.hpp"
#include "grape/model/config.hpp"
#include "grape/train/trainer.hpp"

namespace grape::cli {

/// Configuration problem tied to one key.
class ConfigError : public std::runtime_error {
 public:
  ConfigError(std::string key, const std::string& what) : std::runtime_error(what), key_(std::move(key)) {}
  const std::string& key() const noexcept { return key_; }

 private:
  std::string key_;
};

inline constexpr const char* kDataRootEnv = "GRAPE_DATA_ROOT";

struct RunConfig {
  std::string preset;
  std::filesystem::path data_root;
  std::string train_dir, inductive_dir;
  bool valid_facts_at_test = false;
  std::filesystem::path out_dir = "runs";
  std::uint64_t seed = 1;
  unsigned threads = 1;
  model::ModelConfig model;
  train::TrainConfig train;

  static RunConfig from_preset(const std::string& name) {
    auto p = find_preset(name);
    if (!p) {
      std::string known;
      for (const auto& q : presets()) known += (known.empty() ? "" : ", ") + q.name;
      throw ConfigError("preset", "unknown preset '" + name + "' (known: " + known + ")");
    }
    RunConfig c;
    c.preset = p->name;
    c.train_dir = p->train_dir;
    c.inductive_dir = p->inductive_dir;
    c.model.L = p->L;
    c.model.d = p->d;
    c.model.d_l = p->d_l;
    c.model.transform = model::parse_transform(p->transform);
    c.model.aggregate = model::parse_aggregate(p->aggregate);
    c.train.lr = p->lr;
    c.train.batch_size = p->batch_size;
    c.train.epochs = p->epochs;
    c.train.kind = p->kind;
    c.train.fb_direct_dropout = p->fb_direct_dropout;
    if (const char* root = std::getenv(kDataRootEnv)) c.data_root = root;
    return c;
  }

  static const std::vector<std::string>& keys() {
    static const std::vector<std::string> k{
        "data.root",           "data.train_dir",        "data.inductive_dir",     "data.valid_facts_at_test",
        "run.out_dir",         "run.seed",              "run.threads",            "model.L",
        "model.d",             "model.d_l",             "model.transform",        "model.aggregate",
        "model.include_same_potential", "model.activation", "train.batch_size",  "train.epochs",
        "train.lr",            "train.fb_direct_dropout", "train.clip_norm",      "train.max_train_queries",
        "train.max_valid_queries", "train.time_budget", "train.resume"};
    return k;
  }

  void set(const std::string& key, const std::string& v) {
    if (key == "data.root") data_root = v;
    else if (key == "data.train_dir") train_dir = v;
    else if (key == "data.inductive_dir") inductive_dir = v;
    else if (key == "data.valid_facts_at_test") valid_facts_at_test = parse_bool(key, v);
    else if (key == "run.out_dir") out_dir = v;
    else if (key == "run.seed") seed = parse_uint(key, v);
    else if (key == "run.threads") threads = static_cast<unsigned>(parse_uint(key, v, 1));
    else if (key == "model.L") model.L = static_cast<int>(parse_uint(key, v, 1));
    else if (key == "model.d") model.d = parse_uint(key, v, 1);
    else if (key == "model.d_l") model.d_l = parse_uint(key, v, 1);
    else if (key == "model.transform") model.transform = enum_value(key, v, model::parse_transform);
    else if (key == "model.aggregate") model.aggregate = enum_value(key, v, model::parse_aggregate);
    else if (key == "model.include_same_potential") model.include_same_potential = parse_bool(key, v);
    else if (key == "model.activation") model.activation = enum_value(key, v, model::parse_activation);
    else if (key == "train.batch_size") train.batch_size = parse_uint(key, v, 1);
    else if (key == "train.epochs") train.epochs = static_cast<int>(parse_uint(key, v));
    else if (key == "train.lr") train.lr = parse_positive(key, v);
    else if (key == "train.fb_direct_dropout") train.fb_direct_dropout = parse_bool(key, v);
    else if (key == "train.clip_norm") train.clip_norm = parse_double(key, v);
    else if (key == "train.max_train_queries") train.max_train_queries = parse_uint(key, v);
    else if (key == "train.max_valid_queries") train.max_valid_queries = parse_uint(key, v);
    else if (key == "train.time_budget") train.time_budget = parse_double(key, v);
    else if (key == "train.resume") train.resume = parse_bool(key, v);
    else throw ConfigError(key, "unknown configuration key '" + key + "'");
  }

  void validate() const {
    try {
      model.validate();
    } catch (const std::invalid_argument& e) {
      const std::string w = e.what();
      throw ConfigError(w.substr(0, w.find(' ')), w);
    }
    try {
      train.validate();
    } catch (const std::invalid_argument& e) {
      const std::string w = e.what();
      throw ConfigError(w.substr(0, w.find(' ')), w);
    }
  }

  kg::DatasetPaths dataset_paths() const {
    if (data_root.empty() && !std::filesystem::path(train_dir).is_absolute())
      throw ConfigError("data.root", std::string("dataset root not set; export ") + kDataRootEnv + " or pass --data.root");
    kg::DatasetPaths p;
    p.train_dir = data_root / train_dir;
    if (!inductive_dir.empty()) p.inductive_dir = data_root / inductive_dir;
    return p;
  }

  kg::DatasetOptions dataset_options() const { return {.valid_facts_at_test = valid_facts_at_test}; }

  nlohmann::json to_json() const {
    nlohmann::json j;
    j["preset"] = preset;
    j["data"] = {{"root", data_root.string()},
                 {"train_dir", train_dir},
                 {"inductive_dir", inductive_dir},
                 {"valid_facts_at_test", valid_facts_at_test}};
    j["run"] = {{"out_dir", out_dir.string()}, {"seed", seed}, {"threads", threads}};
    j["model"] = model::to_json(model);
    auto t = train::to_json(train);
    t["resume"] = train.resume;
    j["train"] = t;
    return j;
  }

  /// Copies run-level fields (seed, threads) into the training section.
  train::TrainConfig effective_train() const {
    auto t = train;
    t.seed = seed;
    t.threads = threads;
    t.out_dir = out_dir;
    return t;
  }

 private:
  static std::uint64_t parse_uint(const std::string& key, const std::string& v, std::uint64_t min = 0) {
    std::uint64_t x = 0;
    auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), x);
    if (ec != std::errc() || p != v.data() + v.size())
      throw ConfigError(key, key + ": expected a non-negative integer, got '" + v + "'");
    if (x < min) throw ConfigError(key, key + ": must be >= " + std::to_string(min));
    return x;
  }
  static double parse_double(const std::string& key, const std::string& v) {
    char* end = nullptr;
    const double x = std::strtod(v.c_str(), &end);
    if (v.empty() || end != v.c_str() + v.size()) throw ConfigError(key, key + ": expected a number, got '" + v + "'");
    return x;
  }
  static double parse_positive(const std::string& key, const std::string& v) {
    const double x = parse_double(key, v);
    if (!(x > 0)) throw ConfigError(key, key + ": must be > 0");
    return x;
  }
  static bool parse_bool(const std::string& key, const std::string& v) {
    if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
    if (v == "false" || v == "0" || v == "no" || v == "off") return false;
    throw ConfigError(key, key + ": expected true/false, got '" + v + "'");
  }
  template <class Parse>
  static auto enum_value(const std::string& key, const std::string& v, Parse parse) -> decltype(parse(v)) {
    try {
      return parse(v);
    } catch (const std::invalid_argument& e) {
      throw ConfigError(key, key + ": " + e.what());
    }
  }
};

inline std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

/// Flat key-value text with optional [section] headers; '#' starts a comment.
/// Returns the pairs in file order with section prefixes applied.
inline std::vector<std::pair<std::string, std::string>> read_config_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config", "cannot open config file " + path.string());
  std::vector<std::pair<std::string, std::string>> out;
  std::string line, section;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (auto h = line.find('#'); h != std::string::npos) line.erase(h);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') throw ConfigError("config", path.string() + ":" + std::to_string(lineno) + ": bad section header");
      section = trim(line.substr(1, line.size() - 2));
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError("config", path.string() + ":" + std::to_string(lineno) + ": expected key = value");
    std::string key = trim(line.substr(0, eq));
    if (!section.empty() && key.find('.') == std::string::npos) key = section + "." + key;
    out.emplace_back(key, trim(line.substr(eq + 1)));
  }
  return out;
}

/// Preset defaults, then the config file, then command-line pairs.
inline RunConfig resolve_config(const std::string& preset, const std::optional<std::filesystem::path>& file,
                                const std::vector<std::pair<std::string, std::string>>& overrides) {
  std::vector<std::pair<std::string, std::string>> pairs;
  if (file) pairs = read_config_file(*file);
  std::string name = preset;
  for (const auto& [k, v] : pairs)
    if (k == "preset" || k == "run.preset") name = v;
  for (const auto& [k, v] : overrides)
    if (k == "preset" || k == "run.preset") name = v;
  if (name.empty()) throw ConfigError("preset", "no preset given (use --preset)");
  auto cfg = RunConfig::from_preset(name);
  for (const auto& [k, v] : pairs)
    if (k != "preset" && k != "run.preset") cfg.set(k, v);
  for (const auto& [k, v] : overrides)
    if (k != "preset" && k != "run.preset") cfg.set(k, v);
  cfg.validate();
  return cfg;
}

}  // namespace grape::cli
