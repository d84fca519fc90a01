#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "grape/kg/dataset.hpp"

namespace grape::cli {

struct Preset {
  std::string name;
  kg::TaskKind kind;
  int L;
  std::size_t d;
  std::size_t d_l;
  double lr;
  std::size_t batch_size = 16;
  int epochs = 20;
  std::string transform = "distmult";
  std::string aggregate = "pna";
  bool fb_direct_dropout = false;
  /// Directory names under the dataset root.
  std::string train_dir;
  std::string inductive_dir;  // empty for transductive presets
};

inline const std::vector<Preset>& presets() {
  static const std::vector<Preset> all = [] {
    std::vector<Preset> v;
    v.push_back({.name = "fb15k237", .kind = kg::TaskKind::transductive, .L = 3, .d = 64, .d_l = 8, .lr = 5e-3,
                 .fb_direct_dropout = true, .train_dir = "FB15k237"});
    v.push_back({.name = "wn18rr", .kind = kg::TaskKind::transductive, .L = 5, .d = 64, .d_l = 8, .lr = 5e-3,
                 .train_dir = "WN18RR"});
    for (int k = 1; k <= 4; ++k) {
      const auto s = std::to_string(k);
      v.push_back({.name = "fb15k237-v" + s, .kind = kg::TaskKind::inductive, .L = 4, .d = 32, .d_l = 8, .lr = 5e-4,
                   .train_dir = "fb237_v" + s, .inductive_dir = "fb237_v" + s + "_ind"});
      v.push_back({.name = "wn18rr-v" + s, .kind = kg::TaskKind::inductive, .L = 5, .d = 32, .d_l = 8, .lr = 5e-4,
                   .train_dir = "WN18RR_v" + s, .inductive_dir = "WN18RR_v" + s + "_ind"});
      v.push_back({.name = "nell995-v" + s, .kind = kg::TaskKind::inductive, .L = 5, .d = 32, .d_l = 8, .lr = 5e-4,
                   .train_dir = "nell_v" + s, .inductive_dir = "nell_v" + s + "_ind"});
    }
    return v;
  }();
  return all;
}

inline std::optional<Preset> find_preset(const std::string& name) {
  for (const auto& p : presets())
    if (p.name == name) return p;
  return std::nullopt;
}

}  // namespace grape::cli
