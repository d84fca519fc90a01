#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "grape/ad/params.hpp"

namespace grape::ad {

struct AdamConfig {
  double lr = 5e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

class NonFiniteGradient : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

template <std::floating_point T>
struct AdamState {
  std::vector<std::vector<T>> m, v;
  std::uint64_t step = 0;

  void ensure(const ParamStore<T>& params) {
    if (m.size() == params.size()) return;
    if (!m.empty()) throw std::invalid_argument("Adam state does not match the parameter set");
    for (const auto& e : params.entries()) {
      m.emplace_back(e.tensor.size(), T(0));
      v.emplace_back(e.tensor.size(), T(0));
    }
  }
};

/// One bias-corrected Adam update. Gradients are checked first; a NaN/Inf gradient throws
/// before any parameter or moment changes.
template <std::floating_point T>
void adam_step(ParamStore<T>& params, AdamState<T>& state, const AdamConfig& cfg) {
  state.ensure(params);
  for (const auto& e : params.entries())
    if (e.tensor.has_grad() && !all_finite<T>(e.tensor.grad()))
      throw NonFiniteGradient("non-finite gradient in parameter " + e.name);
  ++state.step;
  const double t = static_cast<double>(state.step);
  const double bc1 = 1.0 - std::pow(cfg.beta1, t), bc2 = 1.0 - std::pow(cfg.beta2, t);
  for (std::size_t p = 0; p < params.size(); ++p) {
    auto tensor = params.entries()[p].tensor;
    if (!tensor.has_grad()) continue;
    auto w = tensor.values();
    auto g = tensor.grad();
    auto& m = state.m[p];
    auto& v = state.v[p];
    for (std::size_t i = 0; i < w.size(); ++i) {
      const double gi = g[i];
      const double mi = cfg.beta1 * m[i] + (1.0 - cfg.beta1) * gi;
      const double vi = cfg.beta2 * v[i] + (1.0 - cfg.beta2) * gi * gi;
      m[i] = static_cast<T>(mi);
      v[i] = static_cast<T>(vi);
      const double step = cfg.lr * (mi / bc1) / (std::sqrt(vi / bc2) + cfg.eps);
      w[i] = static_cast<T>(w[i] - step);
    }
  }
}

}  // namespace grape::ad
