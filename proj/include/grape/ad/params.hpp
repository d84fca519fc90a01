#pragma once

#include <cmath>
#include <random>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "grape/ad/tensor.hpp"

namespace grape::ad {

/// Named trainable tensors in registration order.
template <std::floating_point T>
class ParamStore {
 public:
  struct Entry {
    std::string name;
    Tensor<T> tensor;
  };

  Tensor<T> add(std::string name, std::size_t rows, std::size_t cols) {
    for (const auto& e : entries_)
      if (e.name == name) throw std::invalid_argument("duplicate parameter name " + name);
    Tensor<T> t(rows, cols, true);
    entries_.push_back({std::move(name), t});
    return t;
  }

  const std::vector<Entry>& entries() const noexcept { return entries_; }
  std::size_t size() const noexcept { return entries_.size(); }

  const Tensor<T>& find(const std::string& name) const {
    for (const auto& e : entries_)
      if (e.name == name) return e.tensor;
    throw std::out_of_range("no parameter named " + name);
  }

  std::size_t parameter_count() const {
    std::size_t n = 0;
    for (const auto& e : entries_) n += e.tensor.size();
    return n;
  }

  void zero_grad() {
    for (auto& e : entries_) e.tensor.zero_grad();
  }

  double grad_norm() const {
    long double s = 0;
    for (const auto& e : entries_)
      if (e.tensor.has_grad())
        for (T g : e.tensor.grad()) s += static_cast<long double>(g) * g;
    return std::sqrt(static_cast<double>(s));
  }

  /// Scales gradients so their global L2 norm is at most max_norm; returns the norm before.
  double clip_grad_norm(double max_norm) {
    const double n = grad_norm();
    if (n > max_norm && n > 0) {
      const T f = static_cast<T>(max_norm / n);
      for (auto& e : entries_)
        if (e.tensor.has_grad())
          for (T& g : e.tensor.grad_mut()) g *= f;
    }
    return n;
  }

 private:
  std::vector<Entry> entries_;
};

template <std::floating_point T>
void glorot_uniform(Tensor<T>& t, std::mt19937_64& rng) {
  const double a = std::sqrt(6.0 / static_cast<double>(t.rows() + t.cols()));
  std::uniform_real_distribution<double> u(-a, a);
  for (T& v : t.values()) v = static_cast<T>(u(rng));
}

template <std::floating_point T>
void normal_init(Tensor<T>& t, double stddev, std::mt19937_64& rng) {
  std::normal_distribution<double> n(0.0, stddev);
  for (T& v : t.values()) v = static_cast<T>(n(rng));
}

}  // namespace grape::ad
