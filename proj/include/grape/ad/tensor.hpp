#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <concepts>
#include <cstddef>
#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace grape::ad {

class ShapeError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

template <std::floating_point T>
struct Storage {
  std::size_t rows = 0, cols = 0;
  std::vector<T> value;
  std::vector<T> grad;  // allocated on first accumulation
  bool requires_grad = false;

  void ensure_grad() {
    if (grad.size() != value.size()) grad.assign(value.size(), T(0));
  }
};

/// Shared handle to a dense row-major matrix. Vectors are 1 x n, scalars 1 x 1.
template <std::floating_point T>
class Tensor {
 public:
  using value_type = T;

  Tensor() = default;
  Tensor(std::size_t rows, std::size_t cols, bool requires_grad = false)
      : s_(std::make_shared<Storage<T>>()) {
    s_->rows = rows;
    s_->cols = cols;
    s_->value.assign(rows * cols, T(0));
    s_->requires_grad = requires_grad;
  }

  static Tensor zeros(std::size_t rows, std::size_t cols, bool requires_grad = false) {
    return Tensor(rows, cols, requires_grad);
  }
  static Tensor filled(std::size_t rows, std::size_t cols, T v, bool requires_grad = false) {
    Tensor t(rows, cols, requires_grad);
    std::fill(t.s_->value.begin(), t.s_->value.end(), v);
    return t;
  }
  static Tensor from(std::size_t rows, std::size_t cols, std::vector<T> values, bool requires_grad = false) {
    if (values.size() != rows * cols)
      throw ShapeError("tensor data length " + std::to_string(values.size()) + " != " + std::to_string(rows) + "x" +
                       std::to_string(cols));
    Tensor t;
    t.s_ = std::make_shared<Storage<T>>();
    t.s_->rows = rows;
    t.s_->cols = cols;
    t.s_->value = std::move(values);
    t.s_->requires_grad = requires_grad;
    return t;
  }
  static Tensor scalar(T v, bool requires_grad = false) { return from(1, 1, {v}, requires_grad); }

  bool defined() const noexcept { return static_cast<bool>(s_); }
  std::size_t rows() const { return s_->rows; }
  std::size_t cols() const { return s_->cols; }
  std::array<std::size_t, 2> shape() const { return {s_->rows, s_->cols}; }
  std::size_t size() const { return s_->value.size(); }
  bool requires_grad() const { return s_->requires_grad; }
  void set_requires_grad(bool on) { s_->requires_grad = on; }

  std::span<T> values() { return s_->value; }
  std::span<const T> values() const { return s_->value; }
  T* data() { return s_->value.data(); }
  const T* data() const { return s_->value.data(); }
  T& at(std::size_t r, std::size_t c) { return s_->value[r * s_->cols + c]; }
  T at(std::size_t r, std::size_t c) const { return s_->value[r * s_->cols + c]; }
  T item() const {
    if (size() != 1) throw ShapeError("item() on a tensor with " + std::to_string(size()) + " elements");
    return s_->value[0];
  }

  bool has_grad() const { return s_->grad.size() == s_->value.size(); }
  /// Gradient buffer; zeros when nothing was accumulated.
  std::span<const T> grad() const {
    s_->ensure_grad();
    return s_->grad;
  }
  std::span<T> grad_mut() const {
    s_->ensure_grad();
    return s_->grad;
  }
  void zero_grad() { s_->grad.assign(s_->value.size(), T(0)); }

  Storage<T>* storage() const noexcept { return s_.get(); }
  bool same_storage(const Tensor& o) const noexcept { return s_ == o.s_; }

  /// Deep copy without tape history.
  Tensor clone(bool requires_grad = false) const { return from(rows(), cols(), s_->value, requires_grad); }

 private:
  std::shared_ptr<Storage<T>> s_;
};

template <std::floating_point T>
bool all_finite(std::span<const T> xs) {
  for (T x : xs)
    if (!std::isfinite(x)) return false;
  return true;
}

}  // namespace grape::ad
