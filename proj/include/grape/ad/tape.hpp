#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "grape/ad/tensor.hpp"

namespace grape::ad {

enum class SegmentMode { sum, mean, std };

inline constexpr double kStdEpsilon = 1e-6;

/// Eager op recorder. Every op computes its value immediately; when recording, it also
/// pushes a closure that propagates the output gradient to its inputs. backward() runs the
/// closures in reverse order of execution, so each recorded node is visited once.
template <std::floating_point T>
class Tape {
 public:
  using Tensor = ad::Tensor<T>;

  explicit Tape(bool recording = true) : recording_(recording) {}
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  bool recording() const noexcept { return recording_; }
  std::size_t size() const noexcept { return nodes_.size(); }

  void backward(const Tensor& loss) {
    if (loss.size() != 1) throw ShapeError("backward() needs a scalar loss, got " + shape_str(loss));
    if (!recording_) throw std::logic_error("backward() on a non-recording tape");
    auto* s = loss.storage();
    s->ensure_grad();
    s->grad[0] += T(1);
    for (auto it = nodes_.rbegin(); it != nodes_.rend(); ++it) (*it)();
    nodes_.clear();
  }

  // ---- dense ops -------------------------------------------------------------------

  Tensor matmul(const Tensor& a, const Tensor& b) {
    if (a.cols() != b.rows()) throw ShapeError("matmul " + shape_str(a) + " x " + shape_str(b));
    const std::size_t n = a.rows(), k = a.cols(), m = b.cols();
    Tensor out = make(n, m, {a, b});
    const T* A = a.data();
    const T* B = b.data();
    T* C = out.data();
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t p = 0; p < k; ++p) {
        const T aip = A[i * k + p];
        if (aip == T(0)) continue;
        const T* brow = B + p * m;
        T* crow = C + i * m;
        for (std::size_t j = 0; j < m; ++j) crow[j] += aip * brow[j];
      }
    record(out, [a, b, out, n, k, m]() mutable {
      const T* G = out.storage()->grad.data();
      if (a.requires_grad()) {
        T* dA = a.grad_mut().data();
        const T* Bv = b.data();
        for (std::size_t i = 0; i < n; ++i)
          for (std::size_t p = 0; p < k; ++p) {
            T s = 0;
            for (std::size_t j = 0; j < m; ++j) s += G[i * m + j] * Bv[p * m + j];
            dA[i * k + p] += s;
          }
      }
      if (b.requires_grad()) {
        T* dB = b.grad_mut().data();
        const T* Av = a.data();
        for (std::size_t i = 0; i < n; ++i)
          for (std::size_t p = 0; p < k; ++p) {
            const T aip = Av[i * k + p];
            if (aip == T(0)) continue;
            for (std::size_t j = 0; j < m; ++j) dB[p * m + j] += aip * G[i * m + j];
          }
      }
    });
    return check(out, "matmul");
  }

  Tensor add(const Tensor& a, const Tensor& b) { return binary(a, b, "add", T(1), T(1)); }
  Tensor sub(const Tensor& a, const Tensor& b) { return binary(a, b, "sub", T(1), T(-1)); }

  Tensor hadamard(const Tensor& a, const Tensor& b) {
    same_shape(a, b, "hadamard");
    Tensor out = make(a.rows(), a.cols(), {a, b});
    for (std::size_t i = 0; i < out.size(); ++i) out.data()[i] = a.data()[i] * b.data()[i];
    record(out, [a, b, out]() mutable {
      const T* G = out.storage()->grad.data();
      if (a.requires_grad()) {
        T* d = a.grad_mut().data();
        for (std::size_t i = 0; i < out.size(); ++i) d[i] += G[i] * b.data()[i];
      }
      if (b.requires_grad()) {
        T* d = b.grad_mut().data();
        for (std::size_t i = 0; i < out.size(); ++i) d[i] += G[i] * a.data()[i];
      }
    });
    return check(out, "hadamard");
  }

  Tensor scale(const Tensor& a, T c) {
    Tensor out = make(a.rows(), a.cols(), {a});
    for (std::size_t i = 0; i < out.size(); ++i) out.data()[i] = c * a.data()[i];
    record(out, [a, out, c]() mutable {
      const T* G = out.storage()->grad.data();
      T* d = a.grad_mut().data();
      for (std::size_t i = 0; i < out.size(); ++i) d[i] += c * G[i];
    });
    return check(out, "scale");
  }

  Tensor relu(const Tensor& a) {
    Tensor out = make(a.rows(), a.cols(), {a});
    for (std::size_t i = 0; i < out.size(); ++i) out.data()[i] = a.data()[i] > T(0) ? a.data()[i] : T(0);
    record(out, [a, out]() mutable {
      const T* G = out.storage()->grad.data();
      T* d = a.grad_mut().data();
      for (std::size_t i = 0; i < out.size(); ++i)
        if (a.data()[i] > T(0)) d[i] += G[i];
    });
    return out;
  }

  Tensor tanh(const Tensor& a) {
    Tensor out = make(a.rows(), a.cols(), {a});
    for (std::size_t i = 0; i < out.size(); ++i) out.data()[i] = std::tanh(a.data()[i]);
    record(out, [a, out]() mutable {
      const T* G = out.storage()->grad.data();
      T* d = a.grad_mut().data();
      for (std::size_t i = 0; i < out.size(); ++i) {
        const T y = out.data()[i];
        d[i] += G[i] * (T(1) - y * y);
      }
    });
    return out;
  }

  /// a (n x m) + b (1 x m) broadcast over rows.
  Tensor add_bias(const Tensor& a, const Tensor& b) {
    if (b.rows() != 1 || b.cols() != a.cols()) throw ShapeError("add_bias " + shape_str(a) + " + " + shape_str(b));
    const std::size_t n = a.rows(), m = a.cols();
    Tensor out = make(n, m, {a, b});
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < m; ++j) out.data()[i * m + j] = a.data()[i * m + j] + b.data()[j];
    record(out, [a, b, out, n, m]() mutable {
      const T* G = out.storage()->grad.data();
      if (a.requires_grad()) {
        T* d = a.grad_mut().data();
        for (std::size_t i = 0; i < n * m; ++i) d[i] += G[i];
      }
      if (b.requires_grad()) {
        T* d = b.grad_mut().data();
        for (std::size_t i = 0; i < n; ++i)
          for (std::size_t j = 0; j < m; ++j) d[j] += G[i * m + j];
      }
    });
    return check(out, "add_bias");
  }

  /// Multiplies row i by the constant s[i].
  Tensor row_scale(const Tensor& a, std::span<const T> s) {
    if (s.size() != a.rows()) throw ShapeError("row_scale: " + std::to_string(s.size()) + " factors for " + shape_str(a));
    const std::size_t n = a.rows(), m = a.cols();
    Tensor out = make(n, m, {a});
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < m; ++j) out.data()[i * m + j] = a.data()[i * m + j] * s[i];
    std::vector<T> f(s.begin(), s.end());
    record(out, [a, out, f = std::move(f), n, m]() mutable {
      const T* G = out.storage()->grad.data();
      T* d = a.grad_mut().data();
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < m; ++j) d[i * m + j] += G[i * m + j] * f[i];
    });
    return check(out, "row_scale");
  }

  /// Concatenation along the column axis.
  Tensor concat(const std::vector<Tensor>& parts) {
    if (parts.empty()) throw ShapeError("concat of nothing");
    const std::size_t n = parts.front().rows();
    std::size_t m = 0;
    for (const auto& p : parts) {
      if (p.rows() != n) throw ShapeError("concat: row mismatch " + shape_str(p));
      m += p.cols();
    }
    Tensor out = make(n, m, parts);
    std::size_t off = 0;
    for (const auto& p : parts) {
      const std::size_t c = p.cols();
      for (std::size_t i = 0; i < n; ++i) std::copy_n(p.data() + i * c, c, out.data() + i * m + off);
      off += c;
    }
    record(out, [parts, out, n, m]() mutable {
      const T* G = out.storage()->grad.data();
      std::size_t off = 0;
      for (auto& p : parts) {
        const std::size_t c = p.cols();
        if (p.requires_grad()) {
          T* d = p.grad_mut().data();
          for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < c; ++j) d[i * c + j] += G[i * m + off + j];
        }
        off += c;
      }
    });
    return out;
  }
  Tensor concat(const Tensor& a, const Tensor& b) { return concat(std::vector<Tensor>{a, b}); }

  /// Rows of a selected by idx (repeats allowed).
  Tensor gather(const Tensor& a, std::span<const std::int32_t> idx) {
    const std::size_t m = a.cols(), n = idx.size();
    for (auto i : idx)
      if (i < 0 || static_cast<std::size_t>(i) >= a.rows())
        throw ShapeError("gather index " + std::to_string(i) + " out of " + shape_str(a));
    Tensor out = make(n, m, {a});
    for (std::size_t r = 0; r < n; ++r) std::copy_n(a.data() + static_cast<std::size_t>(idx[r]) * m, m, out.data() + r * m);
    std::vector<std::int32_t> ix(idx.begin(), idx.end());
    record(out, [a, out, ix = std::move(ix), m]() mutable {
      const T* G = out.storage()->grad.data();
      T* d = a.grad_mut().data();
      for (std::size_t r = 0; r < ix.size(); ++r) {
        T* row = d + static_cast<std::size_t>(ix[r]) * m;
        for (std::size_t j = 0; j < m; ++j) row[j] += G[r * m + j];
      }
    });
    return out;
  }
  Tensor gather(const Tensor& a, std::span<const std::uint32_t> idx) {
    std::vector<std::int32_t> ix(idx.begin(), idx.end());
    return gather(a, std::span<const std::int32_t>(ix));
  }

  /// out (n x m) with out[idx[i]] += a[i].
  Tensor index_add(const Tensor& a, std::span<const std::int32_t> idx, std::size_t n) {
    return segment_reduce(a, idx, n, SegmentMode::sum, {});
  }

  /// Reduces rows of `a` into `num_segments` buckets given by seg[i]. mean and std divide by
  /// denom[s] instead of the bucket size. Empty buckets produce zeros.
  Tensor segment_reduce(const Tensor& a, std::span<const std::int32_t> seg, std::size_t num_segments, SegmentMode mode,
                        std::span<const T> denom) {
    if (seg.size() != a.rows()) throw ShapeError("segment_reduce: ids length != rows of " + shape_str(a));
    if (mode != SegmentMode::sum && denom.size() != num_segments)
      throw ShapeError("segment_reduce: need one denominator per segment");
    const std::size_t m = a.cols();
    for (auto s : seg)
      if (s < 0 || static_cast<std::size_t>(s) >= num_segments) throw ShapeError("segment id out of range");
    Tensor out = make(num_segments, m, {a});
    T* O = out.data();
    const T* A = a.data();
    std::vector<std::uint32_t> count(num_segments, 0);
    for (std::size_t i = 0; i < seg.size(); ++i) {
      ++count[static_cast<std::size_t>(seg[i])];
      T* o = O + static_cast<std::size_t>(seg[i]) * m;
      for (std::size_t j = 0; j < m; ++j) o[j] += A[i * m + j];
    }
    std::vector<T> mu;  // std mode keeps mean for backward
    if (mode == SegmentMode::mean) {
      for (std::size_t s = 0; s < num_segments; ++s)
        for (std::size_t j = 0; j < m; ++j) O[s * m + j] /= denom[s];
    } else if (mode == SegmentMode::std) {
      mu.assign(O, O + num_segments * m);
      std::vector<T> sq(num_segments * m, T(0));
      for (std::size_t i = 0; i < seg.size(); ++i) {
        T* q = sq.data() + static_cast<std::size_t>(seg[i]) * m;
        for (std::size_t j = 0; j < m; ++j) q[j] += A[i * m + j] * A[i * m + j];
      }
      for (std::size_t s = 0; s < num_segments; ++s)
        for (std::size_t j = 0; j < m; ++j) {
          const std::size_t k = s * m + j;
          if (count[s] == 0) {
            O[k] = 0;
            mu[k] = 0;
            continue;
          }
          mu[k] /= denom[s];
          const T var = sq[k] / denom[s] - mu[k] * mu[k];
          O[k] = std::sqrt(std::max(var, T(0)) + T(kStdEpsilon));
          if (var <= T(0)) mu[k] = std::numeric_limits<T>::quiet_NaN();  // marks a clamped entry
        }
    }
    std::vector<std::int32_t> ids(seg.begin(), seg.end());
    std::vector<T> den(denom.begin(), denom.end());
    record(out, [a, out, ids = std::move(ids), den = std::move(den), mu = std::move(mu), mode, m]() mutable {
      const T* G = out.storage()->grad.data();
      T* d = a.grad_mut().data();
      const T* A = a.data();
      const T* O = out.data();
      for (std::size_t i = 0; i < ids.size(); ++i) {
        const auto s = static_cast<std::size_t>(ids[i]);
        for (std::size_t j = 0; j < m; ++j) {
          const std::size_t k = s * m + j;
          switch (mode) {
            case SegmentMode::sum: d[i * m + j] += G[k]; break;
            case SegmentMode::mean: d[i * m + j] += G[k] / den[s]; break;
            case SegmentMode::std:
              if (!std::isnan(mu[k])) d[i * m + j] += G[k] * (A[i * m + j] - mu[k]) / (den[s] * O[k]);
              break;
          }
        }
      }
    });
    return check(out, "segment_reduce");
  }

  /// Log-sum-exp over columns (axis 1, result n x 1) or rows (axis 0, result 1 x m).
  Tensor logsumexp(const Tensor& a, int axis) {
    if (axis != 0 && axis != 1) throw ShapeError("logsumexp axis must be 0 or 1");
    const std::size_t n = a.rows(), m = a.cols();
    const std::size_t outer = axis == 1 ? n : m, inner = axis == 1 ? m : n;
    auto at = [m, axis](std::size_t o, std::size_t i) { return axis == 1 ? o * m + i : i * m + o; };
    Tensor out = axis == 1 ? make(n, 1, {a}) : make(1, m, {a});
    for (std::size_t o = 0; o < outer; ++o) {
      T mx = -std::numeric_limits<T>::infinity();
      for (std::size_t i = 0; i < inner; ++i) mx = std::max(mx, a.data()[at(o, i)]);
      if (!std::isfinite(mx)) {
        out.data()[o] = mx;
        continue;
      }
      T s = 0;
      for (std::size_t i = 0; i < inner; ++i) s += std::exp(a.data()[at(o, i)] - mx);
      out.data()[o] = mx + std::log(s);
    }
    record(out, [a, out, outer, inner, at]() mutable {
      const T* G = out.storage()->grad.data();
      T* d = a.grad_mut().data();
      for (std::size_t o = 0; o < outer; ++o) {
        const T l = out.data()[o];
        if (!std::isfinite(l)) continue;
        for (std::size_t i = 0; i < inner; ++i) d[at(o, i)] += G[o] * std::exp(a.data()[at(o, i)] - l);
      }
    });
    return out;
  }

  /// Per-segment log-sum-exp of a column vector (k x 1) -> (num_segments x 1);
  /// empty segments give -inf.
  Tensor segment_logsumexp(const Tensor& a, std::span<const std::int32_t> seg, std::size_t num_segments) {
    if (a.cols() != 1 || seg.size() != a.rows()) throw ShapeError("segment_logsumexp expects k x 1 values");
    Tensor out = make(num_segments, 1, {a});
    std::vector<T> mx(num_segments, -std::numeric_limits<T>::infinity());
    for (std::size_t i = 0; i < seg.size(); ++i) {
      if (seg[i] < 0 || static_cast<std::size_t>(seg[i]) >= num_segments) throw ShapeError("segment id out of range");
      mx[static_cast<std::size_t>(seg[i])] = std::max(mx[static_cast<std::size_t>(seg[i])], a.data()[i]);
    }
    std::vector<T> s(num_segments, T(0));
    for (std::size_t i = 0; i < seg.size(); ++i) {
      const auto k = static_cast<std::size_t>(seg[i]);
      if (std::isfinite(mx[k])) s[k] += std::exp(a.data()[i] - mx[k]);
    }
    for (std::size_t k = 0; k < num_segments; ++k) out.data()[k] = std::isfinite(mx[k]) ? mx[k] + std::log(s[k]) : mx[k];
    std::vector<std::int32_t> ids(seg.begin(), seg.end());
    record(out, [a, out, ids = std::move(ids)]() mutable {
      const T* G = out.storage()->grad.data();
      T* d = a.grad_mut().data();
      for (std::size_t i = 0; i < ids.size(); ++i) {
        const T l = out.data()[static_cast<std::size_t>(ids[i])];
        if (std::isfinite(l)) d[i] += G[ids[i]] * std::exp(a.data()[i] - l);
      }
    });
    return out;
  }

  /// Rotates each coordinate pair of e by the angle of the matching pair of r, after
  /// normalising that pair to unit length.
  Tensor rotate_pairs(const Tensor& e, const Tensor& r) {
    same_shape(e, r, "rotate_pairs");
    if (e.cols() % 2) throw ShapeError("rotate_pairs needs an even width, got " + shape_str(e));
    constexpr T eps = T(1e-12);
    Tensor out = make(e.rows(), e.cols(), {e, r});
    const std::size_t pairs = e.size() / 2;
    for (std::size_t p = 0; p < pairs; ++p) {
      const T a = r.data()[2 * p], b = r.data()[2 * p + 1];
      const T nrm = std::sqrt(a * a + b * b + eps);
      const T c = a / nrm, s = b / nrm;
      const T x = e.data()[2 * p], y = e.data()[2 * p + 1];
      out.data()[2 * p] = c * x - s * y;
      out.data()[2 * p + 1] = s * x + c * y;
    }
    record(out, [e, r, out, pairs]() mutable {
      const T* G = out.storage()->grad.data();
      T* de = e.requires_grad() ? e.grad_mut().data() : nullptr;
      T* dr = r.requires_grad() ? r.grad_mut().data() : nullptr;
      for (std::size_t p = 0; p < pairs; ++p) {
        const T a = r.data()[2 * p], b = r.data()[2 * p + 1];
        const T n2 = a * a + b * b + eps, nrm = std::sqrt(n2), n3 = n2 * nrm;
        const T c = a / nrm, s = b / nrm;
        const T x = e.data()[2 * p], y = e.data()[2 * p + 1];
        const T g0 = G[2 * p], g1 = G[2 * p + 1];
        if (de) {
          de[2 * p] += g0 * c + g1 * s;
          de[2 * p + 1] += -g0 * s + g1 * c;
        }
        if (dr) {
          const T dc = g0 * x + g1 * y, ds = -g0 * y + g1 * x;
          dr[2 * p] += dc * (n2 - a * a) / n3 - ds * a * b / n3;
          dr[2 * p + 1] += -dc * a * b / n3 + ds * (n2 - b * b) / n3;
        }
      }
    });
    return out;
  }

  Tensor sum(const Tensor& a) {
    Tensor out = make(1, 1, {a});
    T s = 0;
    for (T v : a.values()) s += v;
    out.data()[0] = s;
    record(out, [a, out]() mutable {
      const T g = out.storage()->grad[0];
      T* d = a.grad_mut().data();
      for (std::size_t i = 0; i < a.size(); ++i) d[i] += g;
    });
    return out;
  }

  static std::string shape_str(const Tensor& t) { return std::to_string(t.rows()) + "x" + std::to_string(t.cols()); }

 private:
  Tensor make(std::size_t rows, std::size_t cols, std::initializer_list<Tensor> inputs) {
    bool rg = false;
    if (recording_)
      for (const auto& t : inputs) rg = rg || t.requires_grad();
    return Tensor(rows, cols, rg);
  }
  Tensor make(std::size_t rows, std::size_t cols, const std::vector<Tensor>& inputs) {
    bool rg = false;
    if (recording_)
      for (const auto& t : inputs) rg = rg || t.requires_grad();
    return Tensor(rows, cols, rg);
  }

  template <class Fn>
  void record(const Tensor& out, Fn&& fn) {
    if (!recording_ || !out.requires_grad()) return;
    nodes_.emplace_back([out, f = std::forward<Fn>(fn)]() mutable {
      if (!out.has_grad()) return;  // no gradient reached this node
      f();
    });
  }

  static void same_shape(const Tensor& a, const Tensor& b, const char* op) {
    if (a.rows() != b.rows() || a.cols() != b.cols())
      throw ShapeError(std::string(op) + ": " + shape_str(a) + " vs " + shape_str(b));
  }

  Tensor binary(const Tensor& a, const Tensor& b, const char* op, T ca, T cb) {
    same_shape(a, b, op);
    Tensor out = make(a.rows(), a.cols(), {a, b});
    for (std::size_t i = 0; i < out.size(); ++i) out.data()[i] = ca * a.data()[i] + cb * b.data()[i];
    record(out, [a, b, out, ca, cb]() mutable {
      const T* G = out.storage()->grad.data();
      if (a.requires_grad()) {
        T* d = a.grad_mut().data();
        for (std::size_t i = 0; i < out.size(); ++i) d[i] += ca * G[i];
      }
      if (b.requires_grad()) {
        T* d = b.grad_mut().data();
        for (std::size_t i = 0; i < out.size(); ++i) d[i] += cb * G[i];
      }
    });
    return check(out, op);
  }

  static Tensor check([[maybe_unused]] Tensor t, [[maybe_unused]] const char* op) {
#ifndef NDEBUG
    if (!all_finite<T>(t.values())) throw std::domain_error(std::string("non-finite value after ") + op);
#endif
    return t;
  }

  bool recording_;
  std::vector<std::function<void()>> nodes_;
};

}  // namespace grape::ad
