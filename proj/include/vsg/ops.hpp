#pragma once

#include <cmath>
#include <cstring>

#include "vsg/tensor.hpp"

namespace vsg {

namespace kern {

// C[N,M] += A[N,K] * B[K,M], row-major. ikj order so the inner loop runs
// contiguously over both B and C and vectorizes.
inline void gemm_acc(const float* A, const float* B, float* C, int N, int K, int M) {
  for (int i = 0; i < N; ++i) {
    const float* a = A + static_cast<size_t>(i) * K;
    float* c = C + static_cast<size_t>(i) * M;
    for (int k = 0; k < K; ++k) {
      const float av = a[k];
      const float* b = B + static_cast<size_t>(k) * M;
      for (int j = 0; j < M; ++j) c[j] += av * b[j];
    }
  }
}

inline void transpose(const float* X, float* XT, int rows, int cols) {
  for (int i = 0; i < rows; ++i)
    for (int j = 0; j < cols; ++j)
      XT[static_cast<size_t>(j) * rows + i] = X[static_cast<size_t>(i) * cols + j];
}

}  // namespace kern

namespace detail {
inline void accumulate(const std::shared_ptr<TensorImpl>& p, const float* g, int64_t n) {
  p->ensure_grad();
  float* dst = p->grad.data();
  for (int64_t i = 0; i < n; ++i) dst[i] += g[i];
}
}  // namespace detail

// ---------------------------------------------------------------------------
// Elementwise binary ops (shapes must match exactly).

inline void check_same_shape(const char* op, const Tensor& a, const Tensor& b) {
  VSG_CHECK_SHAPE(same_shape(a.shape(), b.shape()), op, ": shape mismatch ",
                  shape_str(a.shape()), " vs ", shape_str(b.shape()));
}

inline Tensor add(const Tensor& a, const Tensor& b) {
  check_same_shape("add", a, b);
  std::vector<float> out(a.size());
  const float* pa = a.data();
  const float* pb = b.data();
  for (int64_t i = 0; i < a.size(); ++i) out[i] = pa[i] + pb[i];
  return detail::make_op_result(a.shape(), std::move(out), {a, b}, [](TensorImpl& self) {
    self.ensure_grad();
    const float* g = self.grad.data();
    if (self.parents[0]->requires_grad || self.parents[0]->backward_fn)
      detail::accumulate(self.parents[0], g, self.numel());
    if (self.parents[1]->requires_grad || self.parents[1]->backward_fn)
      detail::accumulate(self.parents[1], g, self.numel());
  });
}

inline Tensor sub(const Tensor& a, const Tensor& b) {
  check_same_shape("sub", a, b);
  std::vector<float> out(a.size());
  const float* pa = a.data();
  const float* pb = b.data();
  for (int64_t i = 0; i < a.size(); ++i) out[i] = pa[i] - pb[i];
  return detail::make_op_result(a.shape(), std::move(out), {a, b}, [](TensorImpl& self) {
    self.ensure_grad();
    const float* g = self.grad.data();
    auto& pa = self.parents[0];
    auto& pb = self.parents[1];
    if (pa->requires_grad || pa->backward_fn) detail::accumulate(pa, g, self.numel());
    if (pb->requires_grad || pb->backward_fn) {
      pb->ensure_grad();
      float* dst = pb->grad.data();
      for (int64_t i = 0; i < self.numel(); ++i) dst[i] -= g[i];
    }
  });
}

inline Tensor mul(const Tensor& a, const Tensor& b) {
  check_same_shape("mul", a, b);
  std::vector<float> out(a.size());
  const float* pa = a.data();
  const float* pb = b.data();
  for (int64_t i = 0; i < a.size(); ++i) out[i] = pa[i] * pb[i];
  return detail::make_op_result(a.shape(), std::move(out), {a, b}, [](TensorImpl& self) {
    self.ensure_grad();
    const float* g = self.grad.data();
    auto& pa = self.parents[0];
    auto& pb = self.parents[1];
    if (pa->requires_grad || pa->backward_fn) {
      pa->ensure_grad();
      float* dst = pa->grad.data();
      const float* other = pb->data.data();
      for (int64_t i = 0; i < self.numel(); ++i) dst[i] += g[i] * other[i];
    }
    if (pb->requires_grad || pb->backward_fn) {
      pb->ensure_grad();
      float* dst = pb->grad.data();
      const float* other = pa->data.data();
      for (int64_t i = 0; i < self.numel(); ++i) dst[i] += g[i] * other[i];
    }
  });
}

inline Tensor div(const Tensor& a, const Tensor& b) {
  check_same_shape("div", a, b);
  std::vector<float> out(a.size());
  const float* pa = a.data();
  const float* pb = b.data();
  for (int64_t i = 0; i < a.size(); ++i) out[i] = pa[i] / pb[i];
  return detail::make_op_result(a.shape(), std::move(out), {a, b}, [](TensorImpl& self) {
    self.ensure_grad();
    const float* g = self.grad.data();
    auto& pa = self.parents[0];
    auto& pb = self.parents[1];
    const float* av = pa->data.data();
    const float* bv = pb->data.data();
    if (pa->requires_grad || pa->backward_fn) {
      pa->ensure_grad();
      float* dst = pa->grad.data();
      for (int64_t i = 0; i < self.numel(); ++i) dst[i] += g[i] / bv[i];
    }
    if (pb->requires_grad || pb->backward_fn) {
      pb->ensure_grad();
      float* dst = pb->grad.data();
      for (int64_t i = 0; i < self.numel(); ++i) dst[i] -= g[i] * av[i] / (bv[i] * bv[i]);
    }
  });
}

// y = scale * x + shift
inline Tensor affine(const Tensor& x, float scale, float shift = 0.0f) {
  std::vector<float> out(x.size());
  const float* px = x.data();
  for (int64_t i = 0; i < x.size(); ++i) out[i] = scale * px[i] + shift;
  return detail::make_op_result(x.shape(), std::move(out), {x}, [scale](TensorImpl& self) {
    self.ensure_grad();
    const float* g = self.grad.data();
    auto& p = self.parents[0];
    p->ensure_grad();
    float* dst = p->grad.data();
    for (int64_t i = 0; i < self.numel(); ++i) dst[i] += scale * g[i];
  });
}

inline Tensor neg(const Tensor& x) { return affine(x, -1.0f); }
inline Tensor add_scalar(const Tensor& x, float s) { return affine(x, 1.0f, s); }
inline Tensor mul_scalar(const Tensor& x, float s) { return affine(x, s); }

// ---------------------------------------------------------------------------
// Elementwise unary ops.

namespace detail {
template <class Fwd, class Bwd>
Tensor unary_op(const Tensor& x, Fwd fwd, Bwd bwd /* (x, y, g) -> dx */) {
  std::vector<float> out(x.size());
  const float* px = x.data();
  for (int64_t i = 0; i < x.size(); ++i) out[i] = fwd(px[i]);
  return make_op_result(x.shape(), std::move(out), {x}, [bwd](TensorImpl& self) {
    self.ensure_grad();
    const float* g = self.grad.data();
    auto& p = self.parents[0];
    p->ensure_grad();
    float* dst = p->grad.data();
    const float* xv = p->data.data();
    const float* yv = self.data.data();
    for (int64_t i = 0; i < self.numel(); ++i) dst[i] += bwd(xv[i], yv[i], g[i]);
  });
}
}  // namespace detail

inline Tensor sigmoid(const Tensor& x) {
  return detail::unary_op(
      x, [](float v) { return 1.0f / (1.0f + std::exp(-v)); },
      [](float, float y, float g) { return g * y * (1.0f - y); });
}

inline Tensor tanh_op(const Tensor& x) {
  return detail::unary_op(
      x, [](float v) { return std::tanh(v); },
      [](float, float y, float g) { return g * (1.0f - y * y); });
}

inline Tensor elu(const Tensor& x) {
  return detail::unary_op(
      x, [](float v) { return v > 0.0f ? v : std::expm1(v); },
      [](float v, float y, float g) { return v > 0.0f ? g : g * (y + 1.0f); });
}

inline Tensor softplus(const Tensor& x) {
  return detail::unary_op(
      x,
      [](float v) {
        if (v > 30.0f) return v;
        return std::log1p(std::exp(v));
      },
      [](float v, float, float g) { return g / (1.0f + std::exp(-v)); });
}

inline Tensor exp_op(const Tensor& x) {
  return detail::unary_op(
      x, [](float v) { return std::exp(v); },
      [](float, float y, float g) { return g * y; });
}

inline Tensor log_op(const Tensor& x) {
  return detail::unary_op(
      x, [](float v) { return std::log(v); },
      [](float v, float, float g) { return g / v; });
}

inline Tensor sqrt_op(const Tensor& x) {
  return detail::unary_op(
      x, [](float v) { return std::sqrt(v); },
      [](float, float y, float g) { return 0.5f * g / y; });
}

inline Tensor square(const Tensor& x) {
  return detail::unary_op(
      x, [](float v) { return v * v; },
      [](float v, float, float g) { return 2.0f * g * v; });
}

// Pass-through inside [lo, hi], zero gradient outside.
inline Tensor clamp_op(const Tensor& x, float lo, float hi) {
  return detail::unary_op(
      x, [lo, hi](float v) { return v < lo ? lo : (v > hi ? hi : v); },
      [lo, hi](float v, float, float g) { return (v >= lo && v <= hi) ? g : 0.0f; });
}

// ---------------------------------------------------------------------------
// Matrix ops (rank-2).

inline Tensor matmul(const Tensor& a, const Tensor& b) {
  VSG_CHECK_SHAPE(a.rank() == 2 && b.rank() == 2 && a.dim(1) == b.dim(0),
                  "matmul: incompatible shapes ", shape_str(a.shape()), " x ",
                  shape_str(b.shape()));
  const int n = a.dim(0), k = a.dim(1), m = b.dim(1);
  std::vector<float> out(static_cast<size_t>(n) * m, 0.0f);
  kern::gemm_acc(a.data(), b.data(), out.data(), n, k, m);
  return detail::make_op_result({n, m}, std::move(out), {a, b}, [n, k, m](TensorImpl& self) {
    self.ensure_grad();
    const float* g = self.grad.data();
    auto& pa = self.parents[0];
    auto& pb = self.parents[1];
    if (pa->requires_grad || pa->backward_fn) {
      // dA += g * B^T
      pa->ensure_grad();
      std::vector<float> bt(static_cast<size_t>(k) * m);
      kern::transpose(pb->data.data(), bt.data(), k, m);
      kern::gemm_acc(g, bt.data(), pa->grad.data(), n, m, k);
    }
    if (pb->requires_grad || pb->backward_fn) {
      // dB += A^T * g
      pb->ensure_grad();
      std::vector<float> at(static_cast<size_t>(n) * k);
      kern::transpose(pa->data.data(), at.data(), n, k);
      kern::gemm_acc(at.data(), g, pb->grad.data(), k, n, m);
    }
  });
}

// x: [N, D], b: [D] broadcast over rows.
inline Tensor add_bias(const Tensor& x, const Tensor& b) {
  VSG_CHECK_SHAPE(x.rank() == 2 && b.rank() == 1 && x.dim(1) == b.dim(0),
                  "add_bias: shapes ", shape_str(x.shape()), " and ", shape_str(b.shape()));
  const int n = x.dim(0), d = x.dim(1);
  std::vector<float> out(x.size());
  const float* px = x.data();
  const float* pb = b.data();
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < d; ++j) out[static_cast<size_t>(i) * d + j] = px[static_cast<size_t>(i) * d + j] + pb[j];
  return detail::make_op_result(x.shape(), std::move(out), {x, b}, [n, d](TensorImpl& self) {
    self.ensure_grad();
    const float* g = self.grad.data();
    auto& px = self.parents[0];
    auto& pb = self.parents[1];
    if (px->requires_grad || px->backward_fn) detail::accumulate(px, g, self.numel());
    if (pb->requires_grad || pb->backward_fn) {
      pb->ensure_grad();
      float* dst = pb->grad.data();
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < d; ++j) dst[j] += g[static_cast<size_t>(i) * d + j];
    }
  });
}

// ---------------------------------------------------------------------------
// Shape ops.

inline Tensor reshape(const Tensor& x, Shape new_shape) {
  VSG_CHECK_SHAPE(shape_numel(new_shape) == x.size(), "reshape: ", shape_str(x.shape()),
                  " -> ", shape_str(new_shape), " changes element count");
  std::vector<float> out(x.vec());
  return detail::make_op_result(std::move(new_shape), std::move(out), {x}, [](TensorImpl& self) {
    self.ensure_grad();
    detail::accumulate(self.parents[0], self.grad.data(), self.numel());
  });
}

inline Tensor concat_cols(const std::vector<Tensor>& parts) {
  VSG_CHECK_SHAPE(!parts.empty(), "concat_cols: no inputs");
  const int n = parts[0].dim(0);
  int total = 0;
  for (const auto& p : parts) {
    VSG_CHECK_SHAPE(p.rank() == 2 && p.dim(0) == n, "concat_cols: row mismatch, got ",
                    shape_str(p.shape()), " expected ", n, " rows");
    total += p.dim(1);
  }
  std::vector<float> out(static_cast<size_t>(n) * total);
  int col = 0;
  std::vector<int> widths;
  for (const auto& p : parts) {
    const int d = p.dim(1);
    const float* src = p.data();
    for (int i = 0; i < n; ++i)
      std::memcpy(out.data() + static_cast<size_t>(i) * total + col,
                  src + static_cast<size_t>(i) * d, sizeof(float) * d);
    widths.push_back(d);
    col += d;
  }
  return detail::make_op_result({n, total}, std::move(out), parts,
                                [n, total, widths](TensorImpl& self) {
    self.ensure_grad();
    const float* g = self.grad.data();
    int col = 0;
    for (size_t pi = 0; pi < self.parents.size(); ++pi) {
      auto& p = self.parents[pi];
      const int d = widths[pi];
      if (p->requires_grad || p->backward_fn) {
        p->ensure_grad();
        float* dst = p->grad.data();
        for (int i = 0; i < n; ++i) {
          const float* gs = g + static_cast<size_t>(i) * total + col;
          float* ds = dst + static_cast<size_t>(i) * d;
          for (int j = 0; j < d; ++j) ds[j] += gs[j];
        }
      }
      col += d;
    }
  });
}

inline Tensor concat_cols(const Tensor& a, const Tensor& b) {
  return concat_cols(std::vector<Tensor>{a, b});
}

inline Tensor slice_cols(const Tensor& x, int start, int count) {
  VSG_CHECK_SHAPE(x.rank() == 2 && start >= 0 && start + count <= x.dim(1),
                  "slice_cols: [", start, ",", start + count, ") out of ",
                  shape_str(x.shape()));
  const int n = x.dim(0), d = x.dim(1);
  std::vector<float> out(static_cast<size_t>(n) * count);
  const float* px = x.data();
  for (int i = 0; i < n; ++i)
    std::memcpy(out.data() + static_cast<size_t>(i) * count,
                px + static_cast<size_t>(i) * d + start, sizeof(float) * count);
  return detail::make_op_result({n, count}, std::move(out), {x},
                                [n, d, start, count](TensorImpl& self) {
    self.ensure_grad();
    const float* g = self.grad.data();
    auto& p = self.parents[0];
    p->ensure_grad();
    float* dst = p->grad.data();
    for (int i = 0; i < n; ++i) {
      float* ds = dst + static_cast<size_t>(i) * d + start;
      const float* gs = g + static_cast<size_t>(i) * count;
      for (int j = 0; j < count; ++j) ds[j] += gs[j];
    }
  });
}

// Concat along axis 0; trailing dims must agree.
inline Tensor concat_rows(const std::vector<Tensor>& parts) {
  VSG_CHECK_SHAPE(!parts.empty(), "concat_rows: no inputs");
  Shape tail(parts[0].shape().begin() + 1, parts[0].shape().end());
  const int64_t row = shape_numel(tail);
  int rows_total = 0;
  for (const auto& p : parts) {
    Shape t(p.shape().begin() + 1, p.shape().end());
    VSG_CHECK_SHAPE(t == tail, "concat_rows: trailing shape mismatch ",
                    shape_str(p.shape()), " vs first ", shape_str(parts[0].shape()));
    rows_total += p.dim(0);
  }
  Shape out_shape = parts[0].shape();
  out_shape[0] = rows_total;
  std::vector<float> out(static_cast<size_t>(rows_total) * row);
  size_t off = 0;
  for (const auto& p : parts) {
    std::memcpy(out.data() + off, p.data(), sizeof(float) * p.size());
    off += p.size();
  }
  return detail::make_op_result(std::move(out_shape), std::move(out), parts,
                                [](TensorImpl& self) {
    self.ensure_grad();
    const float* g = self.grad.data();
    size_t off = 0;
    for (auto& p : self.parents) {
      if (p->requires_grad || p->backward_fn) detail::accumulate(p, g + off, p->numel());
      off += p->data.size();
    }
  });
}

inline Tensor slice_rows(const Tensor& x, int start, int count) {
  VSG_CHECK_SHAPE(start >= 0 && start + count <= x.dim(0), "slice_rows: [", start, ",",
                  start + count, ") out of ", shape_str(x.shape()));
  Shape out_shape = x.shape();
  out_shape[0] = count;
  const int64_t row = x.size() / x.dim(0);
  std::vector<float> out(static_cast<size_t>(count) * row);
  std::memcpy(out.data(), x.data() + start * row, sizeof(float) * out.size());
  return detail::make_op_result(std::move(out_shape), std::move(out), {x},
                                [start, row](TensorImpl& self) {
    self.ensure_grad();
    const float* g = self.grad.data();
    auto& p = self.parents[0];
    p->ensure_grad();
    float* dst = p->grad.data() + start * row;
    for (int64_t i = 0; i < self.numel(); ++i) dst[i] += g[i];
  });
}

// ---------------------------------------------------------------------------
// Reductions. Accumulation in double so scalar losses are stable.

inline Tensor sum_all(const Tensor& x) {
  double acc = 0.0;
  const float* px = x.data();
  for (int64_t i = 0; i < x.size(); ++i) acc += px[i];
  return detail::make_op_result({1}, {static_cast<float>(acc)}, {x}, [](TensorImpl& self) {
    self.ensure_grad();
    const float g = self.grad[0];
    auto& p = self.parents[0];
    p->ensure_grad();
    float* dst = p->grad.data();
    for (size_t i = 0; i < p->data.size(); ++i) dst[i] += g;
  });
}

inline Tensor mean_all(const Tensor& x) {
  double acc = 0.0;
  const float* px = x.data();
  for (int64_t i = 0; i < x.size(); ++i) acc += px[i];
  const float inv = 1.0f / static_cast<float>(x.size());
  return detail::make_op_result({1}, {static_cast<float>(acc / static_cast<double>(x.size()))},
                                {x}, [inv](TensorImpl& self) {
    self.ensure_grad();
    const float g = self.grad[0] * inv;
    auto& p = self.parents[0];
    p->ensure_grad();
    float* dst = p->grad.data();
    for (size_t i = 0; i < p->data.size(); ++i) dst[i] += g;
  });
}

// [N, D] -> [N], summing the feature axis.
inline Tensor sum_cols(const Tensor& x) {
  VSG_CHECK_SHAPE(x.rank() == 2, "sum_cols: expects rank-2, got ", shape_str(x.shape()));
  const int n = x.dim(0), d = x.dim(1);
  std::vector<float> out(n);
  const float* px = x.data();
  for (int i = 0; i < n; ++i) {
    double acc = 0.0;
    const float* row = px + static_cast<size_t>(i) * d;
    for (int j = 0; j < d; ++j) acc += row[j];
    out[i] = static_cast<float>(acc);
  }
  return detail::make_op_result({n}, std::move(out), {x}, [n, d](TensorImpl& self) {
    self.ensure_grad();
    const float* g = self.grad.data();
    auto& p = self.parents[0];
    p->ensure_grad();
    float* dst = p->grad.data();
    for (int i = 0; i < n; ++i) {
      const float gi = g[i];
      float* row = dst + static_cast<size_t>(i) * d;
      for (int j = 0; j < d; ++j) row[j] += gi;
    }
  });
}

// ---------------------------------------------------------------------------
// Row softmax, [N, K].

inline Tensor softmax_rows(const Tensor& x) {
  VSG_CHECK_SHAPE(x.rank() == 2, "softmax_rows: expects rank-2, got ", shape_str(x.shape()));
  const int n = x.dim(0), k = x.dim(1);
  std::vector<float> out(x.size());
  const float* px = x.data();
  for (int i = 0; i < n; ++i) {
    const float* row = px + static_cast<size_t>(i) * k;
    float* orow = out.data() + static_cast<size_t>(i) * k;
    float mx = row[0];
    for (int j = 1; j < k; ++j) mx = std::max(mx, row[j]);
    double z = 0.0;
    for (int j = 0; j < k; ++j) {
      orow[j] = std::exp(row[j] - mx);
      z += orow[j];
    }
    const float inv = static_cast<float>(1.0 / z);
    for (int j = 0; j < k; ++j) orow[j] *= inv;
  }
  return detail::make_op_result(x.shape(), std::move(out), {x}, [n, k](TensorImpl& self) {
    self.ensure_grad();
    const float* g = self.grad.data();
    const float* y = self.data.data();
    auto& p = self.parents[0];
    p->ensure_grad();
    float* dst = p->grad.data();
    for (int i = 0; i < n; ++i) {
      const float* gr = g + static_cast<size_t>(i) * k;
      const float* yr = y + static_cast<size_t>(i) * k;
      float* dr = dst + static_cast<size_t>(i) * k;
      double dot = 0.0;
      for (int j = 0; j < k; ++j) dot += static_cast<double>(gr[j]) * yr[j];
      const float d = static_cast<float>(dot);
      for (int j = 0; j < k; ++j) dr[j] += yr[j] * (gr[j] - d);
    }
  });
}

// ---------------------------------------------------------------------------
// Straight-through: forward equals `sample` bit for bit, backward routes the
// incoming gradient unchanged onto `surrogate`.

inline Tensor straight_through(const Tensor& sample, const Tensor& surrogate) {
  check_same_shape("straight_through", sample, surrogate);
  VSG_CHECK(!sample.has_node() && !sample.requires_grad(),
            "straight_through: sample must not carry a gradient path");
  std::vector<float> out(sample.vec());
  return detail::make_op_result(sample.shape(), std::move(out), {sample, surrogate},
                                [](TensorImpl& self) {
    self.ensure_grad();
    auto& sur = self.parents[1];
    if (sur->requires_grad || sur->backward_fn)
      detail::accumulate(sur, self.grad.data(), self.numel());
  });
}

inline Tensor stopgrad(const Tensor& x) { return x.detach(); }

// prev + u * (cand - prev): the gated state mix. Written this way so a hard
// zero gate reproduces prev bit-exactly.
inline Tensor gate_mix(const Tensor& prev, const Tensor& cand, const Tensor& u) {
  return add(prev, mul(u, sub(cand, prev)));
}

}  // namespace vsg
