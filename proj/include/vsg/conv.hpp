#pragma once

#include "vsg/ops.hpp"

namespace vsg {

namespace kern {

// Patch matrix for one sample, rows = OH*OW, cols = C*kh*kw.
inline void im2col(const float* img, int c, int h, int w, int kh, int kw, int stride,
                   int pad, int oh, int ow, float* cols) {
  const int q = c * kh * kw;
  for (int oy = 0; oy < oh; ++oy) {
    for (int ox = 0; ox < ow; ++ox) {
      float* row = cols + (static_cast<size_t>(oy) * ow + ox) * q;
      for (int ci = 0; ci < c; ++ci) {
        const float* plane = img + static_cast<size_t>(ci) * h * w;
        for (int ky = 0; ky < kh; ++ky) {
          const int iy = oy * stride - pad + ky;
          for (int kx = 0; kx < kw; ++kx) {
            const int ix = ox * stride - pad + kx;
            row[(ci * kh + ky) * kw + kx] =
                (iy >= 0 && iy < h && ix >= 0 && ix < w)
                    ? plane[static_cast<size_t>(iy) * w + ix]
                    : 0.0f;
          }
        }
      }
    }
  }
}

// Adjoint of im2col: scatter-add patch rows back into the image.
inline void col2im_add(const float* cols, int c, int h, int w, int kh, int kw, int stride,
                       int pad, int oh, int ow, float* img) {
  const int q = c * kh * kw;
  for (int oy = 0; oy < oh; ++oy) {
    for (int ox = 0; ox < ow; ++ox) {
      const float* row = cols + (static_cast<size_t>(oy) * ow + ox) * q;
      for (int ci = 0; ci < c; ++ci) {
        float* plane = img + static_cast<size_t>(ci) * h * w;
        for (int ky = 0; ky < kh; ++ky) {
          const int iy = oy * stride - pad + ky;
          if (iy < 0 || iy >= h) continue;
          for (int kx = 0; kx < kw; ++kx) {
            const int ix = ox * stride - pad + kx;
            if (ix < 0 || ix >= w) continue;
            plane[static_cast<size_t>(iy) * w + ix] += row[(ci * kh + ky) * kw + kx];
          }
        }
      }
    }
  }
}

}  // namespace kern

// x: [N, Ci, H, W], w: [Co, Ci, kh, kw], b: [Co].
inline Tensor conv2d(const Tensor& x, const Tensor& w, const Tensor& b, int stride, int pad) {
  VSG_CHECK_SHAPE(x.rank() == 4 && w.rank() == 4 && b.rank() == 1,
                  "conv2d: ranks for x", shape_str(x.shape()), " w", shape_str(w.shape()),
                  " b", shape_str(b.shape()));
  VSG_CHECK_SHAPE(x.dim(1) == w.dim(1), "conv2d: channel mismatch x", shape_str(x.shape()),
                  " vs w", shape_str(w.shape()));
  VSG_CHECK_SHAPE(w.dim(0) == b.dim(0), "conv2d: bias size ", shape_str(b.shape()),
                  " for weight ", shape_str(w.shape()));
  const int n = x.dim(0), ci = x.dim(1), h = x.dim(2), ww = x.dim(3);
  const int co = w.dim(0), kh = w.dim(2), kw = w.dim(3);
  const int oh = (h + 2 * pad - kh) / stride + 1;
  const int ow = (ww + 2 * pad - kw) / stride + 1;
  VSG_CHECK_SHAPE(oh > 0 && ow > 0, "conv2d: kernel ", kh, "x", kw, " too large for input ",
                  shape_str(x.shape()));
  const int p = oh * ow, q = ci * kh * kw;

  std::vector<float> out(static_cast<size_t>(n) * co * p);
  std::vector<float> cols(static_cast<size_t>(p) * q);
  std::vector<float> wt(static_cast<size_t>(q) * co);
  kern::transpose(w.data(), wt.data(), co, q);
  std::vector<float> tmp(static_cast<size_t>(p) * co);
  const float* pb = b.data();
  for (int s = 0; s < n; ++s) {
    kern::im2col(x.data() + static_cast<size_t>(s) * ci * h * ww, ci, h, ww, kh, kw,
                 stride, pad, oh, ow, cols.data());
    std::fill(tmp.begin(), tmp.end(), 0.0f);
    kern::gemm_acc(cols.data(), wt.data(), tmp.data(), p, q, co);
    float* dst = out.data() + static_cast<size_t>(s) * co * p;
    for (int j = 0; j < co; ++j) {
      const float bj = pb[j];
      for (int i = 0; i < p; ++i) dst[static_cast<size_t>(j) * p + i] = tmp[static_cast<size_t>(i) * co + j] + bj;
    }
  }

  auto backward = [n, ci, h, ww, co, kh, kw, stride, pad, oh, ow, p, q](TensorImpl& self) {
    self.ensure_grad();
    auto& px = self.parents[0];
    auto& pw = self.parents[1];
    auto& pbias = self.parents[2];
    const bool need_x = px->requires_grad || px->backward_fn;
    const bool need_w = pw->requires_grad || pw->backward_fn;
    const bool need_b = pbias->requires_grad || pbias->backward_fn;
    if (need_x) px->ensure_grad();
    if (need_w) pw->ensure_grad();
    if (need_b) pbias->ensure_grad();
    std::vector<float> cols(static_cast<size_t>(p) * q);
    std::vector<float> gtmp(static_cast<size_t>(p) * co);
    std::vector<float> dcols(static_cast<size_t>(p) * q);
    for (int s = 0; s < n; ++s) {
      const float* gout = self.grad.data() + static_cast<size_t>(s) * co * p;  // [co, p]
      if (need_w || need_x)
        kern::im2col(px->data.data() + static_cast<size_t>(s) * ci * h * ww, ci, h, ww,
                     kh, kw, stride, pad, oh, ow, cols.data());
      if (need_w)  // dW [co,q] += gout [co,p] * cols [p,q]
        kern::gemm_acc(gout, cols.data(), pw->grad.data(), co, p, q);
      if (need_b) {
        float* db = pbias->grad.data();
        for (int j = 0; j < co; ++j) {
          double acc = 0.0;
          const float* grow = gout + static_cast<size_t>(j) * p;
          for (int i = 0; i < p; ++i) acc += grow[i];
          db[j] += static_cast<float>(acc);
        }
      }
      if (need_x) {
        kern::transpose(gout, gtmp.data(), co, p);  // -> [p, co]
        std::fill(dcols.begin(), dcols.end(), 0.0f);
        kern::gemm_acc(gtmp.data(), pw->data.data(), dcols.data(), p, co, q);
        kern::col2im_add(dcols.data(), ci, h, ww, kh, kw, stride, pad, oh, ow,
                         px->grad.data() + static_cast<size_t>(s) * ci * h * ww);
      }
    }
  };
  return detail::make_op_result({n, co, oh, ow}, std::move(out), {x, w, b}, backward);
}

// x: [N, Ci, H, W], w: [Ci, Co, kh, kw], b: [Co].
// Output spatial extent: (H-1)*stride - 2*pad + kh.
inline Tensor conv_transpose2d(const Tensor& x, const Tensor& w, const Tensor& b, int stride,
                               int pad) {
  VSG_CHECK_SHAPE(x.rank() == 4 && w.rank() == 4 && b.rank() == 1,
                  "conv_transpose2d: ranks for x", shape_str(x.shape()), " w",
                  shape_str(w.shape()), " b", shape_str(b.shape()));
  VSG_CHECK_SHAPE(x.dim(1) == w.dim(0), "conv_transpose2d: channel mismatch x",
                  shape_str(x.shape()), " vs w", shape_str(w.shape()));
  VSG_CHECK_SHAPE(w.dim(1) == b.dim(0), "conv_transpose2d: bias size ", shape_str(b.shape()),
                  " for weight ", shape_str(w.shape()));
  const int n = x.dim(0), ci = x.dim(1), h = x.dim(2), ww = x.dim(3);
  const int co = w.dim(1), kh = w.dim(2), kw = w.dim(3);
  const int oh = (h - 1) * stride - 2 * pad + kh;
  const int ow = (ww - 1) * stride - 2 * pad + kw;
  VSG_CHECK_SHAPE(oh > 0 && ow > 0, "conv_transpose2d: degenerate output for input ",
                  shape_str(x.shape()));
  const int p = h * ww, q = co * kh * kw;

  std::vector<float> out(static_cast<size_t>(n) * co * oh * ow, 0.0f);
  std::vector<float> xt(static_cast<size_t>(p) * ci);
  std::vector<float> cols(static_cast<size_t>(p) * q);
  const float* pb = b.data();
  for (int s = 0; s < n; ++s) {
    const float* xs = x.data() + static_cast<size_t>(s) * ci * p;  // [ci, p]
    kern::transpose(xs, xt.data(), ci, p);                         // -> [p, ci]
    std::fill(cols.begin(), cols.end(), 0.0f);
    kern::gemm_acc(xt.data(), w.data(), cols.data(), p, ci, q);
    float* dst = out.data() + static_cast<size_t>(s) * co * oh * ow;
    kern::col2im_add(cols.data(), co, oh, ow, kh, kw, stride, pad, h, ww, dst);
    for (int j = 0; j < co; ++j) {
      float* plane = dst + static_cast<size_t>(j) * oh * ow;
      const float bj = pb[j];
      for (int i = 0; i < oh * ow; ++i) plane[i] += bj;
    }
  }

  auto backward = [n, ci, h, ww, co, kh, kw, stride, pad, oh, ow, p, q](TensorImpl& self) {
    self.ensure_grad();
    auto& px = self.parents[0];
    auto& pw = self.parents[1];
    auto& pbias = self.parents[2];
    const bool need_x = px->requires_grad || px->backward_fn;
    const bool need_w = pw->requires_grad || pw->backward_fn;
    const bool need_b = pbias->requires_grad || pbias->backward_fn;
    if (need_x) px->ensure_grad();
    if (need_w) pw->ensure_grad();
    if (need_b) pbias->ensure_grad();
    std::vector<float> gcols(static_cast<size_t>(p) * q);
    std::vector<float> wt(static_cast<size_t>(q) * ci);
    if (need_x) kern::transpose(pw->data.data(), wt.data(), ci, q);
    std::vector<float> dxt(static_cast<size_t>(p) * ci);
    for (int s = 0; s < n; ++s) {
      const float* gout = self.grad.data() + static_cast<size_t>(s) * co * oh * ow;
      kern::im2col(gout, co, oh, ow, kh, kw, stride, pad, h, ww, gcols.data());
      if (need_x) {
        std::fill(dxt.begin(), dxt.end(), 0.0f);
        kern::gemm_acc(gcols.data(), wt.data(), dxt.data(), p, q, ci);
        float* dx = px->grad.data() + static_cast<size_t>(s) * ci * p;  // [ci, p]
        for (int i = 0; i < p; ++i)
          for (int j = 0; j < ci; ++j)
            dx[static_cast<size_t>(j) * p + i] += dxt[static_cast<size_t>(i) * ci + j];
      }
      if (need_w) {  // dW [ci,q] += x_s [ci,p] * gcols [p,q]
        const float* xs = px->data.data() + static_cast<size_t>(s) * ci * p;
        kern::gemm_acc(xs, gcols.data(), pw->grad.data(), ci, p, q);
      }
      if (need_b) {
        float* db = pbias->grad.data();
        for (int j = 0; j < co; ++j) {
          double acc = 0.0;
          const float* plane = gout + static_cast<size_t>(j) * oh * ow;
          for (int i = 0; i < oh * ow; ++i) acc += plane[i];
          db[j] += static_cast<float>(acc);
        }
      }
    }
  };
  return detail::make_op_result({n, co, oh, ow}, std::move(out), {x, w, b}, backward);
}

}  // namespace vsg
