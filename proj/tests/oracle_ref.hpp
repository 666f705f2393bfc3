#pragma once

// Double-precision reference implementations, independent of the library's
// float kernels. These exist so gradient checks can difference an accurate
// forward function instead of the float32 path under test.

#include <cmath>
#include <functional>
#include <vector>

namespace refo {

using dvec = std::vector<double>;

inline dvec matmul(const dvec& a, const dvec& b, int n, int k, int m) {
  dvec c(static_cast<size_t>(n) * m, 0.0);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < m; ++j) {
      double acc = 0.0;
      for (int l = 0; l < k; ++l) acc += a[i * k + l] * b[l * m + j];
      c[i * m + j] = acc;
    }
  return c;
}

inline double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }
inline double softplus(double x) { return x > 30 ? x : std::log1p(std::exp(x)); }
inline double elu(double x) { return x > 0 ? x : std::expm1(x); }

inline dvec conv2d(const dvec& x, const dvec& w, const dvec& b, int n, int ci, int h,
                   int ww, int co, int kh, int kw, int stride, int pad) {
  const int oh = (h + 2 * pad - kh) / stride + 1;
  const int ow = (ww + 2 * pad - kw) / stride + 1;
  dvec out(static_cast<size_t>(n) * co * oh * ow, 0.0);
  for (int s = 0; s < n; ++s)
    for (int j = 0; j < co; ++j)
      for (int oy = 0; oy < oh; ++oy)
        for (int ox = 0; ox < ow; ++ox) {
          double acc = b[j];
          for (int c = 0; c < ci; ++c)
            for (int ky = 0; ky < kh; ++ky)
              for (int kx = 0; kx < kw; ++kx) {
                const int iy = oy * stride - pad + ky;
                const int ix = ox * stride - pad + kx;
                if (iy < 0 || iy >= h || ix < 0 || ix >= ww) continue;
                acc += x[((static_cast<size_t>(s) * ci + c) * h + iy) * ww + ix] *
                       w[((static_cast<size_t>(j) * ci + c) * kh + ky) * kw + kx];
              }
          out[((static_cast<size_t>(s) * co + j) * oh + oy) * ow + ox] = acc;
        }
  return out;
}

inline dvec conv_transpose2d(const dvec& x, const dvec& w, const dvec& b, int n, int ci,
                             int h, int ww, int co, int kh, int kw, int stride, int pad) {
  const int oh = (h - 1) * stride - 2 * pad + kh;
  const int ow = (ww - 1) * stride - 2 * pad + kw;
  dvec out(static_cast<size_t>(n) * co * oh * ow, 0.0);
  for (int s = 0; s < n; ++s) {
    for (int c = 0; c < ci; ++c)
      for (int iy = 0; iy < h; ++iy)
        for (int ix = 0; ix < ww; ++ix) {
          const double xv = x[((static_cast<size_t>(s) * ci + c) * h + iy) * ww + ix];
          for (int j = 0; j < co; ++j)
            for (int ky = 0; ky < kh; ++ky)
              for (int kx = 0; kx < kw; ++kx) {
                const int oy = iy * stride - pad + ky;
                const int ox = ix * stride - pad + kx;
                if (oy < 0 || oy >= oh || ox < 0 || ox >= ow) continue;
                out[((static_cast<size_t>(s) * co + j) * oh + oy) * ow + ox] +=
                    xv * w[((static_cast<size_t>(c) * co + j) * kh + ky) * kw + kx];
              }
        }
    for (int j = 0; j < co; ++j)
      for (int i = 0; i < oh * ow; ++i)
        out[(static_cast<size_t>(s) * co + j) * oh * ow + i] += b[j];
  }
  return out;
}

// Central finite difference of a scalar function of flat double inputs.
// f receives all parameter blocks; grads are produced for block `bi`.
inline dvec fd_grad(const std::function<double(const std::vector<dvec>&)>& f,
                    std::vector<dvec> inputs, size_t bi, double eps = 1e-4) {
  dvec g(inputs[bi].size());
  for (size_t i = 0; i < inputs[bi].size(); ++i) {
    const double keep = inputs[bi][i];
    inputs[bi][i] = keep + eps;
    const double fp = f(inputs);
    inputs[bi][i] = keep - eps;
    const double fm = f(inputs);
    inputs[bi][i] = keep;
    g[i] = (fp - fm) / (2.0 * eps);
  }
  return g;
}

// Relative error with an absolute floor for near-zero pairs.
inline double rel_err(double a, double b, double floor = 1e-6) {
  const double denom = std::max({std::fabs(a), std::fabs(b), floor});
  return std::fabs(a - b) / denom;
}

inline double gaussian_kl(double mq, double sq, double mp, double sp) {
  return std::log(sp / sq) + (sq * sq + (mq - mp) * (mq - mp)) / (2.0 * sp * sp) - 0.5;
}

inline double bernoulli_kl(double q, double k) {
  return q * std::log(q / k) + (1.0 - q) * std::log((1.0 - q) / (1.0 - k));
}

}  // namespace refo
