#pragma once

// Scalar double-precision reference implementations of the recurrent cells,
// written as plain loops so they share nothing with the library kernels.

#include "oracle_ref.hpp"

namespace refo {

inline dvec linear_ref(const dvec& x, const dvec& w, const dvec& b, int n, int in, int out) {
  dvec y = matmul(x, w, n, in, out);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < out; ++j) y[i * out + j] += b[j];
  return y;
}

struct CellActsRef {
  dvec v, u_prob, cand;
};

// Fused projection of [state, input] -> v, u_prob, cand (batch of 1 row
// handled as n rows for generality).
inline CellActsRef cell_core_ref(const dvec& state, const dvec& input, const dvec& w,
                                 const dvec& b, int n, int sw, int iw) {
  dvec cat(static_cast<size_t>(n) * (sw + iw));
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < sw; ++j) cat[i * (sw + iw) + j] = state[i * sw + j];
    for (int j = 0; j < iw; ++j) cat[i * (sw + iw) + sw + j] = input[i * iw + j];
  }
  dvec pre = linear_ref(cat, w, b, n, sw + iw, 3 * sw);
  CellActsRef out;
  out.v.resize(static_cast<size_t>(n) * sw);
  out.u_prob.resize(static_cast<size_t>(n) * sw);
  out.cand.resize(static_cast<size_t>(n) * sw);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < sw; ++j) {
      const double v = sigmoid(pre[i * 3 * sw + j]);
      out.v[i * sw + j] = v;
      out.u_prob[i * sw + j] = sigmoid(pre[i * 3 * sw + sw + j]);
      out.cand[i * sw + j] = std::tanh(v * pre[i * 3 * sw + 2 * sw + j]);
    }
  return out;
}

inline dvec gate_mix_ref(const dvec& prev, const dvec& cand, const dvec& u) {
  dvec out(prev.size());
  for (size_t i = 0; i < prev.size(); ++i) out[i] = prev[i] + u[i] * (cand[i] - prev[i]);
  return out;
}

inline dvec gru_ref(const dvec& h, const dvec& input, const dvec& w, const dvec& b, int n,
                    int sw, int iw) {
  auto acts = cell_core_ref(h, input, w, b, n, sw, iw);
  return gate_mix_ref(h, acts.cand, acts.u_prob);
}

// One ELU hidden layer MLP head producing (mean, raw_std); returns the mean
// slice with std = softplus(raw)+0.1 available on request.
inline dvec gauss_head_mean_ref(const dvec& in, const dvec& w1, const dvec& b1,
                                const dvec& w2, const dvec& b2, int n, int in_w, int hidden,
                                int sw) {
  dvec h = linear_ref(in, w1, b1, n, in_w, hidden);
  for (auto& v : h) v = elu(v);
  dvec raw = linear_ref(h, w2, b2, n, hidden, 2 * sw);
  dvec mean(static_cast<size_t>(n) * sw);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < sw; ++j) mean[i * sw + j] = raw[i * 2 * sw + j];
  return mean;
}

}  // namespace refo
