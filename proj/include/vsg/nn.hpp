#pragma once

#include <string>

#include "vsg/conv.hpp"
#include "vsg/distributions.hpp"
#include "vsg/optim.hpp"

namespace vsg {

namespace init {

// Truncated normal, fan-in scaled: std = scale / sqrt(fan_in), resampling
// anything beyond two standard deviations.
inline void trunc_normal(Tensor& t, int fan_in, Rng& rng, double scale = 1.0) {
  const double std = scale / std::sqrt(static_cast<double>(fan_in));
  for (int64_t i = 0; i < t.size(); ++i) {
    double v = rng.normal();
    while (std::fabs(v) > 2.0) v = rng.normal();
    t.data()[i] = static_cast<float>(v * std);
  }
}

// Writes an orthogonal [n, n] block into w (shape [rows, cols]) at
// (row0, col0) via modified Gram-Schmidt on Gaussian draws.
inline void orthogonal_block(Tensor& w, int row0, int col0, int n, Rng& rng) {
  const int cols = w.dim(1);
  std::vector<std::vector<double>> v(n, std::vector<double>(n));
  for (auto& row : v)
    for (auto& x : row) x = rng.normal();
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < i; ++j) {
      double dot = 0;
      for (int k = 0; k < n; ++k) dot += v[i][k] * v[j][k];
      for (int k = 0; k < n; ++k) v[i][k] -= dot * v[j][k];
    }
    double norm = 0;
    for (int k = 0; k < n; ++k) norm += v[i][k] * v[i][k];
    norm = std::sqrt(norm);
    if (norm < 1e-8) norm = 1.0;
    for (int k = 0; k < n; ++k) v[i][k] /= norm;
  }
  for (int i = 0; i < n; ++i)
    for (int k = 0; k < n; ++k)
      w.data()[static_cast<size_t>(row0 + i) * cols + col0 + k] = static_cast<float>(v[i][k]);
}

}  // namespace init

struct Linear {
  Tensor w, b;

  Linear() = default;
  Linear(ParamRegistry& reg, const std::string& prefix, int in, int out, Rng& rng) {
    w = reg.add(prefix + "/w", Tensor::zeros({in, out}));
    b = reg.add(prefix + "/b", Tensor::zeros({out}));
    init::trunc_normal(w, in, rng);
  }

  Tensor operator()(const Tensor& x) const { return add_bias(matmul(x, w), b); }
};

// Stack of ELU-activated hidden layers plus a linear output layer.
struct Mlp {
  std::vector<Linear> layers;

  Mlp() = default;
  Mlp(ParamRegistry& reg, const std::string& prefix, int in, int hidden, int n_hidden,
      int out, Rng& rng) {
    int cur = in;
    for (int i = 0; i < n_hidden; ++i) {
      layers.emplace_back(reg, prefix + "/h" + std::to_string(i), cur, hidden, rng);
      cur = hidden;
    }
    layers.emplace_back(reg, prefix + "/out", cur, out, rng);
  }

  Tensor operator()(const Tensor& x) const {
    Tensor h = x;
    for (size_t i = 0; i + 1 < layers.size(); ++i) h = elu(layers[i](h));
    return layers.back()(h);
  }
};

struct ConvLayer {
  Tensor w, b;

  ConvLayer() = default;
  ConvLayer(ParamRegistry& reg, const std::string& prefix, int ci, int co, int k, Rng& rng,
            bool transpose = false) {
    w = reg.add(prefix + "/w",
                transpose ? Tensor::zeros({ci, co, k, k}) : Tensor::zeros({co, ci, k, k}));
    b = reg.add(prefix + "/b", Tensor::zeros({co}));
    init::trunc_normal(w, ci * k * k, rng);
  }
};

// Four stride-2 stages, kernel 4, pad 1: each stage exactly halves the
// spatial extent, so resolution must be a multiple of 16.
struct ConvEncoder {
  std::vector<ConvLayer> stages;
  int res = 0, depth = 0, embed_dim = 0;

  ConvEncoder() = default;
  ConvEncoder(ParamRegistry& reg, const std::string& prefix, int res_, int depth_, Rng& rng)
      : res(res_), depth(depth_) {
    VSG_CHECK(res % 16 == 0, "encoder: resolution must be a multiple of 16, got ", res);
    int ci = 3;
    for (int i = 0; i < 4; ++i) {
      const int co = depth << i;
      stages.emplace_back(reg, prefix + "/conv" + std::to_string(i), ci, co, 4, rng);
      ci = co;
    }
    const int s = res / 16;
    embed_dim = (depth * 8) * s * s;
  }

  // x: [N, 3, res, res] -> [N, embed_dim]
  Tensor operator()(const Tensor& x) const {
    VSG_CHECK_SHAPE(x.rank() == 4 && x.dim(1) == 3, "encoder: expected [N,3,H,W], got ",
                    shape_str(x.shape()));
    VSG_CHECK_SHAPE(x.dim(2) == res && x.dim(3) == res, "encoder: expected ", res, "x", res,
                    " input, got ", shape_str(x.shape()));
    Tensor h = x;
    for (const auto& st : stages) h = elu(conv2d(h, st.w, st.b, 2, 1));
    return reshape(h, {h.dim(0), embed_dim});
  }
};

// Mirror of the encoder: dense to a (res/16)^2 base map, then four stride-2
// transposed convolutions back to [N, 3, res, res]. Final layer is linear.
struct ConvDecoder {
  Linear in;
  std::vector<ConvLayer> stages;
  int res = 0, depth = 0, base = 0;

  ConvDecoder() = default;
  ConvDecoder(ParamRegistry& reg, const std::string& prefix, int feat_dim, int res_,
              int depth_, Rng& rng)
      : res(res_), depth(depth_) {
    VSG_CHECK(res % 16 == 0, "decoder: resolution must be a multiple of 16, got ", res);
    base = res / 16;
    in = Linear(reg, prefix + "/in", feat_dim, depth * 8 * base * base, rng);
    const int chans[4] = {depth * 8, depth * 4, depth * 2, depth};
    for (int i = 0; i < 4; ++i) {
      const int co = i == 3 ? 3 : chans[i + 1];
      stages.emplace_back(reg, prefix + "/deconv" + std::to_string(i), chans[i], co, 4, rng,
                          /*transpose=*/true);
    }
  }

  // feat: [N, feat_dim] -> [N, 3, res, res]
  Tensor operator()(const Tensor& feat) const {
    Tensor h = reshape(in(feat), {feat.dim(0), depth * 8, base, base});
    for (size_t i = 0; i < stages.size(); ++i) {
      h = conv_transpose2d(h, stages[i].w, stages[i].b, 2, 1);
      if (i + 1 < stages.size()) h = elu(h);
    }
    return h;
  }
};

}  // namespace vsg
