#pragma once

#include <variant>

#include "vsg/ops.hpp"
#include "vsg/random.hpp"

namespace vsg {

constexpr float kProbEps = 1e-6f;
constexpr float kStdFloor = 0.1f;
constexpr float kLogTwoPi = 1.8378770664093453f;

// Diagonal Gaussian over the feature axis of [N, D] tensors.
struct DiagGaussian {
  Tensor mean;
  Tensor std;

  DiagGaussian detach() const { return {mean.detach(), std.detach()}; }
};

// Head parameterization: std = softplus(raw) + 0.1 so it stays strictly
// positive and bounded away from collapse.
inline DiagGaussian gaussian_from_raw(const Tensor& mean, const Tensor& raw_std) {
  return {mean, add_scalar(softplus(raw_std), kStdFloor)};
}

inline Tensor noise_like(const Tensor& t, Rng& rng) {
  Tensor n = Tensor::zeros(t.shape());
  for (int64_t i = 0; i < n.size(); ++i) n.data()[i] = rng.normal_f();
  return n;
}

// mean + std * noise; reparameterized, so gradients reach mean and std.
inline Tensor gaussian_rsample(const DiagGaussian& d, const Tensor& noise) {
  check_same_shape("gaussian_rsample", d.mean, noise);
  return add(d.mean, mul(d.std, noise));
}

inline Tensor gaussian_rsample(const DiagGaussian& d, Rng& rng) {
  return gaussian_rsample(d, noise_like(d.mean, rng));
}

// Per-element KL(q || p) between diagonal Gaussians, shape preserved.
inline Tensor gaussian_kl_elem(const DiagGaussian& q, const DiagGaussian& p) {
  check_same_shape("gaussian_kl", q.mean, p.mean);
  Tensor var_ratio = div(square(q.std), square(p.std));
  Tensor mean_term = div(square(sub(q.mean, p.mean)), square(p.std));
  Tensor log_ratio = sub(log_op(p.std), log_op(q.std));
  return add(log_ratio, affine(add(var_ratio, mean_term), 0.5f, -0.5f));
}

// Summed over latent dims, averaged over the leading (batch*time) axis.
inline Tensor gaussian_kl(const DiagGaussian& q, const DiagGaussian& p) {
  return mean_all(sum_cols(gaussian_kl_elem(q, p)));
}

// Bernoulli probabilities clamped away from {0, 1}.
struct BernoulliVec {
  Tensor probs;
  explicit BernoulliVec(const Tensor& raw_probs)
      : probs(clamp_op(raw_probs, kProbEps, 1.0f - kProbEps)) {}
};

// KL(Bern(q) || Bern(kappa)) per element, summed over dims, averaged over
// batch*time. Gradient flows into q only; kappa is a fixed prior.
inline Tensor bernoulli_kl(const Tensor& q_probs, float kappa) {
  VSG_CHECK(kappa > 0.0f && kappa < 1.0f, "bernoulli_kl: kappa must be in (0,1), got ", kappa);
  Tensor q = clamp_op(q_probs, kProbEps, 1.0f - kProbEps);
  Tensor one_minus_q = affine(q, -1.0f, 1.0f);
  Tensor term1 = mul(q, sub(log_op(q), Tensor::full(q.shape(), std::log(kappa))));
  Tensor term2 = mul(one_minus_q,
                     sub(log_op(one_minus_q), Tensor::full(q.shape(), std::log(1.0f - kappa))));
  Tensor elem = add(term1, term2);
  if (elem.rank() == 1) return mean_all(sum_cols(reshape(elem, {1, static_cast<int>(elem.size())})));
  return mean_all(sum_cols(elem));
}

// Element-wise Bernoulli draw wrapped in straight-through with the
// probabilities as surrogate: forward is exactly binary, gradient is identity
// onto the probabilities.
inline Tensor bernoulli_gate_sample(const Tensor& probs, Rng& rng) {
  Tensor sample = Tensor::zeros(probs.shape());
  const float* p = probs.data();
  for (int64_t i = 0; i < probs.size(); ++i)
    sample.data()[i] = rng.uniform() < p[i] ? 1.0f : 0.0f;
  return straight_through(sample, probs);
}

// DreamerV2-style grouped categorical latent. Logits are [N, groups*classes].
struct Categorical {
  Tensor logits;
  int groups;
  int classes;

  // Softmax mixed with 1% uniform, flattened back to [N, groups*classes].
  Tensor probs() const {
    const int n = logits.dim(0);
    Tensor rows = reshape(logits, {n * groups, classes});
    Tensor sm = softmax_rows(rows);
    Tensor mixed = affine(sm, 0.99f, 0.01f / static_cast<float>(classes));
    return reshape(mixed, {n, groups * classes});
  }

  Categorical detach() const { return {logits.detach(), groups, classes}; }
};

// One-hot sample per group with straight-through gradient to the mixed probs.
inline Tensor categorical_sample_st(const Categorical& c, Rng& rng) {
  Tensor probs = c.probs();
  const int n = probs.dim(0);
  Tensor sample = Tensor::zeros(probs.shape());
  const float* p = probs.data();
  for (int i = 0; i < n; ++i) {
    for (int g = 0; g < c.groups; ++g) {
      const float* row = p + static_cast<size_t>(i) * c.groups * c.classes + g * c.classes;
      double u = rng.uniform();
      double acc = 0.0;
      int pick = c.classes - 1;
      for (int k = 0; k < c.classes; ++k) {
        acc += row[k];
        if (u < acc) {
          pick = k;
          break;
        }
      }
      sample.data()[(static_cast<size_t>(i) * c.groups + g) * c.classes + pick] = 1.0f;
    }
  }
  return straight_through(sample, probs);
}

// KL(q || p) for grouped categoricals: summed over groups, averaged over batch.
inline Tensor categorical_kl(const Categorical& q, const Categorical& p) {
  VSG_CHECK_SHAPE(q.groups == p.groups && q.classes == p.classes &&
                      same_shape(q.logits.shape(), p.logits.shape()),
                  "categorical_kl: mismatched layouts");
  const int n = q.logits.dim(0);
  Tensor qp = q.probs();
  Tensor pp = p.probs();
  Tensor elem = mul(qp, sub(log_op(qp), log_op(pp)));
  return mul_scalar(sum_all(elem), 1.0f / static_cast<float>(n));
}

using Dist = std::variant<DiagGaussian, Categorical>;

inline Tensor dist_kl(const Dist& q, const Dist& p) {
  VSG_CHECK(q.index() == p.index(), "kl: distribution family mismatch");
  if (std::holds_alternative<DiagGaussian>(q))
    return gaussian_kl(std::get<DiagGaussian>(q), std::get<DiagGaussian>(p));
  return categorical_kl(std::get<Categorical>(q), std::get<Categorical>(p));
}

inline Dist dist_detach(const Dist& d) {
  if (std::holds_alternative<DiagGaussian>(d)) return std::get<DiagGaussian>(d).detach();
  return std::get<Categorical>(d).detach();
}

// balance * KL(sg(q) || p) + (1-balance) * KL(q || sg(p)). Forward value is
// the plain KL; the balance factor only reweights which side the gradient
// trains.
inline Tensor balanced_kl(const Dist& posterior, const Dist& prior, float balance = 0.8f) {
  Tensor prior_side = dist_kl(dist_detach(posterior), prior);
  Tensor post_side = dist_kl(posterior, dist_detach(prior));
  return add(mul_scalar(prior_side, balance), mul_scalar(post_side, 1.0f - balance));
}

inline Tensor balanced_kl(const DiagGaussian& q, const DiagGaussian& p, float balance = 0.8f) {
  return balanced_kl(Dist(q), Dist(p), balance);
}

// Masked, balanced Gaussian KL: per-dimension KL multiplied by a binary mask
// before reduction, so only updated state dimensions are penalized. The mask
// carries no gradient path of its own.
inline Tensor masked_balanced_gaussian_kl(const DiagGaussian& q, const DiagGaussian& p,
                                          const Tensor& mask, float balance = 0.8f) {
  Tensor prior_side = mean_all(sum_cols(mul(gaussian_kl_elem(q.detach(), p), mask)));
  Tensor post_side = mean_all(sum_cols(mul(gaussian_kl_elem(q, p.detach()), mask)));
  return add(mul_scalar(prior_side, balance), mul_scalar(post_side, 1.0f - balance));
}

// Negative log-likelihood of a unit-variance Gaussian, per row:
// 0.5 * sum_d ((x - mu)^2 + log(2*pi)).
inline Tensor gaussian_nll_unit(const Tensor& pred, const Tensor& target) {
  check_same_shape("gaussian_nll", pred, target);
  const int d = pred.rank() == 2 ? pred.dim(1) : 1;
  Tensor pred2 = pred.rank() == 2 ? pred : reshape(pred, {pred.dim(0), 1});
  Tensor target2 = target.rank() == 2 ? target : reshape(target, {target.dim(0), 1});
  Tensor sq = sum_cols(square(sub(pred2, target2)));
  return affine(sq, 0.5f, 0.5f * kLogTwoPi * static_cast<float>(d));
}

// Negative Bernoulli log-likelihood per element with soft targets.
inline Tensor bernoulli_nll(const Tensor& probs, const Tensor& targets) {
  check_same_shape("bernoulli_nll", probs, targets);
  Tensor p = clamp_op(probs, kProbEps, 1.0f - kProbEps);
  Tensor pos = mul(targets, log_op(p));
  Tensor negt = mul(affine(targets, -1.0f, 1.0f), log_op(affine(p, -1.0f, 1.0f)));
  return neg(add(pos, negt));
}

}  // namespace vsg
