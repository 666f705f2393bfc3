#pragma once

#include "vsg/nn.hpp"

namespace vsg {

// Reset gate, gate probability and the sampled binary gate for one step.
struct GateActivations {
  Tensor v;
  Tensor u_tilde;
  Tensor u;
};

// Shared gate machinery: one fused projection of [state, input] into reset
// gate, update-gate logits and candidate pre-activation. The candidate is
// tanh(v * pre) with the reset gate applied after the projection.
struct CellCore {
  Linear fused;
  int width = 0;

  CellCore() = default;
  CellCore(ParamRegistry& reg, const std::string& prefix, int state_w, int input_w, Rng& rng)
      : width(state_w) {
    fused = Linear(reg, prefix + "/fused", state_w + input_w, 3 * state_w, rng);
    // Recurrent block: per-gate orthogonal; input block keeps truncated normal.
    for (int g = 0; g < 3; ++g) init::orthogonal_block(fused.w, 0, g * state_w, state_w, rng);
  }

  struct Acts {
    Tensor v;        // reset gate, in (0,1)
    Tensor u_prob;   // update-gate probability, sigmoid of logits
    Tensor cand;     // tanh(v * candidate pre-activation)
  };

  Acts compute(const Tensor& state, const Tensor& input) const {
    VSG_CHECK_SHAPE(state.rank() == 2 && input.rank() == 2 && state.dim(0) == input.dim(0),
                    "cell: batch mismatch state ", shape_str(state.shape()), " input ",
                    shape_str(input.shape()));
    Tensor pre = fused(concat_cols(state, input));
    Tensor v = sigmoid(slice_cols(pre, 0, width));
    Tensor u_prob = sigmoid(slice_cols(pre, width, width));
    Tensor cand = tanh_op(mul(v, slice_cols(pre, 2 * width, width)));
    return {v, u_prob, cand};
  }
};

// Standard GRU (continuous update gate); the recurrent cell of RSSM.
struct GruCell {
  CellCore core;

  GruCell() = default;
  GruCell(ParamRegistry& reg, const std::string& prefix, int state_w, int input_w, Rng& rng)
      : core(reg, prefix, state_w, input_w, rng) {}

  Tensor step(const Tensor& h_prev, const Tensor& input) const {
    auto acts = core.compute(h_prev, input);
    return gate_mix(h_prev, acts.cand, acts.u_prob);
  }
};

// GRU with the update gate sampled from a Bernoulli per dimension: each state
// dimension is either fully rewritten or copied bit-exactly.
struct VsgCell {
  CellCore core;

  VsgCell() = default;
  VsgCell(ParamRegistry& reg, const std::string& prefix, int state_w, int input_w, Rng& rng)
      : core(reg, prefix, state_w, input_w, rng) {}

  struct Out {
    Tensor h;
    GateActivations gates;
  };

  Out step(const Tensor& h_prev, const Tensor& input, Rng& rng) const {
    auto acts = core.compute(h_prev, input);
    Tensor u = bernoulli_gate_sample(acts.u_prob, rng);
    Tensor h = gate_mix(h_prev, acts.cand, u);
    return {h, {acts.v, acts.u_prob, u}};
  }

  // u := u_tilde. With identical weights this reproduces GruCell::step.
  Out step_relaxed(const Tensor& h_prev, const Tensor& input) const {
    auto acts = core.compute(h_prev, input);
    Tensor h = gate_mix(h_prev, acts.cand, acts.u_prob);
    return {h, {acts.v, acts.u_prob, acts.u_prob}};
  }
};

// Fully stochastic single-path cell. The candidate feeds separate prior and
// posterior Gaussian heads; one shared gate sample mixes either branch's
// sample with the previous state.
struct SvsgCell {
  CellCore core;
  Mlp prior_head;
  Mlp post_head;
  int width = 0;

  SvsgCell() = default;
  SvsgCell(ParamRegistry& reg, const std::string& prefix, int state_w, int input_w,
           int obs_embed_w, int hidden, Rng& rng)
      : core(reg, prefix, state_w, input_w, rng), width(state_w) {
    prior_head = Mlp(reg, prefix + "/prior", state_w, hidden, 1, 2 * state_w, rng);
    post_head = Mlp(reg, prefix + "/post", state_w + obs_embed_w, hidden, 1, 2 * state_w, rng);
  }

  struct Out {
    Tensor prior_state;  // s_hat
    Tensor post_state;   // s (undefined for prior-only steps)
    DiagGaussian prior;
    DiagGaussian post;  // undefined for prior-only steps
    GateActivations gates;
  };

  DiagGaussian head_dist(const Mlp& head, const Tensor& in) const {
    Tensor raw = head(in);
    return gaussian_from_raw(slice_cols(raw, 0, width), slice_cols(raw, width, width));
  }

  // Posterior step: both branches, one shared gate sample.
  Out step_posterior(const Tensor& s_prev, const Tensor& input, const Tensor& obs_embed,
                     Rng& rng) const {
    VSG_CHECK(obs_embed.defined(), "svsg: posterior step requires an observation embedding");
    auto acts = core.compute(s_prev, input);
    Tensor u = bernoulli_gate_sample(acts.u_prob, rng);
    DiagGaussian prior = head_dist(prior_head, acts.cand);
    DiagGaussian post = head_dist(post_head, concat_cols(acts.cand, obs_embed));
    Tensor z_hat = gaussian_rsample(prior, rng);
    Tensor z = gaussian_rsample(post, rng);
    return {gate_mix(s_prev, z_hat, u), gate_mix(s_prev, z, u), prior, post,
            {acts.v, acts.u_prob, u}};
  }

  Out step_prior(const Tensor& s_prev, const Tensor& input, Rng& rng,
                 bool sample = true) const {
    auto acts = core.compute(s_prev, input);
    Tensor u = bernoulli_gate_sample(acts.u_prob, rng);
    DiagGaussian prior = head_dist(prior_head, acts.cand);
    Tensor z_hat = sample ? gaussian_rsample(prior, rng) : prior.mean;
    return {gate_mix(s_prev, z_hat, u), Tensor(), prior, DiagGaussian{},
            {acts.v, acts.u_prob, u}};
  }
};

// PlaNet-style stochastic state space baseline: Gaussian state from an MLP
// over [s_prev, input], no gating and no deterministic path.
struct SsmCell {
  Mlp prior_head;
  Mlp post_head;
  int width = 0;

  SsmCell() = default;
  SsmCell(ParamRegistry& reg, const std::string& prefix, int state_w, int input_w,
          int obs_embed_w, int hidden, Rng& rng)
      : width(state_w) {
    prior_head = Mlp(reg, prefix + "/prior", state_w + input_w, hidden, 1, 2 * state_w, rng);
    post_head = Mlp(reg, prefix + "/post", state_w + input_w + obs_embed_w, hidden, 1,
                    2 * state_w, rng);
  }

  struct Out {
    Tensor prior_state;
    Tensor post_state;
    DiagGaussian prior;
    DiagGaussian post;
  };

  DiagGaussian head_dist(const Mlp& head, const Tensor& in) const {
    Tensor raw = head(in);
    return gaussian_from_raw(slice_cols(raw, 0, width), slice_cols(raw, width, width));
  }

  Out step_posterior(const Tensor& s_prev, const Tensor& input, const Tensor& obs_embed,
                     Rng& rng) const {
    VSG_CHECK(obs_embed.defined(), "ssm: posterior step requires an observation embedding");
    Tensor joint = concat_cols(s_prev, input);
    DiagGaussian prior = head_dist(prior_head, joint);
    DiagGaussian post = head_dist(post_head, concat_cols(joint, obs_embed));
    return {gaussian_rsample(prior, rng), gaussian_rsample(post, rng), prior, post};
  }

  Out step_prior(const Tensor& s_prev, const Tensor& input, Rng& rng,
                 bool sample = true) const {
    DiagGaussian prior = head_dist(prior_head, concat_cols(s_prev, input));
    Tensor s = sample ? gaussian_rsample(prior, rng) : prior.mean;
    return {s, Tensor(), prior, DiagGaussian{}};
  }
};

}  // namespace vsg
