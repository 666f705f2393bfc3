#pragma once

#include "vsg/worldmodel.hpp"

namespace vsg {

struct BehaviorConfig {
  int horizon = 15;
  float gamma = 0.99f;
  float lambda = 0.95f;
  float eta_d = 1.0f;       // dynamics-backprop weight
  float eta_e = 1e-4f;      // entropy regularizer (2e-3 outside the arena task)
  float grad_mixing = 0.1f; // exposed for parity experiments; unused by the
                            // default pure dynamics-backprop objective
  int slow_interval = 100;
  int action_dim = 2;
  int mlp_units = 128;
  int mlp_layers = 2;
  float min_std = 1e-4f;
};

// Backward recursion V_t = r_t + d_t * ((1-lambda) v_{t+1} + lambda V_{t+1})
// with V_H = v_H. All sequences are aligned so index i corresponds to step
// t = i+1; discounts[i] already include the predicted continuation times
// gamma. Returns all H values; the last equals values.back().
inline std::vector<Tensor> lambda_returns(const std::vector<Tensor>& rewards,
                                          const std::vector<Tensor>& values,
                                          const std::vector<Tensor>& discounts,
                                          float lambda) {
  const size_t h = rewards.size();
  VSG_CHECK(values.size() == h && discounts.size() == h,
            "lambda_returns: length mismatch (rewards ", h, ", values ", values.size(),
            ", discounts ", discounts.size(), ")");
  VSG_CHECK(h >= 1, "lambda_returns: empty sequences");
  std::vector<Tensor> v(h);
  v[h - 1] = values[h - 1];
  for (size_t i = h - 1; i-- > 0;) {
    Tensor boot = add(mul_scalar(values[i + 1], 1.0f - lambda), mul_scalar(v[i + 1], lambda));
    v[i] = add(rewards[i], mul(discounts[i], boot));
  }
  return v;
}

class ActorCritic {
 public:
  BehaviorConfig cfg;
  ParamRegistry actor_params;
  ParamRegistry critic_params;
  ParamRegistry slow_params;
  Mlp actor;        // feat -> [mean, raw_std] per action dim
  Mlp critic;       // feat -> value
  Mlp slow_critic;  // frozen copy refreshed every slow_interval steps

  ActorCritic(const BehaviorConfig& c, int feat_dim, Rng& rng) : cfg(c) {
    actor = Mlp(actor_params, "actor", feat_dim, cfg.mlp_units, cfg.mlp_layers,
                2 * cfg.action_dim, rng);
    critic = Mlp(critic_params, "critic", feat_dim, cfg.mlp_units, cfg.mlp_layers, 1, rng);
    slow_critic = Mlp(slow_params, "critic", feat_dim, cfg.mlp_units, cfg.mlp_layers, 1, rng);
    slow_params.copy_values_from(critic_params);
  }

  struct Policy {
    Tensor action;    // [N, A] in (-1, 1)
    Tensor log_prob;  // [N]
  };

  // tanh-squashed diagonal Gaussian with state-dependent std, sampled via the
  // reparameterization trick. log_prob carries the tanh change-of-variables
  // correction so the entropy estimate stays finite for std > 0.
  Policy sample_policy(const Tensor& feat, Rng& rng) const {
    const int a = cfg.action_dim;
    Tensor raw = actor(feat);
    Tensor mu = mul_scalar(tanh_op(mul_scalar(slice_cols(raw, 0, a), 0.2f)), 5.0f);
    Tensor std = add_scalar(softplus(slice_cols(raw, a, a)), cfg.min_std);
    Tensor eps = noise_like(mu, rng);
    Tensor u = add(mu, mul(std, eps));
    Tensor action = tanh_op(u);
    Tensor z = div(sub(u, mu), std);
    Tensor gauss = add(affine(square(z), 0.5f, 0.5f * kLogTwoPi), log_op(std));
    Tensor squash = log_op(add_scalar(neg(square(action)), 1.0f + kProbEps));
    Tensor log_prob = neg(sum_cols(add(gauss, squash)));
    return {action, log_prob};
  }

  // Deterministic evaluation action: squashed distribution mean.
  Tensor act_mean(const Tensor& feat) const {
    const int a = cfg.action_dim;
    Tensor raw = actor(feat);
    return tanh_op(mul_scalar(tanh_op(mul_scalar(slice_cols(raw, 0, a), 0.2f)), 5.0f));
  }

  Tensor value(const Tensor& feat) const { return critic(feat); }
  Tensor slow_value(const Tensor& feat) const { return slow_critic(feat); }

  // Full copy of the critic into the target critic every slow_interval
  // gradient steps.
  bool update_slow(int64_t grad_step) {
    if (grad_step % cfg.slow_interval != 0) return false;
    slow_params.copy_values_from(critic_params);
    return true;
  }

  struct Losses {
    Tensor actor_loss;
    Tensor critic_loss;
    float value_mean = 0;
    float entropy_mean = 0;
  };

  // Imagination-phase losses from a prior rollout of the world model.
  // lambda-targets use the slow critic; the critic regresses to stopped
  // targets on detached states; the actor differentiates through the
  // imagined dynamics.
  Losses compute_losses(const WorldModel& wm, const ModelState& start, Rng& rng) {
    const int h = cfg.horizon;
    VSG_CHECK(h >= 2, "behavior: horizon must be >= 2");

    std::vector<Tensor> log_probs;
    auto sampler = [&](const Tensor& feat, Rng& r) {
      Policy p = sample_policy(feat, r);
      log_probs.push_back(p.log_prob);
      return p.action;
    };
    WorldModel::Imagined traj = wm.imagine(start, sampler, h, rng);

    std::vector<Tensor> rewards(h), values(h), discounts(h);
    for (int i = 0; i < h; ++i) {
      rewards[i] = traj.reward_means[i];
      values[i] = slow_value(traj.feats[i]);
      const int j = std::min(i + 1, h - 1);
      discounts[i] = mul_scalar(traj.discount_probs[j], cfg.gamma);
    }
    std::vector<Tensor> v_lambda = lambda_returns(rewards, values, discounts, cfg.lambda);

    Tensor actor_acc = Tensor::scalar(0.f);
    Tensor critic_acc = Tensor::scalar(0.f);
    double value_acc = 0, ent_acc = 0;
    for (int i = 0; i + 1 < h; ++i) {
      Tensor ent_term = mean_all(log_probs[i + 1]);  // E[ln pi] = -entropy estimate
      actor_acc = add(actor_acc, add(mul_scalar(mean_all(v_lambda[i]), -cfg.eta_d),
                                     mul_scalar(ent_term, cfg.eta_e)));
      Tensor target = stopgrad(v_lambda[i]);
      Tensor pred = value(traj.feats[i].detach());
      critic_acc = add(critic_acc, mean_all(mul_scalar(square(sub(pred, target)), 0.5f)));
      value_acc += mean_all(v_lambda[i]).item();
      ent_acc -= ent_term.item();
    }
    const float inv = 1.0f / static_cast<float>(h - 1);
    return {mul_scalar(actor_acc, inv), mul_scalar(critic_acc, inv),
            static_cast<float>(value_acc * inv), static_cast<float>(ent_acc * inv)};
  }
};

}  // namespace vsg
