#pragma once

#include "vsg/behavior.hpp"
#include "vsg/replay.hpp"

namespace vsg {

struct AgentConfig {
  WorldModelConfig wm;
  BehaviorConfig behavior;
  float wm_lr = 3e-4f;      // 8e-4 for svsg
  float actor_lr = 8e-5f;
  float critic_lr = 8e-5f;
  float adam_eps = 1e-5f;
  float weight_decay = 1e-6f;
  float clip_norm = 100.f;
};

// World model + actor-critic with their three optimizers. One train_step =
// world-model update on a replay batch, then behavior update on fresh
// imagination from the posterior states.
class Agent {
 public:
  AgentConfig cfg;
  WorldModel wm;
  ActorCritic ac;
  Adam wm_opt, actor_opt, critic_opt;

  Agent(const AgentConfig& c, Rng& init_rng)
      : cfg(c),
        wm(c.wm, init_rng),
        ac(c.behavior, c.wm.feat_dim(), init_rng),
        wm_opt(wm.params.tensors(),
               {c.wm_lr, 0.9f, 0.999f, c.adam_eps, c.weight_decay}),
        actor_opt(ac.actor_params.tensors(),
                  {c.actor_lr, 0.9f, 0.999f, c.adam_eps, c.weight_decay}),
        critic_opt(ac.critic_params.tensors(),
                   {c.critic_lr, 0.9f, 0.999f, c.adam_eps, c.weight_decay}) {}

  struct StepLog {
    float total = 0, image = 0, reward = 0, discount = 0, kl = 0, sparsity = 0;
    float image_mse = 0, gate_mean = 0;
    float actor_loss = 0, critic_loss = 0, value_mean = 0, entropy = 0;
    float wm_grad_norm = 0, actor_grad_norm = 0, critic_grad_norm = 0;
    bool nan_abort = false;
    bool slow_updated = false;
  };

  int64_t grad_steps() const { return grad_steps_; }

  StepLog train_step(const SeqBatch& batch, Rng& rng) {
    StepLog log;
    auto obs = wm.observe(batch, rng);
    log.total = obs.losses.total.item();
    log.image = obs.losses.image_nll.item();
    log.reward = obs.losses.reward_nll.item();
    log.discount = obs.losses.discount_nll.item();
    log.kl = obs.losses.kl.item();
    log.sparsity = obs.losses.sparsity.item();
    log.image_mse = obs.losses.image_mse;
    log.gate_mean = obs.losses.gate_mean;
    if (!std::isfinite(log.total)) {
      log.nan_abort = true;
      return log;
    }

    zero_all();
    obs.losses.total.backward();
    log.wm_grad_norm = static_cast<float>(clip_global_norm(wm.params.tensors(), cfg.clip_norm));
    wm_opt.step();
    zero_all();

    // Behavior phase on imagination from every posterior state.
    ModelState start = flatten_states(obs.posts);
    auto bl = ac.compute_losses(wm, start, rng);
    log.actor_loss = bl.actor_loss.item();
    log.critic_loss = bl.critic_loss.item();
    log.value_mean = bl.value_mean;
    log.entropy = bl.entropy_mean;
    if (!std::isfinite(log.actor_loss) || !std::isfinite(log.critic_loss)) {
      log.nan_abort = true;
      return log;
    }
    add(bl.actor_loss, bl.critic_loss).backward();
    log.actor_grad_norm =
        static_cast<float>(clip_global_norm(ac.actor_params.tensors(), cfg.clip_norm));
    log.critic_grad_norm =
        static_cast<float>(clip_global_norm(ac.critic_params.tensors(), cfg.clip_norm));
    actor_opt.step();
    critic_opt.step();
    zero_all();

    ++grad_steps_;
    log.slow_updated = ac.update_slow(grad_steps_);
    return log;
  }

  // -- Acting -----------------------------------------------------------

  struct ActState {
    ModelState ms;
    std::vector<float> prev_action;
  };

  ActState initial_act_state() const {
    return {wm.initial_state(1), std::vector<float>(cfg.behavior.action_dim, 0.f)};
  }

  // Filters the observation into the posterior state and returns the next
  // action. Deterministic mode uses the squashed mean; collection adds
  // Gaussian exploration noise.
  std::vector<float> act(ActState& st, const std::vector<float>& obs_chw, Rng& rng,
                         float expl_noise, bool deterministic) {
    NoGrad ng;
    const int res = wm.cfg.resolution;
    Tensor obs = Tensor::from_data({1, 3, res, res}, obs_chw);
    Tensor a_prev = Tensor::from_data({1, cfg.behavior.action_dim}, st.prev_action);
    auto step = wm.obs_step(st.ms, a_prev, wm.encode(obs), rng);
    st.ms = step.state;
    Tensor action = ac.act_mean(st.ms.feat());
    std::vector<float> out(action.data(), action.data() + action.size());
    if (!deterministic && expl_noise > 0.f) {
      for (auto& a : out) {
        a += static_cast<float>(rng.normal() * expl_noise);
        a = std::max(-1.0f, std::min(1.0f, a));
      }
    }
    st.prev_action = out;
    return out;
  }

  void zero_all() {
    wm.params.zero_grad();
    ac.actor_params.zero_grad();
    ac.critic_params.zero_grad();
    ac.slow_params.zero_grad();
  }

 private:
  static ModelState flatten_states(const std::vector<ModelState>& states) {
    std::vector<Tensor> hs, zs;
    for (const auto& s : states) {
      if (s.h.defined()) hs.push_back(s.h);
      zs.push_back(s.z);
    }
    ModelState out;
    if (!hs.empty()) out.h = concat_rows(hs);
    out.z = concat_rows(zs);
    return out;
  }

  int64_t grad_steps_ = 0;
};

}  // namespace vsg
