#pragma once

#include <functional>
#include <string>

#include "vsg/batch.hpp"
#include "vsg/cells.hpp"

namespace vsg {

enum class Variant { kRssm, kVsg, kSvsg, kSsm };

inline Variant variant_from_string(const std::string& s) {
  if (s == "rssm") return Variant::kRssm;
  if (s == "vsg") return Variant::kVsg;
  if (s == "svsg") return Variant::kSvsg;
  if (s == "ssm") return Variant::kSsm;
  fail<ConfigError>("unknown model variant: ", s, " (expected rssm|vsg|svsg|ssm)");
}

inline std::string variant_name(Variant v) {
  switch (v) {
    case Variant::kRssm: return "rssm";
    case Variant::kVsg: return "vsg";
    case Variant::kSvsg: return "svsg";
    case Variant::kSsm: return "ssm";
  }
  return "?";
}

inline bool variant_has_gates(Variant v) { return v == Variant::kVsg || v == Variant::kSvsg; }
inline bool variant_has_recurrent(Variant v) {
  return v == Variant::kRssm || v == Variant::kVsg;
}

struct WorldModelConfig {
  Variant variant = Variant::kVsg;
  int resolution = 32;    // 64 matches the source environments; 32 is desk scale
  int cnn_depth = 24;
  int h_width = 128;      // recurrent width (rssm/vsg); 1024 at paper scale
  int z_width = 32;       // Gaussian latent width (rssm/vsg)
  bool categorical = false;
  int groups = 32, classes = 32;
  int state_width = 128;  // stochastic state width (svsg/ssm)
  int mlp_units = 128;    // 400 at paper scale
  int mlp_layers = 2;     // 4 at paper scale
  int action_dim = 2;
  float beta = 1.0f;      // KL scale
  float alpha = 0.1f;     // sparsity scale
  float kappa = 0.3f;     // gate prior
  float balance = 0.8f;   // KL balancing
  float gamma = 0.99f;    // scales the discount head target

  int z_total() const { return categorical ? groups * classes : z_width; }
  int feat_dim() const {
    return variant_has_recurrent(variant) ? h_width + z_total() : state_width;
  }
};

// Compact model state: [h, z] for rssm/vsg, a single stochastic s for
// svsg/ssm (kept in z with h undefined).
struct ModelState {
  Tensor h;
  Tensor z;

  Tensor feat() const { return h.defined() ? concat_cols(h, z) : z; }
  ModelState detach() const { return {h.defined() ? h.detach() : Tensor(), z.detach()}; }
  int batch() const { return z.dim(0); }
};

class WorldModel {
 public:
  WorldModelConfig cfg;
  ParamRegistry params;

  ConvEncoder encoder;
  ConvDecoder decoder;
  Mlp reward_head;
  Mlp discount_head;
  Linear input_embed;  // [z_prev, a_prev] for rssm/vsg, a_prev for svsg/ssm

  GruCell gru;
  VsgCell vsg;
  SvsgCell svsg;
  SsmCell ssm;
  Mlp prior_head;  // rssm/vsg latent heads over h
  Mlp post_head;   // over [h, embed]

  WorldModel(const WorldModelConfig& c, Rng& rng) : cfg(c) {
    encoder = ConvEncoder(params, "encoder", cfg.resolution, cfg.cnn_depth, rng);
    const int feat = cfg.feat_dim();
    decoder = ConvDecoder(params, "decoder", feat, cfg.resolution, cfg.cnn_depth, rng);
    reward_head = Mlp(params, "reward", feat, cfg.mlp_units, cfg.mlp_layers, 1, rng);
    discount_head = Mlp(params, "discount", feat, cfg.mlp_units, cfg.mlp_layers, 1, rng);

    const int embed = encoder.embed_dim;
    if (variant_has_recurrent(cfg.variant)) {
      input_embed = Linear(params, "input_embed", cfg.z_total() + cfg.action_dim,
                           cfg.h_width, rng);
      const int latent_out = cfg.categorical ? cfg.groups * cfg.classes : 2 * cfg.z_width;
      prior_head = Mlp(params, "prior", cfg.h_width, cfg.mlp_units, 1, latent_out, rng);
      post_head = Mlp(params, "post", cfg.h_width + embed, cfg.mlp_units, 1, latent_out, rng);
      if (cfg.variant == Variant::kVsg)
        vsg = VsgCell(params, "cell", cfg.h_width, cfg.h_width, rng);
      else
        gru = GruCell(params, "cell", cfg.h_width, cfg.h_width, rng);
    } else {
      input_embed = Linear(params, "input_embed", cfg.action_dim, cfg.state_width, rng);
      if (cfg.variant == Variant::kSvsg)
        svsg = SvsgCell(params, "cell", cfg.state_width, cfg.state_width, embed,
                        cfg.mlp_units, rng);
      else
        ssm = SsmCell(params, "cell", cfg.state_width, cfg.state_width, embed,
                      cfg.mlp_units, rng);
    }
  }

  ModelState initial_state(int batch) const {
    if (variant_has_recurrent(cfg.variant))
      return {Tensor::zeros({batch, cfg.h_width}), Tensor::zeros({batch, cfg.z_total()})};
    return {Tensor(), Tensor::zeros({batch, cfg.state_width})};
  }

  // Normalized images [N,3,H,W] -> [N, embed].
  Tensor encode(const Tensor& images) const { return encoder(images); }
  Tensor decode(const Tensor& feat) const { return decoder(feat); }

  Tensor reward_mean(const Tensor& feat) const { return reward_head(feat); }
  Tensor discount_prob(const Tensor& feat) const {
    return clamp_op(sigmoid(discount_head(feat)), kProbEps, 1.0f - kProbEps);
  }

  struct Step {
    ModelState state;        // posterior state for obs_step, prior state for img_step
    ModelState prior_state;  // svsg exposes both branches of the shared gate
    Dist prior;
    Dist post;          // valid for obs_step only
    Tensor gate_prob;   // vsg/svsg
    Tensor gate_u;      // vsg/svsg
  };

  Step obs_step(const ModelState& prev, const Tensor& a_prev, const Tensor& obs_embed,
                Rng& rng) const {
    VSG_CHECK(obs_embed.defined(), "obs_step: observation embedding required");
    Step out;
    switch (cfg.variant) {
      case Variant::kRssm:
      case Variant::kVsg: {
        Tensor h = recurrent_step(prev, a_prev, rng, &out);
        Dist prior = latent_dist(prior_head(h));
        Dist post = latent_dist(post_head(concat_cols(h, obs_embed)));
        out.state = {h, latent_sample(post, rng)};
        out.prior = prior;
        out.post = post;
        break;
      }
      case Variant::kSvsg: {
        Tensor i = elu(input_embed(a_prev));
        auto o = svsg.step_posterior(prev.z, i, obs_embed, rng);
        out.state = {Tensor(), o.post_state};
        out.prior_state = {Tensor(), o.prior_state};
        out.prior = o.prior;
        out.post = o.post;
        out.gate_prob = o.gates.u_tilde;
        out.gate_u = o.gates.u;
        break;
      }
      case Variant::kSsm: {
        Tensor i = elu(input_embed(a_prev));
        auto o = ssm.step_posterior(prev.z, i, obs_embed, rng);
        out.state = {Tensor(), o.post_state};
        out.prior_state = {Tensor(), o.prior_state};
        out.prior = o.prior;
        out.post = o.post;
        break;
      }
    }
    return out;
  }

  Step img_step(const ModelState& prev, const Tensor& a_prev, Rng& rng,
                bool sample = true) const {
    Step out;
    switch (cfg.variant) {
      case Variant::kRssm:
      case Variant::kVsg: {
        Tensor h = recurrent_step(prev, a_prev, rng, &out);
        Dist prior = latent_dist(prior_head(h));
        out.state = {h, sample ? latent_sample(prior, rng) : latent_mode(prior)};
        out.prior = prior;
        break;
      }
      case Variant::kSvsg: {
        Tensor i = elu(input_embed(a_prev));
        auto o = svsg.step_prior(prev.z, i, rng, sample);
        out.state = {Tensor(), o.prior_state};
        out.prior = o.prior;
        out.gate_prob = o.gates.u_tilde;
        out.gate_u = o.gates.u;
        break;
      }
      case Variant::kSsm: {
        Tensor i = elu(input_embed(a_prev));
        auto o = ssm.step_prior(prev.z, i, rng, sample);
        out.state = {Tensor(), o.prior_state};
        out.prior = o.prior;
        break;
      }
    }
    return out;
  }

  struct Losses {
    Tensor total;
    Tensor image_nll, reward_nll, discount_nll, kl, sparsity;  // unweighted terms
    float image_mse = 0;   // residual-only diagnostic
    float gate_mean = 0;   // mean gate probability over batch/time
  };

  struct ObserveOut {
    std::vector<ModelState> posts;  // length L
    Losses losses;
  };

  // Posterior unroll over a [B, L] slice with the Eq.-style decomposition:
  // total = image + reward + discount + beta*kl + alpha*sparsity.
  ObserveOut observe(const SeqBatch& batch, Rng& rng) const {
    const int B = batch.batch, L = batch.length;
    VSG_CHECK(L > 0 && static_cast<int>(batch.obs.size()) == L, "observe: bad batch");

    Tensor all_obs = concat_rows(batch.obs);  // [L*B, 3, H, W]
    Tensor all_embed = encode(all_obs);       // [L*B, E]

    ObserveOut out;
    ModelState state = initial_state(B);
    Tensor kl_sum = Tensor::scalar(0.f);
    Tensor sparsity_sum = Tensor::scalar(0.f);
    double gate_acc = 0.0;
    const bool gated = variant_has_gates(cfg.variant);
    for (int t = 0; t < L; ++t) {
      Tensor embed_t = slice_rows(all_embed, t * B, B);
      Step step = obs_step(state, batch.act_prev[t], embed_t, rng);
      Tensor kl_t;
      if (cfg.variant == Variant::kSvsg) {
        kl_t = masked_balanced_gaussian_kl(std::get<DiagGaussian>(step.post),
                                           std::get<DiagGaussian>(step.prior),
                                           stopgrad(step.gate_u), cfg.balance);
      } else {
        kl_t = balanced_kl(step.post, step.prior, cfg.balance);
      }
      kl_sum = add(kl_sum, kl_t);
      if (gated) {
        sparsity_sum = add(sparsity_sum, bernoulli_kl(step.gate_prob, cfg.kappa));
        const auto& gp = step.gate_prob.vec();
        double acc = 0;
        for (float v : gp) acc += v;
        gate_acc += acc / static_cast<double>(gp.size());
      }
      state = step.state;
      out.posts.push_back(state);
    }

    std::vector<Tensor> feats;
    feats.reserve(L);
    for (const auto& s : out.posts) feats.push_back(s.feat());
    Tensor all_feat = concat_rows(feats);  // [L*B, F]

    const int pix = 3 * cfg.resolution * cfg.resolution;
    Tensor dec = decode(all_feat);
    Tensor dec_flat = reshape(dec, {L * B, pix});
    Tensor target_flat = reshape(all_obs, {L * B, pix});
    Tensor image_nll = mean_all(gaussian_nll_unit(dec_flat, target_flat));

    Tensor rhat = reward_mean(all_feat);  // [L*B, 1]
    Tensor reward_target = concat_rows(batch.reward);
    Tensor reward_nll = mean_all(gaussian_nll_unit(rhat, reward_target));

    Tensor ghat = discount_prob(all_feat);
    Tensor discount_target = concat_rows(batch.discount_target);
    Tensor discount_nll = mean_all(sum_cols(bernoulli_nll(ghat, discount_target)));

    const float invL = 1.0f / static_cast<float>(L);
    Tensor kl = mul_scalar(kl_sum, invL);
    Tensor sparsity = gated ? mul_scalar(sparsity_sum, invL) : Tensor::scalar(0.f);

    Tensor total = add(
        add(add(image_nll, reward_nll), discount_nll),
        add(mul_scalar(kl, cfg.beta), mul_scalar(sparsity, cfg.alpha)));

    double mse = 0;
    for (int64_t i = 0; i < dec_flat.size(); ++i) {
      const double d = dec_flat.data()[i] - target_flat.data()[i];
      mse += d * d;
    }

    out.losses = {total,    image_nll, reward_nll,
                  discount_nll, kl,    sparsity,
                  static_cast<float>(mse / static_cast<double>(L * B)),
                  gated ? static_cast<float>(gate_acc / L) : 0.0f};
    return out;
  }

  struct Imagined {
    std::vector<Tensor> feats;          // H entries of [N, F]
    std::vector<Tensor> actions;        // H entries of [N, A]
    std::vector<Tensor> reward_means;   // H entries of [N, 1]
    std::vector<Tensor> discount_probs; // H entries of [N, 1]
  };

  using ActionSampler = std::function<Tensor(const Tensor& feat, Rng& rng)>;

  // Prior-only rollout; there is deliberately no observation input. The
  // start state is cut from the observation graph at the boundary.
  Imagined imagine(const ModelState& start, const ActionSampler& actor, int horizon,
                   Rng& rng) const {
    Imagined out;
    ModelState state = start.detach();
    for (int t = 0; t < horizon; ++t) {
      Tensor action = actor(state.feat(), rng);
      Step step = img_step(state, action, rng);
      state = step.state;
      Tensor feat = state.feat();
      out.feats.push_back(feat);
      out.actions.push_back(action);
      out.reward_means.push_back(reward_mean(feat));
      out.discount_probs.push_back(discount_prob(feat));
    }
    return out;
  }

  // Posterior inference on `context` frames, then `future` prior steps with
  // the recorded actions; decodes all context+future frames per rollout.
  // Returns [n_rollouts][context+future] decoded images [1, 3, H, W].
  std::vector<std::vector<Tensor>> open_loop_rollout(const SeqBatch& episode, int context,
                                                     int future, int n_rollouts,
                                                     Rng& rng) const {
    VSG_CHECK(episode.batch == 1, "open_loop_rollout: expects a single sequence");
    VSG_CHECK(episode.length >= context + future, "open_loop_rollout: episode length ",
              episode.length, " < ", context + future);
    NoGrad ng;
    Rng post_rng = rng.fork(0x706f7374);

    std::vector<Tensor> context_feats;
    ModelState state = initial_state(1);
    for (int t = 0; t < context; ++t) {
      Tensor embed = encode(episode.obs[t]);
      Step step = obs_step(state, episode.act_prev[t], embed, post_rng);
      state = step.state;
      context_feats.push_back(state.feat());
    }

    std::vector<std::vector<Tensor>> rollouts;
    for (int r = 0; r < n_rollouts; ++r) {
      Rng roll_rng = rng.fork(1000 + r);
      ModelState s = state;
      std::vector<Tensor> feats = context_feats;
      for (int t = context; t < context + future; ++t) {
        Step step = img_step(s, episode.act_prev[t], roll_rng);
        s = step.state;
        feats.push_back(s.feat());
      }
      std::vector<Tensor> frames;
      frames.reserve(feats.size());
      for (auto& f : feats) frames.push_back(decode(f));
      rollouts.push_back(std::move(frames));
    }
    return rollouts;
  }

 private:
  Tensor recurrent_step(const ModelState& prev, const Tensor& a_prev, Rng& rng,
                        Step* out) const {
    Tensor i = elu(input_embed(concat_cols(prev.z, a_prev)));
    if (cfg.variant == Variant::kVsg) {
      auto o = vsg.step(prev.h, i, rng);
      out->gate_prob = o.gates.u_tilde;
      out->gate_u = o.gates.u;
      return o.h;
    }
    return gru.step(prev.h, i);
  }

  Dist latent_dist(const Tensor& raw) const {
    if (cfg.categorical) return Categorical{raw, cfg.groups, cfg.classes};
    return Dist(gaussian_from_raw(slice_cols(raw, 0, cfg.z_width),
                                  slice_cols(raw, cfg.z_width, cfg.z_width)));
  }

  Tensor latent_sample(const Dist& d, Rng& rng) const {
    if (std::holds_alternative<Categorical>(d))
      return categorical_sample_st(std::get<Categorical>(d), rng);
    return gaussian_rsample(std::get<DiagGaussian>(d), rng);
  }

  Tensor latent_mode(const Dist& d) const {
    if (std::holds_alternative<Categorical>(d)) return std::get<Categorical>(d).probs();
    return std::get<DiagGaussian>(d).mean;
  }
};

}  // namespace vsg
