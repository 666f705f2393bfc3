#include <gtest/gtest.h>

#include <cstdio>

#include "grad_check.hpp"
#include "vsg/serialize.hpp"
#include "vsg/worldmodel.hpp"

using namespace vsg;
using gradcheck::rand_tensor;

namespace {

WorldModelConfig small_cfg(Variant v, int res = 16) {
  WorldModelConfig cfg;
  cfg.variant = v;
  cfg.resolution = res;
  cfg.cnn_depth = 4;
  cfg.h_width = 16;
  cfg.z_width = 8;
  cfg.state_width = 16;
  cfg.mlp_units = 16;
  cfg.mlp_layers = 1;
  cfg.action_dim = 2;
  return cfg;
}

SeqBatch synthetic_batch(int batch, int length, int res, int a_dim, Rng& rng,
                         bool zero_obs = false) {
  SeqBatch out;
  out.batch = batch;
  out.length = length;
  for (int t = 0; t < length; ++t) {
    Tensor obs = Tensor::zeros({batch, 3, res, res});
    if (!zero_obs)
      for (int64_t i = 0; i < obs.size(); ++i)
        obs.data()[i] = static_cast<float>(rng.uniform(-0.5, 0.5));
    out.obs.push_back(obs);
    out.act_prev.push_back(rand_tensor({batch, a_dim}, rng, -1, 1, false));
    out.reward.push_back(rand_tensor({batch, 1}, rng, -1, 1, false));
    out.discount_target.push_back(Tensor::full({batch, 1}, 0.99f));
  }
  return out;
}

}  // namespace

TEST(Encoder, DeterministicAndShapeByResolution) {
  for (int res : {16, 32, 64}) {
    Rng rng(1);
    ParamRegistry reg;
    ConvEncoder enc(reg, "enc", res, 4, rng);
    Rng drng(2);
    Tensor img = rand_tensor({2, 3, res, res}, drng, -0.5, 0.5, false);
    Tensor e1 = enc(img);
    Tensor e2 = enc(img);
    EXPECT_EQ(e1.shape(), (Shape{2, enc.embed_dim}));
    for (int64_t i = 0; i < e1.size(); ++i) EXPECT_EQ(e1.data()[i], e2.data()[i]);
  }
}

TEST(Encoder, WrongChannelCountRejected) {
  Rng rng(1);
  ParamRegistry reg;
  ConvEncoder enc(reg, "enc", 16, 4, rng);
  EXPECT_THROW(enc(Tensor::zeros({1, 4, 16, 16})), ShapeError);
  EXPECT_THROW(enc(Tensor::zeros({1, 3, 24, 24})), ShapeError);
}

TEST(Encoder, PixelGradientMatchesFiniteDifferences) {
  Rng rng(3);
  ParamRegistry reg;
  ConvEncoder enc(reg, "enc", 16, 2, rng);
  Tensor img = rand_tensor({1, 3, 16, 16}, rng, -0.5, 0.5);
  Tensor c = rand_tensor({1, enc.embed_dim}, rng, -1, 1, false);

  img.zero_grad();
  Tensor loss = sum_all(mul(enc(img), c));
  loss.backward();

  // Finite differences through the float forward on a random subset of
  // pixels; encoder outputs are smooth so 1e-2 steps in double replay of the
  // library forward are unnecessary -- reuse library forward at +-eps.
  Rng pick(5);
  for (int k = 0; k < 12; ++k) {
    const int64_t i = static_cast<int64_t>(pick.next_below(img.size()));
    const float keep = img.data()[i];
    const double eps = 1e-2;
    img.impl()->data[i] = keep + static_cast<float>(eps);
    const double fp = sum_all(mul(enc(img.detach()), c)).item();
    img.impl()->data[i] = keep - static_cast<float>(eps);
    const double fm = sum_all(mul(enc(img.detach()), c)).item();
    img.impl()->data[i] = keep;
    const double fd = (fp - fm) / (2 * eps);
    EXPECT_LT(refo::rel_err(img.grad()[i], fd, 1e-2), 2e-2) << "pixel " << i;
  }
}

TEST(WorldModel, ObserveLossDecompositionExact) {
  for (Variant v : {Variant::kRssm, Variant::kVsg, Variant::kSvsg, Variant::kSsm}) {
    Rng rng(11);
    WorldModel wm(small_cfg(v), rng);
    Rng drng(12);
    SeqBatch batch = synthetic_batch(2, 3, 16, 2, drng);
    Rng srng(13);
    auto out = wm.observe(batch, srng);
    const float expect =
        out.losses.image_nll.item() + out.losses.reward_nll.item() +
        out.losses.discount_nll.item() + wm.cfg.beta * out.losses.kl.item() +
        wm.cfg.alpha * out.losses.sparsity.item();
    EXPECT_NEAR(out.losses.total.item(), expect, 1e-5f * std::max(1.f, std::fabs(expect)))
        << variant_name(v);
    EXPECT_EQ(out.posts.size(), 3u);
  }
}

TEST(WorldModel, ZeroResidualImageLossIsNormalizationConstantOnly) {
  Rng rng(21);
  auto cfg = small_cfg(Variant::kRssm);
  WorldModel wm(cfg, rng);
  // Zero the decoder entirely: output is exactly 0 everywhere.
  auto zero = [](Tensor t) { std::fill(t.vec().begin(), t.vec().end(), 0.f); };
  zero(wm.decoder.in.w);
  zero(wm.decoder.in.b);
  for (auto& st : wm.decoder.stages) {
    zero(st.w);
    zero(st.b);
  }
  Rng drng(22);
  SeqBatch batch = synthetic_batch(2, 2, 16, 2, drng, /*zero_obs=*/true);
  Rng srng(23);
  auto out = wm.observe(batch, srng);
  const float pix = 3 * 16 * 16;
  EXPECT_NEAR(out.losses.image_nll.item(), 0.5f * kLogTwoPi * pix, 1e-3f);
  EXPECT_NEAR(out.losses.image_mse, 0.f, 1e-9f);
}

TEST(WorldModel, PosteriorForcedEqualToPriorGivesZeroKl) {
  Rng rng(31);
  auto cfg = small_cfg(Variant::kRssm);
  WorldModel wm(cfg, rng);
  // Copy prior head into the posterior head and cut the embedding rows, so
  // both heads compute identical distributions.
  auto& prior = wm.prior_head.layers;
  auto& post = wm.post_head.layers;
  const int h = cfg.h_width;
  std::fill(post[0].w.vec().begin(), post[0].w.vec().end(), 0.f);
  const int cols = post[0].w.dim(1);
  for (int r = 0; r < h; ++r)
    for (int c = 0; c < cols; ++c)
      post[0].w.data()[r * cols + c] = prior[0].w.data()[r * cols + c];
  post[0].b.vec() = prior[0].b.vec();
  post[1].w.vec() = prior[1].w.vec();
  post[1].b.vec() = prior[1].b.vec();

  Rng drng(32);
  SeqBatch batch = synthetic_batch(2, 3, 16, 2, drng);
  Rng srng(33);
  auto out = wm.observe(batch, srng);
  EXPECT_NEAR(out.losses.kl.item(), 0.f, 1e-5f);
}

TEST(MaskedKl, MatchesElementwiseEnumerationExactly) {
  // Handcrafted 2x2 instance. Only dims with mask=1 contribute.
  Tensor mq = Tensor::from_data({2, 2}, {0.5f, -1.0f, 0.3f, 0.8f});
  Tensor sq = Tensor::from_data({2, 2}, {0.9f, 1.2f, 0.7f, 1.1f});
  Tensor mp = Tensor::from_data({2, 2}, {0.0f, 0.5f, -0.2f, 1.0f});
  Tensor sp = Tensor::from_data({2, 2}, {1.0f, 0.8f, 1.3f, 0.9f});
  Tensor mask = Tensor::from_data({2, 2}, {1.f, 0.f, 0.f, 1.f});
  DiagGaussian q{mq, sq}, p{mp, sp};

  const float got = masked_balanced_gaussian_kl(q, p, mask, 0.8f).item();
  double expect = 0;
  const float* m = mask.data();
  for (int i = 0; i < 4; ++i) {
    if (m[i] != 1.f) continue;
    expect += refo::gaussian_kl(mq.data()[i], sq.data()[i], mp.data()[i], sp.data()[i]);
  }
  expect /= 2;  // mean over the batch of 2 rows
  EXPECT_NEAR(got, expect, 1e-6);

  Tensor none = Tensor::zeros({2, 2});
  EXPECT_EQ(masked_balanced_gaussian_kl(q, p, none, 0.8f).item(), 0.f);
}

TEST(WorldModel, SvsgMaskedKlZeroWhenGatesClosed) {
  Rng rng(41);
  auto cfg = small_cfg(Variant::kSvsg);
  WorldModel wm(cfg, rng);
  // Force all gates shut.
  const int sw = cfg.state_width;
  for (int j = 0; j < sw; ++j) wm.svsg.core.fused.b.data()[sw + j] = -1e9f;
  Rng drng(42);
  SeqBatch batch = synthetic_batch(2, 3, 16, 2, drng);
  Rng srng(43);
  auto out = wm.observe(batch, srng);
  EXPECT_EQ(out.losses.kl.item(), 0.f);
  // And the posterior state never moves off the zero initial state.
  for (auto& s : out.posts)
    for (int64_t i = 0; i < s.z.size(); ++i) EXPECT_EQ(s.z.data()[i], 0.f);
}

TEST(WorldModel, ImagineHorizonZeroEmptyAndSeedDeterminism) {
  Rng rng(51);
  WorldModel wm(small_cfg(Variant::kVsg), rng);
  ModelState start = wm.initial_state(3);
  auto actor = [](const Tensor& feat, Rng& r) {
    Tensor a = Tensor::zeros({feat.dim(0), 2});
    for (int64_t i = 0; i < a.size(); ++i) a.data()[i] = static_cast<float>(r.uniform(-1, 1));
    return a;
  };
  Rng r0(7);
  auto empty = wm.imagine(start, actor, 0, r0);
  EXPECT_TRUE(empty.feats.empty());

  auto run = [&] {
    Rng r(99);
    NoGrad ng;
    auto traj = wm.imagine(start, actor, 5, r);
    std::vector<float> flat;
    for (auto& f : traj.feats) flat.insert(flat.end(), f.vec().begin(), f.vec().end());
    return flat;
  };
  auto a = run(), b = run();
  EXPECT_EQ(a, b);
}

TEST(WorldModel, OpenLoopRolloutShapeAndSharedContext) {
  Rng rng(61);
  WorldModel wm(small_cfg(Variant::kVsg), rng);
  Rng drng(62);
  const int context = 4, future = 6, n_roll = 3;
  SeqBatch episode = synthetic_batch(1, context + future, 16, 2, drng);
  Rng srng(63);
  auto rollouts = wm.open_loop_rollout(episode, context, future, n_roll, srng);
  ASSERT_EQ(rollouts.size(), static_cast<size_t>(n_roll));
  for (auto& frames : rollouts) {
    ASSERT_EQ(frames.size(), static_cast<size_t>(context + future));
    EXPECT_EQ(frames[0].shape(), (Shape{1, 3, 16, 16}));
  }
  // Context frames identical across rollouts; divergence begins after.
  for (int t = 0; t < context; ++t)
    for (int r = 1; r < n_roll; ++r)
      for (int64_t i = 0; i < rollouts[0][t].size(); ++i)
        ASSERT_EQ(rollouts[0][t].data()[i], rollouts[r][t].data()[i]);
  double var_after = 0;
  for (int64_t i = 0; i < rollouts[0][context].size(); ++i) {
    double mean = 0;
    for (int r = 0; r < n_roll; ++r) mean += rollouts[r][context].data()[i];
    mean /= n_roll;
    for (int r = 0; r < n_roll; ++r) {
      const double d = rollouts[r][context].data()[i] - mean;
      var_after += d * d;
    }
  }
  EXPECT_GT(var_after, 0.0);
}

TEST(WorldModel, OpenLoopRejectsShortEpisode) {
  Rng rng(71);
  WorldModel wm(small_cfg(Variant::kVsg), rng);
  Rng drng(72);
  SeqBatch episode = synthetic_batch(1, 5, 16, 2, drng);
  Rng srng(73);
  EXPECT_THROW(wm.open_loop_rollout(episode, 4, 6, 2, srng), std::runtime_error);
}

TEST(Checkpoint, SaveLoadRoundTripBitExact) {
  Rng rng(81);
  WorldModel wm(small_cfg(Variant::kVsg), rng);
  const std::string path = "/tmp/vsg_test_ckpt.bin";
  save_checkpoint(path, {{"wm", &wm.params}},
                  {{"variant", "vsg"}, {"step", "17"}, {"config_hash", "abc123"}});
  auto loaded = load_checkpoint(path);
  EXPECT_EQ(loaded.manifest.meta.at("variant"), "vsg");
  EXPECT_EQ(loaded.manifest.meta.at("step"), "17");

  Rng rng2(82);  // different init
  WorldModel wm2(small_cfg(Variant::kVsg), rng2);
  loaded.apply("wm", wm2.params);
  for (size_t i = 0; i < wm.params.items().size(); ++i) {
    const auto& a = wm.params.items()[i].second;
    const auto& b = wm2.params.items()[i].second;
    for (int64_t j = 0; j < a.size(); ++j)
      ASSERT_EQ(a.data()[j], b.data()[j]) << wm.params.items()[i].first;
  }
  std::remove(path.c_str());
}

TEST(Checkpoint, ShapeMismatchRejected) {
  Rng rng(91);
  WorldModel wm(small_cfg(Variant::kVsg), rng);
  const std::string path = "/tmp/vsg_test_ckpt2.bin";
  save_checkpoint(path, {{"wm", &wm.params}}, {});
  auto loaded = load_checkpoint(path);
  auto cfg = small_cfg(Variant::kVsg);
  cfg.h_width = 24;
  Rng rng2(92);
  WorldModel other(cfg, rng2);
  EXPECT_THROW(loaded.apply("wm", other.params), std::runtime_error);
  std::remove(path.c_str());
}
