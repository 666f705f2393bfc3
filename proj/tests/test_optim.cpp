#include <gtest/gtest.h>

#include <cmath>

#include "vsg/ops.hpp"
#include "vsg/optim.hpp"
#include "vsg/random.hpp"

using namespace vsg;

TEST(ClipGlobalNorm, BelowThresholdUnchanged) {
  Tensor p = Tensor::zeros({2}, true);
  p.grad()[0] = 30.f;
  p.grad()[1] = 40.f;  // norm 50
  clip_global_norm({p}, 100.0);
  EXPECT_FLOAT_EQ(p.grad()[0], 30.f);
  EXPECT_FLOAT_EQ(p.grad()[1], 40.f);
}

TEST(ClipGlobalNorm, ProportionalScaling) {
  Tensor p = Tensor::zeros({2}, true);
  p.grad()[0] = 300.f;
  p.grad()[1] = 400.f;  // norm 500
  double norm = clip_global_norm({p}, 100.0);
  EXPECT_NEAR(norm, 500.0, 1e-6);
  EXPECT_NEAR(p.grad()[0], 60.f, 1e-4);
  EXPECT_NEAR(p.grad()[1], 80.f, 1e-4);
}

TEST(ClipGlobalNorm, PostClipNormBoundedAndIdempotent) {
  Rng rng(5);
  std::vector<Tensor> params;
  for (int k = 0; k < 3; ++k) {
    Tensor p = Tensor::zeros({17}, true);
    for (int i = 0; i < 17; ++i) p.grad()[i] = static_cast<float>(rng.normal() * 40.0);
    params.push_back(p);
  }
  clip_global_norm(params, 100.0);
  double sq = 0;
  for (auto& p : params)
    for (float g : p.grad_vec()) sq += static_cast<double>(g) * g;
  EXPECT_LE(std::sqrt(sq), 100.0 + 1e-4);

  auto before = params[0].grad_vec();
  clip_global_norm(params, 100.0);
  for (size_t i = 0; i < before.size(); ++i)
    EXPECT_NEAR(params[0].grad()[i], before[i], std::fabs(before[i]) * 1e-5 + 1e-7);
}

TEST(Adam, ZeroGradZeroDecayLeavesParams) {
  Tensor p = Tensor::from_data({2}, {1.f, -2.f}, true);
  p.zero_grad();
  Adam opt({p}, {.lr = 0.1f, .weight_decay = 0.f});
  opt.step();
  EXPECT_FLOAT_EQ(p.data()[0], 1.f);
  EXPECT_FLOAT_EQ(p.data()[1], -2.f);
}

TEST(Adam, FirstStepClosedForm) {
  // Single scalar, lr=0.1, g=1, no decay. From the recurrences:
  //   m1 = 0.1, v1 = 0.001, mhat = 1, vhat = 1,
  //   theta1 = theta0 - lr * 1 / (sqrt(1) + eps).
  Tensor p = Tensor::from_data({1}, {0.5f}, true);
  p.grad()[0] = 1.f;
  Adam opt({p}, {.lr = 0.1f, .eps = 1e-5f, .weight_decay = 0.f});
  opt.step();
  const float expect = 0.5f - 0.1f * 1.0f / (1.0f + 1e-5f);
  EXPECT_NEAR(p.data()[0], expect, 1e-7);
}

TEST(Adam, ConstantGradientDescends) {
  Tensor p = Tensor::from_data({1}, {0.f}, true);
  Adam opt({p}, {.lr = 0.01f, .weight_decay = 0.f});
  for (int i = 0; i < 50; ++i) {
    p.zero_grad();
    p.grad()[0] = 2.f;
    opt.step();
  }
  EXPECT_LT(p.data()[0], -0.3f);  // moves opposite sign(g)
}

TEST(Adam, NonFiniteGradientSkipsUpdate) {
  Tensor p = Tensor::from_data({2}, {1.f, 1.f}, true);
  p.grad()[0] = std::nanf("");
  p.grad()[1] = 1.f;
  Adam opt({p}, {.lr = 0.1f});
  auto res = opt.step();
  EXPECT_TRUE(res.skipped);
  EXPECT_EQ(opt.skipped_updates(), 1);
  EXPECT_EQ(opt.step_count(), 0);
  EXPECT_FLOAT_EQ(p.data()[0], 1.f);
  EXPECT_FLOAT_EQ(p.data()[1], 1.f);
}

TEST(Adam, DecoupledWeightDecayShrinksWithoutGradient) {
  Tensor p = Tensor::from_data({1}, {1.f}, true);
  p.zero_grad();
  Adam opt({p}, {.lr = 0.1f, .weight_decay = 0.1f});
  opt.step();
  EXPECT_NEAR(p.data()[0], 1.f - 0.1f * 0.1f, 1e-6);
}

TEST(ParamRegistry, DuplicateNamesRejected) {
  ParamRegistry reg;
  reg.add("w", Tensor::zeros({2}));
  EXPECT_THROW(reg.add("w", Tensor::zeros({2})), std::runtime_error);
  EXPECT_EQ(reg.numel(), 2);
}
