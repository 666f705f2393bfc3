#include <gtest/gtest.h>

#include "vsg/conv.hpp"
#include "vsg/ops.hpp"
#include "vsg/random.hpp"

using namespace vsg;

TEST(Tensor, FactoryAndShape) {
  Tensor t = Tensor::zeros({2, 3});
  EXPECT_EQ(t.size(), 6);
  EXPECT_EQ(t.rank(), 2);
  Tensor f = Tensor::full({4}, 2.5f);
  for (int i = 0; i < 4; ++i) EXPECT_EQ(f.data()[i], 2.5f);
  EXPECT_THROW(Tensor::from_data({2, 2}, {1.f, 2.f, 3.f}), ShapeError);
}

TEST(Tensor, ElementaryForwardValues) {
  EXPECT_FLOAT_EQ(sigmoid(Tensor::scalar(0.f)).item(), 0.5f);
  EXPECT_FLOAT_EQ(tanh_op(Tensor::scalar(0.f)).item(), 0.0f);
  Tensor h = Tensor::zeros({2, 3});
  Tensor i = Tensor::zeros({2, 5});
  Tensor c = concat_cols(h, i);
  EXPECT_EQ(c.shape(), (Shape{2, 8}));
}

TEST(Tensor, ShapeMismatchDiagnosticsNamePrimitive) {
  Tensor a = Tensor::zeros({2, 3});
  Tensor b = Tensor::zeros({3, 3});
  try {
    add(a, b);
    FAIL() << "expected ShapeError";
  } catch (const ShapeError& e) {
    const std::string msg = e.what();
    EXPECT_NE(msg.find("add"), std::string::npos);
    EXPECT_NE(msg.find("(2,3)"), std::string::npos);
    EXPECT_NE(msg.find("(3,3)"), std::string::npos);
  }
  EXPECT_THROW(matmul(a, Tensor::zeros({2, 4})), ShapeError);
}

TEST(Tensor, QuadraticBackward) {
  Tensor w = Tensor::from_data({2}, {1.f, 2.f}, true);
  Tensor loss = sum_all(mul(w, w));
  loss.backward();
  EXPECT_FLOAT_EQ(w.grad()[0], 2.f);
  EXPECT_FLOAT_EQ(w.grad()[1], 4.f);
}

TEST(Tensor, SigmoidGradAtZero) {
  Tensor x = Tensor::scalar(0.f);
  x.set_requires_grad(true);
  Tensor y = sigmoid(x);
  y.backward();
  EXPECT_FLOAT_EQ(x.grad()[0], 0.25f);
}

TEST(Tensor, NonScalarBackwardRejected) {
  Tensor x = Tensor::zeros({2}, true);
  Tensor y = mul(x, x);
  EXPECT_THROW(y.backward(), std::runtime_error);
}

TEST(Tensor, BackwardTwiceIsDeterministic) {
  Rng rng(7);
  Tensor w = Tensor::zeros({4, 4}, true);
  Tensor x = Tensor::zeros({2, 4});
  for (int i = 0; i < 16; ++i) w.data()[i] = rng.normal_f();
  for (int i = 0; i < 8; ++i) x.data()[i] = rng.normal_f();

  auto run = [&] {
    Tensor y = tanh_op(matmul(x, w));
    Tensor loss = mean_all(mul(y, y));
    loss.backward();
    return w.grad_vec();
  };
  auto g1 = run();
  w.zero_grad();
  auto g2 = run();
  ASSERT_EQ(g1.size(), g2.size());
  for (size_t i = 0; i < g1.size(); ++i) EXPECT_EQ(g1[i], g2[i]) << "at " << i;
}

TEST(Tensor, GradAccumulatesAcrossFanout) {
  Tensor x = Tensor::scalar(3.f);
  x.set_requires_grad(true);
  Tensor loss = add(mul(x, x), x);  // x^2 + x -> 2x + 1 = 7
  loss.backward();
  EXPECT_FLOAT_EQ(x.grad()[0], 7.f);
}

TEST(Tensor, DetachCutsGraph) {
  Tensor x = Tensor::scalar(2.f);
  x.set_requires_grad(true);
  Tensor y = mul(x, x).detach();
  Tensor loss = mul(y, y);
  loss.backward();
  EXPECT_EQ(x.grad()[0], 0.f);
}

TEST(Tensor, NoGradModeSkipsGraph) {
  Tensor x = Tensor::scalar(2.f);
  x.set_requires_grad(true);
  {
    NoGrad ng;
    Tensor y = mul(x, x);
    EXPECT_FALSE(y.has_node());
  }
  Tensor y = mul(x, x);
  EXPECT_TRUE(y.has_node());
}

TEST(StraightThrough, ForwardBitIdentical) {
  Tensor sample = Tensor::from_data({2}, {1.f, 0.f});
  Tensor sur = Tensor::from_data({2}, {0.7f, 0.2f}, true);
  Tensor out = straight_through(sample, sur);
  EXPECT_EQ(out.data()[0], 1.f);
  EXPECT_EQ(out.data()[1], 0.f);
}

TEST(StraightThrough, IdentityGradientToSurrogate) {
  Tensor sample = Tensor::from_data({2}, {1.f, 0.f});
  Tensor sur = Tensor::from_data({2}, {0.7f, 0.2f}, true);
  Tensor loss = sum_all(straight_through(sample, sur));
  loss.backward();
  EXPECT_FLOAT_EQ(sur.grad()[0], 1.f);
  EXPECT_FLOAT_EQ(sur.grad()[1], 1.f);
}

TEST(StraightThrough, WeightedGradEqualsRelaxedForwardOracle) {
  Rng rng(11);
  Tensor sur = Tensor::zeros({8}, true);
  Tensor c = Tensor::zeros({8});
  Tensor sample = Tensor::zeros({8});
  for (int i = 0; i < 8; ++i) {
    sur.data()[i] = static_cast<float>(rng.uniform(0.05, 0.95));
    c.data()[i] = rng.normal_f();
    sample.data()[i] = rng.bernoulli(sur.data()[i]) ? 1.f : 0.f;
  }
  Tensor loss = sum_all(mul(straight_through(sample, sur), c));
  loss.backward();
  auto st_grad = sur.grad_vec();

  sur.zero_grad();
  Tensor relaxed_loss = sum_all(mul(sur, c));
  relaxed_loss.backward();
  for (int i = 0; i < 8; ++i) {
    EXPECT_EQ(st_grad[i], sur.grad()[i]);
    EXPECT_EQ(st_grad[i], c.data()[i]);
  }
}

TEST(StraightThrough, MismatchRejected) {
  EXPECT_THROW(straight_through(Tensor::zeros({2}), Tensor::zeros({3}, true)), ShapeError);
}

TEST(GateMix, HardZeroCopiesBitExact) {
  Rng rng(3);
  Tensor prev = Tensor::zeros({16});
  Tensor cand = Tensor::zeros({16});
  Tensor u = Tensor::zeros({16});
  for (int i = 0; i < 16; ++i) {
    prev.data()[i] = rng.normal_f() * 3.f;
    cand.data()[i] = rng.normal_f() * 3.f;
    u.data()[i] = (i % 2) ? 1.f : 0.f;
  }
  Tensor out = gate_mix(prev, cand, u);
  for (int i = 0; i < 16; ++i) {
    if (i % 2)
      EXPECT_FLOAT_EQ(out.data()[i], prev.data()[i] + (cand.data()[i] - prev.data()[i]));
    else
      EXPECT_EQ(out.data()[i], prev.data()[i]) << "hard copy must be bit-identical";
  }
}
