#include <gtest/gtest.h>

#include <cstdio>

#include "vsg/replay.hpp"

using namespace vsg;

namespace {

EpisodeRecord make_episode(int steps, int res, int a_dim, uint8_t fill, uint64_t seed = 0) {
  EpisodeRecord rec;
  rec.height = rec.width = res;
  rec.action_dim = a_dim;
  rec.seed = seed;
  const size_t frame = static_cast<size_t>(res) * res * 3;
  rec.observations.resize(frame * (steps + 1));
  for (int k = 0; k <= steps; ++k)
    std::fill(rec.observations.begin() + k * frame, rec.observations.begin() + (k + 1) * frame,
              static_cast<uint8_t>(fill + k));
  rec.actions.assign(static_cast<size_t>(steps) * a_dim, 0.25f);
  rec.rewards.resize(steps);
  for (int k = 0; k < steps; ++k) rec.rewards[k] = static_cast<float>(k);
  rec.terminals.assign(steps, 0);
  rec.terminals[steps - 1] = 1;
  return rec;
}

}  // namespace

TEST(ArrayFile, RoundTripBitExact) {
  std::vector<ArrayData> arrays;
  Rng rng(1);
  std::vector<float> f(31);
  for (auto& v : f) v = rng.normal_f();
  arrays.push_back(ArrayData::from_floats("weights", {31}, f));
  std::vector<uint8_t> b(17);
  for (auto& v : b) v = static_cast<uint8_t>(rng.next_below(256));
  arrays.push_back(ArrayData::from_bytes("pixels", {17}, b));

  const std::string path = "/tmp/vsg_test_arr.bin";
  write_array_file(path, arrays);
  auto back = read_array_file(path);
  ASSERT_EQ(back.size(), 2u);
  EXPECT_EQ(back[0].name, "weights");
  EXPECT_EQ(back[0].dtype, "f32");
  EXPECT_EQ(back[0].bytes, arrays[0].bytes);
  EXPECT_EQ(back[1].bytes, arrays[1].bytes);

  // Re-writing what was read produces identical bytes.
  const std::string path2 = "/tmp/vsg_test_arr2.bin";
  write_array_file(path2, back);
  std::ifstream f1(path, std::ios::binary), f2(path2, std::ios::binary);
  std::string s1((std::istreambuf_iterator<char>(f1)), std::istreambuf_iterator<char>());
  std::string s2((std::istreambuf_iterator<char>(f2)), std::istreambuf_iterator<char>());
  EXPECT_EQ(s1, s2);
  std::remove(path.c_str());
  std::remove(path2.c_str());
}

TEST(EpisodeRecord, SaveLoadRoundTrip) {
  EpisodeRecord rec = make_episode(9, 8, 2, 10, 42);
  rec.config_hash = 0xdeadbeef;
  const std::string path = "/tmp/vsg_test_episode.bin";
  rec.save(path);
  EpisodeRecord back = EpisodeRecord::load(path);
  EXPECT_EQ(back.observations, rec.observations);
  EXPECT_EQ(back.actions, rec.actions);
  EXPECT_EQ(back.rewards, rec.rewards);
  EXPECT_EQ(back.terminals, rec.terminals);
  EXPECT_EQ(back.seed, 42u);
  EXPECT_EQ(back.config_hash, 0xdeadbeefu);
  std::remove(path.c_str());
}

TEST(ReplayBuffer, EmptyBufferRejected) {
  ReplayBuffer buf;
  Rng rng(1);
  EXPECT_THROW(buf.sample(4, 8, 0.99f, rng), std::runtime_error);
}

TEST(ReplayBuffer, SingleExactLengthEpisodeAlwaysOffsetZero) {
  ReplayBuffer buf;
  // 49 steps -> 50 replay rows; sampling 50-row windows pins offset 0.
  buf.add(make_episode(49, 4, 2, 0));
  Rng rng(3);
  SeqBatch b = buf.sample(4, 50, 0.99f, rng);
  EXPECT_EQ(b.length, 50);
  // Row 0 of the window is the first observation: act_prev and reward zero.
  for (int i = 0; i < 4; ++i) {
    EXPECT_EQ(b.reward[0].data()[i], 0.f);
    EXPECT_EQ(b.act_prev[0].data()[i * 2], 0.f);
  }
  // Last row carries reward of transition 48.
  for (int i = 0; i < 4; ++i) EXPECT_EQ(b.reward[49].data()[i], 48.f);
}

TEST(ReplayBuffer, BatchShapesMatchConfig) {
  ReplayBuffer buf;
  buf.add(make_episode(60, 4, 3, 0));
  Rng rng(5);
  SeqBatch b = buf.sample(16, 50, 0.99f, rng);
  EXPECT_EQ(static_cast<int>(b.obs.size()), 50);
  EXPECT_EQ(b.obs[0].shape(), (Shape{16, 3, 4, 4}));
  EXPECT_EQ(b.act_prev[0].shape(), (Shape{16, 3}));
  EXPECT_EQ(b.reward[0].shape(), (Shape{16, 1}));
  EXPECT_EQ(b.discount_target[0].shape(), (Shape{16, 1}));
}

TEST(ReplayBuffer, ShortEpisodesAreResampledNotPadded) {
  ReplayBuffer buf;
  buf.add(make_episode(3, 4, 2, 0));    // too short for 10-row windows
  buf.add(make_episode(20, 4, 2, 100)); // eligible
  Rng rng(7);
  SeqBatch b = buf.sample(8, 10, 0.99f, rng);
  // Every sampled window must come from the long episode: its pixel values
  // are >= 100.
  for (int t = 0; t < 10; ++t)
    for (int64_t i = 0; i < b.obs[t].size(); ++i)
      ASSERT_GE(b.obs[t].data()[i], 100.f / 255.f - 0.5f - 1e-5f);
}

TEST(ReplayBuffer, EpisodeSelectionIsUniform) {
  ReplayBuffer buf;
  buf.add(make_episode(10, 4, 2, 0, 1));
  buf.add(make_episode(10, 4, 2, 200, 2));
  Rng rng(11);
  int first = 0;
  const int n = 100000;
  for (int i = 0; i < n; ++i) {
    SeqBatch b = buf.sample(1, 2, 0.99f, rng);
    if (b.obs[0].data()[0] < 0.0f) ++first;  // fill 0..10 -> negative normalized pixel
  }
  EXPECT_NEAR(static_cast<double>(first) / n, 0.5, 0.01);
}

TEST(ReplayBuffer, DiscountTargetsUseTerminals) {
  ReplayBuffer buf;
  buf.add(make_episode(5, 4, 2, 0));
  Rng rng(13);
  SeqBatch b = buf.sample(2, 6, 0.99f, rng);  // full episode window
  // Terminal on the last transition: final row's discount target is 0.
  for (int i = 0; i < 2; ++i) {
    EXPECT_FLOAT_EQ(b.discount_target[5].data()[i], 0.f);
    EXPECT_FLOAT_EQ(b.discount_target[1].data()[i], 0.99f);
  }
}

TEST(ReplayBuffer, CapacityEvictsOldestEpisodes) {
  ReplayBuffer buf(25);
  buf.add(make_episode(10, 4, 2, 0, 1));
  buf.add(make_episode(10, 4, 2, 0, 2));
  buf.add(make_episode(10, 4, 2, 0, 3));
  EXPECT_EQ(buf.size(), 2u);
  EXPECT_EQ(buf.episode(0).seed, 2u);
}
