#pragma once

#include <deque>

#include "vsg/batch.hpp"
#include "vsg/random.hpp"
#include "vsg/serialize.hpp"

namespace vsg {

// One episode: T environment steps, T+1 observations. Observations are raw
// uint8 HWC pixels; everything else is float.
struct EpisodeRecord {
  int height = 0, width = 0;
  int action_dim = 0;
  std::vector<uint8_t> observations;  // (T+1, H, W, 3)
  std::vector<float> actions;         // (T, A)
  std::vector<float> rewards;         // (T,)
  std::vector<uint8_t> terminals;     // (T,), 1 when the episode ended by termination
  uint64_t seed = 0;
  uint64_t config_hash = 0;

  int steps() const { return static_cast<int>(rewards.size()); }
  int rows() const { return steps() + 1; }  // replay rows = observation count

  float total_reward() const {
    float acc = 0;
    for (float r : rewards) acc += r;
    return acc;
  }

  void validate() const {
    const int t = steps();
    const size_t frame = static_cast<size_t>(height) * width * 3;
    VSG_CHECK(observations.size() == frame * (t + 1), "episode: observation count mismatch");
    VSG_CHECK(actions.size() == static_cast<size_t>(t) * action_dim,
              "episode: action count mismatch");
    VSG_CHECK(terminals.size() == static_cast<size_t>(t), "episode: terminal count mismatch");
  }

  void save(const std::string& path) const {
    validate();
    const int t = steps();
    std::vector<ArrayData> arrays;
    arrays.push_back(ArrayData::from_bytes("observations", {t + 1, height, width, 3},
                                           observations));
    arrays.push_back(ArrayData::from_floats("actions", {t, action_dim}, actions));
    arrays.push_back(ArrayData::from_floats("rewards", {t}, rewards));
    arrays.push_back(ArrayData::from_bytes("terminals", {t}, terminals));
    ArrayData meta{"meta", "u64", {2}, {}};
    meta.bytes.resize(16);
    std::memcpy(meta.bytes.data(), &seed, 8);
    std::memcpy(meta.bytes.data() + 8, &config_hash, 8);
    arrays.push_back(std::move(meta));
    write_array_file(path, arrays);
  }

  static EpisodeRecord load(const std::string& path) {
    auto arrays = read_array_file(path);
    auto find = [&](const std::string& name) -> const ArrayData& {
      for (auto& a : arrays)
        if (a.name == name) return a;
      fail<IoError>("episode file missing array: ", name);
    };
    EpisodeRecord rec;
    const auto& obs = find("observations");
    VSG_CHECK(obs.extents.size() == 4 && obs.extents[3] == 3, "bad observations array");
    rec.height = static_cast<int>(obs.extents[1]);
    rec.width = static_cast<int>(obs.extents[2]);
    rec.observations = obs.bytes;
    const auto& act = find("actions");
    rec.action_dim = static_cast<int>(act.extents[1]);
    rec.actions = act.as_floats();
    rec.rewards = find("rewards").as_floats();
    rec.terminals = find("terminals").bytes;
    const auto& meta = find("meta");
    std::memcpy(&rec.seed, meta.bytes.data(), 8);
    std::memcpy(&rec.config_hash, meta.bytes.data() + 8, 8);
    rec.validate();
    return rec;
  }
};

// Builds the time-major tensor view of rows [start, start+length) of an
// episode. Row k pairs obs_k with the action/reward/terminal of the
// transition that led into it (zeros for the very first row).
inline void append_window(const EpisodeRecord& rec, int start, int length, float gamma,
                          std::vector<std::vector<float>>& obs,
                          std::vector<std::vector<float>>& act,
                          std::vector<std::vector<float>>& rew,
                          std::vector<std::vector<float>>& disc) {
  const int hw = rec.height * rec.width;
  const int a_dim = rec.action_dim;
  for (int j = 0; j < length; ++j) {
    const int k = start + j;
    // HWC uint8 -> CHW float in [-0.5, 0.5]
    const uint8_t* src = rec.observations.data() + static_cast<size_t>(k) * hw * 3;
    auto& o = obs[j];
    const size_t base = o.size();
    o.resize(base + static_cast<size_t>(hw) * 3);
    for (int c = 0; c < 3; ++c)
      for (int p = 0; p < hw; ++p)
        o[base + static_cast<size_t>(c) * hw + p] =
            static_cast<float>(src[p * 3 + c]) / 255.0f - 0.5f;
    auto& a = act[j];
    if (k == 0)
      a.insert(a.end(), a_dim, 0.0f);
    else
      a.insert(a.end(), rec.actions.begin() + static_cast<size_t>(k - 1) * a_dim,
               rec.actions.begin() + static_cast<size_t>(k) * a_dim);
    rew[j].push_back(k == 0 ? 0.0f : rec.rewards[k - 1]);
    disc[j].push_back(k == 0 ? gamma : gamma * (1.0f - static_cast<float>(rec.terminals[k - 1])));
  }
}

inline SeqBatch windows_to_batch(const std::vector<std::vector<float>>& obs,
                                 const std::vector<std::vector<float>>& act,
                                 const std::vector<std::vector<float>>& rew,
                                 const std::vector<std::vector<float>>& disc, int batch,
                                 int length, int res, int a_dim) {
  SeqBatch out;
  out.batch = batch;
  out.length = length;
  for (int t = 0; t < length; ++t) {
    out.obs.push_back(Tensor::from_data({batch, 3, res, res}, obs[t]));
    out.act_prev.push_back(Tensor::from_data({batch, a_dim}, act[t]));
    out.reward.push_back(Tensor::from_data({batch, 1}, rew[t]));
    out.discount_target.push_back(Tensor::from_data({batch, 1}, disc[t]));
  }
  return out;
}

inline SeqBatch episode_to_batch(const EpisodeRecord& rec, int start, int length,
                                 float gamma) {
  VSG_CHECK(rec.height == rec.width, "episode_to_batch: non-square observations");
  VSG_CHECK(start + length <= rec.rows(), "episode_to_batch: window out of range");
  std::vector<std::vector<float>> obs(length), act(length), rew(length), disc(length);
  append_window(rec, start, length, gamma, obs, act, rew, disc);
  return windows_to_batch(obs, act, rew, disc, 1, length, rec.height, rec.action_dim);
}

class ReplayBuffer {
 public:
  explicit ReplayBuffer(int64_t capacity_steps = 1'000'000)
      : capacity_steps_(capacity_steps) {}

  void add(EpisodeRecord rec) {
    rec.validate();
    total_steps_ += rec.steps();
    episodes_.push_back(std::move(rec));
    while (total_steps_ > capacity_steps_ && episodes_.size() > 1) {
      total_steps_ -= episodes_.front().steps();
      episodes_.pop_front();
    }
  }

  size_t size() const { return episodes_.size(); }
  int64_t total_steps() const { return total_steps_; }
  const EpisodeRecord& episode(size_t i) const { return episodes_[i]; }

  bool can_sample(int length) const {
    for (const auto& e : episodes_)
      if (e.rows() >= length) return true;
    return false;
  }

  // Uniform over episodes, then uniform over start offsets. Episodes shorter
  // than the window are resampled rather than padded.
  SeqBatch sample(int batch, int length, float gamma, Rng& rng) const {
    VSG_CHECK(!episodes_.empty(), "replay_sample: empty buffer");
    VSG_CHECK(can_sample(length), "replay_sample: no episode of length >= ", length);
    std::vector<std::vector<float>> obs(length), act(length), rew(length), disc(length);
    const int res = episodes_.front().height;
    const int a_dim = episodes_.front().action_dim;
    for (int b = 0; b < batch; ++b) {
      const EpisodeRecord* rec = nullptr;
      while (true) {
        rec = &episodes_[rng.next_below(episodes_.size())];
        if (rec->rows() >= length) break;
      }
      const int max_start = rec->rows() - length;
      const int start = static_cast<int>(rng.next_below(static_cast<uint64_t>(max_start) + 1));
      append_window(*rec, start, length, gamma, obs, act, rew, disc);
    }
    return windows_to_batch(obs, act, rew, disc, batch, length, res, a_dim);
  }

 private:
  std::deque<EpisodeRecord> episodes_;
  int64_t capacity_steps_;
  int64_t total_steps_ = 0;
};

}  // namespace vsg
