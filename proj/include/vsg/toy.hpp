#pragma once

#include "vsg/bbs.hpp"

namespace vsg {

// Point-mass reach task: a white agent dot accelerates toward a green target
// on a small allocentric arena; reward is dense in distance. Stands in for a
// continuous-control suite at desk scale.
struct ToyConfig {
  int resolution = 16;
  int max_steps = 60;
  double arena = 8.0;
  double max_accel = 6.0;
  double vel_keep = 0.8;      // velocity retained per step after the kick
  double dt = 0.1;
  double reward_range = 3.0;  // reward = max(0, 1 - dist/reward_range)
  double agent_radius = 0.55;
  double target_radius = 0.85;
};

class ToyReachEnv : public Env {
 public:
  explicit ToyReachEnv(const ToyConfig& cfg) : cfg_(cfg) {}

  const ToyConfig& config() const { return cfg_; }

  int action_dim() const override { return 2; }
  int resolution() const override { return cfg_.resolution; }

  std::vector<uint8_t> reset(uint64_t seed) override {
    rng_ = Rng(seed ^ 0x70f000000000000full);
    const double m = 1.0;
    pos_ = {rng_.uniform(m, cfg_.arena - m), rng_.uniform(m, cfg_.arena - m)};
    vel_ = {0, 0};
    do {
      target_ = {rng_.uniform(m, cfg_.arena - m), rng_.uniform(m, cfg_.arena - m)};
    } while ((target_ - pos_).norm() < cfg_.arena * 0.3);
    steps_ = 0;
    done_ = false;
    return render();
  }

  EnvStep step(const std::vector<float>& action) override {
    VSG_CHECK(!done_, "toy step: episode is done, call reset");
    VSG_CHECK(action.size() == 2, "toy step: expected 2-dim action");
    const double ax = std::clamp(static_cast<double>(action[0]), -1.0, 1.0) * cfg_.max_accel;
    const double ay = std::clamp(static_cast<double>(action[1]), -1.0, 1.0) * cfg_.max_accel;
    vel_ = (vel_ + Vec2{ax, ay} * cfg_.dt) * cfg_.vel_keep;
    pos_ = pos_ + vel_ * cfg_.dt;
    const double r = cfg_.agent_radius;
    if (pos_.x < r) { pos_.x = r; vel_.x = 0; }
    if (pos_.x > cfg_.arena - r) { pos_.x = cfg_.arena - r; vel_.x = 0; }
    if (pos_.y < r) { pos_.y = r; vel_.y = 0; }
    if (pos_.y > cfg_.arena - r) { pos_.y = cfg_.arena - r; vel_.y = 0; }
    ++steps_;
    done_ = steps_ >= cfg_.max_steps;
    EnvStep out;
    const double dist = (target_ - pos_).norm();
    out.reward = static_cast<float>(std::max(0.0, 1.0 - dist / cfg_.reward_range));
    out.done = done_;
    out.obs = render();
    return out;
  }

  Vec2 pos() const { return pos_; }
  Vec2 vel() const { return vel_; }
  Vec2 target() const { return target_; }

  // Proportional-derivative reference controller used as the probe baseline.
  std::vector<float> controller_action() const {
    const Vec2 err = target_ - pos_;
    const double ax = 1.2 * err.x - 0.5 * vel_.x;
    const double ay = 1.2 * err.y - 0.5 * vel_.y;
    return {static_cast<float>(std::clamp(ax, -1.0, 1.0)),
            static_cast<float>(std::clamp(ay, -1.0, 1.0))};
  }

 private:
  std::vector<uint8_t> render() const {
    const int res = cfg_.resolution;
    std::vector<uint8_t> img(static_cast<size_t>(res) * res * 3);
    const double px_size = cfg_.arena / res;
    for (int py = 0; py < res; ++py) {
      const double wy = cfg_.arena - (py + 0.5) * px_size;
      for (int px = 0; px < res; ++px) {
        const double wx = (px + 0.5) * px_size;
        uint8_t rgb[3] = {24, 24, 30};
        const Vec2 p{wx, wy};
        if (std::fabs(p.x - target_.x) <= cfg_.target_radius &&
            std::fabs(p.y - target_.y) <= cfg_.target_radius) {
          rgb[0] = 52; rgb[1] = 190; rgb[2] = 84;
        }
        if ((p - pos_).norm() <= cfg_.agent_radius) {
          rgb[0] = 235; rgb[1] = 235; rgb[2] = 235;
        }
        uint8_t* dst = img.data() + (static_cast<size_t>(py) * res + px) * 3;
        dst[0] = rgb[0]; dst[1] = rgb[1]; dst[2] = rgb[2];
      }
    }
    return img;
  }

  ToyConfig cfg_;
  Rng rng_{0};
  Vec2 pos_, vel_, target_;
  int steps_ = 0;
  bool done_ = false;
};

}  // namespace vsg
