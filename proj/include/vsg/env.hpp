#pragma once

#include <cstdint>
#include <vector>

#include "vsg/check.hpp"

namespace vsg {

struct EnvStep {
  std::vector<uint8_t> obs;  // HWC uint8
  float reward = 0;
  bool done = false;
};

class Env {
 public:
  virtual ~Env() = default;
  virtual int action_dim() const = 0;
  virtual int resolution() const = 0;
  virtual std::vector<uint8_t> reset(uint64_t seed) = 0;
  virtual EnvStep step(const std::vector<float>& action) = 0;
};

// HWC uint8 -> CHW float in [-0.5, 0.5], the network input convention.
inline std::vector<float> normalize_obs(const std::vector<uint8_t>& obs, int res) {
  const int hw = res * res;
  std::vector<float> out(static_cast<size_t>(hw) * 3);
  for (int c = 0; c < 3; ++c)
    for (int p = 0; p < hw; ++p)
      out[static_cast<size_t>(c) * hw + p] = static_cast<float>(obs[p * 3 + c]) / 255.0f - 0.5f;
  return out;
}

}  // namespace vsg
