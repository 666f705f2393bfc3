#pragma once

#include <vector>

#include "vsg/tensor.hpp"

namespace vsg {

// Time-major training slice. obs[t] is normalized pixels [B,3,H,W];
// act_prev[t] is the action that led into step t; reward[t] the reward
// received with obs[t]; discount_target[t] = gamma * (1 - terminal_t).
struct SeqBatch {
  int batch = 0;
  int length = 0;
  std::vector<Tensor> obs;
  std::vector<Tensor> act_prev;
  std::vector<Tensor> reward;
  std::vector<Tensor> discount_target;
};

}  // namespace vsg
