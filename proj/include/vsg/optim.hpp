#pragma once

#include <cmath>
#include <string>
#include <utility>
#include <vector>

#include "vsg/tensor.hpp"

namespace vsg {

// Insertion-ordered name -> parameter map. The order is the checkpoint and
// optimizer-state layout, so it must be deterministic across runs.
class ParamRegistry {
 public:
  Tensor add(const std::string& name, Tensor t) {
    for (auto& [n, _] : items_)
      VSG_CHECK(n != name, "duplicate parameter name: ", name);
    t.set_requires_grad(true);
    items_.emplace_back(name, t);
    return t;
  }

  const std::vector<std::pair<std::string, Tensor>>& items() const { return items_; }
  size_t size() const { return items_.size(); }

  Tensor find(const std::string& name) const {
    for (auto& [n, t] : items_)
      if (n == name) return t;
    fail("parameter not found: ", name);
  }

  std::vector<Tensor> tensors() const {
    std::vector<Tensor> out;
    out.reserve(items_.size());
    for (auto& [_, t] : items_) out.push_back(t);
    return out;
  }

  void zero_grad() {
    for (auto& [_, t] : items_) t.zero_grad();
  }

  int64_t numel() const {
    int64_t n = 0;
    for (auto& [_, t] : items_) n += t.size();
    return n;
  }

  // Copy values from another registry with identical layout (slow critic sync).
  void copy_values_from(const ParamRegistry& src) {
    VSG_CHECK(items_.size() == src.items_.size(), "copy_values_from: size mismatch");
    for (size_t i = 0; i < items_.size(); ++i) {
      VSG_CHECK(items_[i].second.size() == src.items_[i].second.size(),
                "copy_values_from: shape mismatch at ", items_[i].first);
      items_[i].second.vec() = src.items_[i].second.vec();
    }
  }

 private:
  std::vector<std::pair<std::string, Tensor>> items_;
};

// Scales all grads by max_norm/norm when the global L2 norm exceeds max_norm.
// Returns the pre-clip norm.
inline double clip_global_norm(const std::vector<Tensor>& params, double max_norm) {
  double sq = 0.0;
  for (const auto& p : params) {
    const auto& g = p.grad_vec();
    for (float v : g) sq += static_cast<double>(v) * v;
  }
  const double norm = std::sqrt(sq);
  if (norm > max_norm && norm > 0.0) {
    const float scale = static_cast<float>(max_norm / norm);
    for (const auto& p : params) {
      auto& impl = *p.impl();
      for (float& v : impl.grad) v *= scale;
    }
  }
  return norm;
}

struct AdamConfig {
  float lr = 1e-3f;
  float beta1 = 0.9f;
  float beta2 = 0.999f;
  float eps = 1e-5f;
  float weight_decay = 1e-6f;  // decoupled
};

class Adam {
 public:
  Adam(std::vector<Tensor> params, AdamConfig cfg) : cfg_(cfg), params_(std::move(params)) {
    m_.resize(params_.size());
    v_.resize(params_.size());
    for (size_t i = 0; i < params_.size(); ++i) {
      m_[i].assign(params_[i].size(), 0.0f);
      v_[i].assign(params_[i].size(), 0.0f);
    }
  }

  struct StepResult {
    bool skipped = false;
  };

  // Standard Adam with decoupled weight decay. A non-finite gradient skips
  // the whole update and leaves step count and moments untouched.
  StepResult step() {
    for (const auto& p : params_) {
      for (float g : p.grad_vec())
        if (!std::isfinite(g)) {
          ++skipped_updates_;
          return {true};
        }
    }
    ++step_count_;
    const float bc1 = 1.0f - std::pow(cfg_.beta1, static_cast<float>(step_count_));
    const float bc2 = 1.0f - std::pow(cfg_.beta2, static_cast<float>(step_count_));
    for (size_t i = 0; i < params_.size(); ++i) {
      auto& impl = *params_[i].impl();
      const float* g = impl.grad.data();
      float* w = impl.data.data();
      float* m = m_[i].data();
      float* v = v_[i].data();
      for (size_t j = 0; j < impl.data.size(); ++j) {
        m[j] = cfg_.beta1 * m[j] + (1.0f - cfg_.beta1) * g[j];
        v[j] = cfg_.beta2 * v[j] + (1.0f - cfg_.beta2) * g[j] * g[j];
        const float mh = m[j] / bc1;
        const float vh = v[j] / bc2;
        w[j] -= cfg_.lr * mh / (std::sqrt(vh) + cfg_.eps);
        w[j] -= cfg_.lr * cfg_.weight_decay * w[j];
      }
    }
    return {false};
  }

  void zero_grad() {
    for (auto& p : params_) p.zero_grad();
  }

  int64_t step_count() const { return step_count_; }
  int64_t skipped_updates() const { return skipped_updates_; }
  const AdamConfig& config() const { return cfg_; }

 private:
  AdamConfig cfg_;
  std::vector<Tensor> params_;
  std::vector<std::vector<float>> m_, v_;
  int64_t step_count_ = 0;
  int64_t skipped_updates_ = 0;
};

}  // namespace vsg
