#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <unordered_set>
#include <vector>

#include "vsg/check.hpp"

namespace vsg {

using Shape = std::vector<int>;

inline int64_t shape_numel(const Shape& s) {
  int64_t n = 1;
  for (int d : s) n *= d;
  return n;
}

inline std::string shape_str(const Shape& s) {
  std::string out = "(";
  for (size_t i = 0; i < s.size(); ++i) {
    if (i) out += ",";
    out += std::to_string(s[i]);
  }
  out += ")";
  return out;
}

inline bool same_shape(const Shape& a, const Shape& b) { return a == b; }

class Tensor;

// Grad mode: ops skip graph construction entirely when disabled (forward-only
// evaluation during collection / deterministic eval).
inline bool& grad_mode() {
  thread_local bool enabled = true;
  return enabled;
}

struct NoGrad {
  bool prev;
  NoGrad() : prev(grad_mode()) { grad_mode() = false; }
  ~NoGrad() { grad_mode() = prev; }
};

struct TensorImpl {
  Shape shape;
  std::vector<float> data;
  std::vector<float> grad;  // allocated on first use, same length as data
  bool requires_grad = false;
  // Graph node: parents plus a closure that routes this tensor's grad into
  // the parents' grads. Null for leaves and detached tensors.
  std::vector<std::shared_ptr<TensorImpl>> parents;
  std::function<void(TensorImpl&)> backward_fn;

  int64_t numel() const { return static_cast<int64_t>(data.size()); }

  void ensure_grad() {
    if (grad.size() != data.size()) grad.assign(data.size(), 0.0f);
  }
  void zero_grad() {
    if (!grad.empty()) std::fill(grad.begin(), grad.end(), 0.0f);
  }
};

class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(std::shared_ptr<TensorImpl> impl) : impl_(std::move(impl)) {}

  static Tensor zeros(Shape s, bool requires_grad = false) {
    auto impl = std::make_shared<TensorImpl>();
    impl->shape = std::move(s);
    impl->data.assign(shape_numel(impl->shape), 0.0f);
    impl->requires_grad = requires_grad;
    return Tensor(impl);
  }

  static Tensor full(Shape s, float v, bool requires_grad = false) {
    Tensor t = zeros(std::move(s), requires_grad);
    std::fill(t.impl_->data.begin(), t.impl_->data.end(), v);
    return t;
  }

  static Tensor scalar(float v) { return full({1}, v); }

  static Tensor from_data(Shape s, std::vector<float> d, bool requires_grad = false) {
    VSG_CHECK_SHAPE(static_cast<int64_t>(d.size()) == shape_numel(s),
                    "from_data: ", d.size(), " values for shape ", shape_str(s));
    auto impl = std::make_shared<TensorImpl>();
    impl->shape = std::move(s);
    impl->data = std::move(d);
    impl->requires_grad = requires_grad;
    return Tensor(impl);
  }

  bool defined() const { return static_cast<bool>(impl_); }
  const Shape& shape() const { return impl_->shape; }
  int dim(int i) const { return impl_->shape[static_cast<size_t>(i)]; }
  int rank() const { return static_cast<int>(impl_->shape.size()); }
  int64_t size() const { return impl_->numel(); }

  float* data() { return impl_->data.data(); }
  const float* data() const { return impl_->data.data(); }
  std::vector<float>& vec() { return impl_->data; }
  const std::vector<float>& vec() const { return impl_->data; }

  float item() const {
    VSG_CHECK(size() == 1, "item(): tensor has ", size(), " elements");
    return impl_->data[0];
  }

  bool requires_grad() const { return impl_->requires_grad; }
  void set_requires_grad(bool v) { impl_->requires_grad = v; }

  float* grad() {
    impl_->ensure_grad();
    return impl_->grad.data();
  }
  const std::vector<float>& grad_vec() const {
    impl_->ensure_grad();
    return impl_->grad;
  }
  void zero_grad() { impl_->zero_grad(); }

  bool has_node() const { return static_cast<bool>(impl_->backward_fn); }

  // Same values, cut out of the graph. Data is copied so later in-place
  // mutation of either side cannot alias.
  Tensor detach() const {
    auto impl = std::make_shared<TensorImpl>();
    impl->shape = impl_->shape;
    impl->data = impl_->data;
    impl->requires_grad = false;
    return Tensor(impl);
  }

  std::shared_ptr<TensorImpl> impl() const { return impl_; }

  // Reverse-mode sweep from a scalar. Grads accumulate; call zero_grad on
  // parameters between backward passes.
  void backward() const {
    VSG_CHECK(size() == 1, "backward: loss must be scalar, got shape ",
              shape_str(impl_->shape));
    // Topological order by iterative post-order DFS.
    std::vector<TensorImpl*> order;
    std::unordered_set<TensorImpl*> visited;
    struct Frame {
      TensorImpl* node;
      size_t next_parent;
    };
    std::vector<Frame> stack;
    if (impl_->backward_fn || impl_->requires_grad) {
      stack.push_back({impl_.get(), 0});
      visited.insert(impl_.get());
    }
    while (!stack.empty()) {
      Frame& f = stack.back();
      if (f.next_parent < f.node->parents.size()) {
        TensorImpl* p = f.node->parents[f.next_parent++].get();
        if ((p->backward_fn || p->requires_grad) && !visited.count(p)) {
          visited.insert(p);
          stack.push_back({p, 0});
        }
      } else {
        order.push_back(f.node);
        stack.pop_back();
      }
    }
    impl_->ensure_grad();
    impl_->grad[0] += 1.0f;
    for (auto it = order.rbegin(); it != order.rend(); ++it) {
      TensorImpl* node = *it;
      if (node->backward_fn) node->backward_fn(*node);
    }
  }

 private:
  std::shared_ptr<TensorImpl> impl_;
};

namespace detail {

// Builds the graph node for an op result. Parents that neither require grad
// nor sit on a grad path are still recorded (the closure may read their
// data), but the node is only created while grad mode is on and some parent
// is on a grad path.
inline bool any_grad_path(const std::vector<Tensor>& parents) {
  if (!grad_mode()) return false;
  for (const auto& p : parents)
    if (p.impl()->requires_grad || p.impl()->backward_fn) return true;
  return false;
}

inline Tensor make_op_result(Shape shape, std::vector<float> data,
                             std::vector<Tensor> parents,
                             std::function<void(TensorImpl&)> backward_fn) {
  Tensor out = Tensor::from_data(std::move(shape), std::move(data));
  if (any_grad_path(parents)) {
    auto& impl = *out.impl();
    impl.parents.reserve(parents.size());
    for (auto& p : parents) impl.parents.push_back(p.impl());
    impl.backward_fn = std::move(backward_fn);
    impl.requires_grad = true;
  }
  return out;
}

}  // namespace detail

}  // namespace vsg
