#ifndef CROPFORGE_AUTODIFF_HPP
#define CROPFORGE_AUTODIFF_HPP

#include <functional>
#include <memory>
#include <vector>

#include "cropforge/tensor.hpp"

namespace cropforge {

// Reverse-mode tape node. The forward value and accumulated gradient live in
// `tensor`; `backprop` pulls this node's gradient and scatters it into the
// parents' gradients. Parent links form a DAG (never cycles), so plain
// shared_ptr ownership is enough.
struct Node {
  Tensor tensor;
  bool requires_grad = false;
  std::vector<std::shared_ptr<Node>> parents;
  std::function<void(Node&)> backprop;
};

using NodePtr = std::shared_ptr<Node>;

// Shared handle to a graph node; copying shares the node, and constness of
// the handle does not propagate to it (pointer semantics).
class Var {
 public:
  Var() = default;
  explicit Var(Tensor value, bool requires_grad = false);

  bool valid() const { return node_ != nullptr; }
  Tensor& value() const { return node_->tensor; }
  const std::vector<double>& grad() const { return node_->tensor.grad(); }
  bool has_grad() const { return node_->tensor.has_grad(); }
  void zero_grad() const { node_->tensor.zero_grad(); }
  void drop_grad() const { node_->tensor.drop_grad(); }
  bool requires_grad() const { return node_->requires_grad; }

  const Shape& shape() const { return node_->tensor.shape(); }
  std::size_t size() const { return node_->tensor.size(); }

  // New leaf sharing a copy of the value; gradients do not flow past it.
  Var detach() const;

  NodePtr node() const { return node_; }

 private:
  friend Var make_op(Tensor, std::vector<Var>, std::function<void(Node&)>);
  NodePtr node_;
};

// Builds a graph node from a computed forward value. `backprop` is dropped
// when no parent requires gradients, so inference graphs stay cheap. Exposed
// so higher layers (and tests) can define custom differentiable ops.
Var make_op(Tensor value, std::vector<Var> parents, std::function<void(Node&)> backprop);

enum class Padding { kSame, kValid };

// --- layer primitives -------------------------------------------------------

// Cross-correlation plus bias. input [Cin,H,W], weights [Cout,Cin,k,k] with k
// odd, bias [Cout]. Same padding preserves H,W; valid padding yields
// H-k+1, W-k+1.
Var conv2d(const Var& input, const Var& weights, const Var& bias, Padding padding);

// Transposed convolution, stride 1, same padding (spatial size preserved).
// input [Cin,H,W], weights [Cin,Cout,k,k] with k odd, bias [Cout].
Var conv_transpose2d(const Var& input, const Var& weights, const Var& bias);

// 2x2 max pooling; H and W must be even. Ties route the gradient to the
// first element in row-major window order.
Var maxpool2d(const Var& input);

// Nearest-neighbour 2x upsampling; backward sums each 2x2 block.
Var upsample_nearest(const Var& input);

// Channel concatenation of [Ca,H,W] and [Cb,H,W].
Var concat_channels(const Var& a, const Var& b);

// Affine map W x + b. input [n], weights [m,n], bias [m].
Var fully_connected(const Var& input, const Var& weights, const Var& bias);

Var relu(const Var& input);
Var sigmoid(const Var& input);

// Reshape to rank-1 (same data order).
Var flatten(const Var& input);

// Same data order under a new shape of equal size.
Var reshape(const Var& input, Shape shape);

// --- scalar reductions ------------------------------------------------------

Var sum(const Var& input);
// sum_i w_i * x_i with constant weights; used by the gradient checker.
Var weighted_sum(const Var& input, const Tensor& projection);
Var sub(const Var& a, const Var& b);
// sum_i x_i^2
Var square_sum(const Var& input);
Var add_scaled(const Var& a, const Var& b, double b_scale);  // a + b_scale * b

// Runs reverse-mode accumulation from `root`, seeding with `upstream`.
void backward(const Var& root, const Tensor& upstream);
// Scalar convenience: seeds a size-1 root with 1.
void backward(const Var& root);

}  // namespace cropforge

#endif  // CROPFORGE_AUTODIFF_HPP
