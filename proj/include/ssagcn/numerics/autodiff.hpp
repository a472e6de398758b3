#pragma once

// Tape-based reverse-mode differentiation over dense tensors.
//
// A Tape owns every intermediate value created while evaluating an
// expression. Each primitive appends its result node and, when any input
// requires a gradient, a backward closure. `Tape::backward` replays those
// closures in reverse order, accumulating adjoints into the nodes.

#include <cstddef>
#include <cstdint>
#include <deque>
#include <functional>
#include <span>
#include <vector>

#include "ssagcn/numerics/tensor.hpp"

namespace ssagcn::numerics {

class Tape;

// Lightweight handle to a node on a Tape. Copyable; valid while the tape lives.
class Var {
 public:
  Var() = default;
  Var(Tape* tape, std::size_t id) : tape_(tape), id_(id) {}

  bool defined() const noexcept { return tape_ != nullptr; }
  Tape& tape() const { return *tape_; }
  std::size_t id() const noexcept { return id_; }

  const Tensor& value() const;
  const Shape& shape() const { return value().shape(); }
  bool requires_grad() const;
  // Accumulated adjoint after backward(); zeros if the node received none.
  Tensor grad() const;

 private:
  Tape* tape_ = nullptr;
  std::size_t id_ = 0;
};

class Tape {
 public:
  // With `record` false no backward closures are stored (inference mode).
  explicit Tape(bool record = true) : record_(record) {}
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  Var constant(Tensor value);
  Var leaf(Tensor value);

  // Runs reverse accumulation from a scalar loss. Resets previous adjoints.
  void backward(const Var& loss);

  std::size_t num_nodes() const noexcept { return nodes_.size(); }
  std::size_t num_ops() const noexcept { return ops_.size(); }
  // Number of backward closures executed by the most recent backward().
  std::size_t ops_replayed() const noexcept { return ops_replayed_; }
  bool recording() const noexcept { return record_; }

  // Primitive-author interface.
  const Tensor& value(std::size_t id) const { return nodes_[id].value; }
  bool requires_grad(std::size_t id) const { return nodes_[id].requires_grad; }
  Tensor& grad(std::size_t id);
  Var push(Tensor value, bool requires_grad);
  void record(std::function<void()> backward_fn);

  // Piecewise primitives fold their branch choices (PReLU sign, max source,
  // clamp activity) into a running hash. Two evaluations with equal
  // signatures lie on the same smooth piece.
  void note_branch(std::uint64_t choice) noexcept {
    signature_ = (signature_ ^ choice) * 0x100000001b3ULL;
  }
  std::uint64_t branch_signature() const noexcept { return signature_; }

 private:
  struct Node {
    Tensor value;
    Tensor grad;
    bool requires_grad = false;
  };
  bool record_;
  std::deque<Node> nodes_;
  std::vector<std::function<void()>> ops_;
  std::size_t ops_replayed_ = 0;
  std::uint64_t signature_ = 0xcbf29ce484222325ULL;
};

struct Conv2dOptions {
  std::size_t stride_h = 1;
  std::size_t stride_w = 1;
  std::size_t pad_h = 0;
  std::size_t pad_w = 0;
};

// 2-D matrix product [m,k]x[k,n].
Var matmul(const Var& a, const Var& b);
Var transpose(const Var& a);
Var add(const Var& a, const Var& b);
Var sub(const Var& a, const Var& b);
Var mul(const Var& a, const Var& b);
Var scale(const Var& a, double factor);
// Adds `bias` (shape [last dim]) to every row of `x`.
Var add_bias(const Var& x, const Var& bias);
Var exp(const Var& a);
Var log(const Var& a);
Var tanh(const Var& a);
// Parametric ReLU; `slope` has one entry per index of `axis` (or a single entry).
Var prelu(const Var& x, const Var& slope, std::size_t axis);
// Softmax along the last axis.
Var softmax(const Var& x);
Var sum(const Var& x);
Var mean(const Var& x);
Var sum(const Var& x, std::size_t axis);
Var mean(const Var& x, std::size_t axis);
Var concat(std::span<const Var> parts, std::size_t axis);
// Stacks equally shaped tensors along a new axis.
Var stack(std::span<const Var> parts, std::size_t axis);
Var reshape(const Var& x, Shape shape);
// x [C,H,W], weight [O,C,KH,KW], bias [O] (may be undefined) -> [O,H',W'].
Var conv2d(const Var& x, const Var& weight, const Var& bias, const Conv2dOptions& opts);
// For each index i along `axis`, the mean (resp. elementwise max) over all
// other indices j != i. Zero when the axis has a single entry.
Var mean_others(const Var& x, std::size_t axis);
Var max_others(const Var& x, std::size_t axis);
// Sum over rows of the negative log-likelihood of `targets` [M,2] under the
// bivariate Gaussians parameterized by unconstrained `raw` [M,5]
// (mu_x, mu_y, log sigma_x, log sigma_y, atanh rho).
Var gaussian_nll(const Var& raw, const Tensor& targets);

}  // namespace ssagcn::numerics
