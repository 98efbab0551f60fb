#pragma once

#include <initializer_list>
#include <span>
#include <vector>

#include "srnn/tensor.hpp"

namespace srnn {

// Reverse-mode autodiff over a dynamically recorded tape. A tape is built
// fresh for every forward pass and is confined to one thread; parameters
// (leaf tensors) outlive tapes and collect gradients across passes.
class Tape {
 public:
  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  static Tape* active();

  std::size_t size() const { return nodes_.size(); }

  // Fills grad slots of every leaf reachable from `loss` (a scalar).
  // With release_memory, interior values and grads are dropped as soon as
  // the reverse sweep no longer needs them; useful for long unrolls.
  void backward(const Tensor& loss, bool release_memory = false);

  void append(NodePtr n);

 private:
  std::vector<NodePtr> nodes_;
  friend struct TapeScope;
};

// Activates a tape for the current thread for the duration of a scope.
struct TapeScope {
  explicit TapeScope(Tape& t);
  ~TapeScope();
  TapeScope(const TapeScope&) = delete;
  TapeScope& operator=(const TapeScope&) = delete;

 private:
  Tape* prev_;
};

// Low-level recording hook: computes nothing, just registers an output with
// a custom pullback. The pullback receives the output node and must add into
// its parents' grads. Exposed so tests can record custom-gradient ops.
Tensor record(const char* op, std::vector<Tensor> inputs, Shape out_shape,
              std::vector<double> out_value,
              std::function<void(Node&, std::span<const NodePtr>)> pullback);

// ---- primitives ----------------------------------------------------------

Tensor matmul(const Tensor& a, const Tensor& b);   // [m,k] x [k,n] -> [m,n]
Tensor add(const Tensor& a, const Tensor& b);      // same shape, or scalar rhs
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);      // elementwise
Tensor add_rowvec(const Tensor& m, const Tensor& v);  // [r,c] + [c]
Tensor mul_rowvec(const Tensor& m, const Tensor& v);  // [r,c] * [c]
Tensor affine(const Tensor& x, double scale, double shift);  // scale*x + shift
Tensor scalar_mul(const Tensor& x, double c);
Tensor scalar_add(const Tensor& x, double c);
Tensor reciprocal(const Tensor& x);
Tensor exp_t(const Tensor& x);
Tensor sigmoid(const Tensor& x);
Tensor relu(const Tensor& x);
Tensor maximum(const Tensor& a, const Tensor& b);  // elementwise; tie -> a
Tensor sum(const Tensor& x);    // -> scalar
Tensor mean(const Tensor& x);   // -> scalar
Tensor concat(const Tensor& a, const Tensor& b, int axis);  // matrices
Tensor slice_rows(const Tensor& x, std::size_t r0, std::size_t r1);
Tensor slice_cols(const Tensor& x, std::size_t c0, std::size_t c1);
Tensor detach(const Tensor& x);

// Fused softmax + cross-entropy, mean over rows. `targets` holds one class
// index per row of `logits`.
Tensor softmax_cross_entropy(const Tensor& logits,
                             const std::vector<int>& targets);

enum class SpikeForward { binary, smooth };

// Heaviside spike with a Gaussian surrogate gradient N(u | theta, sigma^2).
// theta is either a scalar tensor or shaped like u. In smooth mode the
// forward is the Gaussian CDF Phi((u-theta)/sigma), whose true derivative
// equals the surrogate, making finite-difference checks meaningful.
Tensor custom_grad_spike(const Tensor& u, const Tensor& theta,
                         double sigma = 0.5,
                         SpikeForward mode = SpikeForward::binary);

double gaussian_pdf(double x, double mean, double sigma);

// Scales grads in-place so their global L2 norm is at most max_norm.
// Returns the pre-clip norm.
double clip_grad_norm(const std::vector<Tensor>& params, double max_norm);

}  // namespace srnn
