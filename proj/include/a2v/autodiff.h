#ifndef A2V_AUTODIFF_H_
#define A2V_AUTODIFF_H_

#include <cstdint>
#include <functional>
#include <memory>
#include <vector>

#include "a2v/rng.h"
#include "a2v/tensor.h"

namespace a2v::ad {

// Reverse-mode autodiff over dense double tensors. Graphs are built eagerly;
// nodes carry the forward value and a closure that pulls the node's gradient
// into its parents. Creation ids increase monotonically, so sorting by id
// gives a topological order for the backward sweep.
class Node {
 public:
  Tensor value;
  Tensor grad;
  bool requires_grad = false;
  int64_t id = 0;
  std::vector<std::shared_ptr<Node>> parents;
  std::function<void(Node&)> backward_fn;

  Tensor& ensure_grad();
};

using NodePtr = std::shared_ptr<Node>;

class Var {
 public:
  Var() = default;
  explicit Var(NodePtr n) : node_(std::move(n)) {}

  static Var constant(Tensor t);
  static Var param(Tensor t);  // leaf that accumulates gradient

  bool defined() const { return node_ != nullptr; }
  const Tensor& value() const { return node_->value; }
  Tensor& mutable_value() { return node_->value; }
  Tensor& grad() { return node_->ensure_grad(); }
  bool requires_grad() const { return node_->requires_grad; }
  const NodePtr& node() const { return node_; }

  int64_t rows() const { return value().rows(); }
  int64_t cols() const { return value().cols(); }

 private:
  NodePtr node_;
};

// Seeds root with ones and accumulates gradients into every reachable leaf.
void backward(const Var& root);

// ---- elementwise / linear algebra ----
Var add(const Var& a, const Var& b);
Var sub(const Var& a, const Var& b);
Var mul(const Var& a, const Var& b);
Var scale(const Var& a, double c);
Var add_rowvec(const Var& x, const Var& bias);  // x[m,n] + bias[n] per row
Var matmul(const Var& a, const Var& b);         // [m,k]x[k,n]
Var matmul_nt(const Var& a, const Var& b);      // a[m,k] x b[n,k]^T
Var linear(const Var& x, const Var& w, const Var& b);  // x w + b

// ---- activations / normalization ----
Var sigmoid(const Var& x);
Var gelu(const Var& x);
Var leaky_relu(const Var& x, double negative_slope);
// Per-column parametric Swish: y[:,j] = x[:,j] * alpha[j] * sigmoid(beta[j] x).
Var pswish(const Var& x, const Var& alpha, const Var& beta);
Var softmax_rows(const Var& x);
Var layer_norm(const Var& x, const Var& gamma, const Var& beta, double eps);
Var dropout(const Var& x, double p, Rng& rng, bool train);

// ---- convolutions ----
// x[T,Cin], w[Cout,Cin,k] flattened as [Cout, Cin*k] rows, optional b[Cout];
// valid convolution with stride, T' = (T-k)/stride + 1.
Var conv1d_valid(const Var& x, const Var& w, const Var& b, int64_t kernel,
                 int64_t stride);
// Same-length grouped convolution with symmetric zero padding (odd kernel);
// w[Cout, (Cin/groups)*k] rows, stride 1.
Var conv1d_same_grouped(const Var& x, const Var& w, const Var& b,
                        int64_t kernel, int64_t groups);

// ---- sinc filterbank ----
// Hamming-windowed band-pass kernels [F, k] from learnable f_low / bandwidth
// (Hz). Cutoffs are clamped to (0, Nyquist]: f1 = min(|f_low|, nyq - 1),
// f2 = min(f1 + |bw|, nyq); gradients stop at the clamps.
Var sinc_kernels(const Var& f_low, const Var& bandwidth, int64_t kernel,
                 double sample_rate);

// ---- shape ops ----
Var gather_rows(const Var& x, std::vector<int64_t> idx);
// Returns base with row idx[i] replaced by x row i; base rows are constant.
Var scatter_rows(const Var& x, std::vector<int64_t> idx, const Tensor& base);
Var slice_cols(const Var& x, int64_t start, int64_t len);
Var concat_cols(const std::vector<Var>& xs);

// ---- reductions / losses ----
Var sum_all(const Var& x);
Var mean_all(const Var& x);
// Mean squared error over the selected rows (all columns); empty selection
// yields an exact 0 with no gradient.
Var mse_rows(const Var& pred, const Tensor& target,
             std::vector<int64_t> rows);
// Mean focal loss over all entries; targets may be soft in [0,1]. Applies
// sigmoid internally and clamps likelihoods to [eps, 1-eps].
Var focal_loss_from_logits(const Var& logits, const Tensor& targets,
                           double gamma, double eps = 1e-7);

}  // namespace a2v::ad

#endif  // A2V_AUTODIFF_H_
