#ifndef SSGN_TENSOR_HPP
#define SSGN_TENSOR_HPP

#include <functional>
#include <memory>
#include <string>
#include <vector>

namespace ssgn {

/// Reverse-mode autodiff over 2-D row-major tensors. Every operation returns
/// a new node holding its inputs and a closure that scatters the node's
/// gradient back to them; backward() runs the closures in reverse
/// topological order. Vectors are [1, n] rows. Single-threaded by design so
/// results are bit-reproducible.
struct Tensor {
  int rows = 0;
  int cols = 0;
  std::vector<double> values;  // row-major, rows*cols
  std::vector<double> grad;    // sized on demand, zeroed before accumulation
  bool requires_grad = false;

  std::vector<std::shared_ptr<Tensor>> parents;
  std::function<void(Tensor&)> backprop;  // reads this->grad, accumulates into parents

  size_t size() const { return static_cast<size_t>(rows) * cols; }
  double& at(int i, int j) { return values[static_cast<size_t>(i) * cols + j]; }
  double at(int i, int j) const { return values[static_cast<size_t>(i) * cols + j]; }
  double& grad_at(int i, int j) { return grad[static_cast<size_t>(i) * cols + j]; }
  void ensure_grad() {
    if (grad.size() != size()) grad.assign(size(), 0.0);
  }
  void zero_grad() { grad.assign(size(), 0.0); }
};

using TensorPtr = std::shared_ptr<Tensor>;

/// Leaf constructors.
TensorPtr make_tensor(int rows, int cols, bool requires_grad = false);
TensorPtr make_tensor(int rows, int cols, const std::vector<double>& values,
                      bool requires_grad = false);
TensorPtr make_row(const std::vector<double>& values, bool requires_grad = false);

/// Core operations. All propagate gradients to inputs that require them.
TensorPtr matmul(const TensorPtr& a, const TensorPtr& b);
TensorPtr transpose(const TensorPtr& a);
TensorPtr reshape(const TensorPtr& a, int rows, int cols);
TensorPtr add(const TensorPtr& a, const TensorPtr& b);
TensorPtr sub(const TensorPtr& a, const TensorPtr& b);
TensorPtr mul(const TensorPtr& a, const TensorPtr& b);
TensorPtr scale(const TensorPtr& a, double s);
TensorPtr add_row(const TensorPtr& x, const TensorPtr& row);  // broadcast [1,n] over rows

/// y = x * W^T + b with x: [m, in], W: [out, in], b: [1, out] or null.
TensorPtr linear(const TensorPtr& x, const TensorPtr& W, const TensorPtr& b);

TensorPtr tanh_op(const TensorPtr& x);
TensorPtr sigmoid(const TensorPtr& x);
TensorPtr gelu(const TensorPtr& x);
TensorPtr softplus(const TensorPtr& x);

/// Row-wise softmax over columns restricted to mask-true entries. Masked
/// entries are exactly zero; an all-false row yields all zeros.
TensorPtr masked_softmax(const TensorPtr& logits, const std::vector<char>& mask);

/// Per-row normalization over columns with learned gain/bias rows.
TensorPtr layer_norm(const TensorPtr& x, const TensorPtr& gain, const TensorPtr& bias);

/// Gathers table rows by id; gradient scatter-adds into the table.
TensorPtr embedding_rows(const TensorPtr& table, const std::vector<int>& ids);

TensorPtr concat_rows(const std::vector<TensorPtr>& parts);
TensorPtr concat_cols(const std::vector<TensorPtr>& parts);
TensorPtr slice_rows(const TensorPtr& x, int begin, int end);
TensorPtr slice_cols(const TensorPtr& x, int begin, int end);

TensorPtr sum_all(const TensorPtr& x);   // [1,1]
TensorPtr mean_all(const TensorPtr& x);  // [1,1]

/// out[i] = sum_j A[i][j] * P[i*S + j] with A: [R, S], P: [R*S, d].
TensorPtr pairwise_weighted_sum(const TensorPtr& A, const TensorPtr& P);

/// Seeds d(root)/d(root) = 1 and back-propagates through the whole graph.
/// The root must be a [1,1] scalar.
void backward(const TensorPtr& root);

}  // namespace ssgn

#endif  // SSGN_TENSOR_HPP
