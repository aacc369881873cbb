#pragma once

// Minimal reverse-mode automatic differentiation over dense row-major
// matrices. A Tape records one forward pass; every op pushes a node holding
// its value and a closure that propagates the output gradient to its inputs.
// Gradients are only materialized for nodes that depend on a trainable leaf.

#include <deque>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

namespace affkit::ad {

using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

struct Parameter {
  Matrix value;
  Matrix grad;  // same shape as value once zero_grad() has run
  bool trainable = true;

  void zero_grad() { grad = Matrix::Zero(value.rows(), value.cols()); }
};

class Tape;

class Var {
 public:
  Var() = default;

  bool valid() const { return tape_ != nullptr; }
  Tape& tape() const { return *tape_; }
  int id() const { return id_; }
  const Matrix& value() const;
  const Matrix& grad() const;
  Eigen::Index rows() const { return value().rows(); }
  Eigen::Index cols() const { return value().cols(); }

 private:
  friend class Tape;
  Var(Tape* tape, int id) : tape_(tape), id_(id) {}

  Tape* tape_ = nullptr;
  int id_ = -1;
};

class Tape {
 public:
  using Backward = std::function<void(Tape&, const Matrix& out_grad)>;

  Var constant(Matrix value);
  // Leaf bound to a parameter. After backward(), the leaf gradient is added
  // to parameter.grad when the parameter is trainable.
  Var parameter(Parameter& p);

  // Seeds d(root)/d(root) = 1 for a 1x1 root and runs all closures in reverse.
  void backward(const Var& root);

  // Op plumbing.
  Var push(Matrix value, bool needs_grad, Backward backward);
  const Matrix& value(int id) const { return nodes_[static_cast<std::size_t>(id)].value; }
  const Matrix& grad(int id) const { return nodes_[static_cast<std::size_t>(id)].grad; }
  bool needs_grad(int id) const { return nodes_[static_cast<std::size_t>(id)].needs_grad; }
  // Zero-initialized on first access during backward.
  Matrix& grad_ref(int id);

  std::size_t size() const { return nodes_.size(); }

 private:
  struct Node {
    Matrix value;
    Matrix grad;
    bool needs_grad = false;
    Backward backward;
    Parameter* param = nullptr;
  };

  std::deque<Node> nodes_;
};

// --- ops --------------------------------------------------------------------

Var matmul(const Var& a, const Var& b);     // a * b
Var matmul_nt(const Var& a, const Var& b);  // a * b^T
// x * W^T + bias; W is out x in, bias is 1 x out (may be invalid for none).
Var linear(const Var& x, const Var& weight, const Var& bias);
Var add(const Var& a, const Var& b);
Var add_row(const Var& a, const Var& row);  // broadcast a 1 x C row over rows
Var mul_row(const Var& a, const Var& row);  // elementwise scale of every row
Var scale(const Var& a, double s);
Var softmax_rows(const Var& a);
Var gelu(const Var& a);  // exact (erf) form
Var relu(const Var& a);
Var layer_norm(const Var& x, const Var& gamma, const Var& beta, double eps = 1e-6);
Var cols(const Var& a, Eigen::Index start, Eigen::Index count);
Var hcat(std::span<const Var> parts);
// Rows of y hold the replicate-padded 3x3 neighbourhood of each pixel of an
// (height*width) x C feature map, ordered (dy, dx, channel).
Var im2col3x3(const Var& x, int height, int width);
// Mean over non-overlapping patch x patch cells; output rows follow the patch
// grid in row-major order.
Var patch_mean_pool(const Var& x, int height, int width, int patch);
// Bilinear resampling with half-pixel centres of an (h*w) x C map.
Var resize_bilinear(const Var& x, int height, int width, int out_height, int out_width);
// Row-wise x / max(||x||, eps).
Var l2_normalize_rows(const Var& x, double eps = 1e-12);
// sigmoid(slope * (a - center)) elementwise.
Var sigmoid_affine(const Var& a, double slope, double center);

// Resampling weights shared with the value-only image code paths.
struct BilinearTap {
  int i0, i1;
  double w1;
};
std::vector<BilinearTap> bilinear_taps(int src, int dst);

}  // namespace affkit::ad
