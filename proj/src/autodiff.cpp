#include "affkit/autodiff.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "affkit/error.hpp"

namespace affkit::ad {

const Matrix& Var::value() const { return tape_->value(id_); }
const Matrix& Var::grad() const { return tape_->grad(id_); }

Var Tape::constant(Matrix value) { return push(std::move(value), false, nullptr); }

Var Tape::parameter(Parameter& p) {
  Var v = push(p.value, p.trainable, nullptr);
  nodes_.back().param = &p;
  return v;
}

Var Tape::push(Matrix value, bool needs_grad, Backward backward) {
  Node n;
  n.value = std::move(value);
  n.needs_grad = needs_grad;
  if (needs_grad) n.backward = std::move(backward);
  nodes_.push_back(std::move(n));
  return Var(this, static_cast<int>(nodes_.size()) - 1);
}

Matrix& Tape::grad_ref(int id) {
  Node& n = nodes_[static_cast<std::size_t>(id)];
  if (n.grad.size() == 0) n.grad = Matrix::Zero(n.value.rows(), n.value.cols());
  return n.grad;
}

void Tape::backward(const Var& root) {
  if (&root.tape() != this) throw Error(ErrorCode::kInvalidArgument, "root belongs to another tape");
  if (root.rows() != 1 || root.cols() != 1) throw Error(ErrorCode::kShapeMismatch, "backward needs a scalar root");
  if (!needs_grad(root.id())) return;
  grad_ref(root.id()).setConstant(1.0);
  for (int id = root.id(); id >= 0; --id) {
    Node& n = nodes_[static_cast<std::size_t>(id)];
    if (!n.needs_grad || n.grad.size() == 0) continue;
    if (n.backward) n.backward(*this, n.grad);
    if (n.param != nullptr && n.param->trainable) {
      if (n.param->grad.size() == 0) n.param->zero_grad();
      n.param->grad += n.grad;
    }
  }
}

namespace {

void require(bool ok, const char* what) {
  if (!ok) throw Error(ErrorCode::kShapeMismatch, what);
}

bool any_grad(std::initializer_list<const Var*> vars) {
  for (const Var* v : vars)
    if (v->valid() && v->tape().needs_grad(v->id())) return true;
  return false;
}

bool wants(Tape& t, int id) { return t.needs_grad(id); }

}  // namespace

Var matmul(const Var& a, const Var& b) {
  require(a.cols() == b.rows(), "matmul: inner dimensions differ");
  Tape& t = a.tape();
  const int ia = a.id(), ib = b.id();
  Matrix y = a.value() * b.value();
  return t.push(std::move(y), any_grad({&a, &b}), [ia, ib](Tape& t, const Matrix& g) {
    if (wants(t, ia)) t.grad_ref(ia).noalias() += g * t.value(ib).transpose();
    if (wants(t, ib)) t.grad_ref(ib).noalias() += t.value(ia).transpose() * g;
  });
}

Var matmul_nt(const Var& a, const Var& b) {
  require(a.cols() == b.cols(), "matmul_nt: inner dimensions differ");
  Tape& t = a.tape();
  const int ia = a.id(), ib = b.id();
  Matrix y = a.value() * b.value().transpose();
  return t.push(std::move(y), any_grad({&a, &b}), [ia, ib](Tape& t, const Matrix& g) {
    if (wants(t, ia)) t.grad_ref(ia).noalias() += g * t.value(ib);
    if (wants(t, ib)) t.grad_ref(ib).noalias() += g.transpose() * t.value(ia);
  });
}

Var linear(const Var& x, const Var& weight, const Var& bias) {
  require(x.cols() == weight.cols(), "linear: input width does not match weight");
  Tape& t = x.tape();
  const int ix = x.id(), iw = weight.id(), ib = bias.valid() ? bias.id() : -1;
  Matrix y = x.value() * weight.value().transpose();
  if (bias.valid()) {
    require(bias.rows() == 1 && bias.cols() == weight.rows(), "linear: bias shape");
    y.rowwise() += bias.value().row(0);
  }
  const bool ng = any_grad({&x, &weight}) || (bias.valid() && t.needs_grad(ib));
  return t.push(std::move(y), ng, [ix, iw, ib](Tape& t, const Matrix& g) {
    if (wants(t, ix)) t.grad_ref(ix).noalias() += g * t.value(iw);
    if (wants(t, iw)) t.grad_ref(iw).noalias() += g.transpose() * t.value(ix);
    if (ib >= 0 && wants(t, ib)) t.grad_ref(ib) += g.colwise().sum();
  });
}

Var add(const Var& a, const Var& b) {
  require(a.rows() == b.rows() && a.cols() == b.cols(), "add: shapes differ");
  Tape& t = a.tape();
  const int ia = a.id(), ib = b.id();
  Matrix y = a.value() + b.value();
  return t.push(std::move(y), any_grad({&a, &b}), [ia, ib](Tape& t, const Matrix& g) {
    if (wants(t, ia)) t.grad_ref(ia) += g;
    if (wants(t, ib)) t.grad_ref(ib) += g;
  });
}

Var add_row(const Var& a, const Var& row) {
  require(row.rows() == 1 && row.cols() == a.cols(), "add_row: row shape");
  Tape& t = a.tape();
  const int ia = a.id(), ir = row.id();
  Matrix y = a.value();
  y.rowwise() += row.value().row(0);
  return t.push(std::move(y), any_grad({&a, &row}), [ia, ir](Tape& t, const Matrix& g) {
    if (wants(t, ia)) t.grad_ref(ia) += g;
    if (wants(t, ir)) t.grad_ref(ir) += g.colwise().sum();
  });
}

Var mul_row(const Var& a, const Var& row) {
  require(row.rows() == 1 && row.cols() == a.cols(), "mul_row: row shape");
  Tape& t = a.tape();
  const int ia = a.id(), ir = row.id();
  Matrix y = a.value().array().rowwise() * row.value().row(0).array();
  return t.push(std::move(y), any_grad({&a, &row}), [ia, ir](Tape& t, const Matrix& g) {
    if (wants(t, ia)) t.grad_ref(ia).array() += g.array().rowwise() * t.value(ir).row(0).array();
    if (wants(t, ir)) t.grad_ref(ir) += (g.array() * t.value(ia).array()).matrix().colwise().sum();
  });
}

Var scale(const Var& a, double s) {
  Tape& t = a.tape();
  const int ia = a.id();
  return t.push(a.value() * s, any_grad({&a}), [ia, s](Tape& t, const Matrix& g) { t.grad_ref(ia) += s * g; });
}

Var softmax_rows(const Var& a) {
  Tape& t = a.tape();
  const int ia = a.id();
  Matrix y = a.value();
  for (Eigen::Index r = 0; r < y.rows(); ++r) {
    auto row = y.row(r);
    row.array() -= row.maxCoeff();
    row = row.array().exp().matrix();
    row /= row.sum();
  }
  const int iy = static_cast<int>(t.size());
  return t.push(std::move(y), any_grad({&a}), [ia, iy](Tape& t, const Matrix& g) {
    const Matrix& y = t.value(iy);
    const Eigen::VectorXd dot = (g.array() * y.array()).rowwise().sum();
    t.grad_ref(ia).array() += y.array() * (g.array().colwise() - dot.array());
  });
}

Var gelu(const Var& a) {
  Tape& t = a.tape();
  const int ia = a.id();
  constexpr double kInvSqrt2 = 0.70710678118654752440;
  Matrix y = a.value().unaryExpr([](double x) { return 0.5 * x * (1.0 + std::erf(x * kInvSqrt2)); });
  return t.push(std::move(y), any_grad({&a}), [ia](Tape& t, const Matrix& g) {
    constexpr double kInvSqrt2Pi = 0.39894228040143267794;
    const Matrix d = t.value(ia).unaryExpr([](double x) {
      return 0.5 * (1.0 + std::erf(x * kInvSqrt2)) + x * kInvSqrt2Pi * std::exp(-0.5 * x * x);
    });
    t.grad_ref(ia).array() += g.array() * d.array();
  });
}

Var relu(const Var& a) {
  Tape& t = a.tape();
  const int ia = a.id();
  Matrix y = a.value().cwiseMax(0.0);
  return t.push(std::move(y), any_grad({&a}), [ia](Tape& t, const Matrix& g) {
    t.grad_ref(ia).array() += (t.value(ia).array() > 0.0).select(g.array(), 0.0);
  });
}

Var layer_norm(const Var& x, const Var& gamma, const Var& beta, double eps) {
  require(gamma.rows() == 1 && gamma.cols() == x.cols(), "layer_norm: gamma shape");
  require(beta.rows() == 1 && beta.cols() == x.cols(), "layer_norm: beta shape");
  Tape& t = x.tape();
  const auto c = static_cast<double>(x.cols());
  Matrix xhat = x.value();
  Eigen::VectorXd inv_std(xhat.rows());
  for (Eigen::Index r = 0; r < xhat.rows(); ++r) {
    auto row = xhat.row(r);
    const double mean = row.sum() / c;
    row.array() -= mean;
    const double var = row.squaredNorm() / c;
    inv_std(r) = 1.0 / std::sqrt(var + eps);
    row *= inv_std(r);
  }
  Matrix y = xhat.array().rowwise() * gamma.value().row(0).array();
  y.rowwise() += beta.value().row(0);
  const int ix = x.id(), ig = gamma.id(), ib = beta.id();
  return t.push(std::move(y), any_grad({&x, &gamma, &beta}),
                [ix, ig, ib, xhat = std::move(xhat), inv_std, c](Tape& t, const Matrix& g) {
                  if (wants(t, ig)) t.grad_ref(ig) += (g.array() * xhat.array()).matrix().colwise().sum();
                  if (wants(t, ib)) t.grad_ref(ib) += g.colwise().sum();
                  if (wants(t, ix)) {
                    const Matrix gh = g.array().rowwise() * t.value(ig).row(0).array();
                    const Eigen::VectorXd mean_gh = gh.rowwise().sum() / c;
                    const Eigen::VectorXd mean_ghx = (gh.array() * xhat.array()).rowwise().sum() / c;
                    Matrix dx = gh;
                    dx.colwise() -= mean_gh;
                    dx.array() -= xhat.array().colwise() * mean_ghx.array();
                    dx.array().colwise() *= inv_std.array();
                    t.grad_ref(ix) += dx;
                  }
                });
}

Var cols(const Var& a, Eigen::Index start, Eigen::Index count) {
  require(start >= 0 && start + count <= a.cols(), "cols: range out of bounds");
  Tape& t = a.tape();
  const int ia = a.id();
  Matrix y = a.value().middleCols(start, count);
  return t.push(std::move(y), any_grad({&a}),
                [ia, start, count](Tape& t, const Matrix& g) { t.grad_ref(ia).middleCols(start, count) += g; });
}

Var hcat(std::span<const Var> parts) {
  require(!parts.empty(), "hcat: no inputs");
  Tape& t = parts[0].tape();
  Eigen::Index total = 0;
  bool ng = false;
  std::vector<int> ids;
  for (const auto& p : parts) {
    require(p.rows() == parts[0].rows(), "hcat: row counts differ");
    total += p.cols();
    ng = ng || t.needs_grad(p.id());
    ids.push_back(p.id());
  }
  Matrix y(parts[0].rows(), total);
  Eigen::Index off = 0;
  for (const auto& p : parts) {
    y.middleCols(off, p.cols()) = p.value();
    off += p.cols();
  }
  return t.push(std::move(y), ng, [ids](Tape& t, const Matrix& g) {
    Eigen::Index off = 0;
    for (int id : ids) {
      const Eigen::Index w = t.value(id).cols();
      if (wants(t, id)) t.grad_ref(id) += g.middleCols(off, w);
      off += w;
    }
  });
}

Var im2col3x3(const Var& x, int height, int width) {
  require(x.rows() == static_cast<Eigen::Index>(height) * width, "im2col3x3: row count must be height*width");
  Tape& t = x.tape();
  const Eigen::Index c = x.cols();
  const Matrix& v = x.value();
  Matrix y(v.rows(), 9 * c);
  for (int r = 0; r < height; ++r)
    for (int q = 0; q < width; ++q) {
      const Eigen::Index row = static_cast<Eigen::Index>(r) * width + q;
      int k = 0;
      for (int dy = -1; dy <= 1; ++dy)
        for (int dx = -1; dx <= 1; ++dx, ++k) {
          const int rr = std::clamp(r + dy, 0, height - 1), qq = std::clamp(q + dx, 0, width - 1);
          y.row(row).segment(k * c, c) = v.row(static_cast<Eigen::Index>(rr) * width + qq);
        }
    }
  const int ix = x.id();
  return t.push(std::move(y), any_grad({&x}), [ix, height, width, c](Tape& t, const Matrix& g) {
    Matrix& gx = t.grad_ref(ix);
    for (int r = 0; r < height; ++r)
      for (int q = 0; q < width; ++q) {
        const Eigen::Index row = static_cast<Eigen::Index>(r) * width + q;
        int k = 0;
        for (int dy = -1; dy <= 1; ++dy)
          for (int dx = -1; dx <= 1; ++dx, ++k) {
            const int rr = std::clamp(r + dy, 0, height - 1), qq = std::clamp(q + dx, 0, width - 1);
            gx.row(static_cast<Eigen::Index>(rr) * width + qq) += g.row(row).segment(k * c, c);
          }
      }
  });
}

Var patch_mean_pool(const Var& x, int height, int width, int patch) {
  require(x.rows() == static_cast<Eigen::Index>(height) * width, "patch_mean_pool: row count");
  require(patch > 0 && height % patch == 0 && width % patch == 0, "patch_mean_pool: size not divisible by patch");
  Tape& t = x.tape();
  const int gh = height / patch, gw = width / patch;
  const double inv = 1.0 / (static_cast<double>(patch) * patch);
  const Matrix& v = x.value();
  Matrix y = Matrix::Zero(static_cast<Eigen::Index>(gh) * gw, v.cols());
  for (int r = 0; r < height; ++r)
    for (int q = 0; q < width; ++q)
      y.row(static_cast<Eigen::Index>(r / patch) * gw + q / patch) += v.row(static_cast<Eigen::Index>(r) * width + q);
  y *= inv;
  const int ix = x.id();
  return t.push(std::move(y), any_grad({&x}), [ix, height, width, patch, gw, inv](Tape& t, const Matrix& g) {
    Matrix& gx = t.grad_ref(ix);
    for (int r = 0; r < height; ++r)
      for (int q = 0; q < width; ++q)
        gx.row(static_cast<Eigen::Index>(r) * width + q) += inv * g.row(static_cast<Eigen::Index>(r / patch) * gw + q / patch);
  });
}

std::vector<BilinearTap> bilinear_taps(int src, int dst) {
  std::vector<BilinearTap> taps(static_cast<std::size_t>(dst));
  const double ratio = static_cast<double>(src) / dst;
  for (int i = 0; i < dst; ++i) {
    const double s = std::clamp((i + 0.5) * ratio - 0.5, 0.0, static_cast<double>(src - 1));
    const int i0 = static_cast<int>(std::floor(s));
    taps[static_cast<std::size_t>(i)] = {i0, std::min(i0 + 1, src - 1), s - i0};
  }
  return taps;
}

Var resize_bilinear(const Var& x, int height, int width, int out_height, int out_width) {
  require(x.rows() == static_cast<Eigen::Index>(height) * width, "resize_bilinear: row count");
  Tape& t = x.tape();
  auto ty = bilinear_taps(height, out_height);
  auto tx = bilinear_taps(width, out_width);
  const Matrix& v = x.value();
  Matrix y(static_cast<Eigen::Index>(out_height) * out_width, v.cols());
  for (int r = 0; r < out_height; ++r) {
    const auto& a = ty[static_cast<std::size_t>(r)];
    for (int q = 0; q < out_width; ++q) {
      const auto& b = tx[static_cast<std::size_t>(q)];
      auto row = y.row(static_cast<Eigen::Index>(r) * out_width + q);
      row = (1 - a.w1) * ((1 - b.w1) * v.row(static_cast<Eigen::Index>(a.i0) * width + b.i0) +
                          b.w1 * v.row(static_cast<Eigen::Index>(a.i0) * width + b.i1)) +
            a.w1 * ((1 - b.w1) * v.row(static_cast<Eigen::Index>(a.i1) * width + b.i0) +
                    b.w1 * v.row(static_cast<Eigen::Index>(a.i1) * width + b.i1));
    }
  }
  const int ix = x.id();
  return t.push(std::move(y), any_grad({&x}),
                [ix, width, out_height, out_width, ty = std::move(ty), tx = std::move(tx)](Tape& t, const Matrix& g) {
                  Matrix& gx = t.grad_ref(ix);
                  for (int r = 0; r < out_height; ++r) {
                    const auto& a = ty[static_cast<std::size_t>(r)];
                    for (int q = 0; q < out_width; ++q) {
                      const auto& b = tx[static_cast<std::size_t>(q)];
                      const auto gr = g.row(static_cast<Eigen::Index>(r) * out_width + q);
                      gx.row(static_cast<Eigen::Index>(a.i0) * width + b.i0) += (1 - a.w1) * (1 - b.w1) * gr;
                      gx.row(static_cast<Eigen::Index>(a.i0) * width + b.i1) += (1 - a.w1) * b.w1 * gr;
                      gx.row(static_cast<Eigen::Index>(a.i1) * width + b.i0) += a.w1 * (1 - b.w1) * gr;
                      gx.row(static_cast<Eigen::Index>(a.i1) * width + b.i1) += a.w1 * b.w1 * gr;
                    }
                  }
                });
}

Var l2_normalize_rows(const Var& x, double eps) {
  Tape& t = x.tape();
  const Eigen::VectorXd norms = x.value().rowwise().norm();
  const Eigen::VectorXd denom = norms.cwiseMax(eps);
  Matrix y = x.value().array().colwise() / denom.array();
  const int ix = x.id();
  const int iy = static_cast<int>(t.size());
  return t.push(std::move(y), any_grad({&x}), [ix, iy, norms, denom, eps](Tape& t, const Matrix& g) {
    const Matrix& y = t.value(iy);
    Matrix& gx = t.grad_ref(ix);
    for (Eigen::Index r = 0; r < y.rows(); ++r) {
      if (norms(r) > eps) {
        const double dot = g.row(r).dot(y.row(r));
        gx.row(r) += (g.row(r) - dot * y.row(r)) / denom(r);
      } else {
        gx.row(r) += g.row(r) / denom(r);
      }
    }
  });
}

Var sigmoid_affine(const Var& a, double slope, double center) {
  Tape& t = a.tape();
  Matrix y = a.value().unaryExpr([slope, center](double v) { return 1.0 / (1.0 + std::exp(-slope * (v - center))); });
  const int ia = a.id();
  const int iy = static_cast<int>(t.size());
  return t.push(std::move(y), any_grad({&a}), [ia, iy, slope](Tape& t, const Matrix& g) {
    const Matrix& y = t.value(iy);
    t.grad_ref(ia).array() += g.array() * slope * y.array() * (1.0 - y.array());
  });
}

}  // namespace affkit::ad
