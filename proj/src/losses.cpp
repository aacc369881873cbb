#include "affkit/losses.hpp"

#include <algorithm>
#include <cmath>

#include "affkit/error.hpp"

namespace affkit {

void LossConfig::validate() const {
  if (!(gamma >= 0.0) || !(epsilon > 0.0) || !(alpha >= 0.0))
    throw Error(ErrorCode::kInvalidArgument, "loss config needs gamma >= 0, epsilon > 0, alpha >= 0");
}

namespace {

void check_shapes(const ad::Matrix& y, const ad::Matrix& y_hat) {
  if (y.rows() != y_hat.rows() || y.cols() != y_hat.cols())
    throw Error(ErrorCode::kShapeMismatch, "prediction and target shapes differ");
  if (y.size() == 0) throw Error(ErrorCode::kShapeMismatch, "empty prediction");
}

double clamp_prob(double v) { return std::clamp(v, kProbabilityClamp, 1.0 - kProbabilityClamp); }

// x^0 is exactly 1, including at x = 0.
double powg(double x, double e) { return e == 0.0 ? 1.0 : std::pow(x, e); }

double focal_term(double y, double t, double gamma) {
  const double p = clamp_prob(y);
  return -(t * powg(1.0 - p, gamma) * std::log(p) + (1.0 - t) * powg(p, gamma) * std::log(1.0 - p));
}

double focal_term_grad(double y, double t, double gamma) {
  if (y <= kProbabilityClamp || y >= 1.0 - kProbabilityClamp) return 0.0;
  const double pos = gamma == 0.0 ? 1.0 / y : -gamma * powg(1.0 - y, gamma - 1.0) * std::log(y) + powg(1.0 - y, gamma) / y;
  const double neg =
      gamma == 0.0 ? -1.0 / (1.0 - y) : gamma * powg(y, gamma - 1.0) * std::log(1.0 - y) - powg(y, gamma) / (1.0 - y);
  return -(t * pos + (1.0 - t) * neg);
}

}  // namespace

double focal_loss(const ad::Matrix& y, const ad::Matrix& y_hat, const LossConfig& cfg) {
  check_shapes(y, y_hat);
  double sum = 0.0;
  for (Eigen::Index i = 0; i < y.size(); ++i) sum += focal_term(y.data()[i], y_hat.data()[i], cfg.gamma);
  return sum / static_cast<double>(y.size());
}

double dice_loss(const ad::Matrix& y, const ad::Matrix& y_hat, const LossConfig& cfg) {
  check_shapes(y, y_hat);
  double sum = 0.0;
  for (Eigen::Index c = 0; c < y.cols(); ++c) {
    const double inter = y.col(c).dot(y_hat.col(c));
    sum += 1.0 - (2.0 * inter + cfg.epsilon) / (y.col(c).sum() + y_hat.col(c).sum() + cfg.epsilon);
  }
  return sum / static_cast<double>(y.cols());
}

double total_loss(const ad::Matrix& y, const ad::Matrix& y_hat, const LossConfig& cfg) {
  return cfg.alpha * focal_loss(y, y_hat, cfg) + dice_loss(y, y_hat, cfg);
}

ad::Matrix total_loss_gradient(const ad::Matrix& y, const ad::Matrix& y_hat, const LossConfig& cfg) {
  check_shapes(y, y_hat);
  ad::Matrix g(y.rows(), y.cols());
  const double inv_n = 1.0 / static_cast<double>(y.size());
  for (Eigen::Index i = 0; i < y.size(); ++i)
    g.data()[i] = cfg.alpha * inv_n * focal_term_grad(y.data()[i], y_hat.data()[i], cfg.gamma);
  const double inv_l = 1.0 / static_cast<double>(y.cols());
  for (Eigen::Index c = 0; c < y.cols(); ++c) {
    const double num = 2.0 * y.col(c).dot(y_hat.col(c)) + cfg.epsilon;
    const double den = y.col(c).sum() + y_hat.col(c).sum() + cfg.epsilon;
    g.col(c).array() -= inv_l * (2.0 * y_hat.col(c).array() * den - num) / (den * den);
  }
  return g;
}

ad::Var total_loss(const ad::Var& y, const ad::Matrix& y_hat, const LossConfig& cfg, LossTerms* terms) {
  LossTerms t;
  t.focal = focal_loss(y.value(), y_hat, cfg);
  t.dice = dice_loss(y.value(), y_hat, cfg);
  t.total = cfg.alpha * t.focal + t.dice;
  if (terms != nullptr) *terms = t;
  ad::Tape& tape = y.tape();
  const int iy = y.id();
  ad::Matrix out(1, 1);
  out(0, 0) = t.total;
  return tape.push(std::move(out), tape.needs_grad(iy), [iy, y_hat, cfg](ad::Tape& tape, const ad::Matrix& g) {
    tape.grad_ref(iy) += g(0, 0) * total_loss_gradient(tape.value(iy), y_hat, cfg);
  });
}

}  // namespace affkit
