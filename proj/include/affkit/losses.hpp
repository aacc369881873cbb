#pragma once

// Segmentation objectives. Predictions and targets are P x L matrices (pixels
// by labels); every column is an independent binary problem.

#include "affkit/autodiff.hpp"

namespace affkit {

struct LossConfig {
  double gamma = 2.0;    // focusing exponent
  double epsilon = 1.0;  // dice smoothing
  double alpha = 1.0;    // focal weight

  void validate() const;
};

inline constexpr double kProbabilityClamp = 1e-7;

// Mean over all P*L entries of the standard binary focal loss.
double focal_loss(const ad::Matrix& y, const ad::Matrix& y_hat, const LossConfig& cfg);
// 1 - (2 sum(y y_hat) + eps) / (sum y + sum y_hat + eps), averaged over label
// columns.
double dice_loss(const ad::Matrix& y, const ad::Matrix& y_hat, const LossConfig& cfg);
double total_loss(const ad::Matrix& y, const ad::Matrix& y_hat, const LossConfig& cfg);

// d(total_loss)/dy.
ad::Matrix total_loss_gradient(const ad::Matrix& y, const ad::Matrix& y_hat, const LossConfig& cfg);

struct LossTerms {
  double focal = 0.0;
  double dice = 0.0;
  double total = 0.0;
};

// Tape node for total_loss; `terms` receives the forward values when given.
ad::Var total_loss(const ad::Var& y, const ad::Matrix& y_hat, const LossConfig& cfg, LossTerms* terms = nullptr);

}  // namespace affkit
