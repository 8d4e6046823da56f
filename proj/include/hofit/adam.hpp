#pragma once

#include <cmath>

#include <Eigen/Core>

#include "hofit/common.hpp"

namespace hofit {

// Adam update rule with bias correction. Caller owns the parameter vector;
// step() turns a gradient into the additive update for the next iterate.
class AdamOptimizer {
 public:
  explicit AdamOptimizer(int dimension, double lr, double beta1 = 0.9,
                         double beta2 = 0.999, double epsilon = 1e-8)
      : lr_(lr), beta1_(beta1), beta2_(beta2), eps_(epsilon),
        m_(Eigen::VectorXd::Zero(dimension)),
        v_(Eigen::VectorXd::Zero(dimension)) {}

  Eigen::VectorXd step(const Eigen::VectorXd& gradient) {
    require(gradient.size() == m_.size(), errc::shape_mismatch,
            "gradient dimension mismatch");
    ++t_;
    m_ = beta1_ * m_ + (1.0 - beta1_) * gradient;
    v_ = beta2_ * v_ + (1.0 - beta2_) * gradient.cwiseProduct(gradient);
    const double mc = 1.0 - std::pow(beta1_, t_);
    const double vc = 1.0 - std::pow(beta2_, t_);
    return (-lr_ / mc) * m_.cwiseQuotient(
        ((v_ / vc).cwiseSqrt().array() + eps_).matrix());
  }

  double learning_rate() const { return lr_; }

 private:
  double lr_, beta1_, beta2_, eps_;
  int t_ = 0;
  Eigen::VectorXd m_, v_;
};

}  // namespace hofit
