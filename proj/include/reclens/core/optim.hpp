// SPDX-License-Identifier: Apache-2.0
// Copyright (c) 2026 reclens authors

#pragma once

#include <cmath>
#include <vector>

#include "reclens/core/tensor.hpp"

namespace reclens {

// Adam with classic coupled L2 regularization (the decay term is added to
// the gradient before the moment updates).
class Adam {
 public:
  Adam(std::vector<Tensor> params, double lr, double l2 = 0.0, double beta1 = 0.9,
       double beta2 = 0.999, double eps = 1e-8)
      : params_(std::move(params)), lr_(lr), l2_(l2), beta1_(beta1), beta2_(beta2), eps_(eps) {
    for (const auto& p : params_) {
      m_.emplace_back(Mat::zeros(p.rows(), p.cols()));
      v_.emplace_back(Mat::zeros(p.rows(), p.cols()));
    }
  }

  void set_lr(double lr) { lr_ = lr; }
  double lr() const { return lr_; }
  const std::vector<Tensor>& params() const { return params_; }

  void zero_grad() {
    for (auto& p : params_) p.zero_grad();
  }

  void step() {
    ++t_;
    const double bc1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
    const double bc2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
    for (size_t k = 0; k < params_.size(); ++k) {
      Mat& w = params_[k].value();
      const Mat& g0 = params_[k].grad();
      Mat& m = m_[k];
      Mat& v = v_[k];
      for (size_t i = 0; i < w.data.size(); ++i) {
        const double g = g0.data[i] + l2_ * w.data[i];
        m.data[i] = beta1_ * m.data[i] + (1.0 - beta1_) * g;
        v.data[i] = beta2_ * v.data[i] + (1.0 - beta2_) * g * g;
        const double mh = m.data[i] / bc1;
        const double vh = v.data[i] / bc2;
        w.data[i] -= lr_ * mh / (std::sqrt(vh) + eps_);
      }
    }
  }

 private:
  std::vector<Tensor> params_;
  std::vector<Mat> m_, v_;
  long t_ = 0;
  double lr_, l2_, beta1_, beta2_, eps_;
};

}  // namespace reclens
