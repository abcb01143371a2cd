#pragma once

#include <cmath>
#include <vector>

#include "hcdn/nn/tensor.hpp"

namespace hcdn::nn {

/// lr(t) = lr_min + (lr0 - lr_min) * (1 + cos(pi * t / total)) / 2, t clamped to [0, total].
inline double cosine_lr(long long step, long long total_steps, double lr0, double lr_min = 0.0) {
  if (total_steps <= 0) raise(ErrorCode::ConfigMismatch, "cosine_lr: total_steps must be positive");
  const double t = std::min(std::max(static_cast<double>(step), 0.0),
                            static_cast<double>(total_steps));
  const double cosine = 0.5 * (1.0 + std::cos(M_PI * t / static_cast<double>(total_steps)));
  return lr_min + (lr0 - lr_min) * cosine;
}

/// Adam without weight decay. Skips parameters with requires_grad == false.
template <typename T>
class Adam {
 public:
  explicit Adam(std::vector<TensorPtr<T>> params, double beta1 = 0.9, double beta2 = 0.999,
                double eps = 1e-8)
      : params_(std::move(params)), beta1_(beta1), beta2_(beta2), eps_(eps) {
    for (const auto& p : params_) {
      m_.emplace_back(p->numel(), 0.0);
      v_.emplace_back(p->numel(), 0.0);
    }
  }

  void step(double lr) {
    ++t_;
    const double c1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
    const double c2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
    for (std::size_t i = 0; i < params_.size(); ++i) {
      auto& p = *params_[i];
      if (!p.requires_grad) continue;
      for (std::size_t j = 0; j < p.value.size(); ++j) {
        const double g = static_cast<double>(p.grad[j]);
        m_[i][j] = beta1_ * m_[i][j] + (1.0 - beta1_) * g;
        v_[i][j] = beta2_ * v_[i][j] + (1.0 - beta2_) * g * g;
        const double mhat = m_[i][j] / c1;
        const double vhat = v_[i][j] / c2;
        p.value[j] -= static_cast<T>(lr * mhat / (std::sqrt(vhat) + eps_));
      }
    }
  }

  void zero_grad() {
    for (const auto& p : params_)
      std::fill(p->grad.begin(), p->grad.end(), T(0));
  }

  long long steps_taken() const { return t_; }

 private:
  std::vector<TensorPtr<T>> params_;
  double beta1_, beta2_, eps_;
  long long t_ = 0;
  std::vector<std::vector<double>> m_, v_;
};

}  // namespace hcdn::nn
