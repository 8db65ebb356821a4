#pragma once

// Adam with bias correction, bound to a fixed parameter list.

#include <cmath>
#include <stdexcept>
#include <vector>

#include "celldx/ad/tensor.hpp"

namespace celldx {

class Adam {
  public:
    explicit Adam(std::vector<Tensor*> params, double lr = 1e-3, double beta1 = 0.9,
                  double beta2 = 0.999, double eps = 1e-8)
        : params_(std::move(params)), lr_(lr), b1_(beta1), b2_(beta2), eps_(eps) {
        for (Tensor* p : params_) {
            m_.emplace_back(p->rows, p->cols);
            v_.emplace_back(p->rows, p->cols);
        }
    }

    void step(const std::vector<const Tensor*>& grads) {
        if (grads.size() != params_.size())
            throw std::invalid_argument("adam gradient list mismatch");
        ++t_;
        double c1 = 1.0 - std::pow(b1_, t_), c2 = 1.0 - std::pow(b2_, t_);
        for (size_t i = 0; i < params_.size(); ++i) {
            Tensor& p = *params_[i];
            const Tensor& g = *grads[i];
            if (!p.same_shape(g)) throw std::invalid_argument("adam grad shape mismatch");
            for (size_t k = 0; k < p.size(); ++k) {
                double gk = g.d[k];
                m_[i].d[k] = b1_ * m_[i].d[k] + (1.0 - b1_) * gk;
                v_[i].d[k] = b2_ * v_[i].d[k] + (1.0 - b2_) * gk * gk;
                double mh = m_[i].d[k] / c1, vh = v_[i].d[k] / c2;
                p.d[k] -= lr_ * mh / (std::sqrt(vh) + eps_);
            }
        }
    }

    long steps() const { return t_; }

  private:
    std::vector<Tensor*> params_;
    std::vector<Tensor> m_, v_;
    double lr_, b1_, b2_, eps_;
    long t_ = 0;
};

} // namespace celldx
