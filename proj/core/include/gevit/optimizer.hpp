#pragma once

#include <cmath>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "gevit/tensor.hpp"

namespace gevit {

struct AdamConfig {
    double lr = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    double weight_decay = 1e-4;  // decoupled
};

// Adam with decoupled weight decay. Moments are kept in double regardless
// of the parameter precision.
template <class T>
class Adam {
public:
    Adam(std::vector<std::pair<std::string, Tensor<T>>> params, AdamConfig cfg = {})
        : params_(std::move(params)), cfg_(cfg) {
        for (auto& [name, p] : params_) {
            m_.emplace_back(p.numel(), 0.0);
            v_.emplace_back(p.numel(), 0.0);
        }
    }

    int64_t step_count() const { return t_; }

    void zero_grad() {
        for (auto& [name, p] : params_) p.zero_grad();
    }

    void step() {
        ++t_;
        double bc1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
        double bc2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
        for (size_t k = 0; k < params_.size(); ++k) {
            Tensor<T>& p = params_[k].second;
            if (p.grad().size() != p.numel())
                throw std::logic_error("Adam::step before backward populated grads for " +
                                       params_[k].first);
            auto& val = p.mutable_value();
            const auto& g = p.grad();
            for (size_t i = 0; i < val.size(); ++i) {
                double gi = static_cast<double>(g[i]);
                m_[k][i] = cfg_.beta1 * m_[k][i] + (1.0 - cfg_.beta1) * gi;
                v_[k][i] = cfg_.beta2 * v_[k][i] + (1.0 - cfg_.beta2) * gi * gi;
                double mhat = m_[k][i] / bc1;
                double vhat = v_[k][i] / bc2;
                double x = static_cast<double>(val[i]);
                x -= cfg_.lr * cfg_.weight_decay * x;
                x -= cfg_.lr * mhat / (std::sqrt(vhat) + cfg_.eps);
                val[i] = static_cast<T>(x);
            }
        }
    }

private:
    std::vector<std::pair<std::string, Tensor<T>>> params_;
    AdamConfig cfg_;
    std::vector<std::vector<double>> m_, v_;
    int64_t t_ = 0;
};

}  // namespace gevit
