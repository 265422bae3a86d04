#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

#include "dnrl/errors.hpp"
#include "dnrl/nn.hpp"

namespace dnrl {

/// Adam with bias correction. Moment arrays are kept in network visit order.
template <class S>
class Adam {
public:
    explicit Adam(double lr = 2.5e-4, double beta1 = 0.9, double beta2 = 0.999, double eps = 1.5e-4)
        : lr_(lr), beta1_(beta1), beta2_(beta2), eps_(eps) {}

    template <class Net>
    void step(Net& net) {
        if (m_.empty()) {
            net.visit_params([&](const std::string&, Mat<S>& v, Mat<S>&) {
                m_.push_back(Mat<S>::Zero(v.rows(), v.cols()));
                v_.push_back(Mat<S>::Zero(v.rows(), v.cols()));
            });
        }
        ++t_;
        const S c1 = static_cast<S>(1.0 - std::pow(beta1_, static_cast<double>(t_)));
        const S c2 = static_cast<S>(1.0 - std::pow(beta2_, static_cast<double>(t_)));
        const S b1 = static_cast<S>(beta1_), b2 = static_cast<S>(beta2_);
        const S lr = static_cast<S>(lr_), eps = static_cast<S>(eps_);
        std::size_t i = 0;
        net.visit_params([&](const std::string&, Mat<S>& value, Mat<S>& grad) {
            if (i >= m_.size() || m_[i].rows() != value.rows() || m_[i].cols() != value.cols())
                throw UsageError("optimizer state does not match the network");
            m_[i] = b1 * m_[i] + (S(1) - b1) * grad;
            v_[i] = b2 * v_[i] + (S(1) - b2) * grad.cwiseProduct(grad);
            value.array() -= lr * (m_[i].array() / c1) / ((v_[i].array() / c2).sqrt() + eps);
            ++i;
        });
    }

    std::uint64_t step_count() const { return t_; }
    void set_step_count(std::uint64_t t) { t_ = t; }
    std::vector<Mat<S>>& first_moments() { return m_; }
    std::vector<Mat<S>>& second_moments() { return v_; }
    double learning_rate() const { return lr_; }

private:
    double lr_, beta1_, beta2_, eps_;
    std::uint64_t t_ = 0;
    std::vector<Mat<S>> m_, v_;
};

} // namespace dnrl
