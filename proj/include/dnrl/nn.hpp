#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "dnrl/errors.hpp"
#include "dnrl/rng.hpp"

namespace dnrl {

template <class S>
using Mat = Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic>;

/// Discrete support for distributional value estimates.
struct AtomSupport {
    int n = 51;
    double v_min = -10.0;
    double v_max = 10.0;
    std::vector<double> z;
};

inline AtomSupport make_support(int n, double v_min, double v_max) {
    if (n < 2 || !(v_min < v_max)) throw ConfigError("atom support needs n >= 2 and v_min < v_max");
    AtomSupport s{n, v_min, v_max, {}};
    s.z.resize(static_cast<std::size_t>(n));
    const double dz = (v_max - v_min) / (n - 1);
    for (int i = 0; i < n; ++i) s.z[static_cast<std::size_t>(i)] = v_min + dz * i;
    s.z.front() = v_min;
    s.z.back() = v_max;
    return s;
}

/// Noise-shaping transform for factorized Gaussian noise.
template <class S>
S noise_transform(S x) {
    return x >= S(0) ? std::sqrt(x) : -std::sqrt(-x);
}

namespace detail {

template <class S>
void fill_uniform(Mat<S>& m, double lo, double hi, Rng& rng) {
    for (Eigen::Index c = 0; c < m.cols(); ++c)
        for (Eigen::Index r = 0; r < m.rows(); ++r) m(r, c) = static_cast<S>(rng.uniform(lo, hi));
}

} // namespace detail

/// 1D convolution over channel-major columns: row c*length + t holds channel c
/// at position t. No padding; output length (L - kernel) / stride + 1.
template <class S>
class Conv1d {
public:
    Conv1d(int in_ch, int out_ch, int kernel, int stride, Rng& rng)
        : in_ch_(in_ch), out_ch_(out_ch), kernel_(kernel), stride_(stride) {
        w_.resize(out_ch, in_ch * kernel);
        const double bound = std::sqrt(6.0 / (in_ch * kernel));
        detail::fill_uniform(w_, -bound, bound, rng);
        b_ = Mat<S>::Zero(out_ch, 1);
        gw_ = Mat<S>::Zero(out_ch, in_ch * kernel);
        gb_ = Mat<S>::Zero(out_ch, 1);
    }

    int output_length(int in_len) const { return (in_len - kernel_) / stride_ + 1; }
    int out_channels() const { return out_ch_; }

    const Mat<S>& forward(const Mat<S>& x) {
        batch_ = static_cast<int>(x.cols());
        if (x.rows() % in_ch_ != 0) throw UsageError("conv input rows not divisible by channels");
        in_len_ = static_cast<int>(x.rows()) / in_ch_;
        if (in_len_ < kernel_) throw UsageError("conv input shorter than kernel");
        out_len_ = output_length(in_len_);
        cols_.resize(in_ch_ * kernel_, out_len_ * batch_);
        for (int b = 0; b < batch_; ++b)
            for (int t = 0; t < out_len_; ++t)
                for (int c = 0; c < in_ch_; ++c)
                    for (int u = 0; u < kernel_; ++u)
                        cols_(c * kernel_ + u, b * out_len_ + t) = x(c * in_len_ + t * stride_ + u, b);
        prod_.noalias() = w_ * cols_;
        prod_.colwise() += b_.col(0);
        y_.resize(out_ch_ * out_len_, batch_);
        for (int b = 0; b < batch_; ++b)
            for (int o = 0; o < out_ch_; ++o)
                for (int t = 0; t < out_len_; ++t) y_(o * out_len_ + t, b) = prod_(o, b * out_len_ + t);
        return y_;
    }

    Mat<S> backward(const Mat<S>& gy) {
        Mat<S> gprod(out_ch_, out_len_ * batch_);
        for (int b = 0; b < batch_; ++b)
            for (int o = 0; o < out_ch_; ++o)
                for (int t = 0; t < out_len_; ++t) gprod(o, b * out_len_ + t) = gy(o * out_len_ + t, b);
        gw_.noalias() = gprod * cols_.transpose();
        gb_ = gprod.rowwise().sum();
        Mat<S> gcols(in_ch_ * kernel_, out_len_ * batch_);
        gcols.noalias() = w_.transpose() * gprod;
        Mat<S> gx = Mat<S>::Zero(in_ch_ * in_len_, batch_);
        for (int b = 0; b < batch_; ++b)
            for (int t = 0; t < out_len_; ++t)
                for (int c = 0; c < in_ch_; ++c)
                    for (int u = 0; u < kernel_; ++u)
                        gx(c * in_len_ + t * stride_ + u, b) += gcols(c * kernel_ + u, b * out_len_ + t);
        return gx;
    }

    Mat<S>& weight() { return w_; }
    Mat<S>& bias() { return b_; }
    Mat<S>& weight_grad() { return gw_; }
    Mat<S>& bias_grad() { return gb_; }

private:
    int in_ch_, out_ch_, kernel_, stride_;
    int in_len_ = 0, out_len_ = 0, batch_ = 0;
    Mat<S> w_, b_, gw_, gb_;
    Mat<S> cols_, prod_, y_;
};

/// Dense layer, optionally noisy. A noisy layer keeps (mu, sigma) for weights
/// and biases and perturbs them with factorized Gaussian noise:
///   w_eff = mu_w + sigma_w .* (f(eps_out) f(eps_in)^T),  f(x) = sgn(x) sqrt|x|.
/// One noise draw is shared by every column of a forward batch.
template <class S>
class Dense {
public:
    enum class Init { he_uniform, fan_in_uniform };

    Dense(int in, int out, bool noisy, Init init, Rng& rng) : in_(in), out_(out), noisy_(noisy) {
        mu_w_.resize(out, in);
        mu_b_ = Mat<S>::Zero(out, 1);
        if (noisy_) {
            const double bound = 1.0 / std::sqrt(static_cast<double>(in));
            detail::fill_uniform(mu_w_, -bound, bound, rng);
            detail::fill_uniform(mu_b_, -bound, bound, rng);
            const S sigma0 = static_cast<S>(0.5 / std::sqrt(static_cast<double>(in)));
            sigma_w_ = Mat<S>::Constant(out, in, sigma0);
            sigma_b_ = Mat<S>::Constant(out, 1, sigma0);
            g_sigma_w_ = Mat<S>::Zero(out, in);
            g_sigma_b_ = Mat<S>::Zero(out, 1);
            f_in_ = Mat<S>::Zero(in, 1);
            f_out_ = Mat<S>::Zero(out, 1);
        } else {
            const double bound = init == Init::he_uniform ? std::sqrt(6.0 / in) : 1.0 / std::sqrt(static_cast<double>(in));
            detail::fill_uniform(mu_w_, -bound, bound, rng);
        }
        g_mu_w_ = Mat<S>::Zero(out, in);
        g_mu_b_ = Mat<S>::Zero(out, 1);
    }

    bool noisy() const { return noisy_; }
    int fan_in() const { return in_; }
    int fan_out() const { return out_; }

    void sample_noise(Rng& rng) {
        if (!noisy_) return;
        for (int j = 0; j < in_; ++j) f_in_(j, 0) = noise_transform(static_cast<S>(rng.normal()));
        for (int i = 0; i < out_; ++i) f_out_(i, 0) = noise_transform(static_cast<S>(rng.normal()));
    }

    const Mat<S>& forward(const Mat<S>& x, bool use_noise) {
        if (x.rows() != in_) throw UsageError("dense input size mismatch");
        x_ = x;
        noisy_pass_ = noisy_ && use_noise;
        if (noisy_pass_) {
            w_eff_ = mu_w_ + sigma_w_.cwiseProduct(f_out_.col(0) * f_in_.col(0).transpose());
            b_eff_ = mu_b_ + sigma_b_.cwiseProduct(f_out_);
        } else {
            w_eff_ = mu_w_;
            b_eff_ = mu_b_;
        }
        y_.noalias() = w_eff_ * x;
        y_.colwise() += b_eff_.col(0);
        return y_;
    }

    Mat<S> backward(const Mat<S>& gy) {
        g_mu_w_.noalias() = gy * x_.transpose();
        g_mu_b_ = gy.rowwise().sum();
        if (noisy_) {
            if (noisy_pass_) {
                g_sigma_w_ = g_mu_w_.cwiseProduct(f_out_.col(0) * f_in_.col(0).transpose());
                g_sigma_b_ = g_mu_b_.cwiseProduct(f_out_);
            } else {
                g_sigma_w_.setZero();
                g_sigma_b_.setZero();
            }
        }
        Mat<S> gx(in_, static_cast<int>(gy.cols()));
        gx.noalias() = w_eff_.transpose() * gy;
        return gx;
    }

    Mat<S>& mu_w() { return mu_w_; }
    Mat<S>& mu_b() { return mu_b_; }
    Mat<S>& sigma_w() { return sigma_w_; }
    Mat<S>& sigma_b() { return sigma_b_; }
    Mat<S>& mu_w_grad() { return g_mu_w_; }
    Mat<S>& mu_b_grad() { return g_mu_b_; }
    Mat<S>& sigma_w_grad() { return g_sigma_w_; }
    Mat<S>& sigma_b_grad() { return g_sigma_b_; }
    Mat<S>& noise_f_in() { return f_in_; }
    Mat<S>& noise_f_out() { return f_out_; }

private:
    int in_, out_;
    bool noisy_;
    bool noisy_pass_ = false;
    Mat<S> mu_w_, mu_b_, sigma_w_, sigma_b_;
    Mat<S> g_mu_w_, g_mu_b_, g_sigma_w_, g_sigma_b_;
    Mat<S> f_in_, f_out_;
    Mat<S> w_eff_, b_eff_, x_, y_;
};

template <class S>
class Relu {
public:
    const Mat<S>& forward(const Mat<S>& x) {
        y_ = x.cwiseMax(S(0));
        return y_;
    }
    Mat<S> backward(const Mat<S>& gy) {
        return gy.cwiseProduct((y_.array() > S(0)).template cast<S>().matrix());
    }

private:
    Mat<S> y_;
};

/// Q_a = V + A_a - mean(A). Columns are batch samples.
template <class S>
Mat<S> combine_dueling(const Mat<S>& value, const Mat<S>& advantages) {
    Mat<S> q = advantages;
    q.rowwise() -= advantages.colwise().mean();
    q.rowwise() += value.row(0);
    return q;
}

/// Per-atom dueling combine: logit[a][i] = v[i] + adv[a][i] - mean_a' adv[a'][i].
/// Advantage rows are laid out action-major: row a*atoms + i.
template <class S>
Mat<S> combine_dueling_distributional(const Mat<S>& value, const Mat<S>& advantages, int actions, int atoms) {
    Mat<S> mean = Mat<S>::Zero(atoms, advantages.cols());
    for (int a = 0; a < actions; ++a) mean += advantages.middleRows(a * atoms, atoms);
    mean /= static_cast<S>(actions);
    Mat<S> logits(actions * atoms, advantages.cols());
    for (int a = 0; a < actions; ++a)
        logits.middleRows(a * atoms, atoms) = advantages.middleRows(a * atoms, atoms) - mean + value;
    return logits;
}

struct QNetworkConfig {
    int beams = 80;
    int frames = 4;
    bool goal = false;
    int actions = 10;
    int atoms = 1; // 1 collapses the distributional head to plain Q-values
    int hidden = 512;
    bool noisy = false;
    struct ConvSpec {
        int channels, kernel, stride;
    };
    std::array<ConvSpec, 3> conv{{{32, 8, 4}, {64, 4, 2}, {64, 3, 1}}};
};

/// Dueling trunk shared by both agents. Scalar mode (atoms == 1) emits
/// Q-values[actions]; distributional mode emits per-action atom probabilities
/// (softmax over each action's atom block). backward() takes the gradient
/// with respect to Q-values in scalar mode and with respect to the combined
/// pre-softmax logits in distributional mode.
template <class S>
class QNetwork {
public:
    QNetwork(const QNetworkConfig& cfg, Rng& rng)
        : cfg_(cfg),
          conv1_(cfg.frames, cfg.conv[0].channels, cfg.conv[0].kernel, cfg.conv[0].stride, rng),
          conv2_(cfg.conv[0].channels, cfg.conv[1].channels, cfg.conv[1].kernel, cfg.conv[1].stride, rng),
          conv3_(cfg.conv[1].channels, cfg.conv[2].channels, cfg.conv[2].kernel, cfg.conv[2].stride, rng) {
        const int l1 = conv1_.output_length(cfg.beams);
        if (l1 < cfg.conv[1].kernel) throw ConfigError("beam count too small for the conv trunk");
        const int l2 = conv2_.output_length(l1);
        if (l2 < cfg.conv[2].kernel) throw ConfigError("beam count too small for the conv trunk");
        const int l3 = conv3_.output_length(l2);
        flat_ = cfg.conv[2].channels * l3;
        const int feat = flat_ + (cfg.goal ? 2 : 0);
        const auto hidden_init = Dense<S>::Init::he_uniform;
        const auto head_init = Dense<S>::Init::fan_in_uniform;
        fc_v_.emplace_back(feat, cfg.hidden, cfg.noisy, hidden_init, rng);
        fc_a_.emplace_back(feat, cfg.hidden, cfg.noisy, hidden_init, rng);
        head_v_.emplace_back(cfg.hidden, cfg.atoms, cfg.noisy, head_init, rng);
        head_a_.emplace_back(cfg.hidden, cfg.actions * cfg.atoms, cfg.noisy, head_init, rng);
    }

    const QNetworkConfig& config() const { return cfg_; }
    int flat_features() const { return flat_; }

    void sample_noise(Rng& rng) {
        fc_v_[0].sample_noise(rng);
        fc_a_[0].sample_noise(rng);
        head_v_[0].sample_noise(rng);
        head_a_[0].sample_noise(rng);
    }

    /// scans: (frames*beams) x batch, channel-major columns (frame-stack is
    /// the channel axis, newest frame last); goal: 2 x batch or nullptr.
    const Mat<S>& forward(const Mat<S>& scans, const Mat<S>* goal, bool use_noise) {
        if (scans.rows() != cfg_.frames * cfg_.beams) throw UsageError("scan stack has wrong size");
        if (cfg_.goal != (goal != nullptr)) throw UsageError("goal features required iff the network was built for the goal task");
        if (goal && (goal->rows() != 2 || goal->cols() != scans.cols())) throw UsageError("goal features have wrong shape");
        const auto& h1 = r1_.forward(conv1_.forward(scans));
        const auto& h2 = r2_.forward(conv2_.forward(h1));
        const auto& h3 = r3_.forward(conv3_.forward(h2));
        if (cfg_.goal) {
            feat_.resize(flat_ + 2, scans.cols());
            feat_.topRows(flat_) = h3;
            feat_.bottomRows(2) = *goal;
        } else {
            feat_ = h3;
        }
        const auto& hv = rv_.forward(fc_v_[0].forward(feat_, use_noise));
        const auto& ha = ra_.forward(fc_a_[0].forward(feat_, use_noise));
        const auto& v = head_v_[0].forward(hv, use_noise);
        const auto& a = head_a_[0].forward(ha, use_noise);
        if (cfg_.atoms == 1) {
            out_ = combine_dueling(v, a);
            return out_;
        }
        logits_ = combine_dueling_distributional(v, a, cfg_.actions, cfg_.atoms);
        out_.resize(logits_.rows(), logits_.cols());
        for (Eigen::Index c = 0; c < logits_.cols(); ++c)
            for (int act = 0; act < cfg_.actions; ++act) {
                auto block = logits_.col(c).segment(act * cfg_.atoms, cfg_.atoms);
                const S m = block.maxCoeff();
                Eigen::Array<S, Eigen::Dynamic, 1> e = (block.array() - m).exp();
                out_.col(c).segment(act * cfg_.atoms, cfg_.atoms) = (e / e.sum()).matrix();
            }
        return out_;
    }

    void backward(const Mat<S>& grad_out) {
        if (grad_out.rows() != out_.rows() || grad_out.cols() != out_.cols())
            throw UsageError("gradient shape does not match the last forward output");
        Mat<S> gv, ga;
        if (cfg_.atoms == 1) {
            gv = grad_out.colwise().sum();
            ga = grad_out;
            ga.rowwise() -= grad_out.colwise().mean();
        } else {
            gv = Mat<S>::Zero(cfg_.atoms, grad_out.cols());
            for (int a = 0; a < cfg_.actions; ++a) gv += grad_out.middleRows(a * cfg_.atoms, cfg_.atoms);
            ga.resize(grad_out.rows(), grad_out.cols());
            const Mat<S> mean = gv / static_cast<S>(cfg_.actions);
            for (int a = 0; a < cfg_.actions; ++a)
                ga.middleRows(a * cfg_.atoms, cfg_.atoms) = grad_out.middleRows(a * cfg_.atoms, cfg_.atoms) - mean;
        }
        const Mat<S> ghv = head_v_[0].backward(gv);
        const Mat<S> gha = head_a_[0].backward(ga);
        Mat<S> gfeat = fc_v_[0].backward(rv_.backward(ghv));
        gfeat += fc_a_[0].backward(ra_.backward(gha));
        const Mat<S> gh3 = cfg_.goal ? Mat<S>(gfeat.topRows(flat_)) : std::move(gfeat);
        const Mat<S> gh2 = conv3_.backward(r3_.backward(gh3));
        const Mat<S> gh1 = conv2_.backward(r2_.backward(gh2));
        conv1_.backward(r1_.backward(gh1));
    }

    /// Cached pre-softmax logits of the last distributional forward.
    const Mat<S>& last_logits() const { return logits_; }

    template <class F>
    void visit_params(F&& f) {
        f(std::string("conv1.w"), conv1_.weight(), conv1_.weight_grad());
        f(std::string("conv1.b"), conv1_.bias(), conv1_.bias_grad());
        f(std::string("conv2.w"), conv2_.weight(), conv2_.weight_grad());
        f(std::string("conv2.b"), conv2_.bias(), conv2_.bias_grad());
        f(std::string("conv3.w"), conv3_.weight(), conv3_.weight_grad());
        f(std::string("conv3.b"), conv3_.bias(), conv3_.bias_grad());
        visit_dense(f, "fc_v", fc_v_[0]);
        visit_dense(f, "fc_a", fc_a_[0]);
        visit_dense(f, "head_v", head_v_[0]);
        visit_dense(f, "head_a", head_a_[0]);
    }

    std::size_t parameter_count() {
        std::size_t n = 0;
        visit_params([&](const std::string&, Mat<S>& v, Mat<S>&) { n += static_cast<std::size_t>(v.size()); });
        return n;
    }

private:
    template <class F>
    static void visit_dense(F& f, const std::string& prefix, Dense<S>& d) {
        if (d.noisy()) {
            f(prefix + ".mu_w", d.mu_w(), d.mu_w_grad());
            f(prefix + ".sigma_w", d.sigma_w(), d.sigma_w_grad());
            f(prefix + ".mu_b", d.mu_b(), d.mu_b_grad());
            f(prefix + ".sigma_b", d.sigma_b(), d.sigma_b_grad());
        } else {
            f(prefix + ".w", d.mu_w(), d.mu_w_grad());
            f(prefix + ".b", d.mu_b(), d.mu_b_grad());
        }
    }

    QNetworkConfig cfg_;
    Conv1d<S> conv1_, conv2_, conv3_;
    // single-element vectors defer Dense construction until conv sizes are known
    std::vector<Dense<S>> fc_v_, fc_a_, head_v_, head_a_;
    Relu<S> r1_, r2_, r3_, rv_, ra_;
    int flat_ = 0;
    Mat<S> feat_, logits_, out_;
};

/// Copies parameter values (not gradients) between identically shaped networks.
template <class S>
void copy_params(QNetwork<S>& from, QNetwork<S>& to) {
    std::vector<Mat<S>*> src;
    from.visit_params([&](const std::string&, Mat<S>& v, Mat<S>&) { src.push_back(&v); });
    std::size_t i = 0;
    to.visit_params([&](const std::string&, Mat<S>& v, Mat<S>&) { v = *src.at(i++); });
}

/// target <- tau * online + (1 - tau) * target, elementwise.
template <class S>
void soft_update(QNetwork<S>& target, QNetwork<S>& online, S tau) {
    std::vector<Mat<S>*> src;
    online.visit_params([&](const std::string&, Mat<S>& v, Mat<S>&) { src.push_back(&v); });
    std::size_t i = 0;
    target.visit_params([&](const std::string&, Mat<S>& v, Mat<S>&) {
        v = tau * (*src.at(i++)) + (S(1) - tau) * v;
    });
}

} // namespace dnrl
