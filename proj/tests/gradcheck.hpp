#pragma once

// Finite-difference machinery for verifying analytic gradients, plus a
// direct correlation reference for the 1D convolution.

#include <cmath>
#include <functional>

#include "dnrl/nn.hpp"

namespace oracle {

/// Central difference d(loss)/dp around the current value of p.
inline double central_diff(const std::function<double()>& loss, double& p, double h = 1e-4) {
    const double p0 = p;
    p = p0 + h;
    const double up = loss();
    p = p0 - h;
    const double down = loss();
    p = p0;
    return (up - down) / (2.0 * h);
}

/// Relative agreement with an absolute floor for near-zero gradients.
inline bool grad_close(double analytic, double fd, double tol = 1e-4) {
    const double scale = std::max({std::abs(analytic), std::abs(fd), 1e-2});
    return std::abs(analytic - fd) <= tol * scale;
}

/// Plain-loop 1D correlation over channel-major columns.
inline dnrl::Mat<double> conv1d_direct(const dnrl::Mat<double>& x, const dnrl::Mat<double>& w,
                                       const dnrl::Mat<double>& b, int in_ch, int kernel, int stride) {
    const int in_len = static_cast<int>(x.rows()) / in_ch;
    const int out_ch = static_cast<int>(w.rows());
    const int out_len = (in_len - kernel) / stride + 1;
    dnrl::Mat<double> y(out_ch * out_len, x.cols());
    for (int col = 0; col < x.cols(); ++col)
        for (int o = 0; o < out_ch; ++o)
            for (int t = 0; t < out_len; ++t) {
                double acc = b(o, 0);
                for (int c = 0; c < in_ch; ++c)
                    for (int u = 0; u < kernel; ++u)
                        acc += w(o, c * kernel + u) * x(c * in_len + t * stride + u, col);
                y(o * out_len + t, col) = acc;
            }
    return y;
}

} // namespace oracle
