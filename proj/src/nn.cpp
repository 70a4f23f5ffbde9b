#include "mda/nn.hpp"

#include "mda/error.hpp"

#include <algorithm>
#include <cmath>

namespace mda {

Matrix affine_forward(const Matrix& x, const AffineParams& p) {
    if (x.cols() != p.weights.rows())
        throw ShapeError("affine_forward: input " + shape_string(x) + " vs weights " +
                         shape_string(p.weights));
    if (p.bias.size() != p.weights.cols())
        throw ShapeError("affine_forward: bias length " + std::to_string(p.bias.size()) +
                         " vs weights " + shape_string(p.weights));
    Matrix out = matmul(x, p.weights);
    for (std::size_t i = 0; i < out.rows(); ++i)
        for (std::size_t j = 0; j < out.cols(); ++j) out(i, j) += p.bias[j];
    return out;
}

AffineGrads affine_backward(const Matrix& x, const AffineParams& p, const Matrix& upstream) {
    if (x.cols() != p.weights.rows() || upstream.rows() != x.rows() ||
        upstream.cols() != p.weights.cols())
        throw ShapeError("affine_backward: input " + shape_string(x) + ", weights " +
                         shape_string(p.weights) + ", upstream " + shape_string(upstream));
    AffineGrads g;
    g.grad_x = matmul_nt(upstream, p.weights);
    g.grad_weights = matmul_tn(x, upstream);
    g.grad_bias.assign(upstream.cols(), 0.0);
    for (std::size_t i = 0; i < upstream.rows(); ++i)
        for (std::size_t j = 0; j < upstream.cols(); ++j) g.grad_bias[j] += upstream(i, j);
    return g;
}

Matrix relu_forward(const Matrix& x) {
    Matrix out = x;
    for (double& v : out.values()) v = v > 0.0 ? v : 0.0;
    return out;
}

Matrix relu_backward(const Matrix& x, const Matrix& upstream) {
    if (x.rows() != upstream.rows() || x.cols() != upstream.cols())
        throw ShapeError("relu_backward: input " + shape_string(x) + " vs upstream " +
                         shape_string(upstream));
    Matrix out(x.rows(), x.cols());
    auto xs = x.values();
    auto us = upstream.values();
    auto os = out.values();
    for (std::size_t i = 0; i < xs.size(); ++i) os[i] = xs[i] > 0.0 ? us[i] : 0.0;
    return out;
}

Matrix dropout_forward(const Matrix& x, DropoutState& state, RngStream& rng) {
    if (!(state.rate >= 0.0 && state.rate < 1.0))
        throw ParameterError("dropout rate must lie in [0, 1), got " + std::to_string(state.rate));
    if (state.mode == Mode::eval || state.rate == 0.0) {
        state.mask = Matrix(x.rows(), x.cols(), 1.0);
        return x;
    }
    const double keep = 1.0 - state.rate;
    const double scale = 1.0 / keep;
    state.mask = Matrix(x.rows(), x.cols());
    Matrix out(x.rows(), x.cols());
    auto xs = x.values();
    auto ms = state.mask.values();
    auto os = out.values();
    for (std::size_t i = 0; i < xs.size(); ++i) {
        ms[i] = rng.bernoulli(keep) ? scale : 0.0;
        os[i] = xs[i] * ms[i];
    }
    return out;
}

Matrix dropout_backward(const Matrix& upstream, const DropoutState& state) {
    if (state.mask.rows() != upstream.rows() || state.mask.cols() != upstream.cols())
        throw ShapeError("dropout_backward: mask " + shape_string(state.mask) + " vs upstream " +
                         shape_string(upstream));
    Matrix out = upstream;
    auto ms = state.mask.values();
    auto os = out.values();
    for (std::size_t i = 0; i < os.size(); ++i) os[i] *= ms[i];
    return out;
}

Matrix softmax(const Matrix& logits) {
    Matrix out(logits.rows(), logits.cols());
    for (std::size_t i = 0; i < logits.rows(); ++i) {
        auto in = logits.row(i);
        auto o = out.row(i);
        const double mx = *std::max_element(in.begin(), in.end());
        double z = 0.0;
        for (std::size_t j = 0; j < in.size(); ++j) {
            o[j] = std::exp(in[j] - mx);
            z += o[j];
        }
        for (double& v : o) v /= z;
    }
    return out;
}

SoftmaxXent softmax_cross_entropy(const Matrix& logits, std::span<const int> labels) {
    const std::size_t n = logits.rows(), c = logits.cols();
    if (c < 2) throw ParameterError("softmax_cross_entropy needs at least 2 classes");
    if (labels.size() != n)
        throw ShapeError("softmax_cross_entropy: " + std::to_string(labels.size()) +
                         " labels for logits " + shape_string(logits));
    if (n == 0) throw InsufficientSamplesError("softmax_cross_entropy: empty batch");
    for (int y : labels)
        if (y < 0 || static_cast<std::size_t>(y) >= c)
            throw ParameterError("label " + std::to_string(y) + " outside [0, " +
                                 std::to_string(c) + ")");

    SoftmaxXent r;
    r.grad_logits = Matrix(n, c);
    const double inv_n = 1.0 / static_cast<double>(n);
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        auto in = logits.row(i);
        auto g = r.grad_logits.row(i);
        const double mx = *std::max_element(in.begin(), in.end());
        double z = 0.0;
        for (std::size_t j = 0; j < c; ++j) z += std::exp(in[j] - mx);
        const double log_z = std::log(z);
        const auto y = static_cast<std::size_t>(labels[i]);
        total += -(in[y] - mx - log_z);
        for (std::size_t j = 0; j < c; ++j) {
            const double p = std::exp(in[j] - mx - log_z);
            g[j] = (p - (j == y ? 1.0 : 0.0)) * inv_n;
        }
    }
    r.loss = total * inv_n;
    return r;
}

} // namespace mda
