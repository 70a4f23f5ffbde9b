#pragma once

#include "mda/matrix.hpp"
#include "mda/rng.hpp"

#include <cstddef>
#include <span>
#include <vector>

namespace mda {

enum class Mode { train, eval };

struct AffineParams {
    Matrix weights;            // in_dim × out_dim
    std::vector<double> bias;  // out_dim

    std::size_t in_dim() const { return weights.rows(); }
    std::size_t out_dim() const { return weights.cols(); }
    friend bool operator==(const AffineParams&, const AffineParams&) = default;
};

struct AffineGrads {
    Matrix grad_x;
    Matrix grad_weights;
    std::vector<double> grad_bias;
};

Matrix affine_forward(const Matrix& x, const AffineParams& p);
AffineGrads affine_backward(const Matrix& x, const AffineParams& p, const Matrix& upstream);

Matrix relu_forward(const Matrix& x);
// Subgradient at exactly 0 is 0.
Matrix relu_backward(const Matrix& x, const Matrix& upstream);

// Inverted dropout. `mask` holds the per-entry scale applied on the last
// train-mode forward (0 or 1/(1-rate)).
struct DropoutState {
    double rate = 0.5;
    Mode mode = Mode::train;
    Matrix mask;
};

Matrix dropout_forward(const Matrix& x, DropoutState& state, RngStream& rng);
Matrix dropout_backward(const Matrix& upstream, const DropoutState& state);

Matrix softmax(const Matrix& logits);

struct SoftmaxXent {
    double loss = 0.0;
    Matrix grad_logits;
};

// Mean cross-entropy of row-wise softmax against integer class labels.
SoftmaxXent softmax_cross_entropy(const Matrix& logits, std::span<const int> labels);

} // namespace mda
