#pragma once

#include "mda/matrix.hpp"

#include <cstddef>
#include <optional>

namespace mda {

// ---------------------------------------------------------------------------
// Domain-discrepancy measures between a source batch and a target batch of
// features (rows = samples, cols = feature dimension). Each loss returns its
// value together with the analytic gradient with respect to both batches.
// ---------------------------------------------------------------------------

enum class KernelKind { linear, gaussian };

struct KernelSpec {
    KernelKind kind = KernelKind::gaussian;
    // Gaussian only. Absent: median heuristic on the pooled batch.
    std::optional<double> bandwidth;
};

// Sample covariance in Gram form:
//   C = (DᵀD − (1ᵀD)ᵀ(1ᵀD) / n) / (n − 1)
Matrix covariance(const Matrix& d);

struct CoralTerms {
    Matrix source_cov;
    Matrix target_cov;
    std::size_t dim = 0;
    std::size_t source_rows = 0;
    std::size_t target_rows = 0;
};

CoralTerms coral_terms(const Matrix& src, const Matrix& tgt);

struct DiscrepancyResult {
    double loss = 0.0;
    Matrix grad_src;
    Matrix grad_tgt;
    double bandwidth = 0.0;  // gaussian MMD only; 0 otherwise
};

// ‖C_S − C_T‖²_F / (4d²)
DiscrepancyResult coral_loss(const Matrix& src, const Matrix& tgt);

// Biased (V-statistic) squared MMD. The bandwidth is a constant for the
// gradient, including when it comes from the median heuristic.
DiscrepancyResult mmd_loss(const Matrix& src, const Matrix& tgt, const KernelSpec& kernel);

// σ with σ² = median pairwise squared distance over the pooled rows.
double median_bandwidth(const Matrix& src, const Matrix& tgt);

// Squared Euclidean distances between every row of a and every row of b.
Matrix pairwise_sq_distances(const Matrix& a, const Matrix& b);

} // namespace mda
