#include "mda/metrics.hpp"

#include "mda/error.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

namespace mda {

namespace {

void require_same_dim(const Matrix& src, const Matrix& tgt, const char* op) {
    if (src.cols() != tgt.cols())
        throw ShapeError(std::string(op) + ": source " + shape_string(src) + " vs target " +
                         shape_string(tgt));
}

double median_of(std::vector<double>& v) {
    const std::size_t n = v.size();
    const std::size_t mid = n / 2;
    std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid), v.end());
    const double upper = v[mid];
    if (n % 2 == 1) return upper;
    const double lower = *std::max_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid));
    return 0.5 * (lower + upper);
}

Matrix gaussian_gram(const Matrix& sqdist, double inv_two_sigma_sq) {
    Matrix k(sqdist.rows(), sqdist.cols());
    auto s = sqdist.values();
    auto o = k.values();
    for (std::size_t i = 0; i < s.size(); ++i) o[i] = std::exp(-s[i] * inv_two_sigma_sq);
    return k;
}

double sum_of(const Matrix& m) {
    double s = 0.0;
    for (double v : m.values()) s += v;
    return s;
}

// out_i += scale · Σ_j K(i,j)·(a_i − b_j)
void accumulate_kernel_pull(Matrix& out, const Matrix& k, const Matrix& a, const Matrix& b,
                            double scale) {
    const Matrix kb = matmul(k, b);
    for (std::size_t i = 0; i < a.rows(); ++i) {
        double rowsum = 0.0;
        for (std::size_t j = 0; j < k.cols(); ++j) rowsum += k(i, j);
        for (std::size_t c = 0; c < a.cols(); ++c)
            out(i, c) += scale * (a(i, c) * rowsum - kb(i, c));
    }
}

} // namespace

Matrix covariance(const Matrix& d) {
    const std::size_t n = d.rows();
    if (n < 2)
        throw InsufficientSamplesError("covariance needs at least 2 rows, got " +
                                       std::to_string(n));
    Matrix c = matmul_tn(d, d);
    std::vector<double> colsum(d.cols(), 0.0);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < d.cols(); ++j) colsum[j] += d(i, j);
    const double inv_n = 1.0 / static_cast<double>(n);
    const double inv_nm1 = 1.0 / static_cast<double>(n - 1);
    for (std::size_t i = 0; i < d.cols(); ++i)
        for (std::size_t j = 0; j < d.cols(); ++j)
            c(i, j) = (c(i, j) - colsum[i] * colsum[j] * inv_n) * inv_nm1;
    return c;
}

CoralTerms coral_terms(const Matrix& src, const Matrix& tgt) {
    require_same_dim(src, tgt, "coral");
    if (src.rows() < 2 || tgt.rows() < 2)
        throw InsufficientSamplesError("coral needs at least 2 rows per domain, got " +
                                       std::to_string(src.rows()) + " and " +
                                       std::to_string(tgt.rows()));
    return {covariance(src), covariance(tgt), src.cols(), src.rows(), tgt.rows()};
}

DiscrepancyResult coral_loss(const Matrix& src, const Matrix& tgt) {
    const CoralTerms t = coral_terms(src, tgt);
    const std::size_t d = t.dim;
    const double dd = static_cast<double>(d) * static_cast<double>(d);

    Matrix diff = t.source_cov;
    add_inplace(diff, t.target_cov, -1.0);
    double fro = 0.0;
    for (double v : diff.values()) fro += v * v;

    DiscrepancyResult r;
    r.loss = fro / (4.0 * dd);

    // dL/dC_S = (C_S − C_T)/(2d²); dC/dD contracted with a symmetric G is
    // 2(D − 1μ)G/(n − 1).
    Matrix g = diff;
    for (double& v : g.values()) v /= 2.0 * dd;

    auto centered = [](const Matrix& m) {
        Matrix c = m;
        const auto mean = column_means(m);
        for (std::size_t i = 0; i < c.rows(); ++i)
            for (std::size_t j = 0; j < c.cols(); ++j) c(i, j) -= mean[j];
        return c;
    };
    r.grad_src = matmul(centered(src), g);
    const double s_scale = 2.0 / static_cast<double>(t.source_rows - 1);
    for (double& v : r.grad_src.values()) v *= s_scale;
    r.grad_tgt = matmul(centered(tgt), g);
    const double t_scale = -2.0 / static_cast<double>(t.target_rows - 1);
    for (double& v : r.grad_tgt.values()) v *= t_scale;
    return r;
}

Matrix pairwise_sq_distances(const Matrix& a, const Matrix& b) {
    require_same_dim(a, b, "pairwise_sq_distances");
    Matrix out(a.rows(), b.rows());
    const std::size_t d = a.cols();
    for (std::size_t i = 0; i < a.rows(); ++i) {
        const double* ar = a.row(i).data();
        for (std::size_t j = 0; j < b.rows(); ++j) {
            const double* br = b.row(j).data();
            double s = 0.0;
            for (std::size_t c = 0; c < d; ++c) {
                const double t = ar[c] - br[c];
                s += t * t;
            }
            out(i, j) = s;
        }
    }
    return out;
}

double median_bandwidth(const Matrix& src, const Matrix& tgt) {
    require_same_dim(src, tgt, "median_bandwidth");
    const std::size_t n = src.rows() + tgt.rows();
    if (n < 2)
        throw InsufficientSamplesError("median_bandwidth needs at least 2 pooled rows");
    auto pooled_row = [&](std::size_t i) {
        return i < src.rows() ? src.row(i) : tgt.row(i - src.rows());
    };
    std::vector<double> dist;
    dist.reserve(n * (n - 1) / 2);
    for (std::size_t i = 0; i < n; ++i) {
        auto a = pooled_row(i);
        for (std::size_t j = i + 1; j < n; ++j) {
            auto b = pooled_row(j);
            double s = 0.0;
            for (std::size_t c = 0; c < a.size(); ++c) {
                const double t = a[c] - b[c];
                s += t * t;
            }
            dist.push_back(s);
        }
    }
    double med = median_of(dist);
    if (med <= 0.0) {
        // Mostly duplicated rows (e.g. dead ReLU units): fall back to the
        // median over the distinct pairs, then to 1.
        std::erase_if(dist, [](double v) { return v <= 0.0; });
        if (dist.empty()) return 1.0;
        med = median_of(dist);
    }
    return std::sqrt(med);
}

DiscrepancyResult mmd_loss(const Matrix& src, const Matrix& tgt, const KernelSpec& kernel) {
    require_same_dim(src, tgt, "mmd");
    if (src.rows() == 0 || tgt.rows() == 0)
        throw InsufficientSamplesError("mmd needs non-empty batches, got " +
                                       std::to_string(src.rows()) + " and " +
                                       std::to_string(tgt.rows()));
    const std::size_t n = src.rows(), m = tgt.rows(), d = src.cols();
    const double dn = static_cast<double>(n), dm = static_cast<double>(m);
    DiscrepancyResult r;

    if (kernel.kind == KernelKind::linear) {
        const auto ms = column_means(src);
        const auto mt = column_means(tgt);
        std::vector<double> delta(d);
        for (std::size_t c = 0; c < d; ++c) {
            delta[c] = ms[c] - mt[c];
            r.loss += delta[c] * delta[c];
        }
        r.grad_src = Matrix(n, d);
        r.grad_tgt = Matrix(m, d);
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t c = 0; c < d; ++c) r.grad_src(i, c) = 2.0 * delta[c] / dn;
        for (std::size_t i = 0; i < m; ++i)
            for (std::size_t c = 0; c < d; ++c) r.grad_tgt(i, c) = -2.0 * delta[c] / dm;
        return r;
    }

    double sigma;
    if (kernel.bandwidth) {
        sigma = *kernel.bandwidth;
        if (!(sigma > 0.0) || !std::isfinite(sigma))
            throw ParameterError("gaussian bandwidth must be positive, got " +
                                 std::to_string(sigma));
    } else {
        sigma = median_bandwidth(src, tgt);
    }
    r.bandwidth = sigma;
    const double sigma_sq = sigma * sigma;
    const double inv_two_sigma_sq = 1.0 / (2.0 * sigma_sq);

    const Matrix kxx = gaussian_gram(pairwise_sq_distances(src, src), inv_two_sigma_sq);
    const Matrix kyy = gaussian_gram(pairwise_sq_distances(tgt, tgt), inv_two_sigma_sq);
    const Matrix kxy = gaussian_gram(pairwise_sq_distances(src, tgt), inv_two_sigma_sq);

    const double cxx = 1.0 / (dn * dn), cyy = 1.0 / (dm * dm), cxy = 1.0 / (dn * dm);
    // Non-negative in exact arithmetic; clamp rounding residue.
    r.loss = std::max(0.0, sum_of(kxx) * cxx + sum_of(kyy) * cyy - 2.0 * sum_of(kxy) * cxy);

    // ∂k(a,b)/∂a = −k(a,b)(a − b)/σ²
    r.grad_src = Matrix(n, d);
    accumulate_kernel_pull(r.grad_src, kxx, src, src, -2.0 * cxx / sigma_sq);
    accumulate_kernel_pull(r.grad_src, kxy, src, tgt, 2.0 * cxy / sigma_sq);
    r.grad_tgt = Matrix(m, d);
    accumulate_kernel_pull(r.grad_tgt, kyy, tgt, tgt, -2.0 * cyy / sigma_sq);
    accumulate_kernel_pull(r.grad_tgt, transpose(kxy), tgt, src, 2.0 * cxy / sigma_sq);
    return r;
}

} // namespace mda
