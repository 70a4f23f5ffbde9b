#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "mda/error.hpp"
#include "mda/metrics.hpp"
#include "test_support.hpp"

#include <cmath>

using namespace mda;
using mda::testing::max_rel_error;
using mda::testing::numeric_gradient;
using mda::testing::random_matrix;

namespace {

// Mean-centred two-pass covariance.
Matrix two_pass_covariance(const Matrix& d) {
    const std::size_t n = d.rows(), k = d.cols();
    std::vector<double> mu(k, 0.0);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < k; ++j) mu[j] += d(i, j);
    for (double& m : mu) m /= static_cast<double>(n);
    Matrix c(k, k);
    for (std::size_t a = 0; a < k; ++a)
        for (std::size_t b = 0; b < k; ++b) {
            double s = 0;
            for (std::size_t i = 0; i < n; ++i) s += (d(i, a) - mu[a]) * (d(i, b) - mu[b]);
            c(a, b) = s / static_cast<double>(n - 1);
        }
    return c;
}

Matrix shifted(const Matrix& m, const std::vector<double>& shift) {
    Matrix out = m;
    for (std::size_t i = 0; i < m.rows(); ++i)
        for (std::size_t j = 0; j < m.cols(); ++j) out(i, j) += shift[j];
    return out;
}

const KernelSpec kLinear{KernelKind::linear, std::nullopt};

} // namespace

TEST_SUITE("covariance") {
    TEST_CASE("constant column has zero covariance") {
        const Matrix d{{1, 3}, {2, 3}, {4, 3}};
        const Matrix c = covariance(d);
        CHECK(c(1, 1) == 0.0);
        CHECK(c(0, 1) == 0.0);
        CHECK(c(1, 0) == 0.0);
    }

    TEST_CASE("two-point example") {
        CHECK(covariance(Matrix{{0}, {2}}) == Matrix{{2}});
    }

    TEST_CASE("fewer than two rows is rejected") {
        CHECK_THROWS_AS(covariance(Matrix{{1, 2}}), InsufficientSamplesError);
    }

    TEST_CASE("matches the two-pass oracle") {
        RngStream rng(101);
        for (int t = 0; t < 25; ++t) {
            const Matrix d = random_matrix(50, 4, rng, -3, 3);
            const Matrix c = covariance(d);
            const Matrix o = two_pass_covariance(d);
            for (std::size_t i = 0; i < 16; ++i) CHECK(std::abs(c.values()[i] - o.values()[i]) < 1e-10);
            for (std::size_t a = 0; a < 4; ++a)
                for (std::size_t b = 0; b < 4; ++b) CHECK(std::abs(c(a, b) - c(b, a)) < 1e-10);
        }
    }
}

TEST_SUITE("coral") {
    TEST_CASE("d=1 toy") {
        const auto r = coral_loss(Matrix{{0}, {2}}, Matrix{{0}, {4}});
        CHECK(r.loss == doctest::Approx(9.0).epsilon(1e-12));
    }

    TEST_CASE("identical batches: zero loss, stationary") {
        RngStream rng(3);
        const Matrix x = random_matrix(12, 3, rng);
        const auto r = coral_loss(x, x);
        CHECK(r.loss <= 1e-10);
        for (std::size_t i = 0; i < x.values().size(); ++i)
            CHECK(std::abs(r.grad_src.values()[i] + r.grad_tgt.values()[i]) < 1e-12);
    }

    TEST_CASE("mean shift invariance") {
        RngStream rng(4);
        const Matrix x = random_matrix(20, 3, rng), y = random_matrix(15, 3, rng);
        const double base = coral_loss(x, y).loss;
        CHECK(coral_loss(x, shifted(x, {1.5, -2, 7})).loss <= 1e-10);
        CHECK(std::abs(coral_loss(shifted(x, {3, 1, -1}), shifted(y, {-4, 0.5, 2})).loss - base) < 1e-10);
    }

    TEST_CASE("too few rows or width mismatch") {
        CHECK_THROWS_AS(coral_loss(Matrix{{1}}, Matrix{{1}, {2}}), InsufficientSamplesError);
        CHECK_THROWS_AS(coral_loss(Matrix{{1}, {2}}, Matrix{{1}}), InsufficientSamplesError);
        CHECK_THROWS_AS(coral_loss(Matrix(3, 2), Matrix(3, 3)), ShapeError);
    }

    TEST_CASE("gradients match finite differences") {
        RngStream rng(5);
        Matrix x = random_matrix(9, 4, rng), y = random_matrix(7, 4, rng, -2, 1);
        const auto r = coral_loss(x, y);
        auto f = [&] { return coral_loss(x, y).loss; };
        CHECK(max_rel_error(r.grad_src, numeric_gradient(x, f), 1e-8) < 1e-5);
        CHECK(max_rel_error(r.grad_tgt, numeric_gradient(y, f), 1e-8) < 1e-5);
    }
}

TEST_SUITE("mmd") {
    TEST_CASE("linear toy equals one") {
        const auto r = mmd_loss(Matrix{{0}, {2}}, Matrix{{1}, {3}}, kLinear);
        CHECK(r.loss == 1.0);
    }

    TEST_CASE("identical batches give zero for both kernels") {
        RngStream rng(6);
        const Matrix x = random_matrix(10, 3, rng);
        CHECK(mmd_loss(x, x, kLinear).loss <= 1e-10);
        CHECK(mmd_loss(x, x, KernelSpec{}).loss <= 1e-10);
    }

    TEST_CASE("bad inputs") {
        CHECK_THROWS_AS(mmd_loss(Matrix(0, 2), Matrix(3, 2), KernelSpec{}), InsufficientSamplesError);
        CHECK_THROWS_AS(mmd_loss(Matrix(2, 2), Matrix(3, 2), KernelSpec{KernelKind::gaussian, 0.0}),
                        ParameterError);
        CHECK_THROWS_AS(mmd_loss(Matrix(2, 2), Matrix(3, 2), KernelSpec{KernelKind::gaussian, -1.0}),
                        ParameterError);
    }

    TEST_CASE("gaussian gradients match finite differences") {
        RngStream rng(7);
        Matrix x = random_matrix(10, 3, rng), y = random_matrix(10, 3, rng, -0.5, 1.5);
        // Fixed bandwidth: the median heuristic is a constant for the gradient.
        const KernelSpec k{KernelKind::gaussian, median_bandwidth(x, y)};
        const auto r = mmd_loss(x, y, k);
        auto f = [&] { return mmd_loss(x, y, k).loss; };
        CHECK(max_rel_error(r.grad_src, numeric_gradient(x, f), 1e-8) < 1e-5);
        CHECK(max_rel_error(r.grad_tgt, numeric_gradient(y, f), 1e-8) < 1e-5);
    }

    TEST_CASE("linear gradients match finite differences") {
        RngStream rng(8);
        Matrix x = random_matrix(6, 4, rng), y = random_matrix(9, 4, rng);
        const auto r = mmd_loss(x, y, kLinear);
        auto f = [&] { return mmd_loss(x, y, kLinear).loss; };
        CHECK(max_rel_error(r.grad_src, numeric_gradient(x, f), 1e-8) < 1e-5);
        CHECK(max_rel_error(r.grad_tgt, numeric_gradient(y, f), 1e-8) < 1e-5);
    }

    TEST_CASE("default kernel reports the median bandwidth") {
        RngStream rng(9);
        const Matrix x = random_matrix(8, 2, rng), y = random_matrix(8, 2, rng);
        CHECK(mmd_loss(x, y, KernelSpec{}).bandwidth == median_bandwidth(x, y));
    }
}

TEST_SUITE("median bandwidth") {
    TEST_CASE("identical points fall back to one") {
        CHECK(median_bandwidth(Matrix{{3, 3}}, Matrix{{3, 3}}) == 1.0);
    }

    TEST_CASE("single pair") {
        CHECK(median_bandwidth(Matrix{{0}}, Matrix{{2}}) == doctest::Approx(2.0).epsilon(1e-15));
    }

    TEST_CASE("fewer than two pooled rows") {
        CHECK_THROWS_AS(median_bandwidth(Matrix{{1}}, Matrix(0, 1)), InsufficientSamplesError);
    }

    TEST_CASE("row order does not matter") {
        RngStream rng(10);
        const Matrix x = random_matrix(9, 3, rng), y = random_matrix(6, 3, rng);
        std::vector<std::size_t> px(9), py(6);
        for (std::size_t i = 0; i < 9; ++i) px[i] = i;
        for (std::size_t i = 0; i < 6; ++i) py[i] = i;
        rng.shuffle(px);
        rng.shuffle(py);
        CHECK(median_bandwidth(gather_rows(x, px), gather_rows(y, py)) == median_bandwidth(x, y));
        // Pooling is symmetric too.
        CHECK(median_bandwidth(y, x) == median_bandwidth(x, y));
    }
}

// ---------------------------------------------------------------------------
// Randomised properties.
// ---------------------------------------------------------------------------
TEST_CASE("property: symmetry, non-negativity, zero at equality") {
    RngStream rng(2024);
    for (int t = 0; t < 200; ++t) {
        const std::size_t d = 1 + rng.below(5);
        const Matrix x = random_matrix(2 + rng.below(12), d, rng, -2, 2);
        const Matrix y = random_matrix(2 + rng.below(12), d, rng, -1, 3);
        const KernelSpec gauss{KernelKind::gaussian, median_bandwidth(x, y)};
        for (const KernelSpec& k : {kLinear, gauss}) {
            const double xy = mmd_loss(x, y, k).loss, yx = mmd_loss(y, x, k).loss;
            CHECK(std::abs(xy - yx) <= 1e-12);
            CHECK(xy >= 0.0);
            CHECK(mmd_loss(x, x, k).loss <= 1e-10);
        }
        const double cxy = coral_loss(x, y).loss, cyx = coral_loss(y, x).loss;
        CHECK(std::abs(cxy - cyx) <= 1e-12);
        CHECK(cxy >= 0.0);
        CHECK(coral_loss(x, x).loss <= 1e-10);

        std::vector<double> a(d), b(d);
        for (std::size_t j = 0; j < d; ++j) {
            a[j] = rng.uniform(-5, 5);
            b[j] = rng.uniform(-5, 5);
        }
        CHECK(std::abs(coral_loss(shifted(x, a), shifted(y, b)).loss - cxy) <= 1e-10);
    }
}

TEST_CASE("property: covariance is PSD and matches the oracle") {
    RngStream rng(77);
    for (int t = 0; t < 100; ++t) {
        const std::size_t d = 1 + rng.below(4);
        const Matrix m = random_matrix(2 + rng.below(30), d, rng, -4, 4);
        const Matrix c = covariance(m), o = two_pass_covariance(m);
        for (std::size_t i = 0; i < c.values().size(); ++i)
            CHECK(std::abs(c.values()[i] - o.values()[i]) < 1e-10);
        // vᵀCv ≥ 0 along random directions.
        for (int k = 0; k < 5; ++k) {
            std::vector<double> v(d);
            for (double& e : v) e = rng.uniform(-1, 1);
            double q = 0;
            for (std::size_t a = 0; a < d; ++a)
                for (std::size_t b = 0; b < d; ++b) q += v[a] * c(a, b) * v[b];
            CHECK(q >= -1e-8);
        }
    }
}
