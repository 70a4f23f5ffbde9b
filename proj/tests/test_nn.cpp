#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "mda/error.hpp"
#include "mda/matrix.hpp"
#include "mda/nn.hpp"
#include "mda/rng.hpp"
#include "test_support.hpp"

#include <cmath>
#include <vector>

using namespace mda;
using mda::testing::max_rel_error;
using mda::testing::numeric_gradient;
using mda::testing::random_matrix;

namespace {

// Scalar triple loop, kept deliberately naive.
Matrix oracle_affine(const Matrix& x, const AffineParams& p) {
    Matrix out(x.rows(), p.weights.cols());
    for (std::size_t i = 0; i < x.rows(); ++i)
        for (std::size_t j = 0; j < p.weights.cols(); ++j) {
            double s = 0.0;
            for (std::size_t k = 0; k < x.cols(); ++k) s += x(i, k) * p.weights(k, j);
            out(i, j) = s + p.bias[j];
        }
    return out;
}

AffineParams random_affine(std::size_t in, std::size_t out, RngStream& rng) {
    AffineParams p{random_matrix(in, out, rng), {}};
    for (std::size_t j = 0; j < out; ++j) p.bias.push_back(rng.uniform(-1, 1));
    return p;
}

// <upstream, f(x)> turns a matrix-valued op into a scalar for finite differences.
double contract(const Matrix& a, const Matrix& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.values().size(); ++i) s += a.values()[i] * b.values()[i];
    return s;
}

} // namespace

// ---------------------------------------------------------------------------
TEST_SUITE("matrix") {
    TEST_CASE("matmul variants agree with a naive loop") {
        RngStream rng(11);
        for (int trial = 0; trial < 20; ++trial) {
            const std::size_t n = 1 + rng.below(6), k = 1 + rng.below(6), m = 1 + rng.below(6);
            const Matrix a = random_matrix(n, k, rng), b = random_matrix(k, m, rng);
            const Matrix c = matmul(a, b);
            for (std::size_t i = 0; i < n; ++i)
                for (std::size_t j = 0; j < m; ++j) {
                    double s = 0;
                    for (std::size_t p = 0; p < k; ++p) s += a(i, p) * b(p, j);
                    CHECK(c(i, j) == doctest::Approx(s).epsilon(1e-12));
                }
            const Matrix tn = matmul_tn(transpose(a), b);
            const Matrix nt = matmul_nt(a, transpose(b));
            CHECK(max_rel_error(tn, c, 1.0) < 1e-12);
            CHECK(max_rel_error(nt, c, 1.0) < 1e-12);
        }
    }

    TEST_CASE("shape errors name both shapes") {
        const Matrix a(2, 3), b(2, 3);
        try {
            (void)matmul(a, b);
            FAIL("expected ShapeError");
        } catch (const ShapeError& e) {
            const std::string msg = e.what();
            CHECK(msg.find("[2x3]") != std::string::npos);
        }
    }

    TEST_CASE("gather_rows and column_means") {
        const Matrix m{{1, 2}, {3, 4}, {5, 6}};
        const std::vector<std::size_t> idx = {2, 0};
        const Matrix g = gather_rows(m, idx);
        CHECK(g == Matrix{{5, 6}, {1, 2}});
        const auto mu = column_means(m);
        CHECK(mu[0] == doctest::Approx(3.0));
        CHECK(mu[1] == doctest::Approx(4.0));
    }

    TEST_CASE("matrix ops are bitwise deterministic") {
        RngStream r1(5), r2(5);
        const Matrix a = random_matrix(7, 9, r1), b = random_matrix(9, 4, r1);
        const Matrix a2 = random_matrix(7, 9, r2), b2 = random_matrix(9, 4, r2);
        CHECK(matmul(a, b) == matmul(a2, b2));
    }
}

// ---------------------------------------------------------------------------
TEST_SUITE("rng") {
    TEST_CASE("same seed, same sequence") {
        RngStream a(42), b(42);
        for (int i = 0; i < 100; ++i) CHECK(a.next_u64() == b.next_u64());
        CHECK(a.position() == 100);
    }

    TEST_CASE("uniform and below stay in range") {
        RngStream r(3);
        for (int i = 0; i < 10000; ++i) {
            const double u = r.uniform();
            CHECK((u >= 0.0 && u < 1.0));
            CHECK(r.below(7) < 7);
        }
    }

    TEST_CASE("derive_seed separates streams") {
        CHECK(derive_seed(1, 0) != derive_seed(1, 1));
        CHECK(derive_seed(1, 0) != derive_seed(2, 0));
        CHECK(derive_seed(9, 4) == derive_seed(9, 4));
    }

    TEST_CASE("normal draws have unit moments") {
        RngStream r(8);
        double s = 0, s2 = 0;
        const int n = 100000;
        for (int i = 0; i < n; ++i) {
            const double z = r.normal();
            s += z;
            s2 += z * z;
        }
        CHECK(std::abs(s / n) < 0.02);
        CHECK(std::abs(s2 / n - 1.0) < 0.03);
    }
}

// ---------------------------------------------------------------------------
TEST_SUITE("affine") {
    TEST_CASE("identity input and identity weights") {
        const Matrix eye{{1, 0}, {0, 1}};
        const AffineParams p{eye, {0, 0}};
        CHECK(affine_forward(eye, p) == eye);
    }

    TEST_CASE("zero weights pass the bias") {
        const AffineParams p{Matrix{{0}, {0}}, {5}};
        CHECK(affine_forward(Matrix{{1, 2}}, p) == Matrix{{5}});
    }

    TEST_CASE("matches the triple-loop oracle") {
        RngStream rng(21);
        const Matrix x = random_matrix(3, 4, rng);
        const AffineParams p = random_affine(4, 2, rng);
        CHECK(max_rel_error(affine_forward(x, p), oracle_affine(x, p), 1.0) < 1e-12);
    }

    TEST_CASE("width mismatch is a shape error") {
        const AffineParams p{Matrix(3, 2), {0, 0}};
        CHECK_THROWS_AS(affine_forward(Matrix(1, 4), p), ShapeError);
        CHECK_THROWS_AS(affine_backward(Matrix(1, 3), p, Matrix(1, 3)), ShapeError);
    }

    TEST_CASE("zero upstream gives zero gradients") {
        RngStream rng(2);
        const Matrix x = random_matrix(4, 3, rng);
        const AffineParams p = random_affine(3, 2, rng);
        const auto g = affine_backward(x, p, Matrix(4, 2));
        for (double v : g.grad_x.values()) CHECK(v == 0.0);
        for (double v : g.grad_weights.values()) CHECK(v == 0.0);
        for (double v : g.grad_bias) CHECK(v == 0.0);
    }

    TEST_CASE("scalar chain rule") {
        const AffineParams p{Matrix{{3}}, {0}};
        const auto g = affine_backward(Matrix{{2}}, p, Matrix{{1}});
        CHECK(g.grad_x(0, 0) == 3.0);
        CHECK(g.grad_weights(0, 0) == 2.0);
        CHECK(g.grad_bias[0] == 1.0);
    }

    TEST_CASE("backward matches finite differences") {
        RngStream rng(31);
        Matrix x = random_matrix(5, 3, rng);
        AffineParams p = random_affine(3, 4, rng);
        const Matrix up = random_matrix(5, 4, rng);
        const auto g = affine_backward(x, p, up);
        auto f = [&] { return contract(up, affine_forward(x, p)); };
        CHECK(max_rel_error(g.grad_x, numeric_gradient(x, f)) < 1e-6);
        CHECK(max_rel_error(g.grad_weights, numeric_gradient(p.weights, f)) < 1e-6);
        Matrix b = Matrix::from_data(1, p.bias.size(), p.bias);
        auto fb = [&] {
            AffineParams q{p.weights, {b.values().begin(), b.values().end()}};
            return contract(up, affine_forward(x, q));
        };
        const Matrix nb = numeric_gradient(b, fb);
        CHECK(max_rel_error(Matrix::from_data(1, g.grad_bias.size(), g.grad_bias), nb) < 1e-6);
    }
}

// ---------------------------------------------------------------------------
TEST_SUITE("relu") {
    TEST_CASE("sign cases") {
        CHECK(relu_forward(Matrix{{-1, 2}}) == Matrix{{0, 2}});
    }

    TEST_CASE("all negative input") {
        const Matrix x{{-1, -2}, {-0.5, -3}};
        CHECK(relu_forward(x) == Matrix(2, 2));
        CHECK(relu_backward(x, Matrix{{1, 1}, {1, 1}}) == Matrix(2, 2));
    }

    TEST_CASE("subgradient at zero is zero") {
        CHECK(relu_backward(Matrix{{0.0}}, Matrix{{1.0}})(0, 0) == 0.0);
    }

    TEST_CASE("backward matches finite differences away from zero") {
        RngStream rng(41);
        Matrix x = mda::testing::random_away_from_zero(6, 5, rng);
        const Matrix up = random_matrix(6, 5, rng);
        auto f = [&] { return contract(up, relu_forward(x)); };
        CHECK(max_rel_error(relu_backward(x, up), numeric_gradient(x, f)) < 1e-6);
    }
}

// ---------------------------------------------------------------------------
TEST_SUITE("dropout") {
    TEST_CASE("rate zero is the identity in both modes") {
        RngStream rng(1);
        const Matrix x{{1, -2, 3}};
        for (Mode m : {Mode::train, Mode::eval}) {
            DropoutState s{0.0, m, {}};
            CHECK(dropout_forward(x, s, rng) == x);
        }
    }

    TEST_CASE("eval mode is the identity") {
        RngStream rng(1);
        const Matrix x{{1, -2, 3}};
        DropoutState s{0.5, Mode::eval, {}};
        CHECK(dropout_forward(x, s, rng) == x);
        CHECK(rng.position() == 0);
    }

    TEST_CASE("rate at or above one is rejected") {
        RngStream rng(1);
        DropoutState s{1.0, Mode::train, {}};
        CHECK_THROWS_AS(dropout_forward(Matrix{{1.0}}, s, rng), ParameterError);
    }

    TEST_CASE("kept entries are scaled, dropped entries are zero") {
        RngStream rng(6);
        Matrix ones(20, 20);
        for (double& v : ones.values()) v = 1.0;
        DropoutState s{0.5, Mode::train, {}};
        const Matrix y = dropout_forward(ones, s, rng);
        for (double v : y.values()) CHECK((v == 0.0 || v == 2.0));
        CHECK(dropout_backward(ones, s) == y);
    }

    TEST_CASE("Monte Carlo expectation equals the input") {
        RngStream rng(77);
        const double value = 0.8;
        const int trials = 100000;
        double sum = 0.0, sum2 = 0.0;
        DropoutState s{0.5, Mode::train, {}};
        const Matrix x{{value}};
        for (int i = 0; i < trials; ++i) {
            const double y = dropout_forward(x, s, rng)(0, 0);
            sum += y;
            sum2 += y * y;
        }
        const double mean = sum / trials;
        const double var = sum2 / trials - mean * mean;
        const double se = std::sqrt(var / trials);
        CHECK(std::abs(mean - value) < 3.0 * se);
    }
}

// ---------------------------------------------------------------------------
TEST_SUITE("softmax") {
    TEST_CASE("uniform logits cost ln 2") {
        const std::vector<int> labels = {0, 1};
        const auto r = softmax_cross_entropy(Matrix{{0.3, 0.3}, {-2, -2}}, labels);
        CHECK(r.loss == doctest::Approx(std::log(2.0)).epsilon(1e-12));
    }

    TEST_CASE("large logits do not overflow") {
        const std::vector<int> labels = {0};
        const auto r = softmax_cross_entropy(Matrix{{1000, -1000}}, labels);
        CHECK(std::isfinite(r.loss));
        CHECK(r.loss < 1e-12);
        CHECK(r.grad_logits.all_finite());
    }

    TEST_CASE("out of range label is a parameter error") {
        const std::vector<int> bad = {2};
        CHECK_THROWS_AS(softmax_cross_entropy(Matrix{{0, 0}}, bad), ParameterError);
        const std::vector<int> neg = {-1};
        CHECK_THROWS_AS(softmax_cross_entropy(Matrix{{0, 0}}, neg), ParameterError);
    }

    TEST_CASE("rows are probability vectors") {
        RngStream rng(9);
        for (int t = 0; t < 50; ++t) {
            const Matrix p = softmax(random_matrix(8, 2 + rng.below(4), rng, -30, 30));
            for (std::size_t i = 0; i < p.rows(); ++i) {
                double s = 0;
                for (double v : p.row(i)) {
                    CHECK((v >= 0.0 && v <= 1.0));
                    s += v;
                }
                CHECK(std::abs(s - 1.0) < 1e-12);
            }
        }
    }

    TEST_CASE("gradient matches finite differences") {
        RngStream rng(12);
        Matrix logits = random_matrix(8, 2, rng, -3, 3);
        std::vector<int> labels;
        for (int i = 0; i < 8; ++i) labels.push_back(static_cast<int>(rng.below(2)));
        const auto r = softmax_cross_entropy(logits, labels);
        auto f = [&] { return softmax_cross_entropy(logits, labels).loss; };
        CHECK(max_rel_error(r.grad_logits, numeric_gradient(logits, f)) < 1e-5);
    }
}
