#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>
#include <random>

#include "adnet/errors.hpp"
#include "adnet/linalg.hpp"

using namespace adnet;

namespace {

SymMatrix diag(std::initializer_list<double> d) {
    std::vector<double> v(d);
    return SymMatrix::diagonal(v);
}

// 4-cycle with Metropolis weights: every entry 1/3 on the support.
SymMatrix cycle4() {
    Matrix m(4, 4);
    for (int k = 0; k < 4; ++k) {
        m(k, k) = 1.0 / 3.0;
        m(k, (k + 1) % 4) = 1.0 / 3.0;
        m(k, (k + 3) % 4) = 1.0 / 3.0;
    }
    return SymMatrix(m);
}

SymMatrix random_spd(std::size_t n, std::mt19937_64& rng, double shift) {
    std::normal_distribution<double> normal;
    Matrix g(n, n);
    for (auto& x : g.data()) x = normal(rng);
    Matrix s = multiply(transpose(g), g);
    for (std::size_t i = 0; i < n; ++i) s(i, i) += shift;
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j) s(j, i) = s(i, j);
    return SymMatrix(s);
}

double reconstruction_error(const SymMatrix& m, const EigenDecomposition& e) {
    const std::size_t n = m.size();
    double err = 0.0;
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) {
            double r = 0.0;
            for (std::size_t k = 0; k < n; ++k)
                r += e.vectors(i, k) * e.values[k] * e.vectors(j, k);
            err = std::max(err, std::abs(r - m(i, j)));
        }
    return err;
}

double orthonormality_error(const Matrix& u) {
    const Matrix utu = multiply(transpose(u), u);
    return max_abs(subtract(utu, Matrix::identity(u.rows())));
}

}  // namespace

TEST_CASE("symmetric matrices reject asymmetric input") {
    Matrix m(2, 2);
    m(0, 1) = 1.0;
    CHECK_THROWS_AS(SymMatrix{m}, InvalidInput);
    CHECK_THROWS_AS(SymMatrix{Matrix(2, 3)}, InvalidInput);
    m(1, 0) = 1.0 + 5e-13;
    CHECK_NOTHROW(SymMatrix{m});
}

TEST_CASE("sym_eig examples") {
    SUBCASE("identity") {
        const auto e = sym_eig(SymMatrix::identity(3));
        for (double v : e.values) CHECK(v == doctest::Approx(1.0).epsilon(1e-14));
    }
    SUBCASE("diagonal is sorted descending") {
        const auto e = sym_eig(diag({3, 1, 2}));
        REQUIRE(e.values.size() == 3);
        CHECK(e.values[0] == doctest::Approx(3.0));
        CHECK(e.values[1] == doctest::Approx(2.0));
        CHECK(e.values[2] == doctest::Approx(1.0));
    }
    SUBCASE("4-cycle circulant spectrum") {
        const auto e = sym_eig(cycle4());
        const double expected[] = {1.0, 1.0 / 3.0, 1.0 / 3.0, -1.0 / 3.0};
        for (int j = 0; j < 4; ++j) CHECK(std::abs(e.values[j] - expected[j]) <= 1e-12);
        CHECK(reconstruction_error(cycle4(), e) <= 1e-10);
        CHECK(orthonormality_error(e.vectors) <= 1e-10);
    }
}

TEST_CASE("sym_eig agrees with Eigen on random symmetric matrices") {
    std::mt19937_64 rng(7);
    std::normal_distribution<double> normal;
    for (std::size_t n : {1u, 2u, 5u, 17u, 60u}) {
        Matrix m(n, n);
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = i; j < n; ++j) m(i, j) = m(j, i) = normal(rng);
        const SymMatrix s(m);
        const auto e = sym_eig(s);
        Eigen::MatrixXd em(n, n);
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < n; ++j) em(i, j) = m(i, j);
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> oracle(em);
        const double scale = std::max(1.0, max_abs(m));
        for (std::size_t j = 0; j < n; ++j)
            CHECK(std::abs(e.values[j] - oracle.eigenvalues()(n - 1 - j)) <= 1e-10 * scale);
        for (std::size_t j = 1; j < n; ++j) CHECK(e.values[j - 1] >= e.values[j]);
        CHECK(reconstruction_error(s, e) <= 1e-10 * scale);
        CHECK(orthonormality_error(e.vectors) <= 1e-10);
    }
}

TEST_CASE("sym_sqrt") {
    SUBCASE("identity and diagonal") {
        CHECK(max_abs(subtract(sym_sqrt(SymMatrix::identity(2)).dense(), Matrix::identity(2))) <=
              1e-14);
        const auto r = sym_sqrt(diag({4, 9}));
        CHECK(r(0, 0) == doctest::Approx(2.0));
        CHECK(r(1, 1) == doctest::Approx(3.0));
        CHECK(std::abs(r(0, 1)) <= 1e-14);
    }
    SUBCASE("I - Abar for the 4-cycle") {
        Matrix m = cycle4().dense();
        for (std::size_t i = 0; i < 4; ++i)
            for (std::size_t j = 0; j < 4; ++j)
                m(i, j) = (i == j ? 1.0 : 0.0) - 0.5 * (m(i, j) + (i == j ? 1.0 : 0.0));
        const SymMatrix target(m);
        const auto r = sym_sqrt(target);
        CHECK(max_abs(subtract(multiply(r.dense(), r.dense()), target.dense())) <= 1e-12);
    }
    SUBCASE("random PSD reconstruction, including rank deficiency") {
        std::mt19937_64 rng(11);
        std::normal_distribution<double> normal;
        for (std::size_t n : {3u, 8u, 25u}) {
            Matrix g(n, n / 2 + 1);
            for (auto& x : g.data()) x = normal(rng);
            Matrix s = multiply(g, transpose(g));
            for (std::size_t i = 0; i < n; ++i)
                for (std::size_t j = i + 1; j < n; ++j) s(j, i) = s(i, j);
            const SymMatrix m(s);
            const auto r = sym_sqrt(m);
            CHECK(max_abs(subtract(multiply(r.dense(), r.dense()), s)) <= 1e-10);
            CHECK(sym_eig(r).values.back() >= -1e-10);
        }
    }
    SUBCASE("clamps tiny negatives and rejects real ones") {
        CHECK_NOTHROW(sym_sqrt(diag({1.0, -5e-11})));
        CHECK(sym_sqrt(diag({1.0, -5e-11}))(1, 1) == 0.0);
        CHECK_THROWS_AS(sym_sqrt(diag({1.0, -1e-6})), NotPsd);
    }
}

TEST_CASE("solve_spd, trace, matvec") {
    const std::vector<double> b{1, 2, 3};
    const auto x = solve_spd(SymMatrix::identity(3), b);
    for (int i = 0; i < 3; ++i) CHECK(x[i] == doctest::Approx(b[i]));
    const std::vector<double> b2{2, 4};
    const auto y = solve_spd(diag({2, 4}), b2);
    CHECK(y[0] == doctest::Approx(1.0));
    CHECK(y[1] == doctest::Approx(1.0));
    CHECK(trace(diag({3, 1, 2})) == 6.0);

    CHECK_THROWS_AS(solve_spd(diag({1.0, 0.0}), b2), SingularMatrix);
    CHECK_THROWS_AS(solve_spd(diag({1.0, -1.0}), b2), SingularMatrix);
    CHECK_THROWS_AS(solve_spd(diag({1.0, 1.0}), b), InvalidInput);
}

TEST_CASE("solve_spd residual on random SPD systems up to n = 200") {
    std::mt19937_64 rng(3);
    std::normal_distribution<double> normal;
    for (std::size_t n : {1u, 10u, 50u, 200u}) {
        const auto m = random_spd(n, rng, 1.0);
        std::vector<double> b(n);
        for (auto& v : b) v = normal(rng);
        const auto x = solve_spd(m, b);
        const auto mx = matvec(m, x);
        std::vector<double> r(n);
        for (std::size_t i = 0; i < n; ++i) r[i] = mx[i] - b[i];
        CHECK(norm2(r) <= 1e-9 * norm2(b));
    }
}
