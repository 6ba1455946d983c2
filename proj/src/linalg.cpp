#include "adnet/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "adnet/errors.hpp"

namespace adnet {

namespace {

constexpr double kSymmetryTolerance = 1e-12;
constexpr double kJacobiTolerance = 1e-13;
constexpr int kJacobiMaxSweeps = 100;
constexpr double kPsdClamp = 1e-10;

double off_diagonal_norm(const Matrix& a) {
    double sum = 0.0;
    for (std::size_t i = 0; i < a.rows(); ++i)
        for (std::size_t j = 0; j < a.cols(); ++j)
            if (i != j) sum += a(i, j) * a(i, j);
    return std::sqrt(sum);
}

}  // namespace

Matrix Matrix::identity(std::size_t n) {
    Matrix m(n, n);
    for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
}

void Matrix::fill(double value) { std::fill(data_.begin(), data_.end(), value); }

SymMatrix::SymMatrix(Matrix m) : m_(std::move(m)) {
    if (m_.rows() != m_.cols())
        throw InvalidInput("SymMatrix: matrix is " + std::to_string(m_.rows()) + "x" +
                           std::to_string(m_.cols()) + ", expected square");
    for (std::size_t i = 0; i < m_.rows(); ++i)
        for (std::size_t j = i + 1; j < m_.cols(); ++j)
            if (!(std::abs(m_(i, j) - m_(j, i)) <= kSymmetryTolerance))
                throw InvalidInput("SymMatrix: entries (" + std::to_string(i) + "," +
                                   std::to_string(j) + ") are not symmetric");
}

SymMatrix SymMatrix::identity(std::size_t n) { return SymMatrix(Matrix::identity(n)); }

SymMatrix SymMatrix::zeros(std::size_t n) { return SymMatrix(Matrix(n, n)); }

SymMatrix SymMatrix::diagonal(std::span<const double> entries) {
    Matrix m(entries.size(), entries.size());
    for (std::size_t i = 0; i < entries.size(); ++i) m(i, i) = entries[i];
    return SymMatrix(std::move(m));
}

EigenDecomposition sym_eig(const SymMatrix& m) {
    const std::size_t n = m.size();
    Matrix a = m.dense();
    Matrix v = Matrix::identity(n);

    const double scale = frobenius_norm(a);
    const double target = kJacobiTolerance * scale;

    int sweep = 0;
    while (off_diagonal_norm(a) > target) {
        if (++sweep > kJacobiMaxSweeps)
            throw NumericFailure("sym_eig: Jacobi iteration did not converge in " +
                                 std::to_string(kJacobiMaxSweeps) + " sweeps");
        for (std::size_t p = 0; p + 1 < n; ++p) {
            for (std::size_t q = p + 1; q < n; ++q) {
                const double apq = a(p, q);
                if (apq == 0.0) continue;
                const double theta = (a(q, q) - a(p, p)) / (2.0 * apq);
                const double t = std::copysign(1.0, theta) /
                                 (std::abs(theta) + std::sqrt(theta * theta + 1.0));
                const double c = 1.0 / std::sqrt(t * t + 1.0);
                const double s = t * c;
                const double tau = s / (1.0 + c);

                a(p, p) -= t * apq;
                a(q, q) += t * apq;
                a(p, q) = 0.0;
                a(q, p) = 0.0;
                for (std::size_t r = 0; r < n; ++r) {
                    if (r == p || r == q) continue;
                    const double g = a(r, p);
                    const double h = a(r, q);
                    const double rp = g - s * (h + g * tau);
                    const double rq = h + s * (g - h * tau);
                    a(r, p) = rp;
                    a(p, r) = rp;
                    a(r, q) = rq;
                    a(q, r) = rq;
                }
                for (std::size_t r = 0; r < n; ++r) {
                    const double g = v(r, p);
                    const double h = v(r, q);
                    v(r, p) = g - s * (h + g * tau);
                    v(r, q) = h + s * (g - h * tau);
                }
            }
        }
    }

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t i, std::size_t j) { return a(i, i) > a(j, j); });

    EigenDecomposition out{std::vector<double>(n), Matrix(n, n)};
    for (std::size_t k = 0; k < n; ++k) {
        out.values[k] = a(order[k], order[k]);
        for (std::size_t r = 0; r < n; ++r) out.vectors(r, k) = v(r, order[k]);
    }
    return out;
}

SymMatrix sym_sqrt(const EigenDecomposition& eig) {
    const std::size_t n = eig.values.size();
    std::vector<double> roots(n);
    for (std::size_t k = 0; k < n; ++k) {
        const double lambda = eig.values[k];
        if (lambda < -kPsdClamp)
            throw NotPsd("sym_sqrt: eigenvalue " + std::to_string(lambda) +
                         " is below the PSD clamp threshold");
        roots[k] = lambda > 0.0 ? std::sqrt(lambda) : 0.0;
    }
    Matrix r(n, n);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i; j < n; ++j) {
            double sum = 0.0;
            for (std::size_t k = 0; k < n; ++k)
                sum += eig.vectors(i, k) * roots[k] * eig.vectors(j, k);
            r(i, j) = sum;
            r(j, i) = sum;
        }
    }
    return SymMatrix(std::move(r));
}

SymMatrix sym_sqrt(const SymMatrix& m) { return sym_sqrt(sym_eig(m)); }

std::vector<double> solve_spd(const SymMatrix& m, std::span<const double> b) {
    const std::size_t n = m.size();
    if (b.size() != n)
        throw InvalidInput("solve_spd: right-hand side has length " + std::to_string(b.size()) +
                           ", expected " + std::to_string(n));

    double diag_scale = 0.0;
    for (std::size_t i = 0; i < n; ++i) diag_scale = std::max(diag_scale, std::abs(m(i, i)));
    const double pivot_floor = 1e-12 * std::max(1.0, diag_scale);

    // Lower-triangular Cholesky factor, row-major.
    Matrix l(n, n);
    for (std::size_t j = 0; j < n; ++j) {
        double d = m(j, j);
        for (std::size_t k = 0; k < j; ++k) d -= l(j, k) * l(j, k);
        if (!(d > pivot_floor))
            throw SingularMatrix("solve_spd: matrix is singular or indefinite (pivot " +
                                 std::to_string(j) + ")");
        const double ljj = std::sqrt(d);
        l(j, j) = ljj;
        for (std::size_t i = j + 1; i < n; ++i) {
            double s = m(i, j);
            for (std::size_t k = 0; k < j; ++k) s -= l(i, k) * l(j, k);
            l(i, j) = s / ljj;
        }
    }

    std::vector<double> y(b.begin(), b.end());
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t k = 0; k < i; ++k) y[i] -= l(i, k) * y[k];
        y[i] /= l(i, i);
    }
    for (std::size_t i = n; i-- > 0;) {
        for (std::size_t k = i + 1; k < n; ++k) y[i] -= l(k, i) * y[k];
        y[i] /= l(i, i);
    }
    return y;
}

double trace(const Matrix& m) {
    double t = 0.0;
    for (std::size_t i = 0; i < std::min(m.rows(), m.cols()); ++i) t += m(i, i);
    return t;
}

double trace(const SymMatrix& m) { return trace(m.dense()); }

std::vector<double> matvec(const Matrix& m, std::span<const double> v) {
    if (v.size() != m.cols())
        throw InvalidInput("matvec: vector length " + std::to_string(v.size()) +
                           " does not match " + std::to_string(m.cols()) + " columns");
    std::vector<double> out(m.rows(), 0.0);
    for (std::size_t i = 0; i < m.rows(); ++i) {
        const auto r = m.row(i);
        double s = 0.0;
        for (std::size_t j = 0; j < r.size(); ++j) s += r[j] * v[j];
        out[i] = s;
    }
    return out;
}

std::vector<double> matvec(const SymMatrix& m, std::span<const double> v) {
    return matvec(m.dense(), v);
}

Matrix multiply(const Matrix& a, const Matrix& b) {
    if (a.cols() != b.rows())
        throw InvalidInput("multiply: inner dimensions " + std::to_string(a.cols()) + " and " +
                           std::to_string(b.rows()) + " differ");
    Matrix c(a.rows(), b.cols());
    for (std::size_t i = 0; i < a.rows(); ++i) {
        auto out = c.row(i);
        for (std::size_t k = 0; k < a.cols(); ++k) {
            const double aik = a(i, k);
            if (aik == 0.0) continue;
            const auto brow = b.row(k);
            for (std::size_t j = 0; j < out.size(); ++j) out[j] += aik * brow[j];
        }
    }
    return c;
}

Matrix transpose(const Matrix& m) {
    Matrix t(m.cols(), m.rows());
    for (std::size_t i = 0; i < m.rows(); ++i)
        for (std::size_t j = 0; j < m.cols(); ++j) t(j, i) = m(i, j);
    return t;
}

Matrix subtract(const Matrix& a, const Matrix& b) {
    if (a.rows() != b.rows() || a.cols() != b.cols())
        throw InvalidInput("subtract: shape mismatch");
    Matrix c = a;
    auto cd = c.data();
    const auto bd = b.data();
    for (std::size_t i = 0; i < cd.size(); ++i) cd[i] -= bd[i];
    return c;
}

double max_abs(const Matrix& m) {
    double out = 0.0;
    for (double x : m.data()) out = std::max(out, std::abs(x));
    return out;
}

double frobenius_norm(const Matrix& m) { return std::sqrt(squared_norm(m.data())); }

double squared_norm(std::span<const double> v) {
    double s = 0.0;
    for (double x : v) s += x * x;
    return s;
}

double norm2(std::span<const double> v) { return std::sqrt(squared_norm(v)); }

}  // namespace adnet
