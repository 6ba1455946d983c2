#pragma once

// Small dense linear algebra for the K x K and M x M matrices used by the
// simulator. Matrices are row-major and owned by value.

#include <cstddef>
#include <span>
#include <vector>

namespace adnet {

class Matrix {
public:
    Matrix() = default;
    Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
        : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

    static Matrix identity(std::size_t n);

    std::size_t rows() const noexcept { return rows_; }
    std::size_t cols() const noexcept { return cols_; }

    double& operator()(std::size_t i, std::size_t j) noexcept { return data_[i * cols_ + j]; }
    double operator()(std::size_t i, std::size_t j) const noexcept { return data_[i * cols_ + j]; }

    std::span<double> row(std::size_t i) noexcept { return {data_.data() + i * cols_, cols_}; }
    std::span<const double> row(std::size_t i) const noexcept {
        return {data_.data() + i * cols_, cols_};
    }

    std::span<double> data() noexcept { return data_; }
    std::span<const double> data() const noexcept { return data_; }

    void fill(double value);

    friend bool operator==(const Matrix&, const Matrix&) = default;

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> data_;
};

/// Square matrix whose entries are symmetric to within 1e-12.
class SymMatrix {
public:
    SymMatrix() = default;

    /// Throws InvalidInput if `m` is not square or not symmetric.
    explicit SymMatrix(Matrix m);

    static SymMatrix identity(std::size_t n);
    static SymMatrix zeros(std::size_t n);
    static SymMatrix diagonal(std::span<const double> entries);

    std::size_t size() const noexcept { return m_.rows(); }
    double operator()(std::size_t i, std::size_t j) const noexcept { return m_(i, j); }
    const Matrix& dense() const noexcept { return m_; }

    friend bool operator==(const SymMatrix&, const SymMatrix&) = default;

private:
    Matrix m_;
};

struct EigenDecomposition {
    std::vector<double> values;  // descending
    Matrix vectors;              // column j pairs with values[j]
};

/// Cyclic Jacobi eigendecomposition. Iterates until the off-diagonal
/// Frobenius norm is at most 1e-13 times the Frobenius norm of `m`.
EigenDecomposition sym_eig(const SymMatrix& m);

/// Symmetric PSD square root. Eigenvalues in [-1e-10, 0) are clamped to zero;
/// anything more negative throws NotPsd.
SymMatrix sym_sqrt(const SymMatrix& m);

/// Same as above, reusing an existing decomposition of the input.
SymMatrix sym_sqrt(const EigenDecomposition& eig);

/// Cholesky solve. Throws SingularMatrix for indefinite or numerically
/// singular input.
std::vector<double> solve_spd(const SymMatrix& m, std::span<const double> b);

double trace(const Matrix& m);
double trace(const SymMatrix& m);

std::vector<double> matvec(const Matrix& m, std::span<const double> v);
std::vector<double> matvec(const SymMatrix& m, std::span<const double> v);

Matrix multiply(const Matrix& a, const Matrix& b);
Matrix transpose(const Matrix& m);
Matrix subtract(const Matrix& a, const Matrix& b);

double max_abs(const Matrix& m);
double frobenius_norm(const Matrix& m);
double norm2(std::span<const double> v);
double squared_norm(std::span<const double> v);

}  // namespace adnet
