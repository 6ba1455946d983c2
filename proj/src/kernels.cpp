#include "adnet/kernels.hpp"

#include <string>

#include "adnet/errors.hpp"

namespace adnet {

namespace {

void require_shape(const Matrix& m, std::size_t rows, std::size_t cols, const char* what) {
    if (m.rows() != rows || m.cols() != cols)
        throw InvalidInput(std::string(what) + ": expected " + std::to_string(rows) + "x" +
                           std::to_string(cols) + ", got " + std::to_string(m.rows()) + "x" +
                           std::to_string(m.cols()));
}

void prepare_out(const Matrix& in, Matrix& out) {
    if (out.rows() != in.rows() || out.cols() != in.cols()) out = Matrix(in.rows(), in.cols());
}

bool worth_parallel(const Matrix& m) { return m.rows() * m.cols() >= kParallelThreshold; }

}  // namespace

void combine(const SparseWeights& a, const Matrix& in, Matrix& out) {
    const auto K = static_cast<long>(a.agents());
    require_shape(in, static_cast<std::size_t>(K), in.cols(), "combine");
    if (&in == &out) throw InvalidInput("combine: input and output must differ");
    prepare_out(in, out);
    const std::size_t M = in.cols();

#pragma omp parallel for schedule(static) if (worth_parallel(in))
    for (long k = 0; k < K; ++k) {
        double* dst = out.row(static_cast<std::size_t>(k)).data();
        for (std::size_t j = 0; j < M; ++j) dst[j] = 0.0;
        for (std::size_t e = a.offsets[k]; e < a.offsets[k + 1]; ++e) {
            const double w = a.weights[e];
            const double* src = in.row(static_cast<std::size_t>(a.sources[e])).data();
            for (std::size_t j = 0; j < M; ++j) dst[j] += w * src[j];
        }
    }
}

void combine_reference(const Matrix& a, const Matrix& in, Matrix& out) {
    require_shape(a, in.rows(), in.rows(), "combine_reference");
    prepare_out(in, out);
    out.fill(0.0);
    for (std::size_t k = 0; k < in.rows(); ++k)
        for (std::size_t l = 0; l < in.rows(); ++l)
            for (std::size_t j = 0; j < in.cols(); ++j) out(k, j) += a(l, k) * in(l, j);
}

void apply_dense(const Matrix& a, const Matrix& in, Matrix& out) {
    const auto K = static_cast<long>(in.rows());
    require_shape(a, in.rows(), in.rows(), "apply_dense");
    if (&in == &out) throw InvalidInput("apply_dense: input and output must differ");
    prepare_out(in, out);
    const std::size_t M = in.cols();

#pragma omp parallel for schedule(static) if (worth_parallel(in))
    for (long k = 0; k < K; ++k) {
        double* dst = out.row(static_cast<std::size_t>(k)).data();
        for (std::size_t j = 0; j < M; ++j) dst[j] = 0.0;
        const auto arow = a.row(static_cast<std::size_t>(k));
        for (std::size_t l = 0; l < arow.size(); ++l) {
            const double w = arow[l];
            if (w == 0.0) continue;
            const double* src = in.row(l).data();
            for (std::size_t j = 0; j < M; ++j) dst[j] += w * src[j];
        }
    }
}

void apply_dense_reference(const Matrix& a, const Matrix& in, Matrix& out) {
    require_shape(a, in.rows(), in.rows(), "apply_dense_reference");
    out = multiply(a, in);
}

void axpy_step(const Matrix& x, const Matrix& g, double mu, Matrix& out) {
    require_shape(g, x.rows(), x.cols(), "axpy_step");
    prepare_out(x, out);
    const auto xd = x.data();
    const auto gd = g.data();
    auto od = out.data();
    for (std::size_t i = 0; i < xd.size(); ++i) od[i] = xd[i] - mu * gd[i];
}

double mean_square_deviation(const Matrix& w, std::span<const double> w_star) {
    if (w_star.size() != w.cols())
        throw InvalidInput("mean_square_deviation: w_star has length " +
                           std::to_string(w_star.size()) + ", expected " +
                           std::to_string(w.cols()));
    double total = 0.0;
    for (std::size_t k = 0; k < w.rows(); ++k) {
        const auto r = w.row(k);
        for (std::size_t j = 0; j < r.size(); ++j) {
            const double d = r[j] - w_star[j];
            total += d * d;
        }
    }
    return total / static_cast<double>(w.rows());
}

}  // namespace adnet
