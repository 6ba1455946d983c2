#include "adnet/theory.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <string>

#include "adnet/errors.hpp"

namespace adnet {

namespace {

using cplx = std::complex<double>;

constexpr double kUnitEigenTolerance = 1e-10;
constexpr std::size_t kMaxDecompositionSize = 2000;
constexpr double kZeroTolerance = 1e-12;
constexpr double kWinMargin = 2.0;
constexpr double kSparseLambda = 0.5;

Matrix sum_of(std::span<const SymMatrix> ms) {
    const std::size_t n = ms.front().size();
    Matrix out(n, n);
    for (const auto& m : ms) {
        if (m.size() != n) throw InvalidInput("theoretical_msd: matrices differ in size");
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < n; ++j) out(i, j) += m(i, j);
    }
    return out;
}

// Squared extreme singular values of a 2x2 complex matrix.
std::pair<double, double> singular_values_sq(const cplx p[2][2]) {
    // G = P^H P is Hermitian 2x2.
    const double g00 = std::norm(p[0][0]) + std::norm(p[1][0]);
    const double g11 = std::norm(p[0][1]) + std::norm(p[1][1]);
    const cplx g01 = std::conj(p[0][0]) * p[0][1] + std::conj(p[1][0]) * p[1][1];
    const double mid = 0.5 * (g00 + g11);
    const double rad = std::sqrt(0.25 * (g00 - g11) * (g00 - g11) + std::norm(g01));
    return {mid - rad, mid + rad};
}

void check_lambda(double lambda, const char* what) {
    if (!(lambda >= 0.0 && lambda < 1.0))
        throw InvalidInput(std::string(what) + ": lambda must lie in [0, 1), got " +
                           std::to_string(lambda));
}

}  // namespace

double theoretical_msd(std::span<const SymMatrix> H, std::span<const SymMatrix> S, double mu,
                       int K) {
    if (H.empty() || H.size() != S.size())
        throw InvalidInput("theoretical_msd: need one Hessian and one noise covariance per agent");
    if (K < 1) throw InvalidInput("theoretical_msd: K must be at least 1");
    const SymMatrix h(sum_of(H));
    const Matrix s = sum_of(S);
    const std::size_t n = h.size();

    double tr = 0.0;
    std::vector<double> col(n);
    for (std::size_t j = 0; j < n; ++j) {
        for (std::size_t i = 0; i < n; ++i) col[i] = s(i, j);
        tr += solve_spd(h, col)[j];
    }
    return mu / (2.0 * K) * tr;
}

double to_db(double x) { return 10.0 * std::log10(x); }

SteadyStateBounds steady_state_bounds(double nu, double delta, double sigma_sq, double b_sq,
                                      double lambda, double mu, int K) {
    check_lambda(lambda, "steady_state_bounds");
    if (!(nu > 0.0)) throw InvalidInput("steady_state_bounds: nu must be positive");
    if (K < 1) throw InvalidInput("steady_state_bounds: K must be at least 1");
    const double gap = 1.0 - lambda;
    const double cond = delta * delta / (nu * nu);
    const double base = mu * sigma_sq / (K * nu);
    SteadyStateBounds b;
    b.bound_ed = base + cond * mu * mu * sigma_sq / gap;
    b.bound_d = base + cond * mu * mu * lambda * lambda * sigma_sq / gap +
                cond * mu * mu * lambda * lambda * b_sq / (gap * gap);
    return b;
}

StepsizeRanges stepsize_ranges(double nu, double delta, double beta_max_sq, double lambda,
                               std::optional<DecompositionConstants> constants) {
    check_lambda(lambda, "stepsize_ranges");
    const double base = (1.0 - lambda) * nu / (delta * delta + beta_max_sq);
    StepsizeRanges r;
    if (!constants) {
        r.mu_bound_ed = base;
        r.mu_bound_d = base;
        return r;
    }
    const double cc = constants->c1 * constants->c2;
    const double e1e2 = 1.0;
    r.mu_bound_ed = base / (32.0 + 16.0 * cc + 8.0 * std::sqrt(cc));
    r.mu_bound_d = base / (12.0 + 4.0 * e1e2 + std::sqrt(6.0 * e1e2));
    r.full_form = true;
    return r;
}

FundamentalDecomposition fundamental_decomposition(const SymMatrix& Abar, const SymMatrix& V,
                                                   bool with_factors) {
    const std::size_t K = Abar.size();
    if (V.size() != K) throw InvalidInput("fundamental_decomposition: Abar and V differ in size");
    if (K < 2) throw InvalidInput("fundamental_decomposition: K = 1 has no D1 block");
    if (2 * K > kMaxDecompositionSize)
        throw InvalidInput("fundamental_decomposition: 2K = " + std::to_string(2 * K) +
                           " exceeds the size limit of " + std::to_string(kMaxDecompositionSize));

    const EigenDecomposition eig = sym_eig(Abar);
    if (std::abs(eig.values[0] - 1.0) > kUnitEigenTolerance)
        throw NumericFailure("fundamental_decomposition: largest eigenvalue of Abar is " +
                             std::to_string(eig.values[0]) + ", expected 1");
    if (!(eig.values[1] < 1.0 - kUnitEigenTolerance))
        throw InvalidInput("fundamental_decomposition: eigenvalue 1 of Abar is not simple");

    FundamentalDecomposition out;
    const std::size_t modes = K - 1;
    std::vector<std::array<std::array<cplx, 2>, 2>> blocks(modes);  // P D P^{-1} per mode
    std::vector<std::array<std::array<cplx, 2>, 2>> P(modes);
    std::vector<std::array<std::array<cplx, 2>, 2>> Pinv(modes);
    const Matrix& v = V.dense();

    for (std::size_t m = 0; m < modes; ++m) {
        const std::size_t j = m + 1;
        const double a = eig.values[j];
        if (!(a > 0.0))
            throw NumericFailure("fundamental_decomposition: Abar eigenvalue " + std::to_string(a) +
                                 " is not positive");
        // s = u^T V u, the eigenvalue of V on this mode.
        double s = 0.0;
        for (std::size_t r = 0; r < K; ++r) {
            double vr = 0.0;
            for (std::size_t q = 0; q < K; ++q) vr += v(r, q) * eig.vectors(q, j);
            s += eig.vectors(r, j) * vr;
        }
        const double ra = std::sqrt(a);
        const cplx zp(a, s * ra);
        const cplx zm(a, -s * ra);
        out.d1.push_back(zp);
        out.d1.push_back(zm);

        const double norm = std::sqrt(1.0 + a);
        cplx p[2][2] = {{1.0 / norm, 1.0 / norm}, {cplx(0.0, -ra) / norm, cplx(0.0, ra) / norm}};
        const cplx det = p[0][0] * p[1][1] - p[0][1] * p[1][0];
        cplx pi[2][2] = {{p[1][1] / det, -p[0][1] / det}, {-p[1][0] / det, p[0][0] / det}};
        for (int r = 0; r < 2; ++r)
            for (int c = 0; c < 2; ++c) {
                P[m][r][c] = p[r][c];
                Pinv[m][r][c] = pi[r][c];
                blocks[m][r][c] = p[r][0] * zp * pi[0][c] + p[r][1] * zm * pi[1][c];
            }

        const auto [smin_sq, smax_sq] = singular_values_sq(p);
        out.c2 = std::max(out.c2, smax_sq);
        out.c1 = std::max(out.c1, 1.0 / smin_sq);
    }
    for (const auto& z : out.d1) out.d1_magnitudes.push_back(std::abs(z));
    out.c = std::sqrt(static_cast<double>(K) * out.c1);

    // Residual of the reconstruction against B assembled directly.
    const std::size_t n = 2 * K;
    const Matrix& ab = Abar.dense();
    const Matrix vab = multiply(v, ab);
    Matrix rec(n, n);
    const double inv_k = 1.0 / static_cast<double>(K);
    double imag = 0.0;
    for (std::size_t r = 0; r < K; ++r)
        for (std::size_t q = 0; q < K; ++q) {
            rec(r, q) = inv_k;
            rec(K + r, K + q) = inv_k;
        }
    for (std::size_t m = 0; m < modes; ++m) {
        const std::size_t j = m + 1;
        for (int br = 0; br < 2; ++br)
            for (int bc = 0; bc < 2; ++bc) {
                const cplx cval = blocks[m][br][bc];
                imag = std::max(imag, std::abs(cval.imag()));
                const double w = cval.real();
                for (std::size_t r = 0; r < K; ++r) {
                    const double ur = w * eig.vectors(r, j);
                    auto row = rec.row(br * K + r);
                    for (std::size_t q = 0; q < K; ++q) row[bc * K + q] += ur * eig.vectors(q, j);
                }
            }
    }
    double res = 0.0;
    for (std::size_t r = 0; r < K; ++r)
        for (std::size_t q = 0; q < K; ++q) {
            res = std::max(res, std::abs(rec(r, q) - ab(r, q)));
            res = std::max(res, std::abs(rec(r, K + q) + v(r, q)));
            res = std::max(res, std::abs(rec(K + r, q) - vab(r, q)));
            res = std::max(res, std::abs(rec(K + r, K + q) - ab(r, q)));
        }
    out.residual = std::max(res, imag);

    if (with_factors) {
        ComplexMatrix xr{n, 2 * modes, std::vector<cplx>(n * 2 * modes)};
        ComplexMatrix xl{2 * modes, n, std::vector<cplx>(2 * modes * n)};
        for (std::size_t m = 0; m < modes; ++m) {
            const std::size_t j = m + 1;
            for (std::size_t r = 0; r < K; ++r) {
                const double u = eig.vectors(r, j);
                for (int t = 0; t < 2; ++t) {
                    xr(r, 2 * m + t) = P[m][0][t] * u;
                    xr(K + r, 2 * m + t) = P[m][1][t] * u;
                    xl(2 * m + t, r) = Pinv[m][t][0] * u;
                    xl(2 * m + t, K + r) = Pinv[m][t][1] * u;
                }
            }
        }
        out.X_R = std::move(xr);
        out.X_L = std::move(xl);
    }
    return out;
}

std::string_view to_string(Winner w) {
    switch (w) {
        case Winner::similar: return "similar";
        case Winner::diffusion_better: return "diffusion-better";
        case Winner::exact_diffusion_better: return "exact-diffusion-better";
    }
    return "unknown";
}

Regime classify_regime(double b_sq, double sigma_sq, double lambda, double mu,
                       const RegimeConstants& k) {
    Regime r;
    r.comparators = steady_state_bounds(k.nu, k.delta, sigma_sq, b_sq, lambda, mu, k.K);
    const double gap = 1.0 - lambda;
    const double d2 = k.delta * k.delta;
    r.dense_threshold = k.nu / (k.K * d2);
    r.bias_threshold = b_sq > 0.0 ? gap * gap * sigma_sq * k.nu / (k.K * d2 * b_sq)
                                   : std::numeric_limits<double>::infinity();
    r.small_mu_threshold = gap * gap * gap;

    const bool no_bias = b_sq <= kZeroTolerance;
    const bool no_noise = sigma_sq <= kZeroTolerance;
    const bool sparse = lambda >= kSparseLambda;
    r.scenario = std::string(no_bias ? "b2=0" : "b2>0") + "," + (no_noise ? "sigma2=0" : "sigma2>0");
    r.network = sparse ? "sparse" : "dense";
    if (sparse)
        r.step_size = mu <= r.small_mu_threshold ? "sufficiently-small" : "moderate";
    else
        r.step_size = mu >= r.dense_threshold ? "moderate" : "sufficiently-small";

    if (no_noise) {
        r.winner = no_bias || lambda <= kZeroTolerance ? Winner::similar
                                                       : Winner::exact_diffusion_better;
        return r;
    }
    if (sparse && mu <= r.small_mu_threshold) {
        r.winner = Winner::similar;
        return r;
    }
    const auto& c = r.comparators;
    if (c.bound_d >= kWinMargin * c.bound_ed)
        r.winner = Winner::exact_diffusion_better;
    else if (c.bound_ed >= kWinMargin * c.bound_d)
        r.winner = Winner::diffusion_better;
    else
        r.winner = Winner::similar;
    return r;
}

TheoryReport make_theory_report(const ProblemInstance& p, const CombinationMatrix& c, double mu,
                                bool with_decomposition) {
    TheoryReport t;
    t.msd_theory = theoretical_msd(p.H, p.S, mu, p.K);
    t.msd_theory_db = to_db(t.msd_theory);
    t.lambda = c.lambda;
    t.gap = c.gap();
    t.nu = p.nu;
    t.delta = p.delta;
    t.sigma_sq = p.sigma_sq;
    t.b_sq = p.b_sq;
    t.beta_max_sq = p.beta_max_sq;
    t.proxy_gradient_norm = p.proxy_gradient_norm;

    std::optional<DecompositionConstants> constants;
    if (with_decomposition && c.K() > 1) {
        t.decomposition = fundamental_decomposition(c.Abar, c.V);
        constants = DecompositionConstants{t.decomposition->c1, t.decomposition->c2};
    }
    t.ranges = stepsize_ranges(p.nu, p.delta, p.beta_max_sq, c.lambda, constants);
    t.bounds = steady_state_bounds(p.nu, p.delta, p.sigma_sq, p.b_sq, c.lambda, mu, p.K);
    t.regime = classify_regime(p.b_sq, p.sigma_sq, c.lambda, mu, {p.nu, p.delta, p.K});
    return t;
}

}  // namespace adnet
