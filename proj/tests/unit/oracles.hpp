#pragma once
// Independent reference computations for the unit tests. Nothing here calls
// into the library beyond plain data types.

#include <cmath>
#include <numbers>
#include <vector>

#include "adnet/linalg.hpp"
#include "adnet/problems.hpp"

namespace oracle {

inline double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

inline double gaussian_pdf(double t) {
    return std::exp(-0.5 * t * t) / std::sqrt(2.0 * std::numbers::pi);
}

// Composite Simpson rule of f(t) phi(t) over [lo, hi].
template <class F>
double gaussian_integral(F&& f, double lo = -12.0, double hi = 12.0, int n = 20000) {
    const double h = (hi - lo) / n;
    double s = 0.0;
    for (int i = 0; i <= n; ++i) {
        const double t = lo + i * h;
        const double w = (i == 0 || i == n) ? 1.0 : (i % 2 ? 4.0 : 2.0);
        s += w * f(t) * gaussian_pdf(t);
    }
    return s * h / 3.0;
}

// E[sigmoid'(s Z)] for Z ~ N(0, 1).
inline double mean_sigmoid_slope(double s) {
    return gaussian_integral([s](double t) {
        const double g = sigmoid(s * t);
        return g * (1.0 - g);
    });
}

// E[sigmoid(Z) | Z > c].
inline double conditional_sigmoid_mean(double c) {
    const double num = gaussian_integral([](double t) { return sigmoid(t); }, c, 12.0);
    const double den = gaussian_integral([](double) { return 1.0; }, c, 12.0);
    return num / den;
}

// Population gradient of the regularized logistic loss with h ~ N(0, I) and
// labels drawn from sigmoid(h^T w_k). Conditioning on h gives
// E[grad | h] = h (sigmoid(h^T w) - sigmoid(h^T w_k)) + rho w, and Stein's
// lemma turns E[h f(h^T v)] into v E[f'(h^T v)].
inline std::vector<double> logistic_population_gradient(const adnet::LogisticAgentModel& a,
                                                        const std::vector<double>& w) {
    double wn = 0.0, wkn = 0.0;
    for (double x : w) wn += x * x;
    for (double x : a.w_star_k) wkn += x * x;
    const double cw = mean_sigmoid_slope(std::sqrt(wn));
    const double ck = mean_sigmoid_slope(std::sqrt(wkn));
    std::vector<double> g(w.size());
    for (std::size_t j = 0; j < w.size(); ++j) g[j] = cw * w[j] - ck * a.w_star_k[j] + a.rho * w[j];
    return g;
}

// Covariance of -2u(d - u^T w) with u ~ N(0, diag(lambda)), d = u^T w_k + v:
// 4 [L e e^T L + (e^T L e) L + noise_var L], e = w - w_k.
inline adnet::Matrix ls_noise_covariance(const adnet::LsAgentModel& a, const std::vector<double>& w) {
    const std::size_t M = w.size();
    std::vector<double> le(M);
    double ele = 0.0;
    for (std::size_t j = 0; j < M; ++j) {
        const double e = w[j] - a.w_star_k[j];
        le[j] = a.lambda[j] * e;
        ele += e * le[j];
    }
    adnet::Matrix s(M, M);
    for (std::size_t i = 0; i < M; ++i)
        for (std::size_t j = 0; j < M; ++j) {
            s(i, j) = 4.0 * le[i] * le[j];
            if (i == j) s(i, j) += 4.0 * (ele + a.noise_var) * a.lambda[i];
        }
    return s;
}

struct MeanEstimate {
    std::vector<double> mean;
    double stderr_norm = 0.0;  // sqrt of the summed per-coordinate squared standard errors
};

template <class Draw>
MeanEstimate mean_and_stderr(int n, std::size_t M, Draw&& draw) {
    std::vector<double> s(M, 0.0), s2(M, 0.0);
    for (int i = 0; i < n; ++i) {
        const auto g = draw();
        for (std::size_t j = 0; j < M; ++j) {
            s[j] += g[j];
            s2[j] += g[j] * g[j];
        }
    }
    MeanEstimate r;
    r.mean.resize(M);
    double var = 0.0;
    for (std::size_t j = 0; j < M; ++j) {
        r.mean[j] = s[j] / n;
        var += (s2[j] / n - r.mean[j] * r.mean[j]) / (n - 1);
    }
    r.stderr_norm = std::sqrt(var);
    return r;
}

inline double distance(const std::vector<double>& a, const std::vector<double>& b) {
    double d = 0.0;
    for (std::size_t j = 0; j < a.size(); ++j) d += (a[j] - b[j]) * (a[j] - b[j]);
    return std::sqrt(d);
}

}  // namespace oracle
