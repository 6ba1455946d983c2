#pragma once

// Closed-form quantities for comparing diffusion and exact diffusion: the
// first-order MSD, order-of-magnitude steady-state comparators (all hidden
// constants set to 1), step-size ranges, the fundamental decomposition of the
// exact-diffusion error recursion, and regime classification.

#include <complex>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "adnet/linalg.hpp"
#include "adnet/problems.hpp"
#include "adnet/topology.hpp"

namespace adnet {

/// (mu / 2K) Tr[(sum_k H_k)^{-1} (sum_k S_k)]. Throws SingularMatrix if the
/// Hessian sum is not positive definite.
double theoretical_msd(std::span<const SymMatrix> H, std::span<const SymMatrix> S, double mu,
                       int K);

/// 10 log10(x).
double to_db(double x);

struct SteadyStateBounds {
    double bound_ed = 0.0;  // exact diffusion comparator
    double bound_d = 0.0;   // diffusion comparator
};

SteadyStateBounds steady_state_bounds(double nu, double delta, double sigma_sq, double b_sq,
                                      double lambda, double mu, int K);

struct DecompositionConstants {
    double c1 = 0.0;
    double c2 = 0.0;
};

struct StepsizeRanges {
    double mu_bound_ed = 0.0;
    double mu_bound_d = 0.0;
    bool full_form = false;  // true when decomposition constants were supplied
};

/// Order forms (1 - lambda) nu / (delta^2 + beta_max^2) unless `constants`
/// are given, in which case the full denominators are used. The diffusion
/// constants e1 e2 are taken as 1 (A is symmetric, so its eigenvector basis
/// is orthonormal).
StepsizeRanges stepsize_ranges(double nu, double delta, double beta_max_sq, double lambda,
                               std::optional<DecompositionConstants> constants = {});

/// Dense complex matrix, row-major.
struct ComplexMatrix {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<std::complex<double>> data;

    std::complex<double>& operator()(std::size_t i, std::size_t j) { return data[i * cols + j]; }
    std::complex<double> operator()(std::size_t i, std::size_t j) const {
        return data[i * cols + j];
    }
};

struct FundamentalDecomposition {
    double c1 = 0.0;  // ||X_L||^2
    double c2 = 0.0;  // ||X_R||^2
    double c = 0.0;   // free scale, fixed by c^2 = K c1
    std::vector<std::complex<double>> d1;  // diagonal of D1
    std::vector<double> d1_magnitudes;
    double residual = 0.0;  // ||R1 L1^T + R2 L2^T + X_R D1 X_L - B||_max
    std::optional<ComplexMatrix> X_R;  // 2K x 2(K-1), unit columns
    std::optional<ComplexMatrix> X_L;  // 2(K-1) x 2K
};

/// Decomposes B = [[Abar, -V], [V Abar, Abar]] through the shared eigenbasis
/// of Abar and V: every non-consensus eigenvector u_j of Abar spans a 2x2
/// invariant block whose eigenvalues are complex conjugates of modulus
/// sqrt(abar_j). Rejects K = 1 and 2K > 2000.
FundamentalDecomposition fundamental_decomposition(const SymMatrix& Abar, const SymMatrix& V,
                                                   bool with_factors = false);

enum class Winner { similar, diffusion_better, exact_diffusion_better };

std::string_view to_string(Winner w);

struct RegimeConstants {
    double nu = 0.0;
    double delta = 0.0;
    int K = 1;
};

struct Regime {
    Winner winner = Winner::similar;
    std::string scenario;  // "b2=0,sigma2>0", "b2>0,sigma2=0", "b2>0,sigma2>0" or "b2=0,sigma2=0"
    std::string network;   // "sparse" (lambda >= 0.5) or "dense"
    std::string step_size; // "moderate" or "sufficiently-small"
    SteadyStateBounds comparators;
    double dense_threshold = 0.0;    // nu / (K delta^2)
    double bias_threshold = 0.0;     // (1-lambda)^2 sigma^2 nu / (K delta^2 b^2)
    double small_mu_threshold = 0.0; // (1-lambda)^3

    std::string row() const { return scenario + "/" + network + "/" + step_size; }
};

/// Table-style classification. With sigma^2 = 0 and b^2 > 0 exact diffusion
/// wins unless lambda = 0. On sparse networks a step-size at or below
/// (1-lambda)^3 is sufficiently small and both methods tie. Otherwise the
/// comparators decide: a method wins when the other's comparator is at least
/// twice as large.
Regime classify_regime(double b_sq, double sigma_sq, double lambda, double mu,
                       const RegimeConstants& constants);

struct TheoryReport {
    double msd_theory = 0.0;
    double msd_theory_db = 0.0;
    double lambda = 0.0;
    double gap = 0.0;
    double nu = 0.0;
    double delta = 0.0;
    double sigma_sq = 0.0;
    double b_sq = 0.0;
    double beta_max_sq = 0.0;
    double proxy_gradient_norm = 0.0;
    StepsizeRanges ranges;
    SteadyStateBounds bounds;
    Regime regime;
    std::optional<FundamentalDecomposition> decomposition;
};

/// `mu` is the step-size the comparators and regime are evaluated at. The
/// decomposition is attached when requested and K > 1.
TheoryReport make_theory_report(const ProblemInstance& p, const CombinationMatrix& c, double mu,
                                bool with_decomposition = false);

}  // namespace adnet
