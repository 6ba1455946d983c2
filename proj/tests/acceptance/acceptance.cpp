// Acceptance suite. `adnet_acceptance <id>` runs one criterion, no argument
// runs all of them. One PASS/FAIL line per criterion; exit status 1 if any fail.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fmt/format.h>
#include <functional>
#include <map>
#include <numbers>
#include <random>
#include <sstream>
#include <string>

#include "../unit/oracles.hpp"
#include "adnet/algorithms.hpp"
#include "adnet/errors.hpp"
#include "adnet/rng.hpp"
#include "adnet/runner.hpp"
#include "adnet/theory.hpp"

using namespace adnet;

namespace {

// Tolerances and budgets.
constexpr double kOverlayDb = 1.0;          // 1
constexpr double kSmallMuGapDb = 1.0;       // 2
constexpr double kSmallMuTheoryDb = 1.5;    // 2
constexpr double kSparseMarginDb = 2.0;     // 3
constexpr double kDenseAgreeDb = 1.0;       // 4
constexpr double kDenseReduction = 50.0;    // 4
constexpr double kExactTolerance = 1e-10;   // 5
constexpr double kPlateauFloor = 1e-20;     // 5
constexpr double kPlateauRatioLo = 3.5;     // 5
constexpr double kPlateauRatioHi = 4.5;     // 5
constexpr double kFormTolerance = 1e-9;     // 6
constexpr double kCycleRatioLo = 3.6;       // 7
constexpr double kCycleRatioHi = 4.4;       // 7
constexpr double kGridRatioLo = 1.6;        // 7
constexpr double kGridRatioHi = 2.4;        // 7
constexpr double kClosedFormTol = 1e-9;     // 7
constexpr double kD1Margin = 1e-10;         // 8
constexpr double kResidualTol = 1e-8;       // 8
constexpr double kStdErrs = 3.0;            // 9
constexpr int kNoiseSamples = 1'000'000;    // 9
constexpr double kTraceRelTol = 0.05;       // 9
constexpr double kTrackingParityDb = 2.0;   // 10
constexpr double kTrackingMarginDb = 2.0;   // 10
constexpr double kLogisticMarginDb = 1.0;   // 11
constexpr double kProxyTolerance = 1e-10;   // 11

// Settings shared by the simulation criteria.
constexpr int kRuns = 50;
constexpr int kLsDim = 10;
constexpr double kTimeConstants = 20.0;  // iterations >= this many 1/(mu nu)

struct Outcome {
    bool pass = false;
    std::string detail;
};

struct Criterion {
    const char* title;
    double budget_s;
    std::function<Outcome()> body;
};

std::string ls_config(const std::string& kind, int K, const std::string& methods, double mu,
                      long iterations, const std::string& extra = "") {
    std::string s = fmt::format(
        "topology.kind = {}\ntopology.K = {}\nproblem.family = least_squares\nproblem.M = {}\n"
        "methods = {}\nmu = {}\nexperiment.iterations = {}\nexperiment.runs = {}\nexperiment.seed = 1\n",
        kind, K, kLsDim, methods, mu, iterations, kRuns);
    if (K >= 36) s += "problem.noise_cov_samples = 100000\n";
    return s + extra;
}

ExperimentResult run_config(const std::string& text) { return execute(parse_config(text)); }

const MethodResult& method(const ExperimentResult& r, const std::string& name) {
    for (const auto& m : r.methods)
        if (m.name == name) return m;
    throw InvalidInput("no method " + name);
}

// Steady-state MSD in dB; NaN if the method diverged.
double ss(const ExperimentResult& r, const std::string& name) {
    const auto& m = method(r, name);
    return m.steady ? m.steady->mean_db : std::nan("");
}

double max_row_error(const Matrix& W, const std::vector<double>& w_star) {
    double worst = 0.0;
    for (std::size_t k = 0; k < W.rows(); ++k) {
        double e = 0.0;
        for (std::size_t j = 0; j < W.cols(); ++j) e += (W(k, j) - w_star[j]) * (W(k, j) - w_star[j]);
        worst = std::max(worst, std::sqrt(e));
    }
    return worst;
}

Outcome theory_overlay() {
    const auto r = run_config(ls_config("grid", 9, "diffusion, exact_diffusion", 0.005, 20000));
    const double th = r.theory.msd_theory_db;
    const double d = ss(r, "diffusion"), ed = ss(r, "exact_diffusion");
    const bool pass = std::abs(d - th) <= kOverlayDb && std::abs(ed - th) <= kOverlayDb;
    return {pass, fmt::format("theory {:.2f} dB, diffusion {:.2f} ({:+.2f}), exact diffusion {:.2f} ({:+.2f}), limit {}",
                              th, d, d - th, ed, ed - th, kOverlayDb)};
}

Outcome small_mu_equivalence() {
    const auto r = run_config(ls_config("grid", 100, "diffusion, exact_diffusion", 1e-4, 200000));
    const double th = r.theory.msd_theory_db;
    const double d = ss(r, "diffusion"), ed = ss(r, "exact_diffusion");
    const bool pass = std::abs(ed - d) <= kSmallMuGapDb && std::abs(d - th) <= kSmallMuTheoryDb &&
                      std::abs(ed - th) <= kSmallMuTheoryDb;
    return {pass, fmt::format("theory {:.2f} dB, diffusion {:.2f} ({:+.2f}), exact diffusion {:.2f} ({:+.2f}), "
                              "|ed - d| {:.2f}",
                              th, d, d - th, ed, ed - th, std::abs(ed - d))};
}

Outcome sparse_superiority() {
    std::vector<double> margin;
    std::string detail;
    for (int K : {36, 100, 196}) {
        const auto r = run_config(ls_config("grid", K, "diffusion, exact_diffusion", 0.005, 20000));
        margin.push_back(ss(r, "diffusion") - ss(r, "exact_diffusion"));
        detail += fmt::format("K={} margin {:.2f} dB; ", K, margin.back());
    }
    const bool pass = margin[1] >= kSparseMarginDb && margin[0] <= margin[1] && margin[1] <= margin[2];
    return {pass, detail + fmt::format("need K=100 margin >= {} and non-decreasing", kSparseMarginDb)};
}

struct DenseStep {
    double mu;
    double nu;
};

// Geometric midpoint of [nu / (K delta^2), (1 - lambda) nu / (delta^2 + beta^2)].
DenseStep dense_step(const std::string& text) {
    const auto cfg = parse_config(text);
    const auto g = build_topology(cfg.topology);
    const auto c = build_combination(cfg.topology, g);
    const auto p = build_problem(cfg.problem, cfg.topology.K);
    const auto t = make_theory_report(p, c, cfg.mu);
    const double lo = t.regime.dense_threshold, hi = t.ranges.mu_bound_ed;
    if (!(lo < hi)) throw NumericFailure(fmt::format("dense interval is empty: [{}, {}]", lo, hi));
    return {std::sqrt(lo * hi), t.nu};
}

long iterations_for(double mu, double nu, long floor) {
    return std::max(floor, static_cast<long>(std::ceil(kTimeConstants / (mu * nu))));
}

std::string complete30(const std::string& methods, double mu, long iterations) {
    return ls_config("complete", 30, methods, mu, iterations, "topology.weights = uniform\n");
}

Outcome dense_reversal() {
    const auto [mu, nu] = dense_step(complete30("diffusion", 0.01, 1));
    const auto a = run_config(complete30("diffusion, exact_diffusion", mu, iterations_for(mu, nu, 10000)));
    const double mu_s = mu / kDenseReduction;
    const auto b = run_config(complete30("diffusion, exact_diffusion", mu_s, iterations_for(mu_s, nu, 10000)));
    const double d = ss(a, "diffusion"), ed = ss(a, "exact_diffusion");
    const double ds = ss(b, "diffusion"), eds = ss(b, "exact_diffusion");
    const bool pass = d <= ed && std::abs(ds - eds) <= kDenseAgreeDb;
    return {pass, fmt::format("mu {:.5f}: diffusion {:.2f}, exact diffusion {:.2f}; mu {:.3g}: diffusion {:.2f}, "
                              "exact diffusion {:.2f}",
                              mu, d, ed, mu_s, ds, eds)};
}

Outcome deterministic_bias() {
    LsOptions o;
    o.K = 4;
    o.M = kLsDim;
    o.seed = 1;
    o.deterministic = true;
    const auto p = make_ls_problem(o);
    const auto c = metropolis_weights(build_graph(TopologyKind::cycle, 4));
    // Long enough to converge, short enough that the round-off drift of the
    // correction form stays far below the tolerance.
    auto plateau = [&](double mu, double& ed_err) {
        const long n = static_cast<long>(std::ceil(40.0 / (mu * p.nu)));
        const std::vector<AlgorithmConfig> cfg{{Method::diffusion, mu, n, true},
                                               {Method::exact_diffusion, mu, n, true}};
        const auto r = run_lockstep(cfg, p, c, 1, 0);
        ed_err = max_row_error(r.final_states[1].W, p.w_star);
        return r.msd[0].back();
    };
    double e1 = 0.0, e2 = 0.0;
    const double p1 = plateau(0.01, e1);
    const double p2 = plateau(0.005, e2);
    const double ratio = p1 / p2;
    const bool pass = p.b_sq > 0.0 && e1 <= kExactTolerance && e2 <= kExactTolerance && p1 > kPlateauFloor &&
                      ratio >= kPlateauRatioLo && ratio <= kPlateauRatioHi;
    return {pass, fmt::format("b^2 {:.3g}, exact diffusion max error {:.2e} / {:.2e}, diffusion plateau {:.3e} -> "
                              "{:.3e}, ratio {:.3f}",
                              p.b_sq, e1, e2, p1, p2, ratio)};
}

Outcome form_equivalence() {
    LsOptions o;
    o.K = 9;
    o.M = kLsDim;
    o.seed = 1;
    o.noise_cov_samples = 100'000;
    const auto p = make_ls_problem(o);
    const auto c = metropolis_weights(build_graph(TopologyKind::grid, 9));
    auto a = make_state(Method::exact_diffusion, 9, kLsDim);
    auto b = make_state(Method::exact_diffusion_pd, 9, kLsDim);
    auto streams = make_agent_streams(1, 0, 9);
    SampleBatch batch;
    Matrix ga(9, kLsDim), gb(9, kLsDim);
    double worst = 0.0;
    for (int i = 0; i < 500; ++i) {
        draw_batch(p, streams, batch);
        batch_gradients(p, batch, false, a.W, ga);
        batch_gradients(p, batch, false, b.W, gb);
        step(Method::exact_diffusion, a, c, ga, 0.005);
        step(Method::exact_diffusion_pd, b, c, gb, 0.005);
        worst = std::max(worst, max_abs(subtract(a.W, b.W)));
    }
    return {worst <= kFormTolerance, fmt::format("max deviation {:.2e} over 500 iterations", worst)};
}

Outcome spectral_gaps() {
    auto gap = [](TopologyKind k, int K) { return metropolis_weights(build_graph(k, K)).gap(); };
    const double cr = gap(TopologyKind::cycle, 20) / gap(TopologyKind::cycle, 40);
    const double gr = gap(TopologyKind::grid, 16) / gap(TopologyKind::grid, 64);
    double worst = 0.0;
    for (int K : {3, 4, 5, 8, 16, 20, 32, 40, 64}) {
        // Metropolis weights on a cycle are 1/3 everywhere.
        double lam = 0.0;
        for (int j = 1; j < K; ++j)
            lam = std::max(lam, std::abs(1.0 / 3.0 + 2.0 / 3.0 * std::cos(2.0 * std::numbers::pi * j / K)));
        worst = std::max(worst, std::abs(gap(TopologyKind::cycle, K) - (1.0 - lam)));
    }
    const bool pass = cr >= kCycleRatioLo && cr <= kCycleRatioHi && gr >= kGridRatioLo && gr <= kGridRatioHi &&
                      worst <= kClosedFormTol;
    return {pass, fmt::format("cycle ratio {:.3f} in [{}, {}], grid ratio {:.3f} in [{}, {}], closed-form error {:.1e}",
                              cr, kCycleRatioLo, kCycleRatioHi, gr, kGridRatioLo, kGridRatioHi, worst)};
}

Outcome decomposition_validity() {
    std::vector<CombinationMatrix> graphs;
    for (int K = 3; K <= 49; ++K) graphs.push_back(metropolis_weights(build_graph(TopologyKind::cycle, K)));
    for (int s = 2; s <= 7; ++s) graphs.push_back(metropolis_weights(build_graph(TopologyKind::grid, s * s)));
    for (int K = 2; K <= 49; ++K) graphs.push_back(uniform_weights(build_graph(TopologyKind::complete, K)));
    double worst_mag = 0.0, worst_res = 0.0;
    for (const auto& c : graphs) {
        const auto d = fundamental_decomposition(c.Abar, c.V);
        for (double m : d.d1_magnitudes) worst_mag = std::max(worst_mag, m);
        worst_res = std::max(worst_res, d.residual);
    }
    const bool pass = worst_mag < 1.0 - kD1Margin && worst_res <= kResidualTol;
    return {pass, fmt::format("{} graphs, max |D1| {:.12f}, max residual {:.1e}", graphs.size(), worst_mag,
                              worst_res)};
}

Outcome noise_model() {
    std::mt19937_64 rng(9);
    std::normal_distribution<double> normal;
    auto point = [&](std::size_t M) {
        std::vector<double> w(M);
        for (auto& x : w) x = normal(rng);
        return w;
    };
    LsOptions o;
    o.K = 3;
    o.M = kLsDim;
    o.seed = 1;
    const auto p = make_ls_problem(o);

    std::vector<double> wk = point(20);
    const double n = norm2(wk);
    for (auto& x : wk) x /= n;
    const LogisticAgentModel logistic{wk, 0.001};

    double worst_ratio = 0.0;  // error norm over its standard error
    for (int i = 0; i < 5; ++i) {
        const auto w = point(kLsDim);
        AgentStream s(make_stream({9, 1, static_cast<std::uint64_t>(i)}));
        const auto r = oracle::mean_and_stderr(kNoiseSamples, kLsDim,
                                               [&] { return ls_stochastic_gradient(p.ls_agents[0], w, s); });
        worst_ratio = std::max(worst_ratio, oracle::distance(r.mean, ls_true_gradient(p.ls_agents[0], w)) /
                                                r.stderr_norm);
    }
    for (int i = 0; i < 5; ++i) {
        auto w = point(20);
        for (auto& x : w) x *= 0.3;
        AgentStream s(make_stream({9, 2, static_cast<std::uint64_t>(i)}));
        const auto r = oracle::mean_and_stderr(kNoiseSamples, 20,
                                               [&] { return logistic_stochastic_gradient(logistic, w, s); });
        worst_ratio = std::max(worst_ratio, oracle::distance(r.mean, oracle::logistic_population_gradient(logistic, w)) /
                                                r.stderr_norm);
    }
    double worst_trace = 0.0;
    for (int k = 0; k < p.K; ++k) {
        const auto exact = oracle::ls_noise_covariance(p.ls_agents[k], p.w_star);
        double te = 0.0, ts = 0.0;
        for (int j = 0; j < kLsDim; ++j) {
            te += exact(j, j);
            ts += p.S[k](j, j);
        }
        worst_trace = std::max(worst_trace, std::abs(ts - te) / te);
    }
    const bool pass = worst_ratio <= kStdErrs && worst_trace <= kTraceRelTol;
    return {pass, fmt::format("worst mean error {:.2f} standard errors (limit {}), worst trace error {:.2f}% (limit {}%)",
                              worst_ratio, kStdErrs, 100 * worst_trace, 100 * kTraceRelTol)};
}

Outcome tracking_parity() {
    const auto r = run_config(
        ls_config("cycle", 36, "diffusion, exact_diffusion, gradient_tracking", 0.005, 20000));
    const double d = ss(r, "diffusion"), ed = ss(r, "exact_diffusion"), gt = ss(r, "gradient_tracking");
    const auto [mu, nu] = dense_step(complete30("diffusion", 0.01, 1));
    const auto c = run_config(complete30("diffusion, gradient_tracking", mu, iterations_for(mu, nu, 10000)));
    const auto& cd = *method(c, "diffusion").steady;
    const auto& cg = *method(c, "gradient_tracking").steady;
    // Diffusion must win by more than the combined standard error.
    const double se = std::hypot(cd.std_err_db, cg.std_err_db);
    const bool beats = cd.mean_db < cg.mean_db - se;
    const bool pass = std::abs(gt - ed) <= kTrackingParityDb && gt <= d - kTrackingMarginDb && beats;
    return {pass, fmt::format("cycle: diffusion {:.2f}, exact diffusion {:.2f}, tracking {:.2f}; complete (mu {:.5f}): "
                              "diffusion {:.4f}, tracking {:.4f} (se {:.3f})",
                              d, ed, gt, mu, cd.mean_db, cg.mean_db, se)};
}

Outcome logistic_regimes() {
    const std::string base =
        "topology.kind = cycle\ntopology.K = 36\nproblem.family = logistic\nproblem.M = 20\nproblem.rho = 0.001\n"
        "problem.noise_cov_samples = 100000\nmethods = diffusion, exact_diffusion\nexperiment.runs = 50\n"
        "experiment.seed = 1\n";
    // Moderate: ten times the step-size above which the diffusion bias term matters.
    auto cfg = parse_config(base + "mu = 0.01\nexperiment.iterations = 1\n");
    const auto c = build_combination(cfg.topology, build_topology(cfg.topology));
    const auto p = build_problem(cfg.problem, 36);
    const double mu = 10.0 * make_theory_report(p, c, 0.01).regime.bias_threshold;
    const auto r = run_config(base + fmt::format("mu = {}\nexperiment.iterations = {}\n", mu,
                                                 iterations_for(mu, p.nu, 20000)));
    const double d = ss(r, "diffusion"), ed = ss(r, "exact_diffusion");
    const double g = r.problem.proxy_gradient_norm;
    const bool pass = ed <= d - kLogisticMarginDb && g <= kProxyTolerance;
    return {pass, fmt::format("mu {:.4f}: diffusion {:.2f}, exact diffusion {:.2f}, margin {:.2f} dB; proxy gradient "
                              "norm {:.1e}",
                              mu, d, ed, d - ed, g)};
}

Outcome determinism() {
    const std::string text = ls_config("cycle", 4, "diffusion, exact_diffusion, gradient_tracking", 0.02, 2000);
    auto csv = [&] {
        std::ostringstream os;
        write_csv(os, run_config(text));
        return os.str();
    };
    const std::string a = csv(), b = csv();
    return {!a.empty() && a == b, fmt::format("{} bytes, identical: {}", a.size(), a == b)};
}

const std::map<int, Criterion>& criteria() {
    static const std::map<int, Criterion> all{
        {1, {"theory overlay", 120, theory_overlay}},
        {2, {"small step-size equivalence", 900, small_mu_equivalence}},
        {3, {"sparse-network superiority", 1200, sparse_superiority}},
        {4, {"dense-network reversal", 600, dense_reversal}},
        {5, {"deterministic bias removal", 60, deterministic_bias}},
        {6, {"form equivalence", 1, form_equivalence}},
        {7, {"spectral-gap scaling", 1, spectral_gaps}},
        {8, {"decomposition validity", 30, decomposition_validity}},
        {9, {"gradient-noise model", 60, noise_model}},
        {10, {"gradient-tracking parity", 900, tracking_parity}},
        {11, {"logistic regime", 1200, logistic_regimes}},
        {12, {"determinism", 60, determinism}},
    };
    return all;
}

bool run_one(int id, const Criterion& c) {
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
        o = c.body();
    } catch (const std::exception& e) {
        o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    const bool in_time = secs <= c.budget_s;
    const bool pass = o.pass && in_time;
    fmt::print("criterion {:2} {} {}: {} [{:.1f} s, budget {:.0f} s{}]\n", id, pass ? "PASS" : "FAIL", c.title,
               o.detail, secs, c.budget_s, in_time ? "" : ", over budget");
    std::fflush(stdout);
    return pass;
}

}  // namespace

int main(int argc, char** argv) {
    const auto& all = criteria();
    bool ok = true;
    if (argc > 1) {
        for (int i = 1; i < argc; ++i) {
            const auto it = all.find(std::atoi(argv[i]));
            if (it == all.end()) {
                std::fprintf(stderr, "unknown criterion '%s'\n", argv[i]);
                return 2;
            }
            ok = run_one(it->first, it->second) && ok;
        }
    } else {
        for (const auto& [id, c] : all) ok = run_one(id, c) && ok;
    }
    return ok ? 0 : 1;
}
