#pragma once

// Streaming data models: least-squares regression ("MSE network") and
// l2-regularized logistic regression. Each agent owns a local cost J_k; a
// ProblemInstance carries everything the simulator and the theory need.

#include <cstdint>
#include <random>
#include <span>
#include <string_view>
#include <utility>
#include <vector>

#include <boost/random/normal_distribution.hpp>

#include "adnet/linalg.hpp"
#include "adnet/rng.hpp"

namespace adnet {

enum class Family { least_squares, logistic };

Family parse_family(std::string_view name);
std::string_view to_string(Family f);

struct LsAgentModel {
    std::vector<double> w_star_k;
    std::vector<double> lambda;  // diagonal of the regressor covariance
    double noise_var = 0.1;
};

struct LogisticAgentModel {
    std::vector<double> w_star_k;  // unit norm
    double rho = 0.001;
};

/// One streaming observation. For least squares `features` is the regressor
/// u and `target` is d; for logistic regression they are h and the label.
struct Sample {
    std::vector<double> features;
    double target = 0.0;
};

/// Per-agent random source. Gaussians come from Boost's ziggurat sampler,
/// which is several times cheaper than the polar method in <random>.
struct AgentStream {
    Rng rng;
    boost::random::normal_distribution<double> normal{0.0, 1.0};
    std::uniform_real_distribution<double> uniform{0.0, 1.0};

    explicit AgentStream(Rng r) : rng(std::move(r)) {}
    double gaussian() { return normal(rng); }
    double unit() { return uniform(rng); }
};

void draw_ls_sample(const LsAgentModel& agent, AgentStream& s, Sample& out);
void draw_logistic_sample(const LogisticAgentModel& agent, AgentStream& s, Sample& out);

/// Gradient of the per-sample loss at w.
void ls_sample_gradient(const Sample& x, std::span<const double> w, std::span<double> g);
void logistic_sample_gradient(const Sample& x, double rho, std::span<const double> w,
                              std::span<double> g);

/// Per-sample losses, used for finite-difference checks and the proxy solver.
double ls_sample_loss(const Sample& x, std::span<const double> w);
double logistic_sample_loss(const Sample& x, double rho, std::span<const double> w);

/// Draw a sample and return its gradient at w.
std::vector<double> ls_stochastic_gradient(const LsAgentModel& agent, std::span<const double> w,
                                           AgentStream& s);
std::vector<double> logistic_stochastic_gradient(const LogisticAgentModel& agent,
                                                 std::span<const double> w, AgentStream& s);

/// Exact local gradient 2 Lambda_k (w - w_star_k).
std::vector<double> ls_true_gradient(const LsAgentModel& agent, std::span<const double> w);

struct ProblemInstance {
    Family family = Family::least_squares;
    int K = 0;
    int M = 0;
    std::uint64_t seed = 0;
    bool deterministic = false;

    std::vector<LsAgentModel> ls_agents;
    std::vector<LogisticAgentModel> logistic_agents;
    std::size_t eval_sample_count = 0;  // logistic only
    // All agents hold the same local model, so they also share one
    // evaluation set and their empirical risks coincide.
    bool shared_model = false;

    std::vector<double> w_star;
    std::vector<std::vector<double>> local_gradients;  // grad J_k(w_star)
    std::vector<SymMatrix> H;                          // Hessians at w_star
    std::vector<SymMatrix> S;                          // gradient-noise covariances at w_star
    std::vector<double> beta_sq;                       // per-agent constants of the noise bound

    double nu = 0.0;     // smallest Hessian eigenvalue over agents
    double delta = 0.0;  // largest Hessian eigenvalue over agents
    double b_sq = 0.0;
    double sigma_sq = 0.0;
    double beta_max_sq = 0.0;
    double proxy_gradient_norm = 0.0;  // ||(1/K) sum_k grad J_k(w_star)||

    void draw(int agent, AgentStream& s, Sample& out) const;
    void sample_gradient(int agent, const Sample& x, std::span<const double> w,
                         std::span<double> g) const;
    /// Noise-free local gradient. For logistic regression this is the
    /// empirical-risk gradient over the frozen evaluation set.
    void true_gradient(int agent, std::span<const double> w, std::span<double> g) const;
};

struct LsOptions {
    int K = 1;
    int M = 1;
    std::uint64_t seed = 0;
    std::pair<double, double> lambda_range{1.0, 2.0};
    double noise_var = 0.1;
    bool zero_bias = false;
    bool deterministic = false;
    std::size_t noise_cov_samples = 1'000'000;
};

struct LogisticOptions {
    int K = 1;
    int M = 20;
    std::uint64_t seed = 0;
    double rho = 0.001;
    std::size_t eval_sample_count = 200'000;
    bool zero_bias = false;
    bool deterministic = false;
    std::size_t noise_cov_samples = 100'000;
};

ProblemInstance make_ls_problem(const LsOptions& opt);

/// LS instance from explicit agent models (used for hand-checked cases).
ProblemInstance make_ls_problem_from_agents(std::vector<LsAgentModel> agents,
                                            bool deterministic = false,
                                            std::size_t noise_cov_samples = 1'000'000,
                                            std::uint64_t seed = 0);

ProblemInstance make_logistic_problem(const LogisticOptions& opt);

/// Sample mean of s s^T with s = stochastic gradient at w minus the true local
/// gradient at w, symmetrized and clamped to PSD. Zero in deterministic mode.
SymMatrix estimate_noise_covariance(const ProblemInstance& p, int agent,
                                    std::span<const double> w, std::size_t sample_count,
                                    std::uint64_t seed);

/// (1/K) sum_k ||grad J_k(w_star)||^2.
double compute_bias(const ProblemInstance& p);

/// Streams the frozen evaluation set of agent k: calls fn(sample) for each of
/// its `eval_sample_count` samples. The set is regenerated from the seed on
/// every pass instead of being stored.
template <class Fn>
void for_each_eval_sample(const ProblemInstance& p, int agent, Fn&& fn);

}  // namespace adnet

#include "adnet/detail/eval_set.hpp"
