#pragma once

// Decentralized stochastic-gradient recursions over stacked iterates
// (K x M, row k is agent k). All states start from zero.

#include <cstdint>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "adnet/linalg.hpp"
#include "adnet/problems.hpp"
#include "adnet/topology.hpp"

namespace adnet {

enum class Method { diffusion, exact_diffusion, exact_diffusion_pd, gradient_tracking, centralized_sgd };

Method parse_method(std::string_view name);
std::string_view to_string(Method m);

struct AlgorithmConfig {
    Method method = Method::diffusion;
    double mu = 0.01;
    long iterations = 1;
    bool deterministic = false;
};

struct NetworkState {
    Matrix W;
    std::optional<Matrix> Psi_prev;  // exact_diffusion
    std::optional<Matrix> Y;         // exact_diffusion_pd
    std::optional<Matrix> G_prev;    // gradient_tracking
    std::optional<Matrix> Ytrack;    // gradient_tracking
    long iteration = -1;             // index of the last completed step

    // Scratch space reused across steps.
    Matrix tmp;
    Matrix tmp2;
};

NetworkState make_state(Method m, int K, int M);

/// Each step consumes G, the stochastic gradients evaluated at the current W.
void step_diffusion(NetworkState& s, const CombinationMatrix& c, const Matrix& G, double mu);
void step_exact_diffusion(NetworkState& s, const CombinationMatrix& c, const Matrix& G, double mu);
void step_exact_diffusion_pd(NetworkState& s, const CombinationMatrix& c, const Matrix& G,
                             double mu);
void step_gradient_tracking(NetworkState& s, const CombinationMatrix& c, const Matrix& G,
                            double mu);
void step_centralized_sgd(NetworkState& s, const Matrix& G, double mu);

void step(Method m, NetworkState& s, const CombinationMatrix& c, const Matrix& G, double mu);

/// Fresh samples for every agent at one iteration, shared by all methods.
struct SampleBatch {
    std::vector<Sample> samples;  // one per agent
};

/// Independent per-agent streams for Monte-Carlo run `run` under `seed`.
std::vector<AgentStream> make_agent_streams(std::uint64_t seed, std::uint64_t run, int K);

void draw_batch(const ProblemInstance& p, std::span<AgentStream> streams, SampleBatch& batch);

/// Gradients at every row of W. Uses the batch unless the problem or config is
/// deterministic, in which case true gradients are returned.
void batch_gradients(const ProblemInstance& p, const SampleBatch& batch, bool deterministic,
                     const Matrix& W, Matrix& G);

struct LockstepResult {
    std::vector<std::vector<double>> msd;        // per method, per iteration
    std::vector<std::optional<long>> diverged;   // first non-finite iteration
    std::vector<NetworkState> final_states;
    std::uint64_t sample_digest = 0;             // word-wise FNV-1a over every drawn sample
};

/// Runs several methods on one shared data stream. A method whose iterate
/// turns non-finite stops; its remaining MSD entries are NaN.
LockstepResult run_lockstep(std::span<const AlgorithmConfig> configs, const ProblemInstance& p,
                            const CombinationMatrix& c, std::uint64_t seed, std::uint64_t run);

/// Single-method run returning the per-iteration MSD. Throws Divergence.
std::vector<double> run(const AlgorithmConfig& config, const ProblemInstance& p,
                        const CombinationMatrix& c, std::uint64_t seed, std::uint64_t run_index);

}  // namespace adnet
