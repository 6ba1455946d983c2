#include "adnet/algorithms.hpp"

#include <bit>
#include <cmath>
#include <limits>
#include <string>

#include "adnet/errors.hpp"
#include "adnet/kernels.hpp"
#include "adnet/rng.hpp"

namespace adnet {

namespace {

constexpr std::uint64_t kFnvOffset = 0xcbf29ce484222325ull;
constexpr std::uint64_t kFnvPrime = 0x100000001b3ull;

void require_same_shape(const Matrix& a, const Matrix& b, const char* what) {
    if (a.rows() != b.rows() || a.cols() != b.cols())
        throw InvalidInput(std::string(what) + ": gradient is " + std::to_string(b.rows()) + "x" +
                           std::to_string(b.cols()) + ", state is " + std::to_string(a.rows()) +
                           "x" + std::to_string(a.cols()));
}

void require_agents(const NetworkState& s, const CombinationMatrix& c, const char* what) {
    if (s.W.rows() != static_cast<std::size_t>(c.K()))
        throw InvalidInput(std::string(what) + ": state has " + std::to_string(s.W.rows()) +
                           " agents, combination matrix has " + std::to_string(c.K()));
}

Matrix& field(std::optional<Matrix>& m, const char* name) {
    if (!m) throw InvalidInput(std::string("state is missing ") + name);
    return *m;
}

void fnv_word(std::uint64_t& h, double x) {
    h ^= std::bit_cast<std::uint64_t>(x);
    h *= kFnvPrime;
}

}  // namespace

Method parse_method(std::string_view name) {
    if (name == "diffusion") return Method::diffusion;
    if (name == "exact_diffusion") return Method::exact_diffusion;
    if (name == "exact_diffusion_pd") return Method::exact_diffusion_pd;
    if (name == "gradient_tracking") return Method::gradient_tracking;
    if (name == "centralized_sgd") return Method::centralized_sgd;
    throw InvalidInput("unknown method '" + std::string(name) + "'");
}

std::string_view to_string(Method m) {
    switch (m) {
        case Method::diffusion: return "diffusion";
        case Method::exact_diffusion: return "exact_diffusion";
        case Method::exact_diffusion_pd: return "exact_diffusion_pd";
        case Method::gradient_tracking: return "gradient_tracking";
        case Method::centralized_sgd: return "centralized_sgd";
    }
    return "unknown";
}

NetworkState make_state(Method m, int K, int M) {
    if (K < 1 || M < 1) throw InvalidInput("make_state: K and M must be at least 1");
    const auto k = static_cast<std::size_t>(K);
    const auto d = static_cast<std::size_t>(M);
    NetworkState s;
    s.W = Matrix(k, d);
    s.tmp = Matrix(k, d);
    s.tmp2 = Matrix(k, d);
    switch (m) {
        case Method::exact_diffusion: s.Psi_prev = Matrix(k, d); break;
        case Method::exact_diffusion_pd: s.Y = Matrix(k, d); break;
        case Method::gradient_tracking:
            s.G_prev = Matrix(k, d);
            s.Ytrack = Matrix(k, d);
            break;
        case Method::diffusion:
        case Method::centralized_sgd: break;
    }
    return s;
}

void step_diffusion(NetworkState& s, const CombinationMatrix& c, const Matrix& G, double mu) {
    require_same_shape(s.W, G, "step_diffusion");
    require_agents(s, c, "step_diffusion");
    axpy_step(s.W, G, mu, s.tmp);
    combine(c.A_sparse, s.tmp, s.W);
    ++s.iteration;
}

void step_exact_diffusion(NetworkState& s, const CombinationMatrix& c, const Matrix& G, double mu) {
    require_same_shape(s.W, G, "step_exact_diffusion");
    require_agents(s, c, "step_exact_diffusion");
    Matrix& psi_prev = field(s.Psi_prev, "Psi_prev");
    axpy_step(s.W, G, mu, s.tmp);  // psi
    auto phi = s.tmp2.data();
    const auto psi = s.tmp.data();
    const auto w = s.W.data();
    const auto prev = psi_prev.data();
    // Grouped so the correction is exactly zero whenever w == psi_prev.
    for (std::size_t i = 0; i < phi.size(); ++i) phi[i] = psi[i] + (w[i] - prev[i]);
    combine(c.Abar_sparse, s.tmp2, s.W);
    std::swap(psi_prev, s.tmp);
    ++s.iteration;
}

void step_exact_diffusion_pd(NetworkState& s, const CombinationMatrix& c, const Matrix& G,
                             double mu) {
    require_same_shape(s.W, G, "step_exact_diffusion_pd");
    require_agents(s, c, "step_exact_diffusion_pd");
    Matrix& y = field(s.Y, "Y");
    axpy_step(s.W, G, mu, s.tmp);
    combine(c.Abar_sparse, s.tmp, s.tmp2);
    apply_dense(c.V.dense(), y, s.tmp);
    {
        auto w = s.W.data();
        const auto a = s.tmp2.data();
        const auto vy = s.tmp.data();
        for (std::size_t i = 0; i < w.size(); ++i) w[i] = a[i] - vy[i];
    }
    apply_dense(c.V.dense(), s.W, s.tmp);
    auto yd = y.data();
    const auto vw = s.tmp.data();
    for (std::size_t i = 0; i < yd.size(); ++i) yd[i] += vw[i];
    ++s.iteration;
}

void step_gradient_tracking(NetworkState& s, const CombinationMatrix& c, const Matrix& G,
                            double mu) {
    require_same_shape(s.W, G, "step_gradient_tracking");
    require_agents(s, c, "step_gradient_tracking");
    Matrix& g_prev = field(s.G_prev, "G_prev");
    Matrix& y = field(s.Ytrack, "Ytrack");
    if (s.iteration < 0) {
        y = G;
    } else {
        auto t = s.tmp.data();
        const auto yd = y.data();
        const auto gn = G.data();
        const auto gp = g_prev.data();
        for (std::size_t i = 0; i < t.size(); ++i) t[i] = (yd[i] - gp[i]) + gn[i];
        combine(c.A_sparse, s.tmp, y);
    }
    g_prev = G;
    axpy_step(s.W, y, mu, s.tmp);
    combine(c.A_sparse, s.tmp, s.W);
    ++s.iteration;
}

void step_centralized_sgd(NetworkState& s, const Matrix& G, double mu) {
    require_same_shape(s.W, G, "step_centralized_sgd");
    const std::size_t K = G.rows();
    const std::size_t M = G.cols();
    std::vector<double> avg(M, 0.0);
    for (std::size_t k = 0; k < K; ++k)
        for (std::size_t j = 0; j < M; ++j) avg[j] += G(k, j);
    for (std::size_t j = 0; j < M; ++j) avg[j] = s.W(0, j) - mu * avg[j] / static_cast<double>(K);
    for (std::size_t k = 0; k < K; ++k)
        for (std::size_t j = 0; j < M; ++j) s.W(k, j) = avg[j];
    ++s.iteration;
}

void step(Method m, NetworkState& s, const CombinationMatrix& c, const Matrix& G, double mu) {
    switch (m) {
        case Method::diffusion: return step_diffusion(s, c, G, mu);
        case Method::exact_diffusion: return step_exact_diffusion(s, c, G, mu);
        case Method::exact_diffusion_pd: return step_exact_diffusion_pd(s, c, G, mu);
        case Method::gradient_tracking: return step_gradient_tracking(s, c, G, mu);
        case Method::centralized_sgd: return step_centralized_sgd(s, G, mu);
    }
}

std::vector<AgentStream> make_agent_streams(std::uint64_t seed, std::uint64_t run, int K) {
    std::vector<AgentStream> streams;
    streams.reserve(static_cast<std::size_t>(K));
    for (int k = 0; k < K; ++k)
        streams.emplace_back(
            make_stream({stream::kSimulation, seed, run, static_cast<std::uint64_t>(k)}));
    return streams;
}

void draw_batch(const ProblemInstance& p, std::span<AgentStream> streams, SampleBatch& batch) {
    batch.samples.resize(static_cast<std::size_t>(p.K));
    for (int k = 0; k < p.K; ++k) p.draw(k, streams[k], batch.samples[k]);
}

void batch_gradients(const ProblemInstance& p, const SampleBatch& batch, bool deterministic,
                     const Matrix& W, Matrix& G) {
    if (G.rows() != W.rows() || G.cols() != W.cols()) G = Matrix(W.rows(), W.cols());
    for (int k = 0; k < p.K; ++k) {
        if (deterministic || p.deterministic)
            p.true_gradient(k, W.row(k), G.row(k));
        else
            p.sample_gradient(k, batch.samples[k], W.row(k), G.row(k));
    }
}

LockstepResult run_lockstep(std::span<const AlgorithmConfig> configs, const ProblemInstance& p,
                            const CombinationMatrix& c, std::uint64_t seed, std::uint64_t run) {
    if (configs.empty()) throw InvalidInput("run: at least one method is required");
    if (p.K != c.K())
        throw InvalidInput("run: problem has K=" + std::to_string(p.K) +
                           " but the combination matrix has K=" + std::to_string(c.K()));
    const long iterations = configs.front().iterations;
    bool any_stochastic = false;
    for (const auto& cfg : configs) {
        if (cfg.iterations < 1) throw InvalidInput("run: iterations must be at least 1");
        if (cfg.iterations != iterations)
            throw InvalidInput("run: all methods must share the iteration count");
        if (!(cfg.mu > 0.0)) throw InvalidInput("run: step-size must be positive");
        any_stochastic = any_stochastic || !(cfg.deterministic || p.deterministic);
    }

    const std::size_t n = configs.size();
    LockstepResult out;
    out.msd.assign(n, std::vector<double>(static_cast<std::size_t>(iterations),
                                          std::numeric_limits<double>::quiet_NaN()));
    out.diverged.assign(n, std::nullopt);
    for (const auto& cfg : configs) out.final_states.push_back(make_state(cfg.method, p.K, p.M));

    auto streams = make_agent_streams(seed, run, p.K);
    SampleBatch batch;
    Matrix G;
    std::uint64_t digest = kFnvOffset;

    for (long i = 0; i < iterations; ++i) {
        if (any_stochastic) {
            draw_batch(p, streams, batch);
            for (const auto& x : batch.samples) {
                for (double f : x.features) fnv_word(digest, f);
                fnv_word(digest, x.target);
            }
        }
        for (std::size_t m = 0; m < n; ++m) {
            if (out.diverged[m]) continue;
            auto& s = out.final_states[m];
            batch_gradients(p, batch, configs[m].deterministic, s.W, G);
            step(configs[m].method, s, c, G, configs[m].mu);
            const double msd = mean_square_deviation(s.W, p.w_star);
            if (!std::isfinite(msd)) {
                out.diverged[m] = i;
                continue;
            }
            out.msd[m][static_cast<std::size_t>(i)] = msd;
        }
    }
    out.sample_digest = digest;
    return out;
}

std::vector<double> run(const AlgorithmConfig& config, const ProblemInstance& p,
                        const CombinationMatrix& c, std::uint64_t seed, std::uint64_t run_index) {
    auto result = run_lockstep(std::span(&config, 1), p, c, seed, run_index);
    if (result.diverged.front())
        throw Divergence(std::string(to_string(config.method)) + " diverged at iteration " +
                             std::to_string(*result.diverged.front()) + " with mu=" +
                             std::to_string(config.mu),
                         *result.diverged.front());
    return std::move(result.msd.front());
}

}  // namespace adnet
