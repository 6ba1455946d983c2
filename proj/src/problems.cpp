#include "adnet/problems.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "adnet/errors.hpp"

namespace adnet {

namespace {

constexpr double kProxyTolerance = 1e-10;
constexpr int kNewtonMaxIterations = 100;
constexpr int kLineSearchMaxHalvings = 60;
constexpr std::size_t kMinNoiseCovSamples = 100'000;
constexpr std::size_t kMinEvalSamples = 10'000;

double dot(std::span<const double> a, std::span<const double> b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

// log(1 + exp(x)) without overflow.
double softplus(double x) { return x > 0.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x)); }

double sigmoid(double x) {
    if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
    const double e = std::exp(x);
    return e / (1.0 + e);
}

void check_dimension(std::span<const double> v, int M, const char* what) {
    if (v.size() != static_cast<std::size_t>(M))
        throw InvalidInput(std::string(what) + ": vector has length " + std::to_string(v.size()) +
                           ", expected " + std::to_string(M));
}

// Largest and smallest eigenvalue over a list of symmetric matrices.
std::pair<double, double> spectral_extremes(const std::vector<SymMatrix>& ms) {
    double lo = std::numeric_limits<double>::infinity();
    double hi = -std::numeric_limits<double>::infinity();
    for (const auto& m : ms) {
        const auto eig = sym_eig(m);
        lo = std::min(lo, eig.values.back());
        hi = std::max(hi, eig.values.front());
    }
    return {lo, hi};
}

SymMatrix clamp_psd(Matrix m) {
    const std::size_t n = m.rows();
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j) {
            const double avg = 0.5 * (m(i, j) + m(j, i));
            m(i, j) = avg;
            m(j, i) = avg;
        }
    SymMatrix sym(std::move(m));
    const auto eig = sym_eig(sym);
    if (eig.values.back() >= 0.0) return sym;
    Matrix r(n, n);
    for (std::size_t k = 0; k < n; ++k) {
        const double lambda = std::max(eig.values[k], 0.0);
        if (lambda == 0.0) continue;
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < n; ++j)
                r(i, j) += eig.vectors(i, k) * lambda * eig.vectors(j, k);
    }
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j) r(j, i) = r(i, j);
    return SymMatrix(std::move(r));
}

void finalize_constants(ProblemInstance& p) {
    const auto [lo, hi] = spectral_extremes(p.H);
    p.nu = lo;
    p.delta = hi;
    p.b_sq = compute_bias(p);
    double sigma = 0.0;
    for (const auto& s : p.S) sigma += trace(s);
    p.sigma_sq = sigma / p.K;
    p.beta_max_sq = *std::max_element(p.beta_sq.begin(), p.beta_sq.end());

    std::vector<double> avg(static_cast<std::size_t>(p.M), 0.0);
    for (const auto& g : p.local_gradients)
        for (int j = 0; j < p.M; ++j) avg[j] += g[j] / p.K;
    p.proxy_gradient_norm = norm2(avg);
}

std::vector<double> unit_gaussian(Rng& rng, int M) {
    std::normal_distribution<double> normal(0.0, 1.0);
    std::vector<double> w(static_cast<std::size_t>(M));
    for (auto& x : w) x = normal(rng);
    const double n = norm2(w);
    if (n == 0.0) throw NumericFailure("unit_gaussian: zero draw");
    for (auto& x : w) x /= n;
    return w;
}

// One pass over every agent's evaluation set at w.
struct RiskPass {
    double risk = 0.0;  // averaged over agents
    std::vector<std::vector<double>> gradients;
    std::vector<Matrix> hessians;  // per agent
};

RiskPass logistic_risk_pass(const ProblemInstance& p, std::span<const double> w, bool hessians) {
    const auto M = static_cast<std::size_t>(p.M);
    const double rho = p.logistic_agents.front().rho;
    const auto N = static_cast<double>(p.eval_sample_count);
    RiskPass out;
    out.gradients.assign(static_cast<std::size_t>(p.K), std::vector<double>(M, 0.0));
    if (hessians) out.hessians.assign(static_cast<std::size_t>(p.K), Matrix(M, M));

    const double reg = 0.5 * rho * squared_norm(w);
    for (int k = 0; k < p.K; ++k) {
        auto& g = out.gradients[k];
        double loss = 0.0;
        Matrix* h = hessians ? &out.hessians[k] : nullptr;
        for_each_eval_sample(p, k, [&](const Sample& x) {
            const double t = x.target * dot(x.features, w);
            loss += softplus(-t);
            const double s = sigmoid(-t);
            const double coef = -x.target * s;
            for (std::size_t j = 0; j < M; ++j) g[j] += coef * x.features[j];
            if (h) {
                const double curv = s * (1.0 - s);
                for (std::size_t i = 0; i < M; ++i) {
                    const double ci = curv * x.features[i];
                    auto row = h->row(i);
                    for (std::size_t j = i; j < M; ++j) row[j] += ci * x.features[j];
                }
            }
        });
        for (std::size_t j = 0; j < M; ++j) g[j] = g[j] / N + rho * w[j];
        if (h) {
            for (std::size_t i = 0; i < M; ++i) {
                for (std::size_t j = i; j < M; ++j) {
                    const double v = (*h)(i, j) / N + (i == j ? rho : 0.0);
                    (*h)(i, j) = v;
                    (*h)(j, i) = v;
                }
            }
        }
        out.risk += (loss / N + reg) / p.K;
    }
    return out;
}

std::vector<double> average(const std::vector<std::vector<double>>& vs) {
    std::vector<double> avg(vs.front().size(), 0.0);
    for (const auto& v : vs)
        for (std::size_t j = 0; j < v.size(); ++j) avg[j] += v[j];
    for (auto& x : avg) x /= static_cast<double>(vs.size());
    return avg;
}

SymMatrix average(const std::vector<Matrix>& ms) {
    const std::size_t n = ms.front().rows();
    Matrix avg(n, n);
    for (const auto& m : ms)
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < n; ++j) avg(i, j) += m(i, j);
    for (auto& x : avg.data()) x /= static_cast<double>(ms.size());
    return SymMatrix(std::move(avg));
}

}  // namespace

Family parse_family(std::string_view name) {
    if (name == "least_squares" || name == "ls") return Family::least_squares;
    if (name == "logistic") return Family::logistic;
    throw InvalidInput("unknown problem family '" + std::string(name) + "'");
}

std::string_view to_string(Family f) {
    return f == Family::least_squares ? "least_squares" : "logistic";
}

void draw_ls_sample(const LsAgentModel& agent, AgentStream& s, Sample& out) {
    const std::size_t M = agent.w_star_k.size();
    out.features.resize(M);
    double d = 0.0;
    for (std::size_t j = 0; j < M; ++j) {
        const double u = std::sqrt(agent.lambda[j]) * s.gaussian();
        out.features[j] = u;
        d += u * agent.w_star_k[j];
    }
    out.target = d + std::sqrt(agent.noise_var) * s.gaussian();
}

void draw_logistic_sample(const LogisticAgentModel& agent, AgentStream& s, Sample& out) {
    const std::size_t M = agent.w_star_k.size();
    out.features.resize(M);
    for (std::size_t j = 0; j < M; ++j) out.features[j] = s.gaussian();
    const double z = s.unit();
    out.target = z <= sigmoid(dot(out.features, agent.w_star_k)) ? 1.0 : -1.0;
}

void ls_sample_gradient(const Sample& x, std::span<const double> w, std::span<double> g) {
    const double r = x.target - dot(x.features, w);
    for (std::size_t j = 0; j < w.size(); ++j) g[j] = -2.0 * x.features[j] * r;
}

void logistic_sample_gradient(const Sample& x, double rho, std::span<const double> w,
                              std::span<double> g) {
    const double coef = -x.target * sigmoid(-x.target * dot(x.features, w));
    for (std::size_t j = 0; j < w.size(); ++j) g[j] = coef * x.features[j] + rho * w[j];
}

double ls_sample_loss(const Sample& x, std::span<const double> w) {
    const double r = x.target - dot(x.features, w);
    return r * r;
}

double logistic_sample_loss(const Sample& x, double rho, std::span<const double> w) {
    return softplus(-x.target * dot(x.features, w)) + 0.5 * rho * squared_norm(w);
}

std::vector<double> ls_stochastic_gradient(const LsAgentModel& agent, std::span<const double> w,
                                           AgentStream& s) {
    Sample x;
    draw_ls_sample(agent, s, x);
    std::vector<double> g(w.size());
    ls_sample_gradient(x, w, g);
    return g;
}

std::vector<double> logistic_stochastic_gradient(const LogisticAgentModel& agent,
                                                 std::span<const double> w, AgentStream& s) {
    Sample x;
    draw_logistic_sample(agent, s, x);
    std::vector<double> g(w.size());
    logistic_sample_gradient(x, agent.rho, w, g);
    return g;
}

std::vector<double> ls_true_gradient(const LsAgentModel& agent, std::span<const double> w) {
    std::vector<double> g(w.size());
    for (std::size_t j = 0; j < w.size(); ++j)
        g[j] = 2.0 * agent.lambda[j] * (w[j] - agent.w_star_k[j]);
    return g;
}

void ProblemInstance::draw(int agent, AgentStream& s, Sample& out) const {
    if (family == Family::least_squares)
        draw_ls_sample(ls_agents[agent], s, out);
    else
        draw_logistic_sample(logistic_agents[agent], s, out);
}

void ProblemInstance::sample_gradient(int agent, const Sample& x, std::span<const double> w,
                                      std::span<double> g) const {
    if (family == Family::least_squares)
        ls_sample_gradient(x, w, g);
    else
        logistic_sample_gradient(x, logistic_agents[agent].rho, w, g);
}

void ProblemInstance::true_gradient(int agent, std::span<const double> w,
                                    std::span<double> g) const {
    check_dimension(w, M, "true_gradient");
    if (family == Family::least_squares) {
        const auto& a = ls_agents[agent];
        for (int j = 0; j < M; ++j) g[j] = 2.0 * a.lambda[j] * (w[j] - a.w_star_k[j]);
        return;
    }
    const double rho = logistic_agents[agent].rho;
    std::fill(g.begin(), g.end(), 0.0);
    for_each_eval_sample(*this, agent, [&](const Sample& x) {
        const double coef = -x.target * sigmoid(-x.target * dot(x.features, w));
        for (int j = 0; j < M; ++j) g[j] += coef * x.features[j];
    });
    const auto N = static_cast<double>(eval_sample_count);
    for (int j = 0; j < M; ++j) g[j] = g[j] / N + rho * w[j];
}

SymMatrix estimate_noise_covariance(const ProblemInstance& p, int agent,
                                    std::span<const double> w, std::size_t sample_count,
                                    std::uint64_t seed) {
    check_dimension(w, p.M, "estimate_noise_covariance");
    const auto M = static_cast<std::size_t>(p.M);
    if (p.deterministic) return SymMatrix::zeros(M);
    if (sample_count < kMinNoiseCovSamples)
        throw InvalidInput("estimate_noise_covariance: sample_count must be at least 1e5, got " +
                           std::to_string(sample_count));

    std::vector<double> mean_grad(M);
    const bool at_optimum = p.local_gradients.size() == static_cast<std::size_t>(p.K) &&
                            std::equal(w.begin(), w.end(), p.w_star.begin(), p.w_star.end());
    if (at_optimum)
        mean_grad = p.local_gradients[agent];
    else
        p.true_gradient(agent, w, mean_grad);

    AgentStream s(make_stream({stream::kNoiseCov, seed, static_cast<std::uint64_t>(agent)}));
    Sample x;
    std::vector<double> g(M);
    Matrix acc(M, M);
    for (std::size_t n = 0; n < sample_count; ++n) {
        p.draw(agent, s, x);
        p.sample_gradient(agent, x, w, g);
        for (std::size_t j = 0; j < M; ++j) g[j] -= mean_grad[j];
        for (std::size_t i = 0; i < M; ++i) {
            auto row = acc.row(i);
            for (std::size_t j = i; j < M; ++j) row[j] += g[i] * g[j];
        }
    }
    const auto inv = 1.0 / static_cast<double>(sample_count);
    for (std::size_t i = 0; i < M; ++i)
        for (std::size_t j = i; j < M; ++j) {
            acc(i, j) *= inv;
            acc(j, i) = acc(i, j);
        }
    return clamp_psd(std::move(acc));
}

double compute_bias(const ProblemInstance& p) {
    double total = 0.0;
    if (p.family == Family::least_squares) {
        for (const auto& a : p.ls_agents) total += squared_norm(ls_true_gradient(a, p.w_star));
    } else {
        for (const auto& g : p.local_gradients) total += squared_norm(g);
    }
    return total / p.K;
}

ProblemInstance make_ls_problem_from_agents(std::vector<LsAgentModel> agents, bool deterministic,
                                            std::size_t noise_cov_samples, std::uint64_t seed) {
    if (agents.empty()) throw InvalidInput("make_ls_problem: at least one agent required");
    const std::size_t M = agents.front().w_star_k.size();
    if (M == 0) throw InvalidInput("make_ls_problem: M must be at least 1");
    for (const auto& a : agents) {
        if (a.w_star_k.size() != M || a.lambda.size() != M)
            throw InvalidInput("make_ls_problem: inconsistent agent dimensions");
        for (double l : a.lambda)
            if (!(l > 0.0)) throw InvalidInput("make_ls_problem: Lambda entries must be positive");
        if (!(a.noise_var >= 0.0))
            throw InvalidInput("make_ls_problem: noise_var must be nonnegative");
    }

    ProblemInstance p;
    p.family = Family::least_squares;
    p.K = static_cast<int>(agents.size());
    p.M = static_cast<int>(M);
    p.seed = seed;
    p.deterministic = deterministic;
    p.ls_agents = std::move(agents);

    // Diagonal Lambda_k make the weighted average separate per coordinate.
    p.w_star.assign(M, 0.0);
    for (std::size_t j = 0; j < M; ++j) {
        double num = 0.0;
        double den = 0.0;
        for (const auto& a : p.ls_agents) {
            num += a.lambda[j] * a.w_star_k[j];
            den += a.lambda[j];
        }
        p.w_star[j] = num / den;
    }

    for (int k = 0; k < p.K; ++k) {
        const auto& a = p.ls_agents[k];
        p.local_gradients.push_back(ls_true_gradient(a, p.w_star));
        std::vector<double> h(M);
        for (std::size_t j = 0; j < M; ++j) h[j] = 2.0 * a.lambda[j];
        p.H.push_back(SymMatrix::diagonal(h));
        const double lmax = *std::max_element(a.lambda.begin(), a.lambda.end());
        const double tr = std::accumulate(a.lambda.begin(), a.lambda.end(), 0.0);
        p.beta_sq.push_back(4.0 * lmax * (lmax + tr));
    }
    for (int k = 0; k < p.K; ++k)
        p.S.push_back(estimate_noise_covariance(p, k, p.w_star, noise_cov_samples, seed));
    finalize_constants(p);
    return p;
}

ProblemInstance make_ls_problem(const LsOptions& opt) {
    if (opt.K < 1 || opt.M < 1) throw InvalidInput("make_ls_problem: K and M must be at least 1");
    const auto [lo, hi] = opt.lambda_range;
    if (!(lo > 0.0) || !(hi >= lo))
        throw InvalidInput("make_ls_problem: lambda_range must satisfy 0 < lo <= hi");
    if (!(opt.noise_var >= 0.0)) throw InvalidInput("make_ls_problem: noise_var must be >= 0");

    Rng rng = make_stream({stream::kModel, opt.seed});
    std::normal_distribution<double> normal(0.0, 1.0);
    std::uniform_real_distribution<double> uniform(lo, hi);

    const auto M = static_cast<std::size_t>(opt.M);
    std::vector<double> shared(M);
    if (opt.zero_bias)
        for (auto& x : shared) x = normal(rng);

    std::vector<LsAgentModel> agents(static_cast<std::size_t>(opt.K));
    for (auto& a : agents) {
        a.noise_var = opt.noise_var;
        a.w_star_k.resize(M);
        a.lambda.resize(M);
        for (std::size_t j = 0; j < M; ++j) a.w_star_k[j] = opt.zero_bias ? shared[j] : normal(rng);
        for (std::size_t j = 0; j < M; ++j) a.lambda[j] = lo == hi ? lo : uniform(rng);
    }
    return make_ls_problem_from_agents(std::move(agents), opt.deterministic,
                                       opt.noise_cov_samples, opt.seed);
}

ProblemInstance make_logistic_problem(const LogisticOptions& opt) {
    if (opt.K < 1 || opt.M < 1)
        throw InvalidInput("make_logistic_problem: K and M must be at least 1");
    if (!(opt.rho > 0.0)) throw InvalidInput("make_logistic_problem: rho must be positive");
    if (opt.eval_sample_count < kMinEvalSamples)
        throw InvalidInput("make_logistic_problem: eval_sample_count must be at least 1e4");

    ProblemInstance p;
    p.family = Family::logistic;
    p.K = opt.K;
    p.M = opt.M;
    p.seed = opt.seed;
    p.deterministic = opt.deterministic;
    p.eval_sample_count = opt.eval_sample_count;
    p.shared_model = opt.zero_bias;

    Rng rng = make_stream({stream::kModel, opt.seed});
    std::vector<double> shared;
    if (opt.zero_bias) shared = unit_gaussian(rng, opt.M);
    for (int k = 0; k < opt.K; ++k)
        p.logistic_agents.push_back({opt.zero_bias ? shared : unit_gaussian(rng, opt.M), opt.rho});

    // Damped Newton on the averaged empirical risk.
    const auto M = static_cast<std::size_t>(opt.M);
    std::vector<double> w(M, 0.0);
    RiskPass cur = logistic_risk_pass(p, w, true);
    std::vector<double> grad = average(cur.gradients);
    int iter = 0;
    while (norm2(grad) > kProxyTolerance) {
        if (++iter > kNewtonMaxIterations)
            throw ConvergenceFailure("make_logistic_problem: proxy solver stopped at gradient norm " +
                                     std::to_string(norm2(grad)) + " after " +
                                     std::to_string(kNewtonMaxIterations) + " Newton steps");
        std::vector<double> neg(M);
        for (std::size_t j = 0; j < M; ++j) neg[j] = -grad[j];
        const std::vector<double> step = solve_spd(average(cur.hessians), neg);
        const double slope = dot(grad, step);

        // Once the predicted decrease is below the rounding level of the risk,
        // Armijo cannot be evaluated; the full Newton step is taken.
        if (-slope <= 1e-12 * std::abs(cur.risk)) {
            for (std::size_t j = 0; j < M; ++j) w[j] += step[j];
            cur = logistic_risk_pass(p, w, true);
            grad = average(cur.gradients);
            continue;
        }

        double t = 1.0;
        bool accepted = false;
        for (int h = 0; h < kLineSearchMaxHalvings; ++h, t *= 0.5) {
            std::vector<double> trial(M);
            for (std::size_t j = 0; j < M; ++j) trial[j] = w[j] + t * step[j];
            RiskPass next = logistic_risk_pass(p, trial, true);
            // The relative slack absorbs rounding once the risk has flattened out.
            if (next.risk <= cur.risk + 1e-4 * t * slope + 1e-15 * std::abs(cur.risk)) {
                w = std::move(trial);
                cur = std::move(next);
                accepted = true;
                break;
            }
        }
        if (!accepted)
            throw ConvergenceFailure("make_logistic_problem: line search failed at gradient norm " +
                                     std::to_string(norm2(grad)));
        grad = average(cur.gradients);
    }

    p.w_star = w;
    p.local_gradients = cur.gradients;
    for (auto& h : cur.hessians) p.H.emplace_back(std::move(h));

    const double m = opt.M;
    const double beta = (m * m + 2.0 * m) / 16.0 + opt.rho * m / 2.0 + opt.rho * opt.rho;
    p.beta_sq.assign(static_cast<std::size_t>(opt.K), beta);
    for (int k = 0; k < p.K; ++k)
        p.S.push_back(estimate_noise_covariance(p, k, p.w_star, opt.noise_cov_samples, opt.seed));
    finalize_constants(p);
    return p;
}

}  // namespace adnet
