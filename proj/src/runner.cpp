#include "adnet/runner.hpp"

#include <algorithm>
#include <charconv>
#include <cstdlib>
#include <fstream>
#include <set>
#include <sstream>

#include <fmt/format.h>
#include <json.hpp>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "adnet/errors.hpp"

namespace adnet {

namespace {

using Entries = std::map<std::string, std::string>;

const std::set<std::string, std::less<>> kKnownKeys = {
    "topology.kind", "topology.K", "topology.weights", "topology.edge_probability",
    "topology.seed", "problem.family", "problem.M", "problem.seed", "problem.lambda_range",
    "problem.noise_var", "problem.zero_bias", "problem.rho", "problem.eval_sample_count",
    "problem.noise_cov_samples", "problem.deterministic", "methods", "mu",
    "experiment.iterations", "experiment.runs", "experiment.seed",
    "experiment.window_fraction", "experiment.threads", "experiment.emit_theory",
    "output.csv", "output.summary"};

std::string trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> split_list(std::string_view s) {
    std::vector<std::string> out;
    std::string cur;
    for (char ch : s) {
        if (ch == ',' || ch == ' ' || ch == '\t') {
            if (!cur.empty()) out.push_back(std::move(cur));
            cur.clear();
        } else {
            cur.push_back(ch);
        }
    }
    if (!cur.empty()) out.push_back(std::move(cur));
    return out;
}

const std::string* find(const Entries& e, const std::string& key) {
    const auto it = e.find(key);
    return it == e.end() ? nullptr : &it->second;
}

const std::string& require(const Entries& e, const std::string& key) {
    const std::string* v = find(e, key);
    if (!v) throw ParseError("missing required config key '" + key + "'");
    return *v;
}

template <class T>
T parse_number(const std::string& key, const std::string& text) {
    T value{};
    const char* first = text.data();
    const char* last = text.data() + text.size();
    const auto [ptr, ec] = std::from_chars(first, last, value);
    if (ec != std::errc() || ptr != last)
        throw ParseError("config key '" + key + "': cannot parse '" + text + "'");
    return value;
}

bool parse_bool(const std::string& key, const std::string& text) {
    if (text == "true" || text == "1" || text == "yes") return true;
    if (text == "false" || text == "0" || text == "no") return false;
    throw ParseError("config key '" + key + "': expected a boolean, got '" + text + "'");
}

template <class T>
T get_number(const Entries& e, const std::string& key, T fallback) {
    const std::string* v = find(e, key);
    return v ? parse_number<T>(key, *v) : fallback;
}

bool get_bool(const Entries& e, const std::string& key, bool fallback) {
    const std::string* v = find(e, key);
    return v ? parse_bool(key, *v) : fallback;
}

// Re-throws library validation errors as configuration errors naming the key.
template <class Fn>
auto with_key(const std::string& key, Fn&& fn) {
    try {
        return fn();
    } catch (const InvalidInput& ex) {
        throw ParseError("config key '" + key + "': " + ex.what());
    }
}

nlohmann::json steady_json(const MethodResult& m) {
    nlohmann::json j;
    j["mu"] = m.config.mu;
    j["msd_theory_db"] = m.msd_theory_db;
    if (m.steady) {
        j["steady_state_db"] = m.steady->mean_db;
        j["stderr_db"] = m.steady->std_err_db;
        j["steady_state"] = m.steady->mean;
        j["non_stationary"] = m.steady->non_stationary;
    } else {
        j["steady_state_db"] = nullptr;
        j["stderr_db"] = nullptr;
    }
    j["diverged_at"] = m.diverged_at ? nlohmann::json(*m.diverged_at) : nlohmann::json(nullptr);
    return j;
}

nlohmann::json theory_to_json(const TheoryReport& t) {
    nlohmann::json j;
    j["msd_theory"] = t.msd_theory;
    j["msd_theory_db"] = t.msd_theory_db;
    j["lambda"] = t.lambda;
    j["gap"] = t.gap;
    j["nu"] = t.nu;
    j["delta"] = t.delta;
    j["sigma_sq"] = t.sigma_sq;
    j["b_sq"] = t.b_sq;
    j["beta_max_sq"] = t.beta_max_sq;
    j["proxy_gradient_norm"] = t.proxy_gradient_norm;
    j["mu_bound_ed"] = t.ranges.mu_bound_ed;
    j["mu_bound_d"] = t.ranges.mu_bound_d;
    j["mu_bounds_full_form"] = t.ranges.full_form;
    j["bound_ed"] = t.bounds.bound_ed;
    j["bound_d"] = t.bounds.bound_d;
    j["regime"] = {{"winner", std::string(to_string(t.regime.winner))},
                   {"row", t.regime.row()},
                   {"dense_threshold", t.regime.dense_threshold},
                   {"bias_threshold", t.regime.bias_threshold},
                   {"small_mu_threshold", t.regime.small_mu_threshold}};
    if (t.decomposition) {
        const auto& d = *t.decomposition;
        j["decomposition"] = {{"c1", d.c1},
                              {"c2", d.c2},
                              {"c", d.c},
                              {"max_d1_magnitude",
                               *std::max_element(d.d1_magnitudes.begin(), d.d1_magnitudes.end())},
                              {"residual", d.residual}};
    }
    return j;
}

}  // namespace

ExperimentConfig parse_config(const Entries& e) {
    for (const auto& [key, value] : e) {
        if (kKnownKeys.contains(key)) continue;
        if (key.starts_with("mu.")) {
            with_key(key, [&] { return parse_method(key.substr(3)); });
            continue;
        }
        throw ParseError("unknown config key '" + key + "'");
    }

    ExperimentConfig c;
    c.entries = e;

    auto& t = c.topology;
    t.kind = with_key("topology.kind", [&] { return parse_topology_kind(require(e, "topology.kind")); });
    t.K = parse_number<int>("topology.K", require(e, "topology.K"));
    if (t.K < 1) throw ParseError("config key 'topology.K': must be at least 1");
    if (const auto* w = find(e, "topology.weights")) t.weights = *w;
    if (t.weights != "metropolis" && t.weights != "uniform")
        throw ParseError("config key 'topology.weights': expected metropolis or uniform, got '" +
                         t.weights + "'");
    if (find(e, "topology.edge_probability"))
        t.edge_probability = get_number<double>(e, "topology.edge_probability", 0.0);
    t.seed = get_number<std::uint64_t>(e, "topology.seed", 0);

    c.seed = get_number<std::uint64_t>(e, "experiment.seed", 0);
    c.iterations = parse_number<long>("experiment.iterations", require(e, "experiment.iterations"));
    if (c.iterations < 1) throw ParseError("config key 'experiment.iterations': must be at least 1");
    c.runs = get_number<int>(e, "experiment.runs", 50);
    if (c.runs < 1) throw ParseError("config key 'experiment.runs': must be at least 1");
    c.window_fraction = get_number<double>(e, "experiment.window_fraction", 0.1);
    if (!(c.window_fraction > 0.0 && c.window_fraction <= 0.5))
        throw ParseError("config key 'experiment.window_fraction': must lie in (0, 0.5]");
    c.threads = get_number<int>(e, "experiment.threads", 0);
    c.emit_theory = get_bool(e, "experiment.emit_theory", true);

    auto& p = c.problem;
    p.family = with_key("problem.family", [&] { return parse_family(require(e, "problem.family")); });
    p.M = get_number<int>(e, "problem.M", p.family == Family::logistic ? 20 : 10);
    if (p.M < 1) throw ParseError("config key 'problem.M': must be at least 1");
    p.seed = get_number<std::uint64_t>(e, "problem.seed", c.seed);
    if (const auto* lr = find(e, "problem.lambda_range")) {
        const auto parts = split_list(*lr);
        if (parts.size() != 2)
            throw ParseError("config key 'problem.lambda_range': expected two numbers 'lo, hi'");
        p.lambda_range = {parse_number<double>("problem.lambda_range", parts[0]),
                          parse_number<double>("problem.lambda_range", parts[1])};
    }
    p.noise_var = get_number<double>(e, "problem.noise_var", 0.1);
    p.zero_bias = get_bool(e, "problem.zero_bias", false);
    p.rho = get_number<double>(e, "problem.rho", 0.001);
    p.eval_sample_count = get_number<std::size_t>(e, "problem.eval_sample_count", 200'000);
    p.noise_cov_samples = get_number<std::size_t>(e, "problem.noise_cov_samples", 0);
    p.deterministic = get_bool(e, "problem.deterministic", false);

    const auto names = split_list(require(e, "methods"));
    if (names.empty()) throw ParseError("config key 'methods': at least one method is required");
    const std::string* base_mu = find(e, "mu");
    std::set<Method> seen;
    for (const auto& name : names) {
        AlgorithmConfig a;
        a.method = with_key("methods", [&] { return parse_method(name); });
        if (!seen.insert(a.method).second)
            throw ParseError("config key 'methods': '" + name + "' listed twice");
        const std::string key = "mu." + name;
        if (const auto* m = find(e, key))
            a.mu = parse_number<double>(key, *m);
        else if (base_mu)
            a.mu = parse_number<double>("mu", *base_mu);
        else
            throw ParseError("missing required config key 'mu'");
        if (!(a.mu > 0.0)) throw ParseError("config key '" + key + "': step-size must be positive");
        a.iterations = c.iterations;
        a.deterministic = p.deterministic;
        c.methods.push_back(a);
    }
    c.mu = base_mu ? parse_number<double>("mu", *base_mu) : c.methods.front().mu;

    if (const auto* v = find(e, "output.csv")) c.csv_path = *v;
    if (const auto* v = find(e, "output.summary")) c.summary_path = *v;
    return c;
}

ExperimentConfig parse_config(std::string_view text) {
    Entries e;
    std::istringstream in{std::string(text)};
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        const std::string body = trim(line);
        if (body.empty()) continue;
        const auto eq = body.find('=');
        if (eq == std::string::npos)
            throw ParseError("config line " + std::to_string(lineno) + ": expected 'key = value'");
        const std::string key = trim(std::string_view(body).substr(0, eq));
        const std::string value = trim(std::string_view(body).substr(eq + 1));
        if (key.empty()) throw ParseError("config line " + std::to_string(lineno) + ": empty key");
        if (!e.emplace(key, value).second) throw ParseError("duplicate config key '" + key + "'");
    }
    return parse_config(e);
}

ExperimentConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open config file '" + path.string() + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str());
}

ExperimentConfig with_override(const ExperimentConfig& cfg, const std::string& key,
                               const std::string& value) {
    Entries e = cfg.entries;
    e[key] = value;
    return parse_config(e);
}

std::string config_digest(const ExperimentConfig& cfg) {
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (const auto& [key, value] : cfg.entries) {
        for (char ch : key + "=" + value + "\n") {
            h ^= static_cast<unsigned char>(ch);
            h *= 0x100000001b3ull;
        }
    }
    return fmt::format("{:016x}", h);
}

int default_threads() {
    if (const char* env = std::getenv("ADNET_THREADS")) {
        int n = 0;
        const std::string_view s(env);
        const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), n);
        if (ec == std::errc() && ptr == s.data() + s.size() && n > 0) return n;
    }
#ifdef _OPENMP
    return omp_get_max_threads();
#else
    return 1;
#endif
}

Graph build_topology(const TopologyConfig& t) {
    return build_graph(t.kind, t.K, t.edge_probability, t.seed);
}

CombinationMatrix build_combination(const TopologyConfig& t, const Graph& g) {
    return t.weights == "uniform" ? uniform_weights(g) : metropolis_weights(g);
}

ProblemInstance build_problem(const ProblemConfig& p, int K) {
    if (p.family == Family::least_squares) {
        LsOptions o;
        o.K = K;
        o.M = p.M;
        o.seed = p.seed;
        o.lambda_range = p.lambda_range;
        o.noise_var = p.noise_var;
        o.zero_bias = p.zero_bias;
        o.deterministic = p.deterministic;
        if (p.noise_cov_samples) o.noise_cov_samples = p.noise_cov_samples;
        return make_ls_problem(o);
    }
    LogisticOptions o;
    o.K = K;
    o.M = p.M;
    o.seed = p.seed;
    o.rho = p.rho;
    o.eval_sample_count = p.eval_sample_count;
    o.zero_bias = p.zero_bias;
    o.deterministic = p.deterministic;
    if (p.noise_cov_samples) o.noise_cov_samples = p.noise_cov_samples;
    return make_logistic_problem(o);
}

bool ExperimentResult::any_diverged() const {
    return std::any_of(methods.begin(), methods.end(),
                       [](const MethodResult& m) { return m.diverged_at.has_value(); });
}

ExperimentResult execute(const ExperimentConfig& cfg, std::optional<int> threads) {
    ExperimentResult r;
    r.digest = config_digest(cfg);
    r.graph = build_topology(cfg.topology);
    r.combination = build_combination(cfg.topology, r.graph);
    r.problem = build_problem(cfg.problem, cfg.topology.K);
    r.theory = make_theory_report(r.problem, r.combination, cfg.mu);

    const std::size_t n_methods = cfg.methods.size();
    const auto length = static_cast<std::size_t>(cfg.iterations);
    const auto window =
        static_cast<std::size_t>(cfg.window_fraction * static_cast<double>(length));
    std::vector<MsdAccumulator> acc(n_methods, MsdAccumulator(length, length - window));
    std::vector<std::optional<long>> diverged(n_methods);
    r.sample_digests.assign(static_cast<std::size_t>(cfg.runs), 0);

    int width = threads.value_or(cfg.threads > 0 ? cfg.threads : default_threads());
    width = std::max(1, std::min(width, cfg.runs));

    std::exception_ptr failure;
#pragma omp parallel for schedule(static, 1) ordered num_threads(width)
    for (int run = 0; run < cfg.runs; ++run) {
        LockstepResult res;
        bool ok = true;
        try {
            res = run_lockstep(cfg.methods, r.problem, r.combination, cfg.seed,
                               static_cast<std::uint64_t>(run));
        } catch (...) {
            ok = false;
#pragma omp critical(adnet_failure)
            if (!failure) failure = std::current_exception();
        }
#pragma omp ordered
        {
            if (ok) {
                for (std::size_t m = 0; m < n_methods; ++m) {
                    acc[m].add(res.msd[m]);
                    if (res.diverged[m] && (!diverged[m] || *res.diverged[m] < *diverged[m]))
                        diverged[m] = res.diverged[m];
                }
                r.sample_digests[static_cast<std::size_t>(run)] = res.sample_digest;
            }
        }
    }
    if (failure) std::rethrow_exception(failure);

    for (std::size_t m = 0; m < n_methods; ++m) {
        MethodResult mr;
        mr.config = cfg.methods[m];
        mr.name = std::string(to_string(mr.config.method));
        mr.trajectory = acc[m].finish();
        mr.diverged_at = diverged[m];
        if (!mr.diverged_at) mr.steady = steady_state(mr.trajectory, cfg.window_fraction);
        mr.msd_theory_db = to_db(theoretical_msd(r.problem.H, r.problem.S, mr.config.mu, r.problem.K));
        r.methods.push_back(std::move(mr));
    }
    return r;
}

void write_csv(std::ostream& os, const ExperimentResult& r) {
    std::vector<NamedTrajectory> cols;
    for (const auto& m : r.methods) cols.push_back({m.name, &m.trajectory});
    write_csv(os, cols);
}

std::string theory_json(const TheoryReport& t) { return theory_to_json(t).dump(2); }

std::string summary_json(const ExperimentConfig& cfg, const ExperimentResult& r) {
    nlohmann::json j;
    j["config_digest"] = r.digest;
    j["lambda"] = r.theory.lambda;
    j["gap"] = r.theory.gap;
    j["nu"] = r.theory.nu;
    j["delta"] = r.theory.delta;
    j["b_sq"] = r.theory.b_sq;
    j["sigma_sq"] = r.theory.sigma_sq;
    j["msd_theory_db"] = r.theory.msd_theory_db;
    j["regime"] = std::string(to_string(r.theory.regime.winner));
    j["regime_row"] = r.theory.regime.row();
    j["runs"] = cfg.runs;
    j["iterations"] = cfg.iterations;
    nlohmann::json methods = nlohmann::json::object();
    for (const auto& m : r.methods) methods[m.name] = steady_json(m);
    j["methods"] = methods;
    if (cfg.emit_theory) j["theory"] = theory_to_json(r.theory);
    return j.dump(2) + "\n";
}

void write_outputs(const ExperimentConfig& cfg, const ExperimentResult& r) {
    if (!cfg.csv_path.empty()) {
        std::ofstream out(cfg.csv_path, std::ios::binary);
        if (!out) throw Error("cannot write '" + cfg.csv_path + "'");
        write_csv(out, r);
    }
    if (!cfg.summary_path.empty()) {
        std::ofstream out(cfg.summary_path, std::ios::binary);
        if (!out) throw Error("cannot write '" + cfg.summary_path + "'");
        out << summary_json(cfg, r);
    }
}

}  // namespace adnet
