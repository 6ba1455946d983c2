#include <CLI11.hpp>
#include <fmt/format.h>

#include <filesystem>
#include <fstream>
#include <iostream>

#include "adnet/errors.hpp"
#include "adnet/runner.hpp"

namespace adnet {

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitNumeric = 2;

void print_topology(std::ostream& os, const Graph& g, const CombinationMatrix& c, bool dense) {
    os << fmt::format("kind = {}\n", to_string(g.kind));
    os << fmt::format("K = {}\n", g.K);
    os << fmt::format("edges = {}\n", g.edges.size());
    os << fmt::format("lambda2 = {:.12g}\n", c.lambda2);
    os << fmt::format("lambdaK = {:.12g}\n", c.lambdaK);
    os << fmt::format("lambda = {:.12g}\n", c.lambda);
    os << fmt::format("gap = {:.12g}\n", c.gap());
    if (!dense) return;
    const Matrix& a = c.A.dense();
    for (std::size_t i = 0; i < a.rows(); ++i) {
        std::string line;
        for (std::size_t j = 0; j < a.cols(); ++j)
            line += fmt::format("{}{:.12g}", j ? "," : "", a(i, j));
        os << line << '\n';
    }
}

void print_steady_states(std::ostream& os, const std::string& label, const ExperimentResult& r) {
    for (const auto& m : r.methods) {
        if (m.steady)
            os << fmt::format("{}\t{}\t{:.4f}\t{:.4f}\t{:.4f}\n", label, m.name, m.steady->mean_db,
                              m.steady->std_err_db, m.msd_theory_db);
        else
            os << fmt::format("{}\t{}\tdiverged at {}\n", label, m.name, *m.diverged_at);
    }
}

std::string sweep_path(const std::string& base, const std::string& key, const std::string& value,
                       const std::string& ext) {
    std::filesystem::path p(base.empty() ? "sweep" + ext : base);
    const std::string stem = p.stem().string() + "_" + key + "_" + value;
    return (p.parent_path() / (stem + ext)).string();
}

}  // namespace

int cli(int argc, char** argv) {
    CLI::App app{"Decentralized stochastic optimization simulator", "adnet"};
    app.require_subcommand(1);

    std::string config_path;
    std::optional<int> threads;
    std::string csv_override;
    std::string summary_override;

    auto* run_cmd = app.add_subcommand("run", "Simulate a configuration and write CSV + summary");
    run_cmd->add_option("config", config_path, "Config file")->required();
    run_cmd->add_option("--threads", threads, "Parallel Monte-Carlo width");
    run_cmd->add_option("--csv", csv_override, "CSV output path");
    run_cmd->add_option("--summary", summary_override, "Summary JSON output path");

    std::string kind;
    int K = 0;
    std::string weights = "metropolis";
    std::optional<double> p;
    std::uint64_t topo_seed = 0;
    bool dense = false;
    auto* topo_cmd = app.add_subcommand("topology", "Print the spectral report of a topology");
    topo_cmd->add_option("--kind", kind, "line|cycle|grid|complete|random")->required();
    topo_cmd->add_option("--K", K, "Number of agents")->required();
    topo_cmd->add_option("--weights", weights, "metropolis|uniform");
    topo_cmd->add_option("--p", p, "Edge probability for random graphs");
    topo_cmd->add_option("--seed", topo_seed, "Seed for random graphs");
    topo_cmd->add_flag("--dense", dense, "Also print the combination matrix as CSV");

    bool json = false;
    bool decomposition = false;
    auto* theory_cmd = app.add_subcommand("theory", "Print the theory report without simulating");
    theory_cmd->add_option("config", config_path, "Config file")->required();
    theory_cmd->add_flag("--json", json, "Emit JSON");
    theory_cmd->add_flag("--decomposition", decomposition,
                         "Include the fundamental decomposition constants");

    std::string vary;
    std::vector<std::string> values;
    std::string out_dir;
    auto* sweep_cmd = app.add_subcommand("sweep", "Repeat a configuration over a parameter grid");
    sweep_cmd->add_option("config", config_path, "Config file")->required();
    sweep_cmd->add_option("--vary", vary, "Parameter to vary")
        ->required()
        ->check(CLI::IsMember({"mu", "K"}));
    sweep_cmd->add_option("--values", values, "Values to try")->required()->delimiter(',');
    sweep_cmd->add_option("--threads", threads, "Parallel Monte-Carlo width");
    sweep_cmd->add_option("--out-dir", out_dir, "Directory for per-point outputs");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitUsage;
    }

    try {
        if (*topo_cmd) {
            TopologyConfig t;
            t.kind = parse_topology_kind(kind);
            t.K = K;
            t.weights = weights;
            t.edge_probability = p;
            t.seed = topo_seed;
            if (t.weights != "metropolis" && t.weights != "uniform")
                throw InvalidInput("unknown weight rule '" + t.weights + "'");
            const Graph g = build_topology(t);
            print_topology(std::cout, g, build_combination(t, g), dense);
            return kExitOk;
        }

        ExperimentConfig cfg = load_config(config_path);

        if (*theory_cmd) {
            const Graph g = build_topology(cfg.topology);
            const CombinationMatrix c = build_combination(cfg.topology, g);
            const ProblemInstance prob = build_problem(cfg.problem, cfg.topology.K);
            const TheoryReport t = make_theory_report(prob, c, cfg.mu, decomposition);
            if (json) {
                std::cout << theory_json(t) << '\n';
                return kExitOk;
            }
            std::cout << fmt::format("mu = {:.12g}\n", cfg.mu);
            std::cout << fmt::format("msd_theory = {:.12g}\n", t.msd_theory);
            std::cout << fmt::format("msd_theory_db = {:.6f}\n", t.msd_theory_db);
            std::cout << fmt::format("lambda = {:.12g}\ngap = {:.12g}\n", t.lambda, t.gap);
            std::cout << fmt::format("nu = {:.12g}\ndelta = {:.12g}\n", t.nu, t.delta);
            std::cout << fmt::format("sigma_sq = {:.12g}\nb_sq = {:.12g}\n", t.sigma_sq, t.b_sq);
            std::cout << fmt::format("beta_max_sq = {:.12g}\n", t.beta_max_sq);
            std::cout << fmt::format("proxy_gradient_norm = {:.3e}\n", t.proxy_gradient_norm);
            std::cout << fmt::format("mu_bound_ed = {:.12g}\nmu_bound_d = {:.12g}\n",
                                     t.ranges.mu_bound_ed, t.ranges.mu_bound_d);
            std::cout << fmt::format("bound_ed = {:.12g}\nbound_d = {:.12g}\n", t.bounds.bound_ed,
                                     t.bounds.bound_d);
            std::cout << fmt::format("regime = {}\nregime_row = {}\n", to_string(t.regime.winner),
                                     t.regime.row());
            if (t.decomposition)
                std::cout << fmt::format("c1 = {:.12g}\nc2 = {:.12g}\nresidual = {:.3e}\n",
                                         t.decomposition->c1, t.decomposition->c2,
                                         t.decomposition->residual);
            return kExitOk;
        }

        if (*run_cmd) {
            if (!csv_override.empty()) cfg.csv_path = csv_override;
            if (!summary_override.empty()) cfg.summary_path = summary_override;
            if (cfg.csv_path.empty()) cfg.csv_path = "msd.csv";
            if (cfg.summary_path.empty()) cfg.summary_path = "summary.json";
            const ExperimentResult r = execute(cfg, threads);
            write_outputs(cfg, r);
            print_steady_states(std::cout, "run", r);
            return r.any_diverged() ? kExitNumeric : kExitOk;
        }

        // sweep
        const std::string key = vary == "mu" ? "mu" : "topology.K";
        bool diverged = false;
        if (!out_dir.empty()) std::filesystem::create_directories(out_dir);
        std::cout << "point\tmethod\tsteady_state_db\tstderr_db\ttheory_db\n";
        for (const auto& v : values) {
            ExperimentConfig point = with_override(cfg, key, v);
            if (vary == "mu")
                for (const auto& m : point.methods) point.entries.erase("mu." + std::string(to_string(m.method)));
            point = parse_config(point.entries);
            const std::string base_csv =
                out_dir.empty() ? cfg.csv_path
                                : (std::filesystem::path(out_dir) /
                                   std::filesystem::path(cfg.csv_path.empty() ? "sweep.csv" : cfg.csv_path)
                                       .filename())
                                      .string();
            const std::string base_summary =
                out_dir.empty() ? cfg.summary_path
                                : (std::filesystem::path(out_dir) /
                                   std::filesystem::path(cfg.summary_path.empty() ? "sweep.json"
                                                                                  : cfg.summary_path)
                                       .filename())
                                      .string();
            point.csv_path = sweep_path(base_csv, vary, v, ".csv");
            point.summary_path = sweep_path(base_summary, vary, v, ".json");
            const ExperimentResult r = execute(point, threads);
            write_outputs(point, r);
            print_steady_states(std::cout, vary + "=" + v, r);
            diverged = diverged || r.any_diverged();
        }
        return diverged ? kExitNumeric : kExitOk;
    } catch (const ParseError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitUsage;
    } catch (const InvalidInput& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitUsage;
    } catch (const NumericFailure& e) {
        std::cerr << "numeric failure: " << e.what() << '\n';
        return kExitNumeric;
    } catch (const Error& e) {
        std::cerr << "numeric failure: " << e.what() << '\n';
        return kExitNumeric;
    }
}

}  // namespace adnet
