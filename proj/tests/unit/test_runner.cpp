#include <doctest.h>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <json.hpp>
#include <sstream>
#include <string>
#include <sys/wait.h>

#include "adnet/errors.hpp"
#include "adnet/runner.hpp"

using namespace adnet;
namespace fs = std::filesystem;

namespace {

const char* kSmall = R"(# tiny LS run
topology.kind = cycle
topology.K = 4
problem.family = least_squares
problem.M = 2
problem.noise_cov_samples = 100000
methods = diffusion, exact_diffusion
mu = 0.02
experiment.iterations = 400
experiment.runs = 4
experiment.seed = 3
)";

std::string read_file(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

fs::path scratch(const std::string& name) {
    const fs::path d = fs::temp_directory_path() / "adnet_runner_tests";
    fs::create_directories(d);
    return d / name;
}

struct Output {
    int code;
    std::string out;
};

Output run_cli(const std::string& args) {
    const std::string cmd = std::string(ADNET_CLI_PATH) + " " + args + " 2>/dev/null";
    FILE* pipe = popen(cmd.c_str(), "r");
    REQUIRE(pipe != nullptr);
    std::string out;
    char buf[4096];
    while (std::size_t n = fread(buf, 1, sizeof buf, pipe)) out.append(buf, n);
    const int status = pclose(pipe);
    return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, out};
}

std::string parse_error(const std::string& text) {
    try {
        parse_config(text);
    } catch (const ParseError& e) {
        return e.what();
    }
    return {};
}

}  // namespace

TEST_CASE("config parsing") {
    const auto c = parse_config(kSmall);
    CHECK(c.topology.kind == TopologyKind::cycle);
    CHECK(c.topology.K == 4);
    CHECK(c.problem.M == 2);
    CHECK(c.problem.seed == 3);
    REQUIRE(c.methods.size() == 2);
    CHECK(c.methods[0].method == Method::diffusion);
    CHECK(c.methods[1].mu == 0.02);
    CHECK(c.methods[1].iterations == 400);
    CHECK(c.runs == 4);
    CHECK(c.window_fraction == 0.1);
    CHECK(c.emit_theory);

    const auto o = with_override(c, "mu.exact_diffusion", "0.01");
    CHECK(o.methods[0].mu == 0.02);
    CHECK(o.methods[1].mu == 0.01);
}

TEST_CASE("config errors name the key") {
    const std::string base(kSmall);
    CHECK(parse_error("topology.K = 4\n").find("topology.kind") != std::string::npos);
    CHECK(parse_error(base + "bogus.key = 1\n").find("bogus.key") != std::string::npos);
    CHECK(parse_error(base + "mu = 0.1\n").find("duplicate") != std::string::npos);
    CHECK(parse_error(base + "experiment.window_fraction = 0.9\n").find("window_fraction") != std::string::npos);
    CHECK(parse_error(base + "problem.zero_bias = maybe\n").find("problem.zero_bias") != std::string::npos);
    CHECK(parse_error(base + "mu.bogus = 0.1\n").find("mu.bogus") != std::string::npos);
    CHECK(parse_error(base + "topology.weights = heavy\n").find("topology.weights") != std::string::npos);
    CHECK(parse_error("this line has no equals sign\n").find("line 1") != std::string::npos);

    std::string twice = base;
    twice.replace(twice.find("methods = diffusion, exact_diffusion"), 36, "methods = diffusion, diffusion");
    CHECK(parse_error(twice).find("twice") != std::string::npos);
    std::string none = base;
    none.replace(none.find("methods = diffusion, exact_diffusion"), 36, "methods =");
    CHECK(parse_error(none).find("methods") != std::string::npos);
    std::string neg = base;
    neg.replace(neg.find("mu = 0.02"), 9, "mu = -0.1");
    CHECK(parse_error(neg).find("mu") != std::string::npos);
}

TEST_CASE("config digest depends only on content") {
    const auto a = parse_config(kSmall);
    const auto b = parse_config(std::string("\n\n# comment\n") + kSmall);
    CHECK(config_digest(a) == config_digest(b));
    CHECK(config_digest(a).size() == 16);
    CHECK(config_digest(with_override(a, "experiment.seed", "4")) != config_digest(a));
}

TEST_CASE("execute is deterministic and independent of thread count") {
    const auto c = parse_config(kSmall);
    const auto one = execute(c, 1);
    const auto four = execute(c, 4);
    REQUIRE(one.methods.size() == 2);
    for (std::size_t m = 0; m < 2; ++m) CHECK(one.methods[m].trajectory.mean == four.methods[m].trajectory.mean);
    CHECK(one.sample_digests == four.sample_digests);
    std::ostringstream a, b;
    write_csv(a, one);
    write_csv(b, four);
    CHECK(a.str() == b.str());

    const auto j = nlohmann::json::parse(summary_json(c, one));
    CHECK(j["config_digest"] == config_digest(c));
    CHECK(j["methods"].contains("diffusion"));
    CHECK(j["methods"]["exact_diffusion"]["steady_state_db"].is_number());
    CHECK(j["theory"]["msd_theory_db"].get<double>() == doctest::Approx(one.theory.msd_theory_db));
    CHECK_FALSE(one.any_diverged());
}

TEST_CASE("CLI exit codes and output") {
    SUBCASE("help") { CHECK(run_cli("--help").code == 0); }
    SUBCASE("missing config file") { CHECK(run_cli("run /nonexistent/none.cfg").code == 1); }
    SUBCASE("zero methods") {
        const auto p = scratch("empty_methods.cfg");
        std::string text(kSmall);
        text.replace(text.find("methods = diffusion, exact_diffusion"), 36, "methods =");
        std::ofstream(p) << text;
        CHECK(run_cli("run " + p.string()).code == 1);
    }
    SUBCASE("divergence") {
        const auto p = scratch("diverge.cfg");
        std::ofstream(p) << kSmall << "mu.diffusion = 5\n";
        const auto r = run_cli("run " + p.string() + " --threads 2 --csv " + scratch("d.csv").string() +
                               " --summary " + scratch("d.json").string());
        CHECK(r.code == 2);
    }
    SUBCASE("topology") {
        const auto r = run_cli("topology --kind cycle --K 4");
        CHECK(r.code == 0);
        CHECK(r.out.find("lambda") != std::string::npos);
        CHECK(run_cli("topology --kind cycle --K 0").code == 1);
        CHECK(run_cli("topology --kind wheel --K 4").code == 1);
    }
    SUBCASE("theory") {
        const auto p = scratch("theory.cfg");
        std::ofstream(p) << kSmall;
        const auto r = run_cli("theory " + p.string() + " --json");
        REQUIRE(r.code == 0);
        const auto j = nlohmann::json::parse(r.out);
        CHECK(j.contains("mu_bound_ed"));
    }
}

TEST_CASE("CLI rerun writes byte-identical CSV") {
    const auto p = scratch("rerun.cfg");
    std::ofstream(p) << kSmall;
    const auto a = scratch("a.csv"), b = scratch("b.csv");
    REQUIRE(run_cli("run " + p.string() + " --threads 1 --csv " + a.string() + " --summary " +
                    scratch("a.json").string()).code == 0);
    REQUIRE(run_cli("run " + p.string() + " --threads 3 --csv " + b.string() + " --summary " +
                    scratch("b.json").string()).code == 0);
    const auto ca = read_file(a);
    CHECK(ca.size() > 1000);
    CHECK(ca == read_file(b));
    CHECK(read_file(scratch("a.json")) == read_file(scratch("b.json")));
}

TEST_CASE("CLI sweep writes one file per value") {
    const auto p = scratch("sweep.cfg");
    std::ofstream(p) << kSmall;
    const auto dir = scratch("sweep_out");
    fs::remove_all(dir);
    const auto r = run_cli("sweep " + p.string() + " --vary mu --values 0.01,0.02 --out-dir " + dir.string());
    CHECK(r.code == 0);
    int csvs = 0;
    if (fs::exists(dir))
        for (const auto& e : fs::directory_iterator(dir)) csvs += e.path().extension() == ".csv";
    CHECK(csvs == 2);
}
