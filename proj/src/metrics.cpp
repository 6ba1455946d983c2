#include "adnet/metrics.hpp"

#include <cmath>
#include <fmt/format.h>
#include <numeric>
#include <string>

#include "adnet/errors.hpp"
#include "adnet/theory.hpp"

namespace adnet {

namespace {

constexpr double kStationarityDb = 1.0;
constexpr std::size_t kBatches = 10;

double mean_of(std::span<const double> v) {
    return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

double std_err_of(std::span<const double> v) {
    if (v.size() < 2) return 0.0;
    const double m = mean_of(v);
    double ss = 0.0;
    for (double x : v) ss += (x - m) * (x - m);
    return std::sqrt(ss / static_cast<double>(v.size() - 1) / static_cast<double>(v.size()));
}

}  // namespace

std::vector<double> MsdTrajectory::db() const {
    std::vector<double> out(mean.size());
    for (std::size_t i = 0; i < mean.size(); ++i) out[i] = to_db(mean[i]);
    return out;
}

MsdAccumulator::MsdAccumulator(std::size_t length, std::size_t tail_start)
    : length_(length), tail_start_(std::min(tail_start, length)), sum_(length, 0.0),
      sum_sq_(length, 0.0) {
    if (length == 0) throw InvalidInput("MsdAccumulator: series length must be positive");
}

void MsdAccumulator::add(std::span<const double> run) {
    if (run.size() != length_)
        throw InvalidInput("aggregate: series of length " + std::to_string(run.size()) +
                           " does not match " + std::to_string(length_));
    for (std::size_t i = 0; i < length_; ++i) {
        sum_[i] += run[i];
        sum_sq_[i] += run[i] * run[i];
    }
    tails_.emplace_back(run.begin() + static_cast<std::ptrdiff_t>(tail_start_), run.end());
    ++runs_;
}

MsdTrajectory MsdAccumulator::finish() const {
    if (runs_ == 0) throw InvalidInput("aggregate: at least one run is required");
    MsdTrajectory t;
    t.runs = runs_;
    t.mean.resize(length_);
    t.std_err.assign(length_, 0.0);
    const auto r = static_cast<double>(runs_);
    for (std::size_t i = 0; i < length_; ++i) {
        t.mean[i] = sum_[i] / r;
        if (runs_ > 1) {
            const double var = std::max(0.0, (sum_sq_[i] - r * t.mean[i] * t.mean[i]) / (r - 1.0));
            t.std_err[i] = std::sqrt(var / r);
        }
    }
    t.tails = tails_;
    t.tail_start = tail_start_;
    return t;
}

MsdTrajectory aggregate(std::span<const std::vector<double>> runs) {
    if (runs.empty()) throw InvalidInput("aggregate: at least one run is required");
    MsdAccumulator acc(runs.front().size(), 0);
    for (const auto& r : runs) acc.add(r);
    return acc.finish();
}

double std_err_db(double mean, double std_err) {
    if (!(mean > 0.0)) return 0.0;
    return 10.0 / std::log(10.0) * std_err / mean;
}

SteadyState steady_state(const MsdTrajectory& traj, double window_fraction) {
    if (!(window_fraction > 0.0 && window_fraction <= 0.5))
        throw InvalidInput("steady_state: window_fraction must lie in (0, 0.5]");
    const std::size_t n = traj.size();
    const auto window = static_cast<std::size_t>(std::floor(window_fraction * static_cast<double>(n)));
    if (window == 0) throw InvalidInput("steady_state: window is empty");
    const std::size_t start = n - window;
    if (start < traj.tail_start)
        throw InvalidInput("steady_state: window starts before the retained per-run tail");

    SteadyState s;
    s.window = window;
    const std::span<const double> w(traj.mean.data() + start, window);
    s.mean = mean_of(w);

    if (traj.runs > 1) {
        std::vector<double> run_means;
        for (const auto& tail : traj.tails)
            run_means.push_back(mean_of(std::span(tail).subspan(start - traj.tail_start)));
        s.std_err = std_err_of(run_means);
    } else if (window >= kBatches) {
        std::vector<double> batch;
        const std::size_t len = window / kBatches;
        for (std::size_t b = 0; b < kBatches; ++b) batch.push_back(mean_of(w.subspan(b * len, len)));
        s.std_err = std_err_of(batch);
    }

    const std::size_t half = window / 2;
    if (half > 0) {
        const double first = mean_of(w.subspan(0, half));
        const double second = mean_of(w.subspan(half));
        s.non_stationary = std::abs(to_db(first) - to_db(second)) > kStationarityDb;
    }
    s.mean_db = to_db(s.mean);
    s.std_err_db = std_err_db(s.mean, s.std_err);
    return s;
}

void write_csv(std::ostream& os, std::span<const NamedTrajectory> columns) {
    if (columns.empty()) throw InvalidInput("write_csv: no trajectories");
    const std::size_t n = columns.front().trajectory->size();
    for (const auto& c : columns)
        if (c.trajectory->size() != n) throw InvalidInput("write_csv: trajectories differ in length");

    std::string line = "iteration";
    for (const auto& c : columns) line += fmt::format(",{0}_msd_db,{0}_stderr_db", c.name);
    os << line << '\n';
    fmt::memory_buffer buf;
    for (std::size_t i = 0; i < n; ++i) {
        buf.clear();
        fmt::format_to(std::back_inserter(buf), "{}", i);
        for (const auto& c : columns) {
            const auto& t = *c.trajectory;
            fmt::format_to(std::back_inserter(buf), ",{:.6f},{:.6f}", to_db(t.mean[i]),
                           std_err_db(t.mean[i], t.std_err[i]));
        }
        buf.push_back('\n');
        os.write(buf.data(), static_cast<std::streamsize>(buf.size()));
    }
}

}  // namespace adnet
