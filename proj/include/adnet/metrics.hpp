#pragma once

// Monte-Carlo aggregation of per-run MSD series and steady-state estimates.

#include <cstddef>
#include <ostream>
#include <span>
#include <string>
#include <vector>

namespace adnet {

struct MsdTrajectory {
    std::vector<double> mean;     // per iteration, averaged over runs
    std::vector<double> std_err;  // per iteration, standard error of the mean
    std::size_t runs = 0;
    // Per-run values from iteration `tail_start` on, kept for window statistics.
    std::vector<std::vector<double>> tails;
    std::size_t tail_start = 0;

    std::size_t size() const noexcept { return mean.size(); }
    std::vector<double> db() const;
};

/// Elementwise mean and standard error. Throws InvalidInput on ragged or
/// empty input.
MsdTrajectory aggregate(std::span<const std::vector<double>> runs);

/// Streaming version of `aggregate` that only retains per-run values from
/// `tail_start` on. Runs must be added in a fixed order for reproducible sums.
class MsdAccumulator {
public:
    MsdAccumulator(std::size_t length, std::size_t tail_start);
    void add(std::span<const double> run);
    MsdTrajectory finish() const;

private:
    std::size_t length_;
    std::size_t tail_start_;
    std::size_t runs_ = 0;
    std::vector<double> sum_;
    std::vector<double> sum_sq_;
    std::vector<std::vector<double>> tails_;
};

struct SteadyState {
    double mean = 0.0;
    double std_err = 0.0;
    double mean_db = 0.0;
    double std_err_db = 0.0;
    bool non_stationary = false;  // window halves differ by more than 1 dB
    std::size_t window = 0;
};

/// Mean over the trailing `window_fraction` of iterations. The standard error
/// comes from the spread of per-run window means, or from ten batch means of
/// the window when there is a single run.
SteadyState steady_state(const MsdTrajectory& traj, double window_fraction);

/// Convert a linear standard error to dB around `mean`.
double std_err_db(double mean, double std_err);

struct NamedTrajectory {
    std::string name;
    const MsdTrajectory* trajectory;
};

/// Columns `iteration, <name>_msd_db, <name>_stderr_db` per trajectory.
void write_csv(std::ostream& os, std::span<const NamedTrajectory> columns);

}  // namespace adnet
