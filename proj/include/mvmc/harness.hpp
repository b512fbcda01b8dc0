// Experiment harness: batch configuration, a deterministic parallel trial
// runner with per-trial derived seeds, CSV emission, log-log scaling fits,
// and standalone SVG plots.

#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "mvmc/fixtures.hpp"
#include "mvmc/json_io.hpp"
#include "mvmc/value_pipeline.hpp"

namespace mvmc {

// One experiment = a sweep over parameter combinations, each repeated for a
// number of independent trials.  The cartesian product of the list-valued
// fields defines the sweep grid.
struct ExperimentConfig {
    std::string name = "experiment";
    std::uint64_t master_seed = 1;
    int trials = 1;

    // Instance source: either a fixture family description swept over d, or
    // an explicit instance JSON file.
    std::string instance_file;                 // optional; wins if nonempty
    FixtureFamily family = FixtureFamily::SingleLoopPhase;
    std::vector<int> dims{1};
    std::vector<double> eps_values{0.1};
    std::vector<double> p_values{kInf};
    std::vector<double> q_values{2.0};
    double gamma = 1.0;
    std::vector<Depth> T_values{Depth::finite(1)};
    double r_max = 1.0;
    int k = 1;                                 // majority-parity family
    // Single-loop fixtures are path-independent by default; ExactDepth wraps
    // the same reward vector as a one-path depth-T payload for depth sweeps.
    RewardSetting setting = RewardSetting::PathIndependent;
    std::vector<OracleKind> access_kinds{OracleKind::Phase};
    std::string rotation = "identity";         // identity | random | hadamard
    CostModel cost;
    bool run_classical_baseline = false;
    double baseline_delta = 1.0 / 3.0;

    std::string out_csv;                       // empty = stdout
};

ExperimentConfig experiment_config_from_json(const json& j);
json experiment_config_to_json(const ExperimentConfig& cfg);
ExperimentConfig load_experiment_config(const std::string& path);

// One CSV row.  Wall-clock time is deliberately excluded so the file is
// byte-identical across runs; timing lives in the printed summary only.
struct TrialRecord {
    std::string family;
    std::string setting;
    int d = 0;
    double p = 0.0;
    double q = 0.0;
    double eps = 0.0;
    double t_horizon = 0.0;  // resolved horizon as a double (inf allowed)
    double gamma = 1.0;
    std::string access;
    int trial = 0;
    std::uint64_t seed = 0;
    int n = 0;
    std::uint64_t M = 0;
    int N = 0;
    double r_bar = 0.0;
    double err_p = 0.0;
    bool success = false;
    std::uint64_t q_transition = 0;
    std::uint64_t q_reward = 0;        // base reward-oracle calls
    std::uint64_t q_lattice = 0;       // derived lattice calls
    double deflated_reward = 1.0;
    double deflated_dp = 1.0;
    double classical_n = 0.0;          // baseline sample count (if run)
    double classical_err_p = 0.0;
    double wall_ms = 0.0;              // kept in memory, not in the CSV
};

struct ExperimentResult {
    std::vector<TrialRecord> records;
    double total_wall_ms = 0.0;
    int failures = 0;
};

// Runs every (sweep point, trial) pair.  Work is distributed over a worker
// pool (MVMC_WORKERS, default = hardware concurrency) but records are
// gathered in deterministic order and every trial's randomness derives only
// from (master_seed, global trial index).
ExperimentResult run_experiment(const ExperimentConfig& cfg);

std::string format_double(double v);           // shortest round-trip
std::string csv_escape(const std::string& s);  // RFC 4180 quoting
std::string records_to_csv(const std::vector<TrialRecord>& records);
void write_csv(const ExperimentConfig& cfg, const ExperimentResult& result);
std::vector<TrialRecord> records_from_csv(const std::string& path);

std::string summarize(const ExperimentConfig& cfg,
                      const ExperimentResult& result);

// Least-squares slope of log(y) against log(x) with matching-x aggregation
// (means over trials).  Throws InsufficientPoints below three distinct x.
struct FitResult {
    double slope = 0.0;
    double intercept = 0.0;
    double stderr_slope = 0.0;
    int points = 0;
};
FitResult fit_loglog(const std::vector<double>& x, const std::vector<double>& y);

// Query-count scaling against axis ∈ {"d", "eps", "T"}.  Counter names:
// "reward" / "transition" select the deflated power-law cores (polylog and
// constant factors divided out analytically, so slopes land on the model
// exponents); "q_reward" / "q_transition" / "q_lattice" fit the raw totals.
FitResult fit_scaling(const std::vector<TrialRecord>& records,
                      const std::string& axis, const std::string& counter);

// Deterministic standalone SVG.  Spec is "scaling:<axis>:<counter>" for a
// log-log scatter of per-x means with the fitted line, or "success" for a
// success-rate bar chart per sweep point.  Empty record sets render empty
// axes.
std::string render_plot(const std::vector<TrialRecord>& records,
                        const std::string& spec);

}  // namespace mvmc
