// Builds the branch-diagonal value operation over a grid superposition and
// runs the per-axis inverse-QFT readout with coordinate-wise medians,
// orchestrating grid sizing, trimming, oracle conversion and query charges.

#pragma once

#include <Eigen/Dense>
#include <memory>
#include <optional>

#include "mvmc/grid.hpp"
#include "mvmc/mrp.hpp"
#include "mvmc/oracles.hpp"
#include "mvmc/qsim.hpp"

namespace mvmc {

struct EstimatorConfig {
    int d = 1;
    double p = kInf;       // norm of the accuracy guarantee
    double q = 2.0;        // reward norm index
    double eps = 0.1;      // absolute target on ||v - OV(s0)||_p
    double eps_rel = 0.1;  // eps / r_eff
    double r_max = 1.0;
    double r_eff = 1.0;    // R_max (exact-depth) or T_gamma R_max (otherwise)
    Depth T = Depth::finite(1);
    double gamma = 1.0;
    RewardSetting setting = RewardSetting::PathIndependent;

    int n = 1;             // bits per grid axis
    std::uint64_t M = 1;   // phase-accumulation applications
    int N = 1;             // median repetitions
    double r_bar = 0.0;    // effective-radius analytic bound at delta_prime

    double delta_total = 1.0 / 6.0;  // total operator-norm budget
    double delta_stage = 1.0 / 18.0; // per stage (conversion/build/fractional)
    double delta_op = 0.0;           // per application: delta_stage / M
    double delta_prime = 0.0;        // trimming quantile
    long long t_delta = 1;           // truncation depth (cum./path-indep.)

    OrthogonalMatrix rotation;
    CostModel cost;
};

// Derives every estimator quantity from the instance and the target
// precision.  eps is absolute; it must lie in (0, r_eff).
EstimatorConfig plan_estimator(const MrpInstance& inst, double p, double eps,
                               const OrthogonalMatrix& rotation,
                               const CostModel& cost);

struct CostBreakdown {
    OracleKind access_kind = OracleKind::Phase;
    std::uint64_t conv_charge = 1;      // base calls per derived lattice call
    std::uint64_t lattice_per_app = 1;  // derived lattice calls per application
    std::uint64_t dp_per_app = 0;       // D_P calls per application
    std::uint64_t kickback = 1;
    long long t_delta_factor = 1;
    double conv_leading = 1.0;
    double r_trim_q = 0.0;
    // Smooth power-law cores with polylog factors divided out; used by the
    // scaling fits.
    double deflated_reward = 1.0;
    double deflated_dp = 1.0;
};

struct ValueOracleHandle {
    const Grid* grid = nullptr;
    RewardSetting setting = RewardSetting::PathIndependent;
    Eigen::VectorXd v_target;  // (possibly truncated) value driving phases
    double scale = 1.0;        // 2 r_bar r_eff
    double delta_op = 0.0;
    bool injected = false;
    bool per_branch_jitter = false;
    std::uint64_t jitter_seed = 0;
    CostBreakdown costs;
    std::shared_ptr<QueryCounter> counter;

    double ideal_phase(std::uint64_t branch) const;
    double jitter(std::uint64_t branch) const;             // per-branch law
    double axis_jitter(int axis, std::uint64_t digit) const;  // separable law
    // Phase applied by a single application, jitter included.
    double applied_phase(std::uint64_t branch) const;
    void charge_applications(std::uint64_t apps) const;
};

// delta is the stage budget; the per-application budget divides it by M so
// that M consecutive applications stay within the stage allowance.
ValueOracleHandle build_value_oracle(const MrpInstance& inst, const Grid& grid,
                                     const TrimmedSet& trimmed, double delta,
                                     const EstimatorConfig& cfg,
                                     OracleKind access_kind,
                                     std::shared_ptr<QueryCounter> counter);

struct Estimate {
    Eigen::VectorXd v;       // estimate of O V(s0)
    Eigen::VectorXd target;  // O V(s0) from the exact oracle
    double err_p = 0.0;
    bool success = false;
    std::uint64_t M = 0;
    int N = 0;
    int n = 0;
    double eps = 0.0;
    double eps_rel = 0.0;
    double r_bar = 0.0;
    CostBreakdown costs;
    CounterSnapshot counts;
    double wall_ms = 0.0;
};

Estimate estimate_value(const ValueOracleHandle& handle,
                        const EstimatorConfig& cfg, std::uint64_t rng_seed);

// Expected counter values for one estimate_value run; the audit asserts the
// achieved counters equal this exactly.
CounterSnapshot expected_counters(const EstimatorConfig& cfg,
                                  const CostBreakdown& costs);

Estimate solve_mvmc(const MrpInstance& inst, double p, double eps,
                    const OrthogonalMatrix& rotation, OracleKind access_kind,
                    const CostModel& cost, std::uint64_t seed,
                    std::shared_ptr<QueryCounter> counter = nullptr);

}  // namespace mvmc
