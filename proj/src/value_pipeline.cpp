#include "mvmc/value_pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>

namespace mvmc {

namespace {

double xi_exponent(OracleKind access, double q) {
    const double inv_q = std::isinf(q) ? 0.0 : 1.0 / q;
    switch (access) {
        case OracleKind::Phase: return 1.0;
        case OracleKind::Probability: return 1.0 - 0.5 * inv_q;
        case OracleKind::Distribution:
        case OracleKind::Lattice: return 1.0 - inv_q;
        default: throw MvmcError("not a reward access kind");
    }
}

}  // namespace

EstimatorConfig plan_estimator(const MrpInstance& inst, double p, double eps,
                               const OrthogonalMatrix& rotation,
                               const CostModel& cost) {
    inst.validate();
    const RewardSpec& r = inst.rewards;
    EstimatorConfig cfg;
    cfg.d = r.d;
    cfg.p = p;
    cfg.q = r.q;
    cfg.r_max = r.r_max;
    cfg.T = inst.T;
    cfg.gamma = r.gamma;
    cfg.setting = r.setting;
    cfg.rotation = rotation;
    cfg.cost = cost;

    const bool horizon_weighted = r.setting != RewardSetting::ExactDepth;
    cfg.r_eff = horizon_weighted ? discount_sum(inst.T, r.gamma) * r.r_max
                                 : r.r_max;
    cfg.eps = eps;
    cfg.eps_rel = eps / cfg.r_eff;
    if (!(cfg.eps_rel > 0.0) || cfg.eps_rel >= 1.0)
        throw ParameterOutOfRange(
            "precision must satisfy 0 < eps < r_eff");

    cfg.n = grid_bits(cfg.d, p, cfg.eps_rel);
    cfg.delta_stage = cfg.delta_total / 3.0;
    cfg.t_delta = horizon_weighted
                      ? truncation_depth(inst.T, r.gamma, cfg.delta_stage)
                      : 1;
    const double td = static_cast<double>(std::max<long long>(cfg.t_delta, 1));
    cfg.delta_prime = std::min(cfg.delta_stage * cfg.delta_stage / 16.0,
                               (cfg.delta_stage / td) * (cfg.delta_stage / td));
    cfg.r_bar = radius_bounds(cfg.d, cfg.q, cfg.delta_prime).second;
    cfg.M = static_cast<std::uint64_t>(std::ceil(
        32.0 * M_PI * cfg.r_bar * dim_power(cfg.d, p) / cfg.eps_rel));
    cfg.N = static_cast<int>(std::ceil(18.0 * std::log(6.0 * cfg.d)));
    cfg.delta_op = cfg.delta_stage / static_cast<double>(cfg.M);
    return cfg;
}

double ValueOracleHandle::ideal_phase(std::uint64_t branch) const {
    return grid->point(branch).dot(v_target) / scale;
}

double ValueOracleHandle::jitter(std::uint64_t branch) const {
    if (!injected) return 0.0;
    CounterRng rng(jitter_seed, 0x6a697474ULL, branch);
    return rng.uniform(-delta_op, delta_op);
}

double ValueOracleHandle::axis_jitter(int axis, std::uint64_t digit) const {
    if (!injected) return 0.0;
    CounterRng rng(jitter_seed, 0x61786a74ULL + static_cast<std::uint64_t>(axis),
                   digit);
    const double per_axis = delta_op / static_cast<double>(grid->d);
    return rng.uniform(-per_axis, per_axis);
}

double ValueOracleHandle::applied_phase(std::uint64_t branch) const {
    double ph = ideal_phase(branch);
    if (!injected) return ph;
    if (per_branch_jitter) return ph + jitter(branch);
    for (int j = 0; j < grid->d; ++j)
        ph += axis_jitter(j, grid->axis_digit(branch, j));
    return ph;
}

void ValueOracleHandle::charge_applications(std::uint64_t apps) const {
    if (!counter) return;
    counter->add(CounterKind::ValueOracle, apps);
    counter->add(CounterKind::Transition, apps * costs.dp_per_app);
    counter->add(CounterKind::DerivedLattice, apps * costs.lattice_per_app);
    CounterKind base;
    switch (costs.access_kind) {
        case OracleKind::Phase: base = CounterKind::PhaseReward; break;
        case OracleKind::Probability: base = CounterKind::ProbabilityReward; break;
        case OracleKind::Distribution: base = CounterKind::DistributionReward; break;
        case OracleKind::Lattice: base = CounterKind::LatticeReward; break;
        default: throw MvmcError("not a reward access kind");
    }
    counter->add(base, apps * costs.lattice_per_app * costs.conv_charge);
}

ValueOracleHandle build_value_oracle(const MrpInstance& inst, const Grid& grid,
                                     const TrimmedSet& trimmed, double delta,
                                     const EstimatorConfig& cfg,
                                     OracleKind access_kind,
                                     std::shared_ptr<QueryCounter> counter) {
    if (delta <= 0.0) throw NonpositiveDelta("stage budget must be positive");
    if (!std::isnan(trimmed.retained_fraction) &&
        trimmed.retained_fraction < 1.0 - cfg.delta_prime - 1e-12)
        throw TrimTooAggressive("trimmed set retains too few points");
    if (inst.rewards.setting == RewardSetting::ExactDepth) {
        const double paths = std::pow(static_cast<double>(inst.n_states()),
                                      static_cast<double>(inst.T.value() + 1));
        if (paths > 16384.0)
            throw DepthOverflow("exact-depth path register exceeds 2^14");
    }

    ValueOracleHandle h;
    h.grid = &grid;
    h.setting = inst.rewards.setting;
    h.scale = 2.0 * cfg.r_bar * cfg.r_eff;
    h.delta_op = delta / static_cast<double>(cfg.M);
    h.injected = cfg.cost.injected_error;
    h.per_branch_jitter =
        static_cast<std::uint64_t>(grid.n) * grid.d <= 14;
    h.counter = std::move(counter);

    // Phases are driven by the truncated value in the horizon-weighted
    // settings; truncation error is within delta * R_max / 2 of V(s0).
    if (inst.rewards.setting == RewardSetting::ExactDepth)
        h.v_target = exact_value(inst);
    else
        h.v_target = exact_value(inst, cfg.t_delta);

    CostBreakdown& c = h.costs;
    c.access_kind = access_kind;
    const double kappa_op = cfg.cost.kappa(h.delta_op);
    c.kickback = static_cast<std::uint64_t>(std::ceil(kappa_op));
    c.t_delta_factor =
        inst.rewards.setting == RewardSetting::ExactDepth ? 1 : cfg.t_delta;

    // r(q) of the trimmed set: exact on enumerable grids, else the quantile
    // identity evaluated through the analytic bound.
    bool from_bound = false;
    c.r_trim_q =
        approximate_radius(grid, cfg.q, cfg.delta_prime / 2.0, &from_bound);

    // Derived lattice calls per application.
    const std::uint64_t lat_base = static_cast<std::uint64_t>(std::ceil(
        cfg.cost.c1 * (c.r_trim_q / cfg.r_bar) * kappa_op));
    c.lattice_per_app =
        lat_base * static_cast<std::uint64_t>(std::max<long long>(
                       c.t_delta_factor, 1));

    // D_P calls per application (kickback polylog included).
    std::uint64_t dp_core;
    if (inst.rewards.setting == RewardSetting::ExactDepth) {
        dp_core = static_cast<std::uint64_t>(inst.T.value());
    } else {
        const auto td = static_cast<std::uint64_t>(cfg.t_delta);
        dp_core = td * (td + 1) / 2;
    }
    c.dp_per_app = dp_core * c.kickback;

    // Conversion charge per derived lattice call.
    if (access_kind == OracleKind::Lattice) {
        c.conv_leading = 1.0;
        c.conv_charge = 1;
    } else {
        LatticeSpec spec;
        spec.grid = &grid;
        spec.q = cfg.q;
        const double half_dp = cfg.delta_prime / 2.0;
        spec.r_q = approximate_radius(grid, cfg.q, half_dp);
        spec.r_inf = approximate_radius(grid, kInf, half_dp);
        spec.r_1 = approximate_radius(grid, 1.0, half_dp);
        c.conv_leading =
            conversion_leading_factor(access_kind, OracleKind::Lattice, &spec);
        c.conv_charge = static_cast<std::uint64_t>(
            std::ceil(cfg.cost.c1 * c.conv_leading * kappa_op));
    }

    // Smooth cores for the scaling fits: the d / eps / horizon power factors
    // of the exact integer charges, with all polylog terms divided out.
    const double dd = static_cast<double>(cfg.d);
    const double tstar = effective_depth(cfg.T, cfg.gamma);
    const bool horizon_weighted =
        inst.rewards.setting != RewardSetting::ExactDepth;
    const double t_core_r = horizon_weighted ? tstar : 1.0;
    const double t_core_dp = horizon_weighted
                                 ? tstar * tstar
                                 : static_cast<double>(inst.T.value());
    c.deflated_reward = std::pow(dd, (std::isinf(cfg.p) ? 0.0 : 1.0 / cfg.p) +
                                         xi_exponent(access_kind, cfg.q)) *
                        (1.0 / cfg.eps_rel) * t_core_r;
    c.deflated_dp =
        std::pow(dd, (std::isinf(cfg.p) ? 0.0 : 1.0 / cfg.p) +
                         std::max(0.0, 0.5 - (std::isinf(cfg.q)
                                                  ? 0.0
                                                  : 1.0 / cfg.q))) *
        (1.0 / cfg.eps_rel) * t_core_dp;
    return h;
}

CounterSnapshot expected_counters(const EstimatorConfig& cfg,
                                  const CostBreakdown& costs) {
    CounterSnapshot s;
    const std::uint64_t apps = cfg.M * static_cast<std::uint64_t>(cfg.N);
    s.value_oracle = apps;
    s.transition = apps * costs.dp_per_app;
    s.derived_lattice = apps * costs.lattice_per_app;
    const std::uint64_t base = apps * costs.lattice_per_app * costs.conv_charge;
    switch (costs.access_kind) {
        case OracleKind::Phase: s.phase = base; break;
        case OracleKind::Probability: s.probability = base; break;
        case OracleKind::Distribution: s.distribution = base; break;
        case OracleKind::Lattice: s.lattice = base; break;
        default: break;
    }
    return s;
}

Estimate estimate_value(const ValueOracleHandle& handle,
                        const EstimatorConfig& cfg, std::uint64_t rng_seed) {
    const auto t0 = std::chrono::steady_clock::now();
    const Grid& grid = *handle.grid;
    const int d = grid.d;
    const int n = grid.n;
    const std::uint64_t dim = std::uint64_t(1) << n;
    const double md = static_cast<double>(cfg.M);

    // Per-axis phase slopes k_j = M (OV)_j / (2 pi scale).
    const Eigen::VectorXd ov = grid.rotation.m * handle.v_target;
    Eigen::VectorXd slope(d);
    for (int j = 0; j < d; ++j) {
        slope(j) = md * ov(j) / (2.0 * M_PI * handle.scale);
        if (std::abs(slope(j)) > std::pow(2.0, n) / 3.0 + 1e-9)
            throw MvmcError("phase-slope magnitude bound violated");
    }

    const bool full_tensor = handle.injected && handle.per_branch_jitter;
    std::vector<std::vector<long long>> readings(
        static_cast<std::size_t>(d));
    for (auto& r : readings) r.reserve(static_cast<std::size_t>(cfg.N));

    for (int rep = 0; rep < cfg.N; ++rep) {
        CounterRng rng(rng_seed, 0x72656164ULL, static_cast<std::uint64_t>(rep));
        if (full_tensor) {
            RegisterLayout l;
            for (int j = 0; j < d; ++j) l.add("axis", dim);
            StateVector psi{l, std::vector<cplx>(
                                   static_cast<std::size_t>(grid.size()))};
            const double a0 =
                1.0 / std::sqrt(static_cast<double>(grid.size()));
            for (std::uint64_t i = 0; i < grid.size(); ++i) {
                double ph = md * handle.jitter(i);
                for (int j = 0; j < d; ++j)
                    ph += 2.0 * M_PI *
                          static_cast<double>(grid.axis_digit(i, j)) *
                          slope(j) / static_cast<double>(dim);
                psi.amp[static_cast<std::size_t>(i)] = std::polar(a0, ph);
            }
            for (int r = 0; r < d; ++r) inverse_qft(psi, static_cast<std::size_t>(r));
            // Sample the joint outcome; flat index digits coincide with the
            // grid's axis digits.
            double u = rng.uniform();
            std::uint64_t outcome = grid.size() - 1;
            double acc = 0.0;
            for (std::uint64_t i = 0; i < grid.size(); ++i) {
                acc += std::norm(psi.amp[static_cast<std::size_t>(i)]);
                if (u < acc) {
                    outcome = i;
                    break;
                }
            }
            for (int j = 0; j < d; ++j)
                readings[static_cast<std::size_t>(j)].push_back(
                    interpret_signed(grid.axis_digit(outcome, j), n));
        } else {
            std::vector<cplx> axis(static_cast<std::size_t>(dim));
            for (int j = 0; j < d; ++j) {
                const double a0 = 1.0 / std::sqrt(static_cast<double>(dim));
                for (std::uint64_t m = 0; m < dim; ++m) {
                    double ph = 2.0 * M_PI * static_cast<double>(m) * slope(j) /
                                static_cast<double>(dim);
                    if (handle.injected) ph += md * handle.axis_jitter(j, m);
                    axis[static_cast<std::size_t>(m)] = std::polar(a0, ph);
                }
                inverse_dft(axis);
                double u = rng.uniform();
                std::uint64_t outcome = dim - 1;
                double acc = 0.0;
                for (std::uint64_t m = 0; m < dim; ++m) {
                    acc += std::norm(axis[static_cast<std::size_t>(m)]);
                    if (u < acc) {
                        outcome = m;
                        break;
                    }
                }
                readings[static_cast<std::size_t>(j)].push_back(
                    interpret_signed(outcome, n));
            }
        }
    }

    handle.charge_applications(cfg.M * static_cast<std::uint64_t>(cfg.N));

    Estimate est;
    est.v.resize(d);
    const double rescale = 2.0 * M_PI * handle.scale / md;  // = 4 pi rbar reff / M
    for (int j = 0; j < d; ++j) {
        auto& r = readings[static_cast<std::size_t>(j)];
        std::sort(r.begin(), r.end());
        const long long med = r[(r.size() - 1) / 2];  // lower median
        est.v(j) = rescale * static_cast<double>(med);
    }
    est.M = cfg.M;
    est.N = cfg.N;
    est.n = n;
    est.eps = cfg.eps;
    est.eps_rel = cfg.eps_rel;
    est.r_bar = cfg.r_bar;
    est.costs = handle.costs;
    if (handle.counter) est.counts = handle.counter->snapshot();
    est.wall_ms = std::chrono::duration<double, std::milli>(
                      std::chrono::steady_clock::now() - t0)
                      .count();
    return est;
}

Estimate solve_mvmc(const MrpInstance& inst, double p, double eps,
                    const OrthogonalMatrix& rotation, OracleKind access_kind,
                    const CostModel& cost, std::uint64_t seed,
                    std::shared_ptr<QueryCounter> counter) {
    if (access_kind == OracleKind::Transition)
        throw MvmcError("transition oracle is not a reward access kind");
    if (access_kind == OracleKind::Probability ||
        access_kind == OracleKind::Distribution) {
        // Amplitude encodings need entrywise nonnegative rewards.
        RewardFunction f = reward_function_of(
            inst, inst.rewards.setting == RewardSetting::CumulativeDepth
                      ? std::optional<long long>(0)
                      : std::nullopt);
        if (f.domain_size <= (std::uint64_t(1) << 16))
            for (std::uint64_t i = 0; i < f.domain_size; ++i)
                if (f.eval(i).minCoeff() < -1e-12)
                    throw NegativeRewardForAmplitudeOracle(
                        "amplitude access needs nonnegative rewards");
    }
    if (!counter) counter = std::make_shared<QueryCounter>();

    EstimatorConfig cfg = plan_estimator(inst, p, eps, rotation, cost);
    const Grid grid = make_grid(cfg.d, cfg.n, rotation);

    TrimmedSet trimmed;
    if (grid.enumerable(std::uint64_t(1) << 20)) {
        trimmed = trimmed_set(grid, cfg.q, cfg.delta_prime / 2.0);
    } else {
        trimmed.grid = &grid;
        trimmed.q = cfg.q;
        trimmed.delta = cfg.delta_prime / 2.0;
        trimmed.threshold =
            radius_bounds(cfg.d, cfg.q, cfg.delta_prime / 2.0).first;
        trimmed.retained_fraction = std::numeric_limits<double>::quiet_NaN();
    }

    ValueOracleHandle handle = build_value_oracle(
        inst, grid, trimmed, cfg.delta_stage, cfg, access_kind, counter);
    handle.jitter_seed = mix_seed(seed, 0x766f6a74ULL);

    Estimate est = estimate_value(handle, cfg, seed);
    est.target = rotation.m * exact_value(inst);
    est.err_p = lq_norm((est.v - est.target).eval(), p);
    est.success = est.err_p <= eps;
    return est;
}

}  // namespace mvmc
