#include "mvmc/oracles.hpp"

#include <cmath>

namespace mvmc {

std::string to_string(OracleKind k) {
    switch (k) {
        case OracleKind::Phase: return "phase";
        case OracleKind::Probability: return "probability";
        case OracleKind::Distribution: return "distribution";
        case OracleKind::Lattice: return "lattice";
        case OracleKind::Transition: return "transition";
    }
    return "?";
}

OracleKind oracle_kind_from_string(const std::string& s) {
    if (s == "phase") return OracleKind::Phase;
    if (s == "probability") return OracleKind::Probability;
    if (s == "distribution") return OracleKind::Distribution;
    if (s == "lattice") return OracleKind::Lattice;
    if (s == "transition") return OracleKind::Transition;
    throw ConfigInvalid("unknown oracle kind: " + s);
}

double CostModel::kappa(double delta) const {
    if (delta <= 0.0) throw NonpositiveDelta("cost kappa requires delta > 0");
    return 1.0 + c2 * std::log2(1.0 / delta);
}

RewardFunction reward_function_of(const MrpInstance& inst,
                                  std::optional<long long> depth) {
    const RewardSpec& r = inst.rewards;
    RewardFunction f;
    f.d = r.d;
    f.q = r.q;
    f.r_max = r.r_max;
    f.lo = Eigen::VectorXd::Constant(r.d, -r.r_max);
    f.hi = Eigen::VectorXd::Constant(r.d, r.r_max);
    const int S = inst.n_states();
    switch (r.setting) {
        case RewardSetting::PathIndependent:
            f.domain_size = static_cast<std::uint64_t>(S);
            f.eval = [&inst](std::uint64_t s) {
                return inst.rewards.state_rewards[static_cast<std::size_t>(s)];
            };
            break;
        case RewardSetting::ExactDepth: {
            const long long T = inst.T.value();
            double sz = std::pow(static_cast<double>(S),
                                 static_cast<double>(T + 1));
            if (sz > 4e6)
                throw DepthOverflow("exact-depth oracle domain too large");
            f.domain_size = static_cast<std::uint64_t>(sz + 0.5);
            f.eval = [&inst](std::uint64_t key) {
                auto it = inst.rewards.exact.find(key);
                if (it == inst.rewards.exact.end())
                    throw InconsistentRewardDomain("missing path reward");
                return it->second;
            };
            break;
        }
        case RewardSetting::CumulativeDepth: {
            if (!depth)
                throw MvmcError(
                    "cumulative reward oracle needs an explicit depth");
            const long long t = *depth;
            if (t < 0 || t >= static_cast<long long>(r.per_depth.size()))
                throw InconsistentRewardDomain("depth outside payload range");
            double sz = std::pow(static_cast<double>(S),
                                 static_cast<double>(t + 1));
            if (sz > 4e6)
                throw DepthOverflow("cumulative oracle domain too large");
            f.domain_size = static_cast<std::uint64_t>(sz + 0.5);
            f.eval = [&inst, t](std::uint64_t key) {
                const auto& layer =
                    inst.rewards.per_depth[static_cast<std::size_t>(t)];
                auto it = layer.find(key);
                if (it == layer.end())
                    throw InconsistentRewardDomain("missing prefix reward");
                return it->second;
            };
            break;
        }
    }
    return f;
}

LatticeSpec make_lattice_spec(const Grid& grid, double q) {
    LatticeSpec s;
    s.grid = &grid;
    s.q = q;
    s.r_q = radius(grid, q);
    s.r_inf = radius(grid, kInf);
    s.r_1 = radius(grid, 1.0);
    return s;
}

LatticeSpec make_lattice_spec(const Grid& grid, const TrimmedSet& set,
                              double q, double delta) {
    LatticeSpec s;
    s.grid = &grid;
    s.set = &set;
    s.q = q;
    if (grid.enumerable(std::uint64_t(1) << 20)) {
        s.r_q = set.radius(q);
        s.r_inf = set.radius(kInf);
        s.r_1 = set.radius(1.0);
    } else {
        // Quantile identity: the trimmed set's radius equals the quantile
        // radius, bounded analytically when the grid is not enumerable.
        s.r_q = radius_bounds(grid.d, q, delta).first;
        s.r_inf = radius_bounds(grid.d, kInf, delta).first;
        s.r_1 = radius_bounds(grid.d, 1.0, delta).first;
    }
    return s;
}

RegisterLayout OracleHandle::layout() const {
    RegisterLayout l;
    switch (kind) {
        case OracleKind::Phase:
            l.add("domain", reward.domain_size);
            l.add("coord", static_cast<std::uint64_t>(reward.d));
            break;
        case OracleKind::Probability:
            l.add("domain", reward.domain_size);
            l.add("coord", static_cast<std::uint64_t>(reward.d));
            l.add("flag", 2);
            break;
        case OracleKind::Distribution:
            l.add("domain", reward.domain_size);
            l.add("coord", static_cast<std::uint64_t>(reward.d) + 1);
            break;
        case OracleKind::Lattice:
            l.add("vector", lattice.grid->size());
            l.add("domain", reward.domain_size);
            break;
        case OracleKind::Transition:
            throw MvmcError("transition oracles use TransitionOracle");
    }
    return l;
}

double OracleHandle::ideal_phase(std::uint64_t a, std::uint64_t b) const {
    switch (kind) {
        case OracleKind::Phase: {
            const Eigen::VectorXd f = reward.eval(a);
            const auto j = static_cast<Eigen::Index>(b);
            return lambda * (f(j) - 0.5 * (reward.lo(j) + reward.hi(j))) /
                   (reward.hi(j) - reward.lo(j));
        }
        case OracleKind::Lattice: {
            if (lattice.set && !lattice.set->contains(a)) return 0.0;
            const Eigen::VectorXd x = lattice.grid->point(a);
            const Eigen::VectorXd f = reward.eval(b);
            return lambda * x.dot(f) / (2.0 * lattice.r_q * reward.r_max);
        }
        default:
            throw MvmcError("ideal_phase defined for diagonal oracles only");
    }
}

double OracleHandle::applied_phase(std::uint64_t a, std::uint64_t b) const {
    double ph = ideal_phase(a, b);
    if (injector) {
        const std::uint64_t width =
            kind == OracleKind::Phase ? static_cast<std::uint64_t>(reward.d)
                                      : reward.domain_size;
        ph += injector->jitter(a * width + b);
    }
    return ph;
}

namespace {

void require_unit_interval(double u) {
    if (u < -1e-9 || u > 1.0 + 1e-9)
        throw NegativeRewardForAmplitudeOracle(
            "amplitude oracle argument outside [0,1]");
}

}  // namespace

void OracleHandle::apply(StateVector& psi) const {
    charge();
    const RegisterLayout l = layout();
    if (psi.layout.total_dim() != l.total_dim())
        throw MvmcError("statevector does not match oracle layout");
    switch (kind) {
        case OracleKind::Phase:
        case OracleKind::Lattice: {
            const std::uint64_t inner = l.dims[1];
            for (std::uint64_t i = 0; i < l.total_dim(); ++i) {
                const std::uint64_t a = i / inner;
                const std::uint64_t b = i % inner;
                psi.amp[static_cast<std::size_t>(i)] *=
                    std::polar(1.0, applied_phase(a, b));
            }
            break;
        }
        case OracleKind::Probability: {
            const auto d = static_cast<std::uint64_t>(reward.d);
            for (std::uint64_t dom = 0; dom < reward.domain_size; ++dom) {
                const Eigen::VectorXd f = reward.eval(dom);
                for (std::uint64_t j = 0; j < d; ++j) {
                    const auto jj = static_cast<Eigen::Index>(j);
                    const double u = (f(jj) - reward.lo(jj)) /
                                     (reward.hi(jj) - reward.lo(jj));
                    require_unit_interval(u);
                    const double s = std::sqrt(std::clamp(u, 0.0, 1.0));
                    const double c = std::sqrt(std::clamp(1.0 - u, 0.0, 1.0));
                    const std::size_t i0 =
                        static_cast<std::size_t>((dom * d + j) * 2);
                    const cplx a0 = psi.amp[i0];
                    const cplx a1 = psi.amp[i0 + 1];
                    psi.amp[i0] = c * a0 - s * a1;
                    psi.amp[i0 + 1] = s * a0 + c * a1;
                }
            }
            break;
        }
        case OracleKind::Distribution: {
            const auto dim = static_cast<std::uint64_t>(reward.d) + 1;
            // Normalization d^{1-1/q} R_max.
            const double exp_q =
                std::isinf(reward.q) ? 1.0 : 1.0 - 1.0 / reward.q;
            const double bn =
                std::pow(static_cast<double>(reward.d), exp_q) * reward.r_max;
            for (std::uint64_t dom = 0; dom < reward.domain_size; ++dom) {
                const Eigen::VectorXd f = reward.eval(dom);
                Eigen::VectorXd col(static_cast<Eigen::Index>(dim));
                double mass = 0.0;
                for (int j = 0; j < reward.d; ++j) {
                    if (f(j) < -1e-12)
                        throw NegativeRewardForAmplitudeOracle(
                            "distribution oracle needs nonnegative rewards");
                    const double u = std::max(f(j), 0.0) / bn;
                    mass += u;
                    col(j + 1) = std::sqrt(u);
                }
                require_unit_interval(mass);
                col(0) = std::sqrt(std::clamp(1.0 - mass, 0.0, 1.0));
                const Eigen::MatrixXd u_full = complete_unitary(col);
                Eigen::Map<Eigen::VectorXcd> block(
                    psi.amp.data() + dom * dim, static_cast<Eigen::Index>(dim));
                block = (u_full * block).eval();
            }
            break;
        }
        case OracleKind::Transition:
            throw MvmcError("transition oracles use TransitionOracle");
    }
    psi.check_norm();
}

void OracleHandle::charge(std::uint64_t applications) const {
    if (!counter) return;
    counter->add(counter_kind, per_call_charge * applications);
    if (derived) counter->add(CounterKind::DerivedLattice, applications);
}

Eigen::MatrixXd complete_unitary(const Eigen::VectorXd& first_column) {
    const auto n = first_column.size();
    if (std::abs(first_column.norm() - 1.0) > 1e-9)
        throw MvmcError("completion needs a unit first column");
    Eigen::MatrixXd u(n, n);
    u.col(0) = first_column;
    Eigen::Index filled = 1;
    for (Eigen::Index e = 0; e < n && filled < n; ++e) {
        Eigen::VectorXd v = Eigen::VectorXd::Zero(n);
        v(e) = 1.0;
        for (Eigen::Index k = 0; k < filled; ++k)
            v -= u.col(k).dot(v) * u.col(k);
        const double nn = v.norm();
        if (nn > 1e-9) {
            u.col(filled++) = v / nn;
        }
    }
    if (filled != n) throw MvmcError("unitary completion failed");
    return u;
}

// --- transition oracle -----------------------------------------------------

TransitionOracle make_transition_oracle(const MrpInstance& inst,
                                        std::shared_ptr<QueryCounter> counter) {
    TransitionOracle o;
    o.instance = &inst;
    o.counter = std::move(counter);
    const int S = inst.n_states();
    o.completions.reserve(static_cast<std::size_t>(S));
    for (int s = 0; s < S; ++s) {
        Eigen::VectorXd col(S);
        for (int s2 = 0; s2 < S; ++s2)
            col(s2) = std::sqrt(inst.transitions.rows(s, s2));
        col /= col.norm();  // absorb rounding in the row sum
        o.completions.push_back(complete_unitary(col));
    }
    return o;
}

RegisterLayout TransitionOracle::layout() const {
    RegisterLayout l;
    const auto S = static_cast<std::uint64_t>(instance->n_states());
    l.add("state", S);
    l.add("next", S);
    return l;
}

void TransitionOracle::apply(StateVector& psi) const {
    apply_to(psi, 0, 1);
}

void TransitionOracle::apply_to(StateVector& psi, std::size_t src,
                                std::size_t dst) const {
    if (counter) counter->add(CounterKind::Transition, 1);
    const auto S = static_cast<std::uint64_t>(instance->n_states());
    if (psi.layout.dims[src] != S || psi.layout.dims[dst] != S)
        throw MvmcError("transition oracle register mismatch");
    const std::uint64_t s_src = psi.layout.stride(src);
    const std::uint64_t s_dst = psi.layout.stride(dst);
    const std::uint64_t total = psi.layout.total_dim();
    std::vector<cplx> buf(static_cast<std::size_t>(S));
    // Iterate over all basis states with dst = 0 and expand the dst register.
    for (std::uint64_t i = 0; i < total; ++i) {
        if ((i / s_dst) % S != 0) continue;
        const std::uint64_t s = (i / s_src) % S;
        const Eigen::MatrixXd& u = completions[static_cast<std::size_t>(s)];
        for (std::uint64_t k = 0; k < S; ++k)
            buf[static_cast<std::size_t>(k)] =
                psi.amp[static_cast<std::size_t>(i + k * s_dst)];
        for (std::uint64_t r = 0; r < S; ++r) {
            cplx acc(0.0);
            for (std::uint64_t k = 0; k < S; ++k)
                acc += u(static_cast<Eigen::Index>(r),
                         static_cast<Eigen::Index>(k)) *
                       buf[static_cast<std::size_t>(k)];
            psi.amp[static_cast<std::size_t>(i + r * s_dst)] = acc;
        }
    }
    psi.check_norm();
}

// --- reward oracle constructors and conversions ----------------------------

namespace {

CounterKind base_counter_of(OracleKind kind) {
    switch (kind) {
        case OracleKind::Phase: return CounterKind::PhaseReward;
        case OracleKind::Probability: return CounterKind::ProbabilityReward;
        case OracleKind::Distribution: return CounterKind::DistributionReward;
        case OracleKind::Lattice: return CounterKind::LatticeReward;
        case OracleKind::Transition: return CounterKind::Transition;
    }
    throw MvmcError("unreachable");
}

void require_nonnegative(const RewardFunction& f) {
    if (f.domain_size > (std::uint64_t(1) << 20)) return;  // checked on eval
    for (std::uint64_t i = 0; i < f.domain_size; ++i)
        if (f.eval(i).minCoeff() < -1e-12)
            throw NegativeRewardForAmplitudeOracle(
                "amplitude-type oracle needs entrywise nonnegative rewards");
}

}  // namespace

OracleHandle make_reward_oracle(const MrpInstance& inst, OracleKind kind,
                                std::shared_ptr<QueryCounter> counter,
                                const LatticeSpec* lattice,
                                std::optional<long long> depth) {
    OracleHandle h;
    h.kind = kind;
    h.counter_kind = base_counter_of(kind);
    h.per_call_charge = 1;
    h.reward = reward_function_of(inst, depth);
    h.counter = std::move(counter);
    switch (kind) {
        case OracleKind::Phase:
            break;  // codomain [-R_max, R_max] -> phase R_j / (2 R_max)
        case OracleKind::Probability:
            require_nonnegative(h.reward);
            h.reward.lo.setZero();
            break;  // codomain [0, R_max]
        case OracleKind::Distribution:
            require_nonnegative(h.reward);
            break;
        case OracleKind::Lattice:
            if (!lattice)
                throw MvmcError("lattice oracle requires a LatticeSpec");
            h.lattice = *lattice;
            break;
        case OracleKind::Transition:
            throw MvmcError("use make_transition_oracle");
    }
    return h;
}

double conversion_leading_factor(OracleKind from, OracleKind to,
                                 const LatticeSpec* lattice) {
    if ((from == OracleKind::Phase && to == OracleKind::Probability) ||
        (from == OracleKind::Probability && to == OracleKind::Phase))
        return 1.0;
    if (to != OracleKind::Lattice || lattice == nullptr)
        throw UnsupportedConversionEdge("unsupported conversion edge");
    switch (from) {
        case OracleKind::Probability:
            return std::sqrt(lattice->r_inf / lattice->r_q);
        case OracleKind::Phase:
            return lattice->r_inf / lattice->r_q;
        case OracleKind::Distribution: {
            const double dpow =
                std::isinf(lattice->q)
                    ? static_cast<double>(lattice->grid->d)
                    : std::pow(static_cast<double>(lattice->grid->d),
                               1.0 - 1.0 / lattice->q);
            return std::sqrt(dpow * lattice->r_1 / lattice->r_q);
        }
        default:
            throw UnsupportedConversionEdge("unsupported conversion edge");
    }
}

OracleHandle convert(const OracleHandle& handle, OracleKind target_kind,
                     const LatticeSpec* lattice, double delta,
                     const CostModel& cost,
                     std::optional<ErrorInjector> injector) {
    if (delta <= 0.0)
        throw NonpositiveDelta("conversion requires delta > 0");
    const double m = conversion_leading_factor(handle.kind, target_kind, lattice);
    OracleHandle out = handle;
    out.kind = target_kind;
    out.per_call_charge = handle.per_call_charge *
        static_cast<std::uint64_t>(std::ceil(cost.c1 * m * cost.kappa(delta)));
    out.derived = target_kind == OracleKind::Lattice;
    out.injector.reset();
    if (target_kind == OracleKind::Lattice) {
        out.lattice = *lattice;
    } else if (handle.kind == OracleKind::Phase &&
               target_kind == OracleKind::Probability) {
        // Codomain shift: g = f - a + (b-a)/2 against codomain [0, 2(b-a)].
        RewardFunction g = handle.reward;
        const Eigen::VectorXd lo = handle.reward.lo;
        const Eigen::VectorXd span = handle.reward.hi - handle.reward.lo;
        const auto base_eval = handle.reward.eval;
        g.eval = [base_eval, lo, span](std::uint64_t i) {
            return (base_eval(i) - lo + 0.5 * span).eval();
        };
        g.lo = Eigen::VectorXd::Zero(span.size());
        g.hi = 2.0 * span;
        out.reward = std::move(g);
    }
    if (cost.injected_error && injector &&
        (target_kind == OracleKind::Lattice ||
         target_kind == OracleKind::Phase))
        out.injector = injector;
    return out;
}

OracleHandle fractional_power(const OracleHandle& handle, double lambda,
                              double delta, const CostModel& cost) {
    if (!handle.diagonal())
        throw MvmcError("fractional_power needs a diagonal (phase-type) oracle");
    if (lambda <= 0.0 || lambda > 1.0)
        throw MvmcError("fractional exponent must lie in (0,1]");
    OracleHandle out = handle;
    out.lambda = handle.lambda * lambda;
    out.per_call_charge = handle.per_call_charge *
        static_cast<std::uint64_t>(std::ceil(cost.kappa(delta)));
    return out;
}

}  // namespace mvmc
