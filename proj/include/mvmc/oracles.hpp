// The four reward-oracle encodings plus the transition oracle, implemented
// as simulated unitaries, and the conversion meta-operations between them.
//
// Conversions are semantic: a derived oracle's action is synthesized from
// the underlying reward function itself, while fidelity to the source
// constructions is kept through (a) exact target semantics, (b) per-call
// query charges that instantiate the conversion cost formulas, and (c)
// optional operator-norm error injection within the stated budgets.

#pragma once

#include <Eigen/Dense>
#include <functional>
#include <memory>
#include <optional>

#include "mvmc/grid.hpp"
#include "mvmc/mrp.hpp"
#include "mvmc/qsim.hpp"

namespace mvmc {

enum class OracleKind { Phase, Probability, Distribution, Lattice, Transition };

std::string to_string(OracleKind k);
OracleKind oracle_kind_from_string(const std::string& s);

struct CostModel {
    double c1 = 1.0;  // leading constant in conversion charges
    double c2 = 1.0;  // polylog coefficient
    bool injected_error = false;

    // kappa(delta) = 1 + c2 log2(1/delta)
    double kappa(double delta) const;
};

// Deterministic per-entry phase jitter, uniform in [-delta, delta].  The
// perturbed operator stays exactly unitary and differs from the ideal one by
// operator norm at most 2*delta.
struct ErrorInjector {
    double delta = 0.0;
    std::uint64_t seed = 0;

    double jitter(std::uint64_t flat_index) const {
        CounterRng rng(seed, flat_index);
        return rng.uniform(-delta, delta);
    }
};

// f : {0,...,domain_size-1} -> R^d together with its codomain box
// [lo_j, hi_j] per coordinate.  Oracles are defined against this view of the
// reward payload.
struct RewardFunction {
    int d = 1;
    double q = 2.0;
    double r_max = 1.0;
    std::uint64_t domain_size = 1;
    Eigen::VectorXd lo, hi;
    std::function<Eigen::VectorXd(std::uint64_t)> eval;
};

// The reward payload of an instance as a RewardFunction: the domain is the
// state set (path-independent), the path set S^{T+1} (exact-depth), or the
// prefix set S^{t+1} for a given depth t (cumulative).
RewardFunction reward_function_of(const MrpInstance& inst,
                                  std::optional<long long> depth = {});

// Point set a lattice oracle is defined over, with the radii its phase scale
// and conversion charges consume.  Radii are exact on enumerable sets and
// fall back to the analytic quantile bounds otherwise.
struct LatticeSpec {
    const Grid* grid = nullptr;
    const TrimmedSet* set = nullptr;  // optional restriction
    double q = 2.0;
    double r_q = 0.0;    // r(q) — sets the phase denominator 2 r(q) R_max
    double r_inf = 0.0;  // r(inf)
    double r_1 = 0.0;    // r(1)
};

LatticeSpec make_lattice_spec(const Grid& grid, double q);
LatticeSpec make_lattice_spec(const Grid& grid, const TrimmedSet& set,
                              double q, double delta);

struct OracleHandle {
    OracleKind kind = OracleKind::Phase;
    // Counter this handle charges per application, and how many calls.
    CounterKind counter_kind = CounterKind::PhaseReward;
    std::uint64_t per_call_charge = 1;
    bool derived = false;  // charges CounterKind::DerivedLattice once per call

    RewardFunction reward;
    LatticeSpec lattice;       // Lattice kind only
    double lambda = 1.0;       // fractional-power multiplier on phases
    std::optional<ErrorInjector> injector;
    std::shared_ptr<QueryCounter> counter;

    bool diagonal() const {
        return kind == OracleKind::Phase || kind == OracleKind::Lattice;
    }

    // Canonical register layout of this oracle's apply space.
    RegisterLayout layout() const;

    // Ideal phase of a diagonal oracle on one basis state (before jitter):
    //   Phase:   args = (domain index, coordinate j)
    //   Lattice: args = (grid branch index, domain index)
    double ideal_phase(std::uint64_t a, std::uint64_t b) const;
    // Phase including injected jitter and the fractional multiplier.
    double applied_phase(std::uint64_t a, std::uint64_t b) const;

    // Applies the oracle to a state over layout() and charges the counter.
    void apply(StateVector& psi) const;
    // Charges without applying (used by the semantic pipeline).
    void charge(std::uint64_t applications = 1) const;
};

// --- constructors ----------------------------------------------------------

struct TransitionOracle {
    const MrpInstance* instance = nullptr;
    std::vector<Eigen::MatrixXd> completions;  // per-state unitary on S'
    std::shared_ptr<QueryCounter> counter;

    RegisterLayout layout() const;  // [S, S']
    void apply(StateVector& psi) const;
    // Application to two registers of an arbitrary layout: conditions on
    // register `src` and transforms register `dst` (which must hold the
    // "next state").  Used to grow path superpositions.
    void apply_to(StateVector& psi, std::size_t src, std::size_t dst) const;
};

TransitionOracle make_transition_oracle(const MrpInstance& inst,
                                        std::shared_ptr<QueryCounter> counter);

OracleHandle make_reward_oracle(const MrpInstance& inst, OracleKind kind,
                                std::shared_ptr<QueryCounter> counter,
                                const LatticeSpec* lattice = nullptr,
                                std::optional<long long> depth = {});

// Conversion edges: Probability->Phase, Phase->Probability (codomain-shifted
// per the conversion's contract), Probability->Lattice, Phase->Lattice,
// Distribution->Lattice.  The returned handle charges the source handle's
// base counter ceil(c1 * m * kappa(delta)) calls per application.
OracleHandle convert(const OracleHandle& handle, OracleKind target_kind,
                     const LatticeSpec* lattice, double delta,
                     const CostModel& cost,
                     std::optional<ErrorInjector> injector = {});

// Leading multiplier m of a conversion edge (1 for phase<->probability).
double conversion_leading_factor(OracleKind from, OracleKind to,
                                 const LatticeSpec* lattice);

// lambda in (0,1]: multiplies every phase of a diagonal oracle; charges
// ceil(1 + c2 log2(1/delta)) underlying calls per application.
OracleHandle fractional_power(const OracleHandle& handle, double lambda,
                              double delta, const CostModel& cost);

// Unitary completion of a given unit first column by Gram-Schmidt over the
// remaining computational basis (deterministic).
Eigen::MatrixXd complete_unitary(const Eigen::VectorXd& first_column);

}  // namespace mvmc
