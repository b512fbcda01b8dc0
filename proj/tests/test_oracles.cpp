#include <doctest.h>

#include <cmath>

#include "mvmc/oracles.hpp"

using namespace mvmc;

namespace {

// Two-state chain with known rewards r(a) = (0.6, -0.2), r(b) = (0, 0.4).
MrpInstance small_instance() {
    MrpInstance inst;
    inst.space.states = {"a", "b"};
    inst.transitions.rows.resize(2, 2);
    inst.transitions.rows << 0.25, 0.75, 0.5, 0.5;
    inst.s0 = 0;
    inst.T = Depth::finite(3);
    inst.rewards.setting = RewardSetting::PathIndependent;
    inst.rewards.d = 2;
    inst.rewards.q = 2.0;
    inst.rewards.r_max = 1.0;
    inst.rewards.gamma = 0.9;
    Eigen::VectorXd ra(2), rb(2);
    ra << 0.6, -0.2;
    rb << 0.0, 0.4;
    inst.rewards.state_rewards = {ra, rb};
    inst.validate();
    return inst;
}

MrpInstance nonneg_instance() {
    MrpInstance inst = small_instance();
    Eigen::VectorXd ra(2), rb(2);
    ra << 0.6, 0.2;
    rb << 0.0, 0.4;
    inst.rewards.state_rewards = {ra, rb};
    inst.validate();
    return inst;
}

double op_distance_on_samples(const OracleHandle& a, const OracleHandle& b,
                              int samples, std::uint64_t seed) {
    // sup_psi ||(A - B) psi|| over sampled unit vectors (lower-bounds the
    // operator norm; the tests pair it with the per-entry phase bound).
    const RegisterLayout l = a.layout();
    double worst = 0.0;
    CounterRng rng(seed);
    for (int it = 0; it < samples; ++it) {
        StateVector psi{l, {}};
        psi.amp.resize(static_cast<std::size_t>(l.total_dim()));
        double nn = 0.0;
        for (auto& amp : psi.amp) {
            amp = cplx(rng.gaussian(), rng.gaussian());
            nn += std::norm(amp);
        }
        nn = std::sqrt(nn);
        for (auto& amp : psi.amp) amp /= nn;
        StateVector pa = psi, pb = psi;
        a.apply(pa);
        b.apply(pb);
        double diff = 0.0;
        for (std::size_t i = 0; i < pa.amp.size(); ++i)
            diff += std::norm(pa.amp[i] - pb.amp[i]);
        worst = std::max(worst, std::sqrt(diff));
    }
    return worst;
}

}  // namespace

TEST_CASE("cost model kappa") {
    CostModel cost{1.0, 1.0, false};
    CHECK(cost.kappa(1.0 / 1024.0) == doctest::Approx(11.0));
    CostModel c2{1.0, 2.0, false};
    CHECK(c2.kappa(0.25) == doctest::Approx(5.0));
    CHECK_THROWS_AS(cost.kappa(0.0), NonpositiveDelta);
}

TEST_CASE("reward function domains per setting") {
    const MrpInstance inst = small_instance();
    const RewardFunction f = reward_function_of(inst);
    CHECK(f.domain_size == 2);
    CHECK(f.eval(0)(0) == doctest::Approx(0.6));
    CHECK(f.eval(1)(1) == doctest::Approx(0.4));
    CHECK(f.lo(0) == doctest::Approx(-1.0));
    CHECK(f.hi(0) == doctest::Approx(1.0));
}

TEST_CASE("phase oracle applies the centered normalized phases") {
    const MrpInstance inst = small_instance();
    auto counter = std::make_shared<QueryCounter>();
    const OracleHandle h =
        make_reward_oracle(inst, OracleKind::Phase, counter);
    // phase = (f_j - 0) / 2 for codomain [-1, 1].
    CHECK(h.ideal_phase(0, 0) == doctest::Approx(0.3));
    CHECK(h.ideal_phase(0, 1) == doctest::Approx(-0.1));
    CHECK(h.ideal_phase(1, 1) == doctest::Approx(0.2));

    StateVector psi = StateVector::uniform_over_register(h.layout(), 0);
    psi = StateVector{psi.layout,
                      std::vector<cplx>(psi.amp.size(),
                                        cplx(1.0 / std::sqrt(4.0)))};
    h.apply(psi);
    psi.check_norm();
    CHECK(std::arg(psi.amp[0]) == doctest::Approx(0.3));
    CHECK(counter->snapshot().phase == 1);
}

TEST_CASE("probability oracle rotates the flag qubit by sqrt(u)") {
    const MrpInstance inst = nonneg_instance();
    auto counter = std::make_shared<QueryCounter>();
    const OracleHandle h =
        make_reward_oracle(inst, OracleKind::Probability, counter);
    // Codomain is shifted to [0, R_max]; u = f_j / R_max.
    CHECK(h.reward.lo(0) == doctest::Approx(0.0));
    StateVector psi = StateVector::zero_state(h.layout());  // dom=0, j=0, flag=0
    h.apply(psi);
    // Amplitude of flag=1 must be sqrt(0.6).
    CHECK(std::abs(psi.amp[1]) == doctest::Approx(std::sqrt(0.6)));
    CHECK(std::abs(psi.amp[0]) == doctest::Approx(std::sqrt(0.4)));
    CHECK(counter->snapshot().probability == 1);

    // Negative rewards are rejected for amplitude encodings.
    CHECK_THROWS_AS(
        make_reward_oracle(small_instance(), OracleKind::Probability, nullptr),
        NegativeRewardForAmplitudeOracle);
}

TEST_CASE("distribution oracle loads the normalized reward distribution") {
    const MrpInstance inst = nonneg_instance();
    const OracleHandle h =
        make_reward_oracle(inst, OracleKind::Distribution, nullptr);
    StateVector psi = StateVector::zero_state(h.layout());
    h.apply(psi);
    psi.check_norm();
    // Block dom=0: amplitudes sqrt(f_j / (d^{1/2} R_max)) on slots j+1.
    const double bn = std::sqrt(2.0);
    CHECK(std::abs(psi.amp[1]) == doctest::Approx(std::sqrt(0.6 / bn)));
    CHECK(std::abs(psi.amp[2]) == doctest::Approx(std::sqrt(0.2 / bn)));
    CHECK(std::abs(psi.amp[0]) ==
          doctest::Approx(std::sqrt(1.0 - 0.8 / bn)));
}

TEST_CASE("unitary completion is unitary and keeps the first column") {
    CounterRng rng(41);
    for (int it = 0; it < 20; ++it) {
        const int n = 2 + static_cast<int>(rng.below(6));
        Eigen::VectorXd col(n);
        for (int i = 0; i < n; ++i) col(i) = rng.gaussian();
        col.normalize();
        const Eigen::MatrixXd u = complete_unitary(col);
        CHECK((u * u.transpose() - Eigen::MatrixXd::Identity(n, n))
                  .cwiseAbs()
                  .maxCoeff() < 1e-9);
        CHECK((u.col(0) - col).cwiseAbs().maxCoeff() < 1e-12);
    }
}

TEST_CASE("transition oracle loads sqrt-probability amplitudes") {
    const MrpInstance inst = small_instance();
    auto counter = std::make_shared<QueryCounter>();
    const TransitionOracle o = make_transition_oracle(inst, counter);
    StateVector psi = StateVector::zero_state(o.layout());  // |a>|0>
    o.apply(psi);
    CHECK(std::abs(psi.amp[0]) == doctest::Approx(std::sqrt(0.25)));
    CHECK(std::abs(psi.amp[1]) == doctest::Approx(std::sqrt(0.75)));
    CHECK(counter->snapshot().transition == 1);

    // Growing a path superposition: measure statistics of the next state.
    StateVector chain = StateVector::zero_state(o.layout());
    o.apply_to(chain, 0, 1);
    CounterRng rng(9);
    int b_count = 0;
    const int shots = 20000;
    for (int i = 0; i < shots; ++i) b_count += sample_register(chain, 1, rng) == 1;
    CHECK(double(b_count) / shots == doctest::Approx(0.75).epsilon(0.02));
}

TEST_CASE("phase to probability conversion shifts the codomain") {
    const MrpInstance inst = small_instance();
    const OracleHandle phase = make_reward_oracle(inst, OracleKind::Phase, nullptr);
    CostModel cost{1.0, 1.0, false};
    const OracleHandle prob =
        convert(phase, OracleKind::Probability, nullptr, 1.0 / 1024.0, cost);
    CHECK(prob.kind == OracleKind::Probability);
    // g = f - a + (b-a)/2 = f + 2 against [0, 4 R_max] (span b-a = 2 R_max).
    CHECK(prob.reward.eval(0)(0) == doctest::Approx(2.6));
    CHECK(prob.reward.lo(0) == doctest::Approx(0.0));
    CHECK(prob.reward.hi(0) == doctest::Approx(4.0));
    // Charge: ceil(c1 * 1 * kappa) = 11 underlying phase calls per use.
    CHECK(prob.per_call_charge == 11);
    auto counter = std::make_shared<QueryCounter>();
    OracleHandle charged = prob;
    charged.counter = counter;
    charged.charge(3);
    CHECK(counter->snapshot().phase == 33);
    // The shifted u stays in [0,1], so apply succeeds.
    StateVector psi = StateVector::zero_state(charged.layout());
    charged.apply(psi);
    CHECK(std::abs(psi.amp[1]) == doctest::Approx(std::sqrt(2.6 / 4.0)));
}

TEST_CASE("conversion leading factors follow the radius ratios") {
    const Grid g = make_grid(2, 4, identity_rotation(2));
    const LatticeSpec spec = make_lattice_spec(g, 2.0);
    CHECK(conversion_leading_factor(OracleKind::Phase, OracleKind::Probability,
                                    nullptr) == doctest::Approx(1.0));
    CHECK(conversion_leading_factor(OracleKind::Probability, OracleKind::Lattice,
                                    &spec) ==
          doctest::Approx(std::sqrt(spec.r_inf / spec.r_q)));
    CHECK(conversion_leading_factor(OracleKind::Phase, OracleKind::Lattice,
                                    &spec) ==
          doctest::Approx(spec.r_inf / spec.r_q));
    CHECK(conversion_leading_factor(OracleKind::Distribution,
                                    OracleKind::Lattice, &spec) ==
          doctest::Approx(std::sqrt(std::sqrt(2.0) * spec.r_1 / spec.r_q)));
    CHECK_THROWS_AS(conversion_leading_factor(OracleKind::Distribution,
                                              OracleKind::Probability, nullptr),
                    UnsupportedConversionEdge);
}

TEST_CASE("lattice oracle phases are grid inner products") {
    const MrpInstance inst = small_instance();
    const Grid g = make_grid(2, 3, random_orthogonal(2, 77));
    const LatticeSpec spec = make_lattice_spec(g, inst.rewards.q);
    const OracleHandle h =
        make_reward_oracle(inst, OracleKind::Lattice, nullptr, &spec);
    CounterRng rng(5);
    for (int it = 0; it < 1000; ++it) {
        const std::uint64_t branch = rng.below(g.size());
        const std::uint64_t dom = rng.below(2);
        const double want =
            g.point(branch).dot(inst.rewards.state_rewards[dom]) /
            (2.0 * spec.r_q * inst.rewards.r_max);
        CHECK(h.ideal_phase(branch, dom) == doctest::Approx(want).epsilon(1e-12));
    }
    // Off-set branches contribute zero phase under a trimmed spec.
    const TrimmedSet ts = trimmed_set(g, inst.rewards.q, 0.2);
    const LatticeSpec trimmed = make_lattice_spec(g, ts, inst.rewards.q, 0.2);
    const OracleHandle ht =
        make_reward_oracle(inst, OracleKind::Lattice, nullptr, &trimmed);
    bool saw_trimmed = false;
    for (std::uint64_t b = 0; b < g.size(); ++b)
        if (!ts.contains(b)) {
            CHECK(ht.ideal_phase(b, 0) == 0.0);
            saw_trimmed = true;
        }
    CHECK(saw_trimmed);
}

TEST_CASE("fractional powers compose multiplicatively and charge kappa") {
    const MrpInstance inst = small_instance();
    const OracleHandle h = make_reward_oracle(inst, OracleKind::Phase, nullptr);
    CostModel cost{1.0, 1.0, false};
    const OracleHandle half = fractional_power(h, 0.5, 0.25, cost);
    CHECK(half.ideal_phase(0, 0) == doctest::Approx(0.15));
    CHECK(half.per_call_charge == 3);  // ceil(1 + log2 4)
    const OracleHandle quarter = fractional_power(half, 0.5, 0.25, cost);
    CHECK(quarter.ideal_phase(0, 0) == doctest::Approx(0.075));
    CHECK(quarter.per_call_charge == 9);
    CHECK_THROWS(fractional_power(h, 1.5, 0.25, cost));
    CHECK_THROWS(fractional_power(h, 0.0, 0.25, cost));
}

TEST_CASE("injected phase error stays within twice the budget") {
    const MrpInstance inst = small_instance();
    OracleHandle ideal = make_reward_oracle(inst, OracleKind::Phase, nullptr);
    const double delta = 0.01;
    OracleHandle noisy = ideal;
    noisy.injector = ErrorInjector{delta, 1234};
    // Per-entry phase deviation at most delta ...
    for (std::uint64_t a = 0; a < 2; ++a)
        for (std::uint64_t j = 0; j < 2; ++j)
            CHECK(std::abs(noisy.applied_phase(a, j) - noisy.ideal_phase(a, j)) <=
                  delta);
    // ... which keeps the operator-norm distance below 2 delta on 100 states.
    CHECK(op_distance_on_samples(ideal, noisy, 100, 8) <= 2.0 * delta);
    // Jitter is deterministic per entry.
    CHECK(noisy.applied_phase(1, 1) == noisy.applied_phase(1, 1));
}
