#include <doctest.h>

#include <cmath>

#include "mvmc/fixtures.hpp"

using namespace mvmc;

TEST_CASE("classical sample-count formula") {
    CHECK(classical_sample_count(1.0, 0.1, 1.0 / 3.0, 2) == 497);
    CHECK(classical_sample_count(2.0, 0.1, 1.0 / 3.0, 2) == 1988);
}

TEST_CASE("classical coordinate bound follows the horizon weighting") {
    const MrpInstance loop = single_loop_instance(
        FixtureFamily::SingleLoopPhase, {1}, 1, 0.1, Depth::infinite(), 0.5,
        2.0, 1.0);
    CHECK(classical_coordinate_bound(loop) == doctest::Approx(2.0));

    MrpInstance exd;
    exd.space.states = {"s"};
    exd.transitions.rows = Eigen::MatrixXd::Ones(1, 1);
    exd.s0 = 0;
    exd.T = Depth::finite(3);
    exd.rewards.setting = RewardSetting::ExactDepth;
    exd.rewards.d = 1;
    exd.rewards.q = 2.0;
    exd.rewards.r_max = 1.0;
    exd.rewards.gamma = 1.0;
    exd.rewards.exact.emplace(0, Eigen::VectorXd::Constant(1, 0.5));
    exd.validate();
    CHECK(classical_coordinate_bound(exd) == doctest::Approx(1.0));
}

TEST_CASE("classical estimator meets its failure bound empirically") {
    const MrpInstance inst = single_loop_instance(
        FixtureFamily::SingleLoopProbability, {1, 0}, 2, 0.05,
        Depth::infinite(), 0.5, 2.0, 1.0);
    const Eigen::VectorXd target = exact_value(inst);
    const double eps = 0.2, delta = 1.0 / 3.0;
    int ok = 0;
    const int reps = 30;
    for (int i = 0; i < reps; ++i) {
        const Eigen::VectorXd est =
            classical_estimate(inst, eps, delta, mix_seed(31, i));
        ok += (est - target).cwiseAbs().maxCoeff() <= eps;
    }
    CHECK(ok >= 20);  // failure rate bounded by delta = 1/3
    // Deterministic per seed.
    CHECK(classical_estimate(inst, eps, delta, 5) ==
          classical_estimate(inst, eps, delta, 5));
}

TEST_CASE("single-loop closed forms match the exact oracle") {
    CounterRng rng(61);
    int checked = 0;
    for (FixtureFamily family : {FixtureFamily::SingleLoopPhase,
                                 FixtureFamily::SingleLoopProbability,
                                 FixtureFamily::SingleLoopDistribution}) {
        for (int it = 0; it < 100; ++it) {
            const int d = 1 + static_cast<int>(rng.below(3));
            const double q = std::vector<double>{1.0, 2.0, kInf}[rng.below(3)];
            const bool inf_T = rng.below(2) == 0;
            const Depth T =
                inf_T ? Depth::infinite() : Depth::finite(1 + rng.below(10));
            const double gamma = inf_T ? 0.5 + 0.4 * rng.uniform() : 1.0;
            const double tg = discount_sum(T, gamma);
            const double eps = 0.01 * tg * d;
            std::vector<int> b(d);
            for (int& x : b) x = static_cast<int>(rng.below(2));
            const MrpInstance inst =
                single_loop_instance(family, b, d, eps, T, gamma, q, 1.0);
            const Eigen::VectorXd want =
                single_loop_value(family, b, d, eps, T, gamma, q, 1.0);
            CHECK((exact_value(inst) - want).cwiseAbs().maxCoeff() < 1e-10);
            ++checked;
        }
    }
    CHECK(checked == 300);
}

TEST_CASE("single-loop parameter guards") {
    CHECK_THROWS_AS(single_loop_instance(FixtureFamily::SingleLoopPhase, {1, 1},
                                         1, 0.1, Depth::finite(1), 1.0, 2.0, 1.0),
                    ParameterOutOfRange);
    // Probability family with eps too large for a nonnegative offset.
    CHECK_THROWS_AS(single_loop_instance(FixtureFamily::SingleLoopProbability,
                                         {1}, 1, 0.9, Depth::finite(0), 1.0,
                                         2.0, 1.0),
                    ParameterOutOfRange);
}

TEST_CASE("gadget depth parameter") {
    CHECK(majority_parity_t_prime(Depth::finite(36), 1.0) == 34);
    CHECK(majority_parity_t_prime(Depth::finite(4), 1.0) == 32);  // floor at 32
}

TEST_CASE("random gadget bits lie in the domain") {
    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
        const auto bits = random_majority_parity_bits(2, 3, 32, seed);
        CHECK(bits.size() == 2u * 3u * 16u);
        CHECK(majority_parity_domain_contains(bits, 2, 3, 32));
    }
    std::vector<int> all_one(2 * 3 * 16, 1);
    // 16 bits per block: parity 0 everywhere, count 0 < floor(3/2).
    CHECK_FALSE(majority_parity_domain_contains(all_one, 2, 3, 32));
}

TEST_CASE("gadget value matches the dynamic program") {
    for (auto [d, k, tp] : std::vector<std::tuple<int, int, int>>{
             {1, 1, 32}, {2, 3, 32}, {1, 3, 34}}) {
        for (std::uint64_t seed = 1; seed <= 3; ++seed) {
            const auto bits =
                random_majority_parity_bits(d, k, tp, mix_seed(seed, d * 100 + k));
            for (double q : {2.0, kInf}) {
                const MrpInstance inst =
                    majority_parity_instance(bits, d, k, tp, q, 1.0);
                const Eigen::VectorXd closed =
                    majority_parity_value(bits, d, k, tp, q, 1.0);
                CHECK((exact_value(inst) - closed).cwiseAbs().maxCoeff() < 1e-10);
            }
        }
    }
}

TEST_CASE("bit negation flips the decoded coordinates") {
    // T = 36 at gamma = 1 gives T' = 34: blocks of 17 bits, so flipping all
    // bits flips every parity and the majority count swaps floor <-> ceil.
    const int d = 2, k = 3, tp = 34;
    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
        const auto bits = random_majority_parity_bits(d, k, tp, seed);
        std::vector<int> flipped(bits.size());
        for (std::size_t i = 0; i < bits.size(); ++i) flipped[i] = 1 - bits[i];
        CHECK(majority_parity_domain_contains(flipped, d, k, tp));
        const Eigen::VectorXd c = majority_parity_c(bits, d, k, tp);
        const Eigen::VectorXd cf = majority_parity_c(flipped, d, k, tp);
        for (int j = 0; j < d; ++j) CHECK(cf(j) == doctest::Approx(1.0 - c(j)));
    }
}

TEST_CASE("descriptor dispatch is consistent") {
    HardInstanceDescriptor desc;
    desc.family = FixtureFamily::SingleLoopDistribution;
    desc.bits = {1, 0, 1};
    desc.d = 3;
    desc.eps = 0.02;
    desc.T = Depth::infinite();
    desc.gamma = 0.8;
    desc.q = 2.0;
    desc.r_max = 1.0;
    const MrpInstance inst = fixture_instance(desc);
    CHECK((exact_value(inst) - fixture_value(desc)).cwiseAbs().maxCoeff() <
          1e-10);
    CHECK((candidate_value(desc, desc.bits) - fixture_value(desc))
              .cwiseAbs()
              .maxCoeff() < 1e-12);
}

TEST_CASE("decoding recovers hidden bits from values within half the spacing") {
    CounterRng rng(71);
    for (int it = 0; it < 50; ++it) {
        HardInstanceDescriptor desc;
        desc.family = FixtureFamily::SingleLoopPhase;
        desc.d = 1 + static_cast<int>(rng.below(8));
        desc.eps = 0.02 * desc.d;
        desc.T = Depth::infinite();
        desc.gamma = 0.5;
        desc.q = 2.0;
        desc.r_max = 1.0;
        desc.bits.resize(desc.d);
        for (int& b : desc.bits) b = static_cast<int>(rng.below(2));
        const Eigen::VectorXd v = fixture_value(desc);
        // Per-coordinate value spacing is 8 eps / d.
        const double spacing = 8.0 * desc.eps / desc.d;
        Eigen::VectorXd noisy = v;
        for (int j = 0; j < desc.d; ++j)
            noisy(j) += rng.uniform(-0.49, 0.49) * spacing;
        const OrthogonalMatrix id = identity_rotation(desc.d);
        CHECK(high_overlap_decode(noisy, desc, id, false) == desc.bits);
        // The rounding shortcut agrees with the exhaustive argmin.
        CHECK(high_overlap_decode(noisy, desc, id, true) ==
              high_overlap_decode(noisy, desc, id, false));
    }
}

TEST_CASE("family names round trip") {
    for (FixtureFamily f : {FixtureFamily::SingleLoopPhase,
                            FixtureFamily::SingleLoopProbability,
                            FixtureFamily::SingleLoopDistribution,
                            FixtureFamily::MajorityParity})
        CHECK(fixture_family_from_string(to_string(f)) == f);
    CHECK_THROWS(fixture_family_from_string("nope"));
}
