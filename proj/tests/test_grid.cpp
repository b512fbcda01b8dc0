#include <doctest.h>

#include <cmath>

#include "mvmc/grid.hpp"

using namespace mvmc;

TEST_CASE("grid bit sizing") {
    CHECK(grid_bits(1, kInf, 0.1) == 8);   // ceil log2(24/0.1)
    CHECK(grid_bits(4, 2.0, 0.05) == 11);  // ceil log2(24*4/0.05)
    CHECK(grid_bits(3, 1.0, 0.05) == 12);  // ceil log2(24*3^{3/2}/0.05)
    CHECK(grid_bits(1, kInf, 30.0) == 1);  // clamped to one bit per axis
}

TEST_CASE("one-axis grid points and radius") {
    const Grid g = make_grid(1, 3, identity_rotation(1));
    CHECK(g.size() == 8);
    // Points are the odd half-integers over 16: +/- {1,3,5,7}/16.
    std::vector<double> xs;
    for (std::uint64_t i = 0; i < g.size(); ++i) xs.push_back(g.point(i)[0]);
    std::sort(xs.begin(), xs.end());
    for (int i = 0; i < 8; ++i)
        CHECK(xs[i] == doctest::Approx((2.0 * i - 7.0) / 16.0).epsilon(1e-15));
    CHECK(radius(g, 2.0) == doctest::Approx(7.0 / 16.0));
    CHECK(radius(g, 1.0) == doctest::Approx(7.0 / 16.0));
    CHECK(radius(g, kInf) == doctest::Approx(7.0 / 16.0));
}

TEST_CASE("axis digits address independent axes") {
    const Grid g = make_grid(2, 2, identity_rotation(2));
    for (std::uint64_t i = 0; i < g.size(); ++i) {
        const Eigen::VectorXd x = g.cube_point(i);
        for (int j = 0; j < 2; ++j) {
            const double m = static_cast<double>(g.axis_digit(i, j));
            CHECK(x[j] == doctest::Approx((m - 2.0 + 0.5) / 4.0).epsilon(1e-15));
        }
    }
}

TEST_CASE("unrotated cube l1 radius closed form") {
    for (int d : {1, 2, 3}) {
        for (int n : {1, 2, 3}) {
            const Grid g = make_grid(d, n, identity_rotation(d));
            // q = inf rewards have dual norm l1.
            CHECK(radius(g, kInf) ==
                  doctest::Approx(unrotated_cube_radius_l1(d, n)).epsilon(1e-12));
        }
    }
}

TEST_CASE("l2 radius is rotation invariant") {
    const Grid g0 = make_grid(2, 4, identity_rotation(2));
    const double r0 = radius(g0, 2.0);
    for (std::uint64_t seed : {1, 2, 3}) {
        const Grid g = make_grid(2, 4, random_orthogonal(2, seed));
        CHECK(radius(g, 2.0) == doctest::Approx(r0).epsilon(1e-12));
    }
}

TEST_CASE("orthogonal matrix construction") {
    for (int d : {1, 2, 5, 8}) {
        const OrthogonalMatrix o = random_orthogonal(d, 99 + d);
        o.validate();
        CHECK((o.m.transpose() * o.m - Eigen::MatrixXd::Identity(d, d))
                  .cwiseAbs()
                  .maxCoeff() < 1e-10);
    }
    const OrthogonalMatrix h = hadamard(2);
    const double s = 1.0 / std::sqrt(2.0);
    CHECK(h.m(0, 0) == doctest::Approx(s));
    CHECK(h.m(0, 1) == doctest::Approx(s));
    CHECK(h.m(1, 0) == doctest::Approx(s));
    CHECK(h.m(1, 1) == doctest::Approx(-s));
    CHECK_THROWS_AS(hadamard(3), NonPowerOfTwoHadamard);
    // Deterministic for a fixed seed.
    CHECK(random_orthogonal(3, 5).m == random_orthogonal(3, 5).m);
}

TEST_CASE("analytic radius bounds") {
    auto [approx, eff] = radius_bounds(4, 2.0, 0.1);
    CHECK(approx == doctest::Approx(2.9604143746015965).epsilon(1e-12));
    CHECK(eff == doctest::Approx(1.2238734153404083).epsilon(1e-12));
    auto [a16, e16] = radius_bounds(16, kInf, 0.1);
    CHECK(a16 == doctest::Approx(27.172506094609727).epsilon(1e-12));
    CHECK(e16 == doctest::Approx(4.895493661361633).epsilon(1e-12));
    CHECK_THROWS_AS(radius_bounds(4, 2.0, 0.0), NonpositiveDelta);
}

TEST_CASE("upper quantile convention") {
    std::vector<double> v = {3, 1, 4, 1, 5, 9, 2, 6, 8, 7};  // 1..9 with dup
    // delta = 0.2, m = 10: drop the top K = 2, keep the next one down.
    CHECK(upper_quantile(v, 0.2) == doctest::Approx(7.0));
    CHECK(upper_quantile(v, 0.0) == doctest::Approx(9.0));
    CHECK(upper_quantile(v, 0.999) == doctest::Approx(1.0));
}

TEST_CASE("trimmed sets keep a 1-delta fraction and realize the quantile radius") {
    for (std::uint64_t seed : {1, 2, 3, 4, 5}) {
        const Grid g = make_grid(2, 4, random_orthogonal(2, seed));
        for (double q : {1.0, 2.0, kInf}) {
            for (double delta : {0.3, 0.1, 0.01}) {
                const TrimmedSet ts = trimmed_set(g, q, delta);
                CHECK(ts.retained_fraction >= 1.0 - delta);
                // Quantile-radius identity: the trimmed set's own radius equals
                // the quantile radius of the full grid, exactly.
                CHECK(ts.radius(q) == approximate_radius(g, q, delta));
                std::uint64_t kept = 0;
                for (std::uint64_t i = 0; i < g.size(); ++i)
                    if (ts.contains(i)) ++kept;
                CHECK(kept == std::uint64_t(ts.retained_fraction * double(g.size()) + 0.5));
            }
        }
    }
}

TEST_CASE("approximate radius falls back to the analytic bound") {
    // 2^{36} points: not enumerable.
    const Grid g = make_grid(3, 12, identity_rotation(3));
    bool used_bound = false;
    const double r = approximate_radius(g, 2.0, 0.01, &used_bound);
    CHECK(used_bound);
    CHECK(r == doctest::Approx(radius_bounds(3, 2.0, 0.01).first));
    // Enumerable grids report an exact quantile.
    const Grid small = make_grid(2, 4, identity_rotation(2));
    used_bound = true;
    approximate_radius(small, 2.0, 0.01, &used_bound);
    CHECK_FALSE(used_bound);
}

TEST_CASE("radius ordering: effective <= quantile <= worst case") {
    for (std::uint64_t seed : {3, 7}) {
        const Grid g = make_grid(2, 5, random_orthogonal(2, seed));
        for (double q : {1.0, 2.0, kInf}) {
            const double worst = radius(g, q);
            const double quant = approximate_radius(g, q, 0.05);
            const double eff = effective_radius_estimate(g, q, 0.05, 32, seed);
            CHECK(quant <= worst + 1e-12);
            CHECK(eff <= quant + 1e-12);
        }
    }
}

TEST_CASE("directional trimming cuts along the requested direction") {
    const Grid g = make_grid(2, 5, random_orthogonal(2, 17));
    CounterRng rng(23);
    const Eigen::VectorXd y = random_unit_lq(2, 2.0, rng);
    const TrimmedSet ts = trimmed_set_directional(g, 2.0, 0.1, y);
    CHECK(ts.retained_fraction >= 0.9);
    for (std::uint64_t i = 0; i < g.size(); ++i)
        if (ts.contains(i))
            CHECK(std::abs(g.point(i).dot(y)) <= ts.threshold + 1e-12);
}

TEST_CASE("grid size guard") {
    CHECK_THROWS_AS(build_grid(8, 1.0, 1e-4, identity_rotation(8)), GridTooLarge);
}

TEST_CASE("hamming tail estimate stays below the analytic bound") {
    // d=1, identity: ||x||_1 <= 1/4 iff x = 0, so the tail is exactly 1/2.
    const double t1 = hamming_l1_tail(identity_rotation(1), 1, 4096, 5);
    CHECK(t1 == doctest::Approx(0.5));
    CHECK(hamming_l1_tail_bound(1) == doctest::Approx(0.994652695651833).epsilon(1e-9));
    CHECK(t1 <= hamming_l1_tail_bound(1));
}
