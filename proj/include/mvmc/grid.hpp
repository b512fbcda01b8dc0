// The rotated hypercubic lattice used for parallel phase estimation, its
// exact / quantile / directional radii, and trimmed subsets.

#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

#include "mvmc/common.hpp"

namespace mvmc {

struct OrthogonalMatrix {
    Eigen::MatrixXd m;

    int dim() const { return static_cast<int>(m.rows()); }
    void validate() const;  // ||O^T O - I||_max <= 1e-10
};

OrthogonalMatrix identity_rotation(int d);
OrthogonalMatrix random_orthogonal(int d, std::uint64_t rng_seed);
OrthogonalMatrix hadamard(int d_prime);  // Sylvester; d' must be a power of 2

// Number of bits per axis: ceil(log2(24 d^{1/2+1/p} / eps)), clamped to >= 1
// so the per-axis register is never empty.
int grid_bits(int d, double p, double eps);

// 2^{nd} points O^T x / 2^n with x ranging over the centered cube of
// odd half-integers.  Points are addressed by a d-digit base-2^n index;
// digit j (axis j) is bits [nj, n(j+1)) of the index.
struct Grid {
    int d = 1;
    int n = 1;
    OrthogonalMatrix rotation;
    double p = kInf;   // parameters used to size n (NaN when built directly)
    double eps = 0.0;

    std::uint64_t size() const { return std::uint64_t(1) << (std::uint64_t(n) * d); }
    bool enumerable(std::uint64_t cap = std::uint64_t(1) << 24) const {
        return std::uint64_t(n) * d <= 63 && size() <= cap;
    }

    // Axis digit m_j in [0, 2^n).
    std::uint64_t axis_digit(std::uint64_t index, int axis) const {
        return (index >> (std::uint64_t(n) * axis)) & ((std::uint64_t(1) << n) - 1);
    }
    // Pre-rotation coordinates x_j = (m_j - 2^{n-1} + 1/2) / 2^n.
    Eigen::VectorXd cube_point(std::uint64_t index) const;
    // Rotated point O^T x.
    Eigen::VectorXd point(std::uint64_t index) const;
};

Grid build_grid(int d, double p, double eps, const OrthogonalMatrix& rotation);
// Direct construction with an explicit bit count (tests, fixtures).
Grid make_grid(int d, int n, const OrthogonalMatrix& rotation);

// Worst-case dual-norm extent max_{x in set} ||x||_{q*}.
double radius(const Grid& grid, double q);
double radius_of_points(const std::vector<Eigen::VectorXd>& pts, double q);

// Closed form for the unrotated cube at q=inf: d (1/2 - 2^{-n-1}).
double unrotated_cube_radius_l1(int d, int n);

// delta-upper-quantile of a sample: sorts in place and returns the value with
// exactly floor(delta m) samples above it.
double upper_quantile(std::vector<double>& values, double delta);

// Quantile radius r_{G,delta}(q): smallest dual-norm threshold keeping the
// fraction of points above it at most delta.  Exact enumeration when
// |G| <= 2^20; otherwise the analytic Hoeffding bound (flag reports which).
double approximate_radius(const Grid& grid, double q, double delta,
                          bool* used_analytic_bound = nullptr);

// Analytic Hoeffding bounds: (approx_bound, effective_bound) =
//   ( d^{1-1/q} sqrt(ln(2d/delta)/2),  d^{max(0,1/2-1/q)} sqrt(ln(2/delta)/2) )
std::pair<double, double> radius_bounds(int d, double q, double delta);

// Empirical effective radius: max over sampled unit-q-norm directions of the
// delta-quantile of |x^T y|.
double effective_radius_estimate(const Grid& grid, double q, double delta,
                                 int n_directions, std::uint64_t rng_seed);

struct RadiusReport {
    double q = 2.0;
    double delta = 0.0;
    double exact = 0.0;            // r_G(q)
    double approx = 0.0;           // r_{G,delta}(q)
    double effective_bound = 0.0;  // analytic bound on the effective radius
    bool approx_from_bound = false;
};

RadiusReport radius_report(const Grid& grid, double q, double delta);

struct TrimmedSet {
    const Grid* grid = nullptr;
    double q = 2.0;
    double delta = 0.0;
    double threshold = 0.0;          // dual-norm or |x^T y| cutoff
    bool directional = false;
    Eigen::VectorXd direction;       // only for the directional form
    double retained_fraction = 1.0;  // exact when enumerable, else NaN

    bool contains(std::uint64_t index) const;
    double radius(double q_query) const;  // enumerable sets only
};

TrimmedSet trimmed_set(const Grid& grid, double q, double delta);
TrimmedSet trimmed_set_directional(const Grid& grid, double q, double delta,
                                   const Eigen::VectorXd& y);

// Monte Carlo estimate of P[||O x||_1 <= d/4] over uniform x in {0,1}^d,
// and the analytic concentration bound it is compared against.
double hamming_l1_tail(const OrthogonalMatrix& rotation, int d, int trials,
                       std::uint64_t rng_seed);
double hamming_l1_tail_bound(int d);

// Random direction with unit lq norm (for directional-tail property tests).
Eigen::VectorXd random_unit_lq(int d, double q, CounterRng& rng);

}  // namespace mvmc
