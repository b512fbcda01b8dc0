#include "mvmc/grid.hpp"

#include <algorithm>
#include <cmath>

namespace mvmc {

void OrthogonalMatrix::validate() const {
    const int d = dim();
    if (d == 0 || m.cols() != d)
        throw MvmcError("rotation must be square and nonempty");
    const Eigen::MatrixXd g = m.transpose() * m - Eigen::MatrixXd::Identity(d, d);
    if (g.cwiseAbs().maxCoeff() > 1e-10)
        throw MvmcError("matrix is not orthogonal within 1e-10");
}

OrthogonalMatrix identity_rotation(int d) {
    return OrthogonalMatrix{Eigen::MatrixXd::Identity(d, d)};
}

OrthogonalMatrix random_orthogonal(int d, std::uint64_t rng_seed) {
    CounterRng rng(rng_seed, 0x6f7274686fULL);  // distinct stream tag
    Eigen::MatrixXd g(d, d);
    for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j) g(i, j) = rng.gaussian();
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(g);
    Eigen::MatrixXd q = qr.householderQ();
    const Eigen::MatrixXd r = qr.matrixQR().triangularView<Eigen::Upper>();
    // Fix the sign ambiguity of QR so the result is determined by the seed.
    for (int j = 0; j < d; ++j)
        if (r(j, j) < 0.0) q.col(j) = -q.col(j);
    OrthogonalMatrix out{std::move(q)};
    out.validate();
    return out;
}

OrthogonalMatrix hadamard(int d_prime) {
    if (d_prime < 1 || (d_prime & (d_prime - 1)) != 0)
        throw NonPowerOfTwoHadamard("hadamard requires a power-of-two size");
    Eigen::MatrixXd h(1, 1);
    h(0, 0) = 1.0;
    while (h.rows() < d_prime) {
        const int k = static_cast<int>(h.rows());
        Eigen::MatrixXd next(2 * k, 2 * k);
        next.topLeftCorner(k, k) = h;
        next.topRightCorner(k, k) = h;
        next.bottomLeftCorner(k, k) = h;
        next.bottomRightCorner(k, k) = -h;
        h = std::move(next);
    }
    return OrthogonalMatrix{h / std::sqrt(static_cast<double>(d_prime))};
}

int grid_bits(int d, double p, double eps) {
    if (d < 1 || eps <= 0.0 || p < 1.0)
        throw MvmcError("grid_bits requires d>=1, eps>0, p in [1,inf]");
    const double arg =
        24.0 * std::pow(static_cast<double>(d), 0.5 + (std::isinf(p) ? 0.0 : 1.0 / p)) /
        eps;
    const int n = static_cast<int>(std::ceil(std::log2(arg)));
    return std::max(n, 1);
}

Eigen::VectorXd Grid::cube_point(std::uint64_t index) const {
    Eigen::VectorXd x(d);
    const double half = std::pow(2.0, n - 1);
    const double scale = std::pow(2.0, -n);
    for (int j = 0; j < d; ++j)
        x(j) = (static_cast<double>(axis_digit(index, j)) - half + 0.5) * scale;
    return x;
}

Eigen::VectorXd Grid::point(std::uint64_t index) const {
    return rotation.m.transpose() * cube_point(index);
}

Grid build_grid(int d, double p, double eps, const OrthogonalMatrix& rotation) {
    rotation.validate();
    if (rotation.dim() != d) throw MvmcError("rotation dimension != d");
    Grid g;
    g.d = d;
    g.n = grid_bits(d, p, eps);
    g.rotation = rotation;
    g.p = p;
    g.eps = eps;
    if (std::uint64_t(g.n) * d > 24)
        throw GridTooLarge("grid would exceed 2^24 points; not materializable");
    return g;
}

Grid make_grid(int d, int n, const OrthogonalMatrix& rotation) {
    rotation.validate();
    if (rotation.dim() != d) throw MvmcError("rotation dimension != d");
    if (n < 1) throw MvmcError("grid needs n >= 1");
    Grid g;
    g.d = d;
    g.n = n;
    g.rotation = rotation;
    g.p = std::numeric_limits<double>::quiet_NaN();
    g.eps = std::numeric_limits<double>::quiet_NaN();
    return g;
}

double radius_of_points(const std::vector<Eigen::VectorXd>& pts, double q) {
    if (pts.empty()) throw EmptySet("radius of an empty set");
    const double qd = dual_norm_index(q);
    double r = 0.0;
    for (const auto& x : pts) r = std::max(r, lq_norm(x, qd));
    return r;
}

double radius(const Grid& grid, double q) {
    if (!grid.enumerable())
        throw GridTooLarge("exact radius needs an enumerable grid");
    const double qd = dual_norm_index(q);
    double r = 0.0;
    for (std::uint64_t i = 0; i < grid.size(); ++i)
        r = std::max(r, lq_norm(grid.point(i), qd));
    return r;
}

double unrotated_cube_radius_l1(int d, int n) {
    return d * (0.5 - std::pow(2.0, -n - 1));
}

// Smallest threshold t with #{values >= t} <= floor(delta * m); with the
// sorted values this is the element at index m-1-floor(delta*m).  Chosen so
// that the threshold is always an attained value: the trimmed set at this
// threshold then has radius exactly equal to the quantile radius.
double upper_quantile(std::vector<double>& values, double delta) {
    std::sort(values.begin(), values.end());
    const std::uint64_t m = values.size();
    std::uint64_t k = static_cast<std::uint64_t>(delta * static_cast<double>(m));
    if (k >= m) k = m - 1;
    return values[static_cast<std::size_t>(m - 1 - k)];
}

namespace {

std::vector<double> dual_norms(const Grid& grid, double q) {
    const double qd = dual_norm_index(q);
    std::vector<double> v;
    v.reserve(static_cast<std::size_t>(grid.size()));
    for (std::uint64_t i = 0; i < grid.size(); ++i)
        v.push_back(lq_norm(grid.point(i), qd));
    return v;
}

}  // namespace

std::pair<double, double> radius_bounds(int d, double q, double delta) {
    if (d < 1 || delta <= 0.0)
        throw NonpositiveDelta("radius_bounds: d>=1, delta>0");
    const double dd = static_cast<double>(d);
    const double exp_approx = std::isinf(q) ? 1.0 : 1.0 - 1.0 / q;
    const double exp_eff = std::max(0.0, 0.5 - (std::isinf(q) ? 0.0 : 1.0 / q));
    const double approx =
        std::pow(dd, exp_approx) *
        std::sqrt(std::max(0.0, std::log(2.0 * dd / delta)) / 2.0);
    const double eff = std::pow(dd, exp_eff) *
                       std::sqrt(std::max(0.0, std::log(2.0 / delta)) / 2.0);
    return {approx, eff};
}

double approximate_radius(const Grid& grid, double q, double delta,
                          bool* used_analytic_bound) {
    if (delta <= 0.0 || delta >= 1.0)
        throw InvalidDelta("approximate_radius requires 0 < delta < 1");
    if (grid.enumerable(std::uint64_t(1) << 20)) {
        if (used_analytic_bound) *used_analytic_bound = false;
        auto v = dual_norms(grid, q);
        return upper_quantile(v, delta);
    }
    if (used_analytic_bound) *used_analytic_bound = true;
    return radius_bounds(grid.d, q, delta).first;
}

double effective_radius_estimate(const Grid& grid, double q, double delta,
                                 int n_directions, std::uint64_t rng_seed) {
    if (!grid.enumerable(std::uint64_t(1) << 20))
        throw GridTooLarge("effective radius estimate needs an enumerable grid");
    CounterRng rng(rng_seed, 0x65666652ULL);
    double best = 0.0;
    for (int k = 0; k < n_directions; ++k) {
        const Eigen::VectorXd y = random_unit_lq(grid.d, q, rng);
        std::vector<double> v;
        v.reserve(static_cast<std::size_t>(grid.size()));
        for (std::uint64_t i = 0; i < grid.size(); ++i)
            v.push_back(std::abs(grid.point(i).dot(y)));
        best = std::max(best, upper_quantile(v, delta));
    }
    return best;
}

RadiusReport radius_report(const Grid& grid, double q, double delta) {
    RadiusReport rep;
    rep.q = q;
    rep.delta = delta;
    rep.exact = radius(grid, q);
    rep.approx = approximate_radius(grid, q, delta, &rep.approx_from_bound);
    rep.effective_bound = radius_bounds(grid.d, q, delta).second;
    return rep;
}

bool TrimmedSet::contains(std::uint64_t index) const {
    const Eigen::VectorXd x = grid->point(index);
    if (directional) return std::abs(x.dot(direction)) <= threshold;
    return lq_norm(x, dual_norm_index(q)) <= threshold;
}

double TrimmedSet::radius(double q_query) const {
    if (!grid->enumerable(std::uint64_t(1) << 20))
        throw GridTooLarge("trimmed-set radius needs an enumerable grid");
    const double qd = dual_norm_index(q_query);
    double r = 0.0;
    bool any = false;
    for (std::uint64_t i = 0; i < grid->size(); ++i) {
        if (contains(i)) {
            any = true;
            r = std::max(r, lq_norm(grid->point(i), qd));
        }
    }
    if (!any) throw EmptySet("trimmed set is empty");
    return r;
}

namespace {

double retained_fraction_of(const TrimmedSet& s) {
    if (!s.grid->enumerable(std::uint64_t(1) << 20))
        return std::numeric_limits<double>::quiet_NaN();
    std::uint64_t kept = 0;
    for (std::uint64_t i = 0; i < s.grid->size(); ++i)
        if (s.contains(i)) ++kept;
    return static_cast<double>(kept) / static_cast<double>(s.grid->size());
}

}  // namespace

TrimmedSet trimmed_set(const Grid& grid, double q, double delta) {
    TrimmedSet s;
    s.grid = &grid;
    s.q = q;
    s.delta = delta;
    s.directional = false;
    s.threshold = approximate_radius(grid, q, delta);
    s.retained_fraction = retained_fraction_of(s);
    return s;
}

TrimmedSet trimmed_set_directional(const Grid& grid, double q, double delta,
                                   const Eigen::VectorXd& y) {
    if (delta <= 0.0 || delta >= 1.0)
        throw InvalidDelta("trimmed_set_directional requires 0 < delta < 1");
    TrimmedSet s;
    s.grid = &grid;
    s.q = q;
    s.delta = delta;
    s.directional = true;
    s.direction = y;
    if (grid.enumerable(std::uint64_t(1) << 20)) {
        std::vector<double> v;
        v.reserve(static_cast<std::size_t>(grid.size()));
        for (std::uint64_t i = 0; i < grid.size(); ++i)
            v.push_back(std::abs(grid.point(i).dot(y)));
        s.threshold = upper_quantile(v, delta);
    } else {
        s.threshold = radius_bounds(grid.d, q, delta).second;
    }
    s.retained_fraction = retained_fraction_of(s);
    return s;
}

double hamming_l1_tail(const OrthogonalMatrix& rotation, int d, int trials,
                       std::uint64_t rng_seed) {
    if (trials < 1000 && d > 20)
        throw MvmcError("hamming_l1_tail needs trials >= 1000");
    const double cut = static_cast<double>(d) / 4.0;
    // Exhaustive when the hypercube is smaller than the trial budget.
    if (d <= 20 && (std::uint64_t(1) << d) <= static_cast<std::uint64_t>(
                                                  std::max(trials, 1))) {
        std::uint64_t hits = 0;
        const std::uint64_t total = std::uint64_t(1) << d;
        Eigen::VectorXd x(d);
        for (std::uint64_t m = 0; m < total; ++m) {
            for (int j = 0; j < d; ++j) x(j) = (m >> j) & 1 ? 1.0 : 0.0;
            if (lq_norm(rotation.m * x, 1.0) <= cut) ++hits;
        }
        return static_cast<double>(hits) / static_cast<double>(total);
    }
    CounterRng rng(rng_seed, 0x68616d6dULL);
    std::uint64_t hits = 0;
    Eigen::VectorXd x(d);
    for (int t = 0; t < trials; ++t) {
        for (int j = 0; j < d; ++j) x(j) = rng.next_u64() & 1 ? 1.0 : 0.0;
        if (lq_norm(rotation.m * x, 1.0) <= cut) ++hits;
    }
    return static_cast<double>(hits) / static_cast<double>(trials);
}

double hamming_l1_tail_bound(int d) {
    const double c = 1.0 / (2.0 * std::sqrt(2.0)) - 0.25;
    const double log2e = 1.0 / std::log(2.0);
    return std::pow(2.0, -(log2e / 2.0) * c * c * static_cast<double>(d));
}

Eigen::VectorXd random_unit_lq(int d, double q, CounterRng& rng) {
    Eigen::VectorXd y(d);
    double norm = 0.0;
    do {
        for (int j = 0; j < d; ++j) y(j) = rng.gaussian();
        norm = lq_norm(y, q);
    } while (norm < 1e-12);
    return y / norm;
}

}  // namespace mvmc
