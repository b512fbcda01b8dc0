// Classical sampling baseline plus the hard-instance families used as
// ground-truthed fixtures: one-state loop instances encoding hidden bits in
// their reward vectors, and the layered majority-of-parities gadget chain.

#pragma once

#include <Eigen/Dense>
#include <optional>
#include <string>
#include <vector>

#include "mvmc/grid.hpp"
#include "mvmc/mrp.hpp"

namespace mvmc {

enum class FixtureFamily {
    SingleLoopPhase,
    SingleLoopProbability,
    SingleLoopDistribution,
    MajorityParity,
};

std::string to_string(FixtureFamily f);
FixtureFamily fixture_family_from_string(const std::string& s);

struct HardInstanceDescriptor {
    FixtureFamily family = FixtureFamily::SingleLoopPhase;
    std::vector<int> bits;  // hidden b: d bits (single-loop) or the
                            // d*k*(T'/2) gadget bits (majority-parity)
    int d = 1;
    double eps = 0.1;       // family parameter (single-loop)
    Depth T = Depth::finite(1);
    double gamma = 1.0;
    double q = 2.0;
    double r_max = 1.0;
    int k = 1;              // majority-parity only
    int t_prime = 32;       // majority-parity only
};

// Classical Monte Carlo baseline: coordinate-wise sample means over
// N = ceil(2 B^2 / eps^2 * ln(2d/delta)) sampled paths (log natural).
long long classical_sample_count(double B, double eps, double delta, int d);
Eigen::VectorXd classical_estimate(const MrpInstance& inst, double eps,
                                   double delta, std::uint64_t rng_seed);
// The per-coordinate bound B the baseline derives from the instance
// (R_max, horizon-weighted outside the exact-depth setting).
double classical_coordinate_bound(const MrpInstance& inst);

// One-state loop instance; reward vector per family:
//   phase:            r = (8 eps / (T_gamma d)) b
//   probability/dist: r = (R_max/(2 d^{1/q}) - 8 eps/(T_gamma d)) 1 + (8 eps/(T_gamma d)) b
// with closed-form value V = T_gamma * r.
MrpInstance single_loop_instance(FixtureFamily family,
                                 const std::vector<int>& b, int d, double eps,
                                 Depth T, double gamma, double q, double r_max);
Eigen::VectorXd single_loop_value(FixtureFamily family,
                                  const std::vector<int>& b, int d, double eps,
                                  Depth T, double gamma, double q,
                                  double r_max);

// T' = max{32, 2(2 floor(T_gamma/4) - 1)}; even by construction.
int majority_parity_t_prime(Depth T, double gamma);

// Domain check: every row's parity count over its k blocks of T'/2 bits
// sums to floor(k/2) or ceil(k/2).
bool majority_parity_domain_contains(const std::vector<int>& b, int d, int k,
                                     int t_prime);
// The decoded coordinate c_b in {0,1}^d (1 where the parity count is
// ceil(k/2)).
Eigen::VectorXd majority_parity_c(const std::vector<int>& b, int d, int k,
                                  int t_prime);
// Uniformly random valid bits.
std::vector<int> random_majority_parity_bits(int d, int k, int t_prime,
                                             std::uint64_t rng_seed);

// Layered XOR-gadget chain: from s0 the walk picks one of d*k branch chains
// uniformly, traverses T'/2 XOR layers, and parks on a terminal whose parity
// bit selects the reward.  gamma=1, depth T'+1, path-independent rewards.
MrpInstance majority_parity_instance(const std::vector<int>& b, int d, int k,
                                     int t_prime, double q, double r_max);
Eigen::VectorXd majority_parity_value(const std::vector<int>& b, int d, int k,
                                      int t_prime, double q, double r_max);

// Closed-form value of any descriptor.
Eigen::VectorXd fixture_value(const HardInstanceDescriptor& desc);
MrpInstance fixture_instance(const HardInstanceDescriptor& desc);

// argmin_x || O (v - V^(x)(s0)) ||_1 over candidate hidden bits; exhaustive
// up to d=20, with a per-coordinate rounding shortcut for the decoupled
// (identity-rotated) single-loop families.
std::vector<int> high_overlap_decode(const Eigen::VectorXd& v,
                                     const HardInstanceDescriptor& desc,
                                     const OrthogonalMatrix& rotation,
                                     bool use_rounding_shortcut = false);

// Candidate closed-form value for hidden bits x (the decoder's model).
Eigen::VectorXd candidate_value(const HardInstanceDescriptor& desc,
                                const std::vector<int>& x);

}  // namespace mvmc
