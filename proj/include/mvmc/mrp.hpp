// Markov reward processes in the three reward settings (exact-depth,
// cumulative-depth, path-independent) plus the exact value-function oracle
// used as ground truth everywhere else.

#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "mvmc/common.hpp"

namespace mvmc {

enum class RewardSetting { ExactDepth, CumulativeDepth, PathIndependent };

std::string to_string(RewardSetting s);
RewardSetting reward_setting_from_string(const std::string& s);

struct StateSpace {
    std::vector<std::string> states;

    int size() const { return static_cast<int>(states.size()); }
    int index_of(const std::string& name) const;
    void validate() const;
};

struct TransitionMatrix {
    Eigen::MatrixXd rows;  // rows[s][s'] = P(s, s'), each row sums to 1

    void validate() const;         // throws on non-stochastic rows
    void renormalize_rows();       // construction-time drift cleanup only
};

// Paths are encoded as mixed-radix integers: path (s_0,...,s_L) over |S|
// states maps to sum_t s_t * |S|^(L-t).  Keys are only used where
// |S|^(L+1) fits comfortably in 64 bits (payloads are capped at 1e6
// entries anyway).
std::uint64_t encode_path(const std::vector<int>& path, int n_states);
std::vector<int> decode_path(std::uint64_t key, int n_states, int length);

using PathRewardMap = std::unordered_map<std::uint64_t, Eigen::VectorXd>;

inline constexpr std::uint64_t kMaxRewardEntries = 1000000;

struct RewardSpec {
    RewardSetting setting = RewardSetting::PathIndependent;
    int d = 1;
    double r_max = 1.0;  // lq bound on every stored reward vector
    double q = 2.0;      // norm index in [1, inf]
    double gamma = 1.0;  // discount (cumulative / path-independent)

    // Exactly one payload is populated, matching `setting`.
    PathRewardMap exact;                        // ExactDepth: S^{T+1} -> R^d
    std::vector<PathRewardMap> per_depth;       // CumulativeDepth: R^(t)
    std::vector<Eigen::VectorXd> state_rewards; // PathIndependent: S -> R^d
};

struct MrpInstance {
    StateSpace space;
    TransitionMatrix transitions;
    RewardSpec rewards;
    int s0 = 0;
    Depth T = Depth::finite(1);

    void validate() const;
    int n_states() const { return space.size(); }
};

struct ValueVector {
    Eigen::VectorXd v;
};

// V(s0): forward DP over occupation distributions for path-independent /
// cumulative rewards, full path enumeration for exact-depth rewards.
Eigen::VectorXd exact_value(const MrpInstance& inst,
                            std::optional<long long> truncate_at = {});

// Brute-force variant (path enumeration in every setting); used to
// cross-check the DP.  Requires at most `max_paths` positive-probability
// paths.
Eigen::VectorXd exact_value_by_enumeration(const MrpInstance& inst,
                                           std::optional<long long> truncate_at = {},
                                           std::uint64_t max_paths = 2000000);

// T* = min{T, 1/(1-gamma)} as an extended real.
double effective_depth(Depth T, double gamma);

// T_gamma = sum_{t=0}^{T} gamma^t, in closed form.  At gamma=1 this is the
// literal sum T+1.
double discount_sum(Depth T, double gamma);

// T_delta = min{T, ceil(T* ln(2/(delta(1-gamma))))}; at gamma=1 (finite T)
// the second branch is +inf and the result is T.
long long truncation_depth(Depth T, double gamma, double delta);

// Sample (s_0, ..., s_length) with the chain's path measure.
std::vector<int> sample_path(const MrpInstance& inst, long long length,
                             std::uint64_t rng_seed);

// Reward accrued by one concrete path under the instance's setting,
// discounted and truncated at the path's length.  Shared by the classical
// baseline and the enumeration oracle.
Eigen::VectorXd path_reward(const MrpInstance& inst,
                            const std::vector<int>& path);

}  // namespace mvmc
