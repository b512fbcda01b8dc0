#include "mvmc/mrp.hpp"

#include <algorithm>
#include <cmath>

namespace mvmc {

std::string to_string(RewardSetting s) {
    switch (s) {
        case RewardSetting::ExactDepth: return "exact_depth";
        case RewardSetting::CumulativeDepth: return "cumulative_depth";
        case RewardSetting::PathIndependent: return "path_independent";
    }
    return "?";
}

RewardSetting reward_setting_from_string(const std::string& s) {
    if (s == "exact_depth") return RewardSetting::ExactDepth;
    if (s == "cumulative_depth") return RewardSetting::CumulativeDepth;
    if (s == "path_independent") return RewardSetting::PathIndependent;
    throw ConfigInvalid("unknown reward setting: " + s);
}

int StateSpace::index_of(const std::string& name) const {
    for (int i = 0; i < size(); ++i)
        if (states[i] == name) return i;
    throw MvmcError("unknown state: " + name);
}

void StateSpace::validate() const {
    if (states.empty()) throw MvmcError("state space must be nonempty");
}

void TransitionMatrix::validate() const {
    const auto n = rows.rows();
    if (n == 0 || rows.cols() != n)
        throw MvmcError("transition matrix must be square and nonempty");
    for (Eigen::Index i = 0; i < n; ++i) {
        double sum = 0.0;
        for (Eigen::Index j = 0; j < n; ++j) {
            const double p = rows(i, j);
            if (p < 0.0 || p > 1.0 + 1e-12)
                throw MvmcError("transition probability outside [0,1]");
            sum += p;
        }
        if (std::abs(sum - 1.0) > 1e-12)
            throw MvmcError("transition row does not sum to 1");
    }
}

void TransitionMatrix::renormalize_rows() {
    for (Eigen::Index i = 0; i < rows.rows(); ++i) {
        const double sum = rows.row(i).sum();
        if (sum > 0.0) rows.row(i) /= sum;
    }
}

std::uint64_t encode_path(const std::vector<int>& path, int n_states) {
    std::uint64_t key = 0;
    for (int s : path) {
        key = key * static_cast<std::uint64_t>(n_states) +
              static_cast<std::uint64_t>(s);
    }
    return key;
}

std::vector<int> decode_path(std::uint64_t key, int n_states, int length) {
    std::vector<int> path(static_cast<std::size_t>(length));
    for (int t = length - 1; t >= 0; --t) {
        path[static_cast<std::size_t>(t)] =
            static_cast<int>(key % static_cast<std::uint64_t>(n_states));
        key /= static_cast<std::uint64_t>(n_states);
    }
    return path;
}

void MrpInstance::validate() const {
    space.validate();
    transitions.validate();
    if (transitions.rows.rows() != space.size())
        throw MvmcError("transition matrix size != |S|");
    if (s0 < 0 || s0 >= space.size()) throw MvmcError("s0 outside state space");

    const RewardSpec& r = rewards;
    if (r.d < 1) throw MvmcError("reward dimension must be >= 1");
    if (r.q < 1.0) throw MvmcError("norm index q must be >= 1");
    if (r.gamma < 0.0 || r.gamma > 1.0)
        throw MvmcError("discount must lie in [0,1]");
    if (T.is_inf() && r.gamma >= 1.0)
        throw InfiniteHorizonUndiscounted("T=inf requires gamma<1");

    auto check_vec = [&](const Eigen::VectorXd& v) {
        if (v.size() != r.d)
            throw InconsistentRewardDomain("reward vector has wrong dimension");
        if (lq_norm(v, r.q) > r.r_max + 1e-9)
            throw MvmcError("reward vector exceeds the lq bound R_max");
    };

    switch (r.setting) {
        case RewardSetting::PathIndependent:
            if (static_cast<int>(r.state_rewards.size()) != space.size())
                throw InconsistentRewardDomain(
                    "path-independent payload must cover every state");
            for (const auto& v : r.state_rewards) check_vec(v);
            break;
        case RewardSetting::CumulativeDepth: {
            if (T.is_inf())
                throw InconsistentRewardDomain(
                    "cumulative-depth payload cannot cover T=inf");
            if (static_cast<long long>(r.per_depth.size()) != T.value() + 1)
                throw InconsistentRewardDomain(
                    "cumulative payload must have T+1 per-depth maps");
            std::uint64_t total = 0;
            for (const auto& m : r.per_depth) {
                total += m.size();
                for (const auto& [k, v] : m) check_vec(v);
            }
            if (total > kMaxRewardEntries)
                throw MvmcError("cumulative reward payload exceeds cap");
            break;
        }
        case RewardSetting::ExactDepth:
            if (T.is_inf())
                throw InconsistentRewardDomain(
                    "exact-depth payload cannot cover T=inf");
            if (r.exact.size() > kMaxRewardEntries)
                throw MvmcError("exact-depth reward payload exceeds cap");
            for (const auto& [k, v] : r.exact) check_vec(v);
            break;
    }
}

double effective_depth(Depth T, double gamma) {
    if (T.is_inf() && gamma >= 1.0)
        throw InfiniteHorizonUndiscounted("T* undefined for T=inf, gamma=1");
    const double horizon = gamma < 1.0 ? 1.0 / (1.0 - gamma) : kInf;
    return std::min(T.as_double(), horizon);
}

double discount_sum(Depth T, double gamma) {
    if (T.is_inf()) {
        if (gamma >= 1.0)
            throw InfiniteHorizonUndiscounted(
                "T_gamma diverges for T=inf, gamma=1");
        return 1.0 / (1.0 - gamma);
    }
    // The sum definition is authoritative: at gamma=1 it evaluates to T+1.
    if (gamma == 1.0) return static_cast<double>(T.value() + 1);
    return (1.0 - std::pow(gamma, static_cast<double>(T.value() + 1))) /
           (1.0 - gamma);
}

long long truncation_depth(Depth T, double gamma, double delta) {
    if (delta <= 0.0 || delta >= 2.0)
        throw InvalidDelta("truncation_depth requires 0 < delta < 2");
    if (gamma >= 1.0) {
        if (T.is_inf())
            throw InfiniteHorizonUndiscounted(
                "T_delta undefined for T=inf, gamma=1");
        return T.value();  // the log term is +inf; min picks T
    }
    const double tstar = effective_depth(T, gamma);
    const double arg = std::log(2.0 / (delta * (1.0 - gamma)));
    const double cand = std::ceil(tstar * std::max(arg, 0.0));
    if (T.is_inf()) return static_cast<long long>(cand);
    return std::min<long long>(T.value(), static_cast<long long>(cand));
}

namespace {

const Eigen::VectorXd& lookup_reward(const PathRewardMap& m, std::uint64_t key,
                                     const char* what) {
    auto it = m.find(key);
    if (it == m.end())
        throw InconsistentRewardDomain(std::string("missing reward for ") +
                                       what);
    return it->second;
}

// Occupation-distribution DP for the path-independent setting over depths
// 0..L inclusive.
Eigen::VectorXd value_path_independent(const MrpInstance& inst, long long L) {
    const int S = inst.n_states();
    const int d = inst.rewards.d;
    Eigen::VectorXd dist = Eigen::VectorXd::Zero(S);
    dist(inst.s0) = 1.0;
    Eigen::VectorXd v = Eigen::VectorXd::Zero(d);
    double g = 1.0;
    for (long long t = 0; t <= L; ++t) {
        for (int s = 0; s < S; ++s) {
            if (dist(s) != 0.0)
                v += (g * dist(s)) * inst.rewards.state_rewards[s];
        }
        if (t < L) {
            dist = inst.transitions.rows.transpose() * dist;
            g *= inst.rewards.gamma;
        }
    }
    return v;
}

// Closed-form discounted occupation for T=inf, gamma<1:
//   V = R^T (I - gamma P^T)^{-1} e_{s0}
Eigen::VectorXd value_path_independent_closed(const MrpInstance& inst) {
    const int S = inst.n_states();
    const int d = inst.rewards.d;
    Eigen::MatrixXd A = Eigen::MatrixXd::Identity(S, S) -
                        inst.rewards.gamma * inst.transitions.rows.transpose();
    Eigen::VectorXd e0 = Eigen::VectorXd::Zero(S);
    e0(inst.s0) = 1.0;
    const Eigen::VectorXd occ = A.partialPivLu().solve(e0);
    Eigen::VectorXd v = Eigen::VectorXd::Zero(d);
    for (int s = 0; s < S; ++s)
        if (occ(s) != 0.0) v += occ(s) * inst.rewards.state_rewards[s];
    return v;
}

// Prefix-distribution DP for the cumulative setting: carries the exact
// distribution over positive-probability prefixes.
Eigen::VectorXd value_cumulative(const MrpInstance& inst, long long L) {
    const int S = inst.n_states();
    const int d = inst.rewards.d;
    std::vector<std::pair<std::uint64_t, double>> prefixes{
        {static_cast<std::uint64_t>(inst.s0), 1.0}};
    Eigen::VectorXd v = Eigen::VectorXd::Zero(d);
    double g = 1.0;
    for (long long t = 0; t <= L; ++t) {
        const auto& layer =
            inst.rewards.per_depth[static_cast<std::size_t>(t)];
        for (const auto& [key, prob] : prefixes)
            v += (g * prob) * lookup_reward(layer, key, "path prefix");
        if (t < L) {
            std::vector<std::pair<std::uint64_t, double>> next;
            next.reserve(prefixes.size() * 2);
            for (const auto& [key, prob] : prefixes) {
                const int last = static_cast<int>(
                    key % static_cast<std::uint64_t>(S));
                for (int s2 = 0; s2 < S; ++s2) {
                    const double p = inst.transitions.rows(last, s2);
                    if (p > 0.0)
                        next.emplace_back(
                            key * static_cast<std::uint64_t>(S) +
                                static_cast<std::uint64_t>(s2),
                            prob * p);
                }
            }
            if (next.size() > 4 * kMaxRewardEntries)
                throw DepthOverflow("cumulative prefix tree too large");
            prefixes = std::move(next);
            g *= inst.rewards.gamma;
        }
    }
    return v;
}

Eigen::VectorXd value_exact_depth(const MrpInstance& inst) {
    const int S = inst.n_states();
    const int d = inst.rewards.d;
    const long long T = inst.T.value();
    Eigen::VectorXd v = Eigen::VectorXd::Zero(d);
    // DFS over positive-probability paths of length T+1.
    std::vector<int> path;
    path.reserve(static_cast<std::size_t>(T + 1));
    std::uint64_t visited = 0;
    auto rec = [&](auto&& self, int s, double prob, long long t,
                   std::uint64_t key) -> void {
        if (t == T) {
            if (++visited > 4 * kMaxRewardEntries)
                throw DepthOverflow("exact-depth path enumeration too large");
            v += prob * lookup_reward(inst.rewards.exact, key, "path");
            return;
        }
        for (int s2 = 0; s2 < S; ++s2) {
            const double p = inst.transitions.rows(s, s2);
            if (p > 0.0)
                self(self, s2, prob * p, t + 1,
                     key * static_cast<std::uint64_t>(S) +
                         static_cast<std::uint64_t>(s2));
        }
    };
    rec(rec, inst.s0, 1.0, 0, static_cast<std::uint64_t>(inst.s0));
    return v;
}

long long resolve_horizon(const MrpInstance& inst,
                          std::optional<long long> truncate_at) {
    if (!inst.T.is_inf()) {
        long long L = inst.T.value();
        if (truncate_at) L = std::min(L, *truncate_at);
        return L;
    }
    if (truncate_at) return *truncate_at;
    // T=inf, no explicit truncation: machine-precision default.
    return truncation_depth(inst.T, inst.rewards.gamma, 1e-12);
}

}  // namespace

Eigen::VectorXd exact_value(const MrpInstance& inst,
                            std::optional<long long> truncate_at) {
    switch (inst.rewards.setting) {
        case RewardSetting::PathIndependent:
            if (inst.T.is_inf() && !truncate_at) {
                if (inst.rewards.gamma >= 1.0)
                    throw InfiniteDepthWithoutTruncation(
                        "T=inf and gamma=1: supply truncate_at");
                return value_path_independent_closed(inst);
            }
            return value_path_independent(inst, resolve_horizon(inst, truncate_at));
        case RewardSetting::CumulativeDepth:
            return value_cumulative(inst, resolve_horizon(inst, truncate_at));
        case RewardSetting::ExactDepth:
            return value_exact_depth(inst);
    }
    throw MvmcError("unreachable");
}

Eigen::VectorXd path_reward(const MrpInstance& inst,
                            const std::vector<int>& path) {
    const RewardSpec& r = inst.rewards;
    const int S = inst.n_states();
    Eigen::VectorXd v = Eigen::VectorXd::Zero(r.d);
    switch (r.setting) {
        case RewardSetting::PathIndependent: {
            double g = 1.0;
            for (std::size_t t = 0; t < path.size(); ++t) {
                v += g * r.state_rewards[static_cast<std::size_t>(path[t])];
                g *= r.gamma;
            }
            return v;
        }
        case RewardSetting::CumulativeDepth: {
            double g = 1.0;
            std::uint64_t key = 0;
            for (std::size_t t = 0; t < path.size(); ++t) {
                key = key * static_cast<std::uint64_t>(S) +
                      static_cast<std::uint64_t>(path[t]);
                if (t < r.per_depth.size())
                    v += g * lookup_reward(r.per_depth[t], key, "path prefix");
                g *= r.gamma;
            }
            return v;
        }
        case RewardSetting::ExactDepth:
            return lookup_reward(r.exact, encode_path(path, S), "path");
    }
    throw MvmcError("unreachable");
}

Eigen::VectorXd exact_value_by_enumeration(const MrpInstance& inst,
                                           std::optional<long long> truncate_at,
                                           std::uint64_t max_paths) {
    const long long L = inst.rewards.setting == RewardSetting::ExactDepth
                            ? inst.T.value()
                            : resolve_horizon(inst, truncate_at);
    const int S = inst.n_states();
    Eigen::VectorXd v = Eigen::VectorXd::Zero(inst.rewards.d);
    std::uint64_t visited = 0;
    std::vector<int> path;
    path.reserve(static_cast<std::size_t>(L + 1));
    auto rec = [&](auto&& self, int s, double prob, long long t) -> void {
        path.push_back(s);
        if (t == L) {
            if (++visited > max_paths)
                throw DepthOverflow("path enumeration exceeds max_paths");
            v += prob * path_reward(inst, path);
        } else {
            for (int s2 = 0; s2 < S; ++s2) {
                const double p = inst.transitions.rows(s, s2);
                if (p > 0.0) self(self, s2, prob * p, t + 1);
            }
        }
        path.pop_back();
    };
    rec(rec, inst.s0, 1.0, 0);
    return v;
}

std::vector<int> sample_path(const MrpInstance& inst, long long length,
                             std::uint64_t rng_seed) {
    CounterRng rng(rng_seed);
    const int S = inst.n_states();
    std::vector<int> path;
    path.reserve(static_cast<std::size_t>(length + 1));
    int s = inst.s0;
    path.push_back(s);
    for (long long t = 0; t < length; ++t) {
        const double u = rng.uniform();
        double acc = 0.0;
        int next = S - 1;  // guard against rounding at u ~ 1
        for (int s2 = 0; s2 < S; ++s2) {
            acc += inst.transitions.rows(s, s2);
            if (u < acc) {
                next = s2;
                break;
            }
        }
        s = next;
        path.push_back(s);
    }
    return path;
}

}  // namespace mvmc
