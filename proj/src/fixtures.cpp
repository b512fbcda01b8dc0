#include "mvmc/fixtures.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace mvmc {

std::string to_string(FixtureFamily f) {
    switch (f) {
        case FixtureFamily::SingleLoopPhase: return "single_loop_phase";
        case FixtureFamily::SingleLoopProbability:
            return "single_loop_probability";
        case FixtureFamily::SingleLoopDistribution:
            return "single_loop_distribution";
        case FixtureFamily::MajorityParity: return "majority_parity";
    }
    return "?";
}

FixtureFamily fixture_family_from_string(const std::string& s) {
    if (s == "single_loop_phase") return FixtureFamily::SingleLoopPhase;
    if (s == "single_loop_probability")
        return FixtureFamily::SingleLoopProbability;
    if (s == "single_loop_distribution")
        return FixtureFamily::SingleLoopDistribution;
    if (s == "majority_parity") return FixtureFamily::MajorityParity;
    throw ConfigInvalid("unknown fixture family: " + s);
}

// --- classical baseline ----------------------------------------------------

long long classical_sample_count(double B, double eps, double delta, int d) {
    return static_cast<long long>(std::ceil(
        2.0 * B * B / (eps * eps) * std::log(2.0 * d / delta)));
}

double classical_coordinate_bound(const MrpInstance& inst) {
    const RewardSpec& r = inst.rewards;
    if (r.setting == RewardSetting::ExactDepth) return r.r_max;
    return discount_sum(inst.T, r.gamma) * r.r_max;
}

Eigen::VectorXd classical_estimate(const MrpInstance& inst, double eps,
                                   double delta, std::uint64_t rng_seed) {
    const double B = classical_coordinate_bound(inst);
    const long long N = classical_sample_count(B, eps, delta, inst.rewards.d);
    const long long L = inst.T.is_inf()
                            ? truncation_depth(inst.T, inst.rewards.gamma, 1e-12)
                            : inst.T.value();
    Eigen::VectorXd sum = Eigen::VectorXd::Zero(inst.rewards.d);
    for (long long i = 0; i < N; ++i) {
        const auto path = sample_path(
            inst, L, mix_seed(rng_seed, static_cast<std::uint64_t>(i)));
        sum += path_reward(inst, path);
    }
    return sum / static_cast<double>(N);
}

// --- single-loop family ----------------------------------------------------

namespace {

Eigen::VectorXd single_loop_reward(FixtureFamily family,
                                   const std::vector<int>& b, int d,
                                   double eps, Depth T, double gamma, double q,
                                   double r_max) {
    if (static_cast<int>(b.size()) != d)
        throw ParameterOutOfRange("hidden bits must have length d");
    for (int x : b)
        if (x != 0 && x != 1)
            throw ParameterOutOfRange("hidden bits must be 0/1");
    if (eps <= 0.0 || eps >= d * r_max)
        throw ParameterOutOfRange("requires 0 < eps < d R_max");
    const double tg = discount_sum(T, gamma);
    const double step = 8.0 * eps / (tg * static_cast<double>(d));
    Eigen::VectorXd r(d);
    if (family == FixtureFamily::SingleLoopPhase) {
        for (int j = 0; j < d; ++j) r(j) = step * b[static_cast<std::size_t>(j)];
        if (lq_norm(r, q) > r_max + 1e-12)
            throw ParameterOutOfRange("reward exceeds the lq bound");
        return r;
    }
    const double dq = dim_power(static_cast<double>(d), q);
    const double offset = r_max / (2.0 * dq) - step;
    if (offset < 0.0)
        throw ParameterOutOfRange(
            "eps too large for the nonnegative offset family");
    for (int j = 0; j < d; ++j)
        r(j) = offset + step * b[static_cast<std::size_t>(j)];
    return r;
}

}  // namespace

MrpInstance single_loop_instance(FixtureFamily family,
                                 const std::vector<int>& b, int d, double eps,
                                 Depth T, double gamma, double q,
                                 double r_max) {
    if (family == FixtureFamily::MajorityParity)
        throw ParameterOutOfRange(
            "majority_parity_instance builds that family");
    MrpInstance inst;
    inst.space.states = {"s0"};
    inst.transitions.rows = Eigen::MatrixXd::Ones(1, 1);
    inst.s0 = 0;
    inst.T = T;
    inst.rewards.setting = RewardSetting::PathIndependent;
    inst.rewards.d = d;
    inst.rewards.q = q;
    inst.rewards.r_max = r_max;
    inst.rewards.gamma = gamma;
    inst.rewards.state_rewards = {
        single_loop_reward(family, b, d, eps, T, gamma, q, r_max)};
    inst.validate();
    return inst;
}

Eigen::VectorXd single_loop_value(FixtureFamily family,
                                  const std::vector<int>& b, int d, double eps,
                                  Depth T, double gamma, double q,
                                  double r_max) {
    return discount_sum(T, gamma) *
           single_loop_reward(family, b, d, eps, T, gamma, q, r_max);
}

// --- majority-of-parities gadget chain -------------------------------------

int majority_parity_t_prime(Depth T, double gamma) {
    const double tg = discount_sum(T, gamma);
    const long long inner =
        2 * (2 * static_cast<long long>(std::floor(tg / 4.0)) - 1);
    return static_cast<int>(std::max<long long>(32, inner));
}

namespace {

int gadget_bit(const std::vector<int>& b, int j, int l, int t, int k,
               int half) {
    return b[static_cast<std::size_t>((j * k + l) * half + t)];
}

// Parity of block (j, l) over its T'/2 bits.
int block_parity(const std::vector<int>& b, int j, int l, int k, int half) {
    int p = 0;
    for (int t = 0; t < half; ++t) p ^= gadget_bit(b, j, l, t, k, half);
    return p;
}

void check_gadget_shape(const std::vector<int>& b, int d, int k,
                        int t_prime) {
    if (k < 1 || k % 2 == 0)
        throw ParameterOutOfRange("k must be odd and positive");
    if (t_prime < 2 || t_prime % 2 != 0)
        throw ParameterOutOfRange("T' must be even and >= 2");
    const std::size_t want =
        static_cast<std::size_t>(d) * k * (t_prime / 2);
    if (b.size() != want)
        throw BitsOutsideDomain("wrong number of gadget bits");
    for (int x : b)
        if (x != 0 && x != 1) throw BitsOutsideDomain("bits must be 0/1");
}

Eigen::MatrixXd reward_rotation(int d, double q) {
    if (q <= 2.0) return Eigen::MatrixXd::Identity(d, d);
    const double scale =
        std::pow(static_cast<double>(d), 0.5 - (std::isinf(q) ? 0.0 : 1.0 / q));
    return scale * hadamard(d).m;
}

}  // namespace

bool majority_parity_domain_contains(const std::vector<int>& b, int d, int k,
                                     int t_prime) {
    check_gadget_shape(b, d, k, t_prime);
    const int half = t_prime / 2;
    for (int j = 0; j < d; ++j) {
        int s = 0;
        for (int l = 0; l < k; ++l) s += block_parity(b, j, l, k, half);
        if (s != k / 2 && s != (k + 1) / 2) return false;
    }
    return true;
}

Eigen::VectorXd majority_parity_c(const std::vector<int>& b, int d, int k,
                                  int t_prime) {
    check_gadget_shape(b, d, k, t_prime);
    const int half = t_prime / 2;
    Eigen::VectorXd c(d);
    for (int j = 0; j < d; ++j) {
        int s = 0;
        for (int l = 0; l < k; ++l) s += block_parity(b, j, l, k, half);
        c(j) = (s == (k + 1) / 2) ? 1.0 : 0.0;
    }
    return c;
}

std::vector<int> random_majority_parity_bits(int d, int k, int t_prime,
                                             std::uint64_t rng_seed) {
    const int half = t_prime / 2;
    CounterRng rng(rng_seed, 0x6d706269ULL);
    std::vector<int> b(static_cast<std::size_t>(d) * k * half, 0);
    for (int j = 0; j < d; ++j) {
        const int target = k / 2 + static_cast<int>(rng.next_u64() & 1);
        // Choose which blocks carry parity 1.
        std::vector<int> order(static_cast<std::size_t>(k));
        std::iota(order.begin(), order.end(), 0);
        for (int l = k - 1; l > 0; --l)
            std::swap(order[static_cast<std::size_t>(l)],
                      order[static_cast<std::size_t>(
                          rng.below(static_cast<std::uint64_t>(l + 1)))]);
        for (int pos = 0; pos < k; ++pos) {
            const int l = order[static_cast<std::size_t>(pos)];
            const int want = pos < target ? 1 : 0;
            int par = 0;
            for (int t = 0; t < half - 1; ++t) {
                const int bit = static_cast<int>(rng.next_u64() & 1);
                b[static_cast<std::size_t>((j * k + l) * half + t)] = bit;
                par ^= bit;
            }
            b[static_cast<std::size_t>((j * k + l) * half + half - 1)] =
                par ^ want;
        }
    }
    return b;
}

MrpInstance majority_parity_instance(const std::vector<int>& b, int d, int k,
                                     int t_prime, double q, double r_max) {
    if (!majority_parity_domain_contains(b, d, k, t_prime))
        throw BitsOutsideDomain("bits violate the row-majority constraint");
    const int half = t_prime / 2;
    const Eigen::MatrixXd o_prime = reward_rotation(d, q);

    // States: s0; per block (j,l): entry, layer nodes (t, parity), two
    // terminals.  The walk is deterministic past the first uniform split and
    // sits on its terminal for exactly T'/2 of the T'+2 time steps.
    const int per_block = 1 + 2 * half + 2;
    const int S = 1 + d * k * per_block;
    auto entry_id = [&](int j, int l) { return 1 + (j * k + l) * per_block; };
    auto layer_id = [&](int j, int l, int t, int par) {
        return entry_id(j, l) + 1 + 2 * t + par;  // t in [0, half)
    };
    auto terminal_id = [&](int j, int l, int par) {
        return entry_id(j, l) + 1 + 2 * half + par;
    };

    MrpInstance inst;
    inst.space.states.resize(static_cast<std::size_t>(S));
    inst.space.states[0] = "s0";
    for (int j = 0; j < d; ++j)
        for (int l = 0; l < k; ++l) {
            const std::string tag =
                std::to_string(j) + "." + std::to_string(l);
            inst.space.states[static_cast<std::size_t>(entry_id(j, l))] =
                "e" + tag;
            for (int t = 0; t < half; ++t)
                for (int par = 0; par < 2; ++par)
                    inst.space.states[static_cast<std::size_t>(
                        layer_id(j, l, t, par))] =
                        "l" + tag + "." + std::to_string(t) + "." +
                        std::to_string(par);
            for (int par = 0; par < 2; ++par)
                inst.space.states[static_cast<std::size_t>(
                    terminal_id(j, l, par))] =
                    "z" + tag + "." + std::to_string(par);
        }

    Eigen::MatrixXd P = Eigen::MatrixXd::Zero(S, S);
    const double split = 1.0 / static_cast<double>(d * k);
    for (int j = 0; j < d; ++j)
        for (int l = 0; l < k; ++l) {
            P(0, entry_id(j, l)) = split;
            // Entry applies the first XOR bit.
            P(entry_id(j, l),
              layer_id(j, l, 0, gadget_bit(b, j, l, 0, k, half))) = 1.0;
            for (int t = 0; t < half; ++t)
                for (int par = 0; par < 2; ++par) {
                    const int from = layer_id(j, l, t, par);
                    if (t + 1 < half) {
                        const int bit = gadget_bit(b, j, l, t + 1, k, half);
                        P(from, layer_id(j, l, t + 1, par ^ bit)) = 1.0;
                    } else {
                        P(from, terminal_id(j, l, par)) = 1.0;
                    }
                }
            for (int par = 0; par < 2; ++par)
                P(terminal_id(j, l, par), terminal_id(j, l, par)) = 1.0;
        }
    inst.transitions.rows = std::move(P);
    inst.s0 = 0;
    inst.T = Depth::finite(t_prime + 1);
    inst.rewards.setting = RewardSetting::PathIndependent;
    inst.rewards.d = d;
    inst.rewards.q = q;
    inst.rewards.r_max = r_max;
    inst.rewards.gamma = 1.0;
    inst.rewards.state_rewards.assign(static_cast<std::size_t>(S),
                                      Eigen::VectorXd::Zero(d));
    for (int j = 0; j < d; ++j)
        for (int l = 0; l < k; ++l)
            inst.rewards
                .state_rewards[static_cast<std::size_t>(terminal_id(j, l, 1))] =
                r_max * o_prime.col(j);
    inst.validate();
    return inst;
}

Eigen::VectorXd majority_parity_value(const std::vector<int>& b, int d, int k,
                                      int t_prime, double q, double r_max) {
    const Eigen::MatrixXd o_prime = reward_rotation(d, q);
    const Eigen::VectorXd c = majority_parity_c(b, d, k, t_prime);
    const double w = static_cast<double>(t_prime) * r_max /
                     (2.0 * static_cast<double>(d) * k);
    const double fl = std::floor(static_cast<double>(k) / 2.0);
    return w * fl * (o_prime * Eigen::VectorXd::Ones(d)) + w * (o_prime * c);
}

Eigen::VectorXd fixture_value(const HardInstanceDescriptor& desc) {
    if (desc.family == FixtureFamily::MajorityParity)
        return majority_parity_value(desc.bits, desc.d, desc.k, desc.t_prime,
                                     desc.q, desc.r_max);
    return single_loop_value(desc.family, desc.bits, desc.d, desc.eps, desc.T,
                             desc.gamma, desc.q, desc.r_max);
}

MrpInstance fixture_instance(const HardInstanceDescriptor& desc) {
    if (desc.family == FixtureFamily::MajorityParity)
        return majority_parity_instance(desc.bits, desc.d, desc.k,
                                        desc.t_prime, desc.q, desc.r_max);
    return single_loop_instance(desc.family, desc.bits, desc.d, desc.eps,
                                desc.T, desc.gamma, desc.q, desc.r_max);
}

Eigen::VectorXd candidate_value(const HardInstanceDescriptor& desc,
                                const std::vector<int>& x) {
    if (desc.family == FixtureFamily::MajorityParity) {
        const Eigen::MatrixXd o_prime = reward_rotation(desc.d, desc.q);
        Eigen::VectorXd c(desc.d);
        for (int j = 0; j < desc.d; ++j)
            c(j) = static_cast<double>(x[static_cast<std::size_t>(j)]);
        const double w = static_cast<double>(desc.t_prime) * desc.r_max /
                         (2.0 * static_cast<double>(desc.d) * desc.k);
        const double fl = std::floor(static_cast<double>(desc.k) / 2.0);
        return w * fl * (o_prime * Eigen::VectorXd::Ones(desc.d)) +
               w * (o_prime * c);
    }
    return single_loop_value(desc.family, x, desc.d, desc.eps, desc.T,
                             desc.gamma, desc.q, desc.r_max);
}

std::vector<int> high_overlap_decode(const Eigen::VectorXd& v,
                                     const HardInstanceDescriptor& desc,
                                     const OrthogonalMatrix& rotation,
                                     bool use_rounding_shortcut) {
    const int d = desc.d;
    if (use_rounding_shortcut) {
        // Valid when coordinates decouple: identity reward rotation and
        // identity estimation rotation.
        std::vector<int> zeros(static_cast<std::size_t>(d), 0);
        std::vector<int> probe = zeros;
        std::vector<int> best = zeros;
        const Eigen::VectorXd v0 = candidate_value(desc, zeros);
        for (int j = 0; j < d; ++j) {
            probe[static_cast<std::size_t>(j)] = 1;
            const Eigen::VectorXd v1 = candidate_value(desc, probe);
            probe[static_cast<std::size_t>(j)] = 0;
            best[static_cast<std::size_t>(j)] =
                std::abs(v(j) - v1(j)) < std::abs(v(j) - v0(j)) ? 1 : 0;
        }
        return best;
    }
    if (d > 20)
        throw MvmcError("exhaustive decode supports d <= 20");
    std::vector<int> best(static_cast<std::size_t>(d), 0);
    double best_score = std::numeric_limits<double>::infinity();
    std::vector<int> x(static_cast<std::size_t>(d), 0);
    for (std::uint64_t m = 0; m < (std::uint64_t(1) << d); ++m) {
        for (int j = 0; j < d; ++j)
            x[static_cast<std::size_t>(j)] = static_cast<int>((m >> j) & 1);
        const Eigen::VectorXd diff = v - candidate_value(desc, x);
        const double score = lq_norm((rotation.m * diff).eval(), 1.0);
        if (score < best_score) {
            best_score = score;
            best = x;
        }
    }
    return best;
}

}  // namespace mvmc
