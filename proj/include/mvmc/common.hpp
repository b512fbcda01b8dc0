// Shared small utilities: extended depth values, lq norms and their duals,
// deterministic counter-based randomness, and the error taxonomy.

#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>

namespace mvmc {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

// ---------------------------------------------------------------------------
// Errors.  One exception type per named failure mode so tests can match on
// the concrete class.
// ---------------------------------------------------------------------------
struct MvmcError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

#define MVMC_DEFINE_ERROR(Name)                  \
    struct Name : MvmcError {                    \
        using MvmcError::MvmcError;              \
    }

MVMC_DEFINE_ERROR(InfiniteDepthWithoutTruncation);
MVMC_DEFINE_ERROR(InconsistentRewardDomain);
MVMC_DEFINE_ERROR(InfiniteHorizonUndiscounted);
MVMC_DEFINE_ERROR(InvalidDelta);
MVMC_DEFINE_ERROR(GridTooLarge);
MVMC_DEFINE_ERROR(EmptySet);
MVMC_DEFINE_ERROR(NonPowerOfTwoHadamard);
MVMC_DEFINE_ERROR(NegativeRewardForAmplitudeOracle);
MVMC_DEFINE_ERROR(UnsupportedConversionEdge);
MVMC_DEFINE_ERROR(NonpositiveDelta);
MVMC_DEFINE_ERROR(NormDrift);
MVMC_DEFINE_ERROR(TrimTooAggressive);
MVMC_DEFINE_ERROR(DepthOverflow);
MVMC_DEFINE_ERROR(ParameterOutOfRange);
MVMC_DEFINE_ERROR(BitsOutsideDomain);
MVMC_DEFINE_ERROR(ConfigInvalid);
MVMC_DEFINE_ERROR(OutputUnwritable);
MVMC_DEFINE_ERROR(InsufficientPoints);

#undef MVMC_DEFINE_ERROR

// ---------------------------------------------------------------------------
// Depth in N ∪ {∞}.
// ---------------------------------------------------------------------------
struct Depth {
    long long t = 0;
    bool inf = false;

    static Depth finite(long long v) { return Depth{v, false}; }
    static Depth infinite() { return Depth{0, true}; }

    bool is_inf() const { return inf; }
    long long value() const {
        if (inf) throw MvmcError("Depth: value() on infinite depth");
        return t;
    }
    double as_double() const { return inf ? kInf : static_cast<double>(t); }
    bool operator==(const Depth& o) const {
        return inf == o.inf && (inf || t == o.t);
    }
};

// ---------------------------------------------------------------------------
// lq norms with q in [1, ∞].
// ---------------------------------------------------------------------------
// Dual index q* with 1/q + 1/q* = 1; dual(1)=∞, dual(∞)=1.
inline double dual_norm_index(double q) {
    if (q == 1.0) return kInf;
    if (std::isinf(q)) return 1.0;
    return q / (q - 1.0);
}

template <typename Vec>
double lq_norm(const Vec& v, double q) {
    const auto n = static_cast<long long>(v.size());
    if (std::isinf(q)) {
        double m = 0.0;
        for (long long i = 0; i < n; ++i) m = std::max(m, std::abs(v[i]));
        return m;
    }
    if (q == 1.0) {
        double s = 0.0;
        for (long long i = 0; i < n; ++i) s += std::abs(v[i]);
        return s;
    }
    if (q == 2.0) {
        double s = 0.0;
        for (long long i = 0; i < n; ++i) s += v[i] * v[i];
        return std::sqrt(s);
    }
    double s = 0.0;
    for (long long i = 0; i < n; ++i) s += std::pow(std::abs(v[i]), q);
    return std::pow(s, 1.0 / q);
}

// d^{1/p} etc. with p possibly ∞ (then the exponent is 0).
inline double dim_power(double d, double inv_of) {
    if (std::isinf(inv_of)) return 1.0;
    return std::pow(d, 1.0 / inv_of);
}

// ---------------------------------------------------------------------------
// Deterministic counter-based randomness (splitmix64 streams).
// Streams are keyed by hashing together (seed, trial, shot, ...) so that any
// (config, master seed) pair fully determines every sample regardless of
// scheduling.
// ---------------------------------------------------------------------------
inline std::uint64_t splitmix64_next(std::uint64_t& s) {
    s += 0x9e3779b97f4a7c15ULL;
    std::uint64_t z = s;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

inline std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b) {
    std::uint64_t s = a ^ (0x9e3779b97f4a7c15ULL + (b << 6) + (b >> 2));
    return splitmix64_next(s);
}

class CounterRng {
  public:
    explicit CounterRng(std::uint64_t seed) : state_(seed) {
        // Warm up so trivially related seeds decorrelate.
        splitmix64_next(state_);
        splitmix64_next(state_);
    }
    CounterRng(std::uint64_t seed, std::uint64_t stream)
        : CounterRng(mix_seed(seed, stream)) {}
    CounterRng(std::uint64_t seed, std::uint64_t a, std::uint64_t b)
        : CounterRng(mix_seed(mix_seed(seed, a), b)) {}

    std::uint64_t next_u64() { return splitmix64_next(state_); }

    // Uniform in [0, 1).
    double uniform() {
        return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    }
    // Uniform in [lo, hi).
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // Standard normal via Box–Muller.
    double gaussian() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        double u1 = 0.0;
        do {
            u1 = uniform();
        } while (u1 <= 0.0);
        const double u2 = uniform();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double th = 2.0 * M_PI * u2;
        spare_ = r * std::sin(th);
        have_spare_ = true;
        return r * std::cos(th);
    }

    // Uniform integer in [0, n).
    std::uint64_t below(std::uint64_t n) {
        // Rejection-free multiply-shift; bias is negligible for n << 2^64 and
        // the harness only needs determinism, not cryptographic uniformity.
        unsigned __int128 wide = static_cast<unsigned __int128>(next_u64());
        wide *= n;
        return static_cast<std::uint64_t>(wide >> 64);
    }

  private:
    std::uint64_t state_;
    bool have_spare_ = false;
    double spare_ = 0.0;
};

}  // namespace mvmc
