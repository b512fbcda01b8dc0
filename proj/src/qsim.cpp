#include "mvmc/qsim.hpp"

#include <cmath>

namespace mvmc {

StateVector StateVector::uniform_over_register(RegisterLayout l,
                                               std::size_t reg) {
    StateVector sv = zero_state(std::move(l));
    const std::uint64_t dim = sv.layout.dims[reg];
    const std::uint64_t stride = sv.layout.stride(reg);
    const double a = 1.0 / std::sqrt(static_cast<double>(dim));
    sv.amp[0] = cplx(0.0);
    for (std::uint64_t k = 0; k < dim; ++k)
        sv.amp[static_cast<std::size_t>(k * stride)] = cplx(a);
    return sv;
}

double StateVector::norm() const {
    double s = 0.0;
    for (const cplx& a : amp) s += std::norm(a);
    return std::sqrt(s);
}

void StateVector::check_norm(double tol) const {
    if (std::abs(norm() - 1.0) > tol)
        throw NormDrift("statevector norm drifted beyond tolerance");
}

void apply_branch_unitary(StateVector& psi,
                          const std::function<void(std::uint64_t,
                                                   std::span<cplx>)>& op) {
    const std::uint64_t branches = psi.layout.dims[0];
    const std::uint64_t block = psi.layout.stride(0);
    for (std::uint64_t b = 0; b < branches; ++b)
        op(b, std::span<cplx>(psi.amp.data() + b * block,
                              static_cast<std::size_t>(block)));
    psi.check_norm();
}

void apply_branch_diagonal(StateVector& psi,
                           const std::function<double(std::uint64_t)>& phase) {
    apply_branch_unitary(psi, [&](std::uint64_t b, std::span<cplx> block) {
        const cplx f = std::polar(1.0, phase(b));
        for (cplx& a : block) a *= f;
    });
}

namespace {

// Iterative radix-2 FFT with kernel e^{sign * 2 pi i mk/N}, then 1/sqrt(N).
void fft_pow2(std::span<cplx> a, int sign) {
    const std::size_t n = a.size();
    if (n == 0 || (n & (n - 1)) != 0)
        throw MvmcError("fft length must be a power of two");
    // Bit reversal.
    for (std::size_t i = 1, j = 0; i < n; ++i) {
        std::size_t bit = n >> 1;
        for (; j & bit; bit >>= 1) j ^= bit;
        j ^= bit;
        if (i < j) std::swap(a[i], a[j]);
    }
    for (std::size_t len = 2; len <= n; len <<= 1) {
        const double ang = sign * 2.0 * M_PI / static_cast<double>(len);
        const cplx wl = std::polar(1.0, ang);
        for (std::size_t i = 0; i < n; i += len) {
            cplx w(1.0);
            for (std::size_t k = 0; k < len / 2; ++k) {
                const cplx u = a[i + k];
                const cplx v = a[i + k + len / 2] * w;
                a[i + k] = u + v;
                a[i + k + len / 2] = u - v;
                w *= wl;
            }
        }
    }
    const double norm = 1.0 / std::sqrt(static_cast<double>(n));
    for (cplx& x : a) x *= norm;
}

void qft_on_register(StateVector& psi, std::size_t reg, int sign) {
    const std::uint64_t dim = psi.layout.dims[reg];
    if ((dim & (dim - 1)) != 0)
        throw MvmcError("qft register dimension must be a power of two");
    const std::uint64_t stride = psi.layout.stride(reg);
    const std::uint64_t total = psi.layout.total_dim();
    const std::uint64_t outer = total / (dim * stride);
    std::vector<cplx> buf(static_cast<std::size_t>(dim));
    for (std::uint64_t o = 0; o < outer; ++o) {
        for (std::uint64_t s = 0; s < stride; ++s) {
            const std::uint64_t base = o * dim * stride + s;
            for (std::uint64_t k = 0; k < dim; ++k)
                buf[static_cast<std::size_t>(k)] =
                    psi.amp[static_cast<std::size_t>(base + k * stride)];
            fft_pow2(buf, sign);
            for (std::uint64_t k = 0; k < dim; ++k)
                psi.amp[static_cast<std::size_t>(base + k * stride)] =
                    buf[static_cast<std::size_t>(k)];
        }
    }
}

}  // namespace

void inverse_dft(std::span<cplx> a) { fft_pow2(a, -1); }
void forward_dft(std::span<cplx> a) { fft_pow2(a, +1); }

void inverse_qft(StateVector& psi, std::size_t reg) {
    qft_on_register(psi, reg, -1);
}

void forward_qft(StateVector& psi, std::size_t reg) {
    qft_on_register(psi, reg, +1);
}

namespace {

std::vector<double> marginal(const StateVector& psi, std::size_t reg) {
    const std::uint64_t dim = psi.layout.dims[reg];
    const std::uint64_t stride = psi.layout.stride(reg);
    std::vector<double> probs(static_cast<std::size_t>(dim), 0.0);
    for (std::uint64_t i = 0; i < psi.layout.total_dim(); ++i) {
        const std::uint64_t k = (i / stride) % dim;
        probs[static_cast<std::size_t>(k)] +=
            std::norm(psi.amp[static_cast<std::size_t>(i)]);
    }
    return probs;
}

std::uint64_t sample_from(const std::vector<double>& probs, CounterRng& rng) {
    const double u = rng.uniform();
    double acc = 0.0;
    for (std::size_t k = 0; k < probs.size(); ++k) {
        acc += probs[k];
        if (u < acc) return static_cast<std::uint64_t>(k);
    }
    return static_cast<std::uint64_t>(probs.size() - 1);
}

}  // namespace

std::uint64_t sample_register(const StateVector& psi, std::size_t reg,
                              CounterRng& rng) {
    return sample_from(marginal(psi, reg), rng);
}

std::uint64_t measure(StateVector& psi, std::size_t reg, CounterRng& rng) {
    const auto probs = marginal(psi, reg);
    const std::uint64_t outcome = sample_from(probs, rng);
    const std::uint64_t dim = psi.layout.dims[reg];
    const std::uint64_t stride = psi.layout.stride(reg);
    const double scale =
        1.0 / std::sqrt(probs[static_cast<std::size_t>(outcome)]);
    for (std::uint64_t i = 0; i < psi.layout.total_dim(); ++i) {
        const std::uint64_t k = (i / stride) % dim;
        auto& a = psi.amp[static_cast<std::size_t>(i)];
        a = (k == outcome) ? a * scale : cplx(0.0);
    }
    psi.check_norm();
    return outcome;
}

long long interpret_signed(std::uint64_t outcome, int n) {
    const std::uint64_t dim = std::uint64_t(1) << n;
    if (outcome >= dim) throw MvmcError("outcome outside register range");
    const std::uint64_t half = dim >> 1;
    return outcome < half ? static_cast<long long>(outcome)
                          : static_cast<long long>(outcome) -
                                static_cast<long long>(dim);
}

void QueryCounter::add(CounterKind kind, std::uint64_t calls) {
    switch (kind) {
        case CounterKind::Transition: transition_ += calls; break;
        case CounterKind::PhaseReward: phase_ += calls; break;
        case CounterKind::ProbabilityReward: probability_ += calls; break;
        case CounterKind::DistributionReward: distribution_ += calls; break;
        case CounterKind::LatticeReward: lattice_ += calls; break;
        case CounterKind::DerivedLattice: derived_lattice_ += calls; break;
        case CounterKind::ValueOracle: value_oracle_ += calls; break;
    }
}

CounterSnapshot QueryCounter::snapshot() const {
    CounterSnapshot s;
    s.transition = transition_.load();
    s.phase = phase_.load();
    s.probability = probability_.load();
    s.distribution = distribution_.load();
    s.lattice = lattice_.load();
    s.derived_lattice = derived_lattice_.load();
    s.value_oracle = value_oracle_.load();
    return s;
}

void QueryCounter::reset() {
    transition_ = phase_ = probability_ = distribution_ = lattice_ =
        derived_lattice_ = value_oracle_ = 0;
}

}  // namespace mvmc
