// Minimal statevector engine specialized to the pipeline's register
// structure.  Register 0 is conventionally the branch (grid) register; the
// layout stores registers slowest-first, so branch blocks are contiguous.

#pragma once

#include <atomic>
#include <complex>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "mvmc/common.hpp"

namespace mvmc {

using cplx = std::complex<double>;

struct RegisterLayout {
    std::vector<std::string> names;
    std::vector<std::uint64_t> dims;

    void add(std::string name, std::uint64_t dim) {
        if (dim == 0) throw MvmcError("register must be nonempty");
        names.push_back(std::move(name));
        dims.push_back(dim);
    }
    std::size_t count() const { return dims.size(); }
    std::uint64_t total_dim() const {
        std::uint64_t t = 1;
        for (auto d : dims) t *= d;
        return t;
    }
    // Product of dims of registers after `reg` (the index stride of `reg`).
    std::uint64_t stride(std::size_t reg) const {
        std::uint64_t s = 1;
        for (std::size_t i = reg + 1; i < dims.size(); ++i) s *= dims[i];
        return s;
    }
};

struct StateVector {
    RegisterLayout layout;
    std::vector<cplx> amp;

    static StateVector zero_state(RegisterLayout l) {
        StateVector sv{std::move(l), {}};
        sv.amp.assign(static_cast<std::size_t>(sv.layout.total_dim()), cplx(0.0));
        sv.amp[0] = cplx(1.0);
        return sv;
    }
    static StateVector uniform_over_register(RegisterLayout l, std::size_t reg);

    double norm() const;
    void check_norm(double tol = 1e-9) const;  // throws NormDrift
};

// Applies an independent unitary to every branch subspace (register 0).
// The callback receives the contiguous amplitude block of one branch.
void apply_branch_unitary(StateVector& psi,
                          const std::function<void(std::uint64_t branch,
                                                   std::span<cplx> block)>& op);

// Diagonal special case: multiplies branch `b` by phase factor exp(i phase(b)).
void apply_branch_diagonal(StateVector& psi,
                           const std::function<double(std::uint64_t branch)>& phase);

// Exact inverse DFT (unitary normalization, kernel e^{-2 pi i mk/N}/sqrt(N))
// on one register whose dimension is a power of two.
void inverse_qft(StateVector& psi, std::size_t reg);
void forward_qft(StateVector& psi, std::size_t reg);

// In-place transforms on a raw power-of-two-length buffer (stride 1).
void inverse_dft(std::span<cplx> a);
void forward_dft(std::span<cplx> a);

// Born-rule measurement of one register; collapses and renormalizes.
std::uint64_t measure(StateVector& psi, std::size_t reg, CounterRng& rng);

// Sample an outcome for one register without collapsing (marginal sampling).
std::uint64_t sample_register(const StateVector& psi, std::size_t reg,
                              CounterRng& rng);

// Two's-complement reinterpretation of an n-bit outcome.
long long interpret_signed(std::uint64_t outcome, int n);

// ---------------------------------------------------------------------------
// Query accounting.  Tallies are atomic so concurrent trial workers can share
// one counter; charging is per call and deliberately ignorant of injected
// error (cost is paid whether or not the operation was perturbed).
// ---------------------------------------------------------------------------
enum class CounterKind {
    Transition,       // D_P
    PhaseReward,
    ProbabilityReward,
    DistributionReward,
    LatticeReward,    // base lattice-access oracle
    DerivedLattice,   // converted / synthesized lattice oracles
    ValueOracle,      // applications of the value operation
};

struct CounterSnapshot {
    std::uint64_t transition = 0;
    std::uint64_t phase = 0;
    std::uint64_t probability = 0;
    std::uint64_t distribution = 0;
    std::uint64_t lattice = 0;
    std::uint64_t derived_lattice = 0;
    std::uint64_t value_oracle = 0;

    std::uint64_t reward_base_total() const {
        return phase + probability + distribution + lattice;
    }
    bool operator==(const CounterSnapshot&) const = default;
};

class QueryCounter {
  public:
    void add(CounterKind kind, std::uint64_t calls);
    CounterSnapshot snapshot() const;
    void reset();

  private:
    std::atomic<std::uint64_t> transition_{0}, phase_{0}, probability_{0},
        distribution_{0}, lattice_{0}, derived_lattice_{0}, value_oracle_{0};
};

}  // namespace mvmc
