#pragma once

#include <Eigen/Dense>
#include <complex>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "oscbath/rates.hpp"
#include "oscbath/spectral.hpp"

namespace oscbath {

// ---------------------------------------------------------------------------
// Bath discretization
// ---------------------------------------------------------------------------

struct BathMode {
    double omega;     // > 0
    double coupling;  // c_i, mass fixed to 1
};

struct DiscretizedBath {
    std::vector<BathMode> modes;
    int n_max = 1;  // Fock levels kept per mode

    // sum_i c_i^2 / omega_i; the discrete counterpart of (2/pi) int J dw
    double coupling_weight() const;
};

// Midpoint rule on [0, omega_max]: omega_i = (i - 1/2) dw and
// c_i^2 = (2/pi) omega_i J(omega_i) dw.
DiscretizedBath discretize(const SpectralDensity& spec, int n_modes,
                           double omega_max, int n_max);

// ---------------------------------------------------------------------------
// Spin bath sampling
// ---------------------------------------------------------------------------

struct SpinPair {
    int k1 = 0, k2 = 0;
    double v = 0.0;
};

struct DiscretizedSpinBath {
    std::vector<double> w_par;   // longitudinal couplings
    std::vector<double> w_perp;  // transverse couplings
    std::vector<SpinPair> pairs;

    // 2 sqrt(sum w_par^2); rescaled to equal the target width exactly
    double width() const;
};

// w_par drawn uniformly then rescaled so 2*sqrt(sum w_par^2) = xi0 exactly;
// w_perp = eta * w_par.  pair_scale > 0 adds ring sigma_z sigma_z couplings
// of magnitude ~ pair_scale * mean(w_par).  Deterministic given the seed.
DiscretizedSpinBath sample_spin_couplings(int n_spins, double xi0,
                                          std::uint64_t seed, double eta = 0.2,
                                          double pair_scale = 0.0);

// ---------------------------------------------------------------------------
// Hamiltonians
// ---------------------------------------------------------------------------

// Hermitian operator on complex states.  Index layout is system-major in
// every implementation: tau_z = +1 on the first half of the index range.
class LinearOperator {
  public:
    virtual ~LinearOperator() = default;
    virtual std::int64_t dim() const = 0;
    virtual void apply(const std::complex<double>* x, std::complex<double>* y,
                       int workers) const = 0;
    virtual Eigen::MatrixXd dense() const = 0;

    double tau_z_expectation(const Eigen::VectorXcd& psi) const;
};

// -(D/2) tau_x - (xi/2) tau_z + (tau_z/2) sum c_i x_i + sum (p^2/2 + w^2 x^2/2)
// in the truncated Fock basis, x = (a + a^dagger)/sqrt(2 w).  Matrix-free;
// apply() partitions elements across OpenMP workers, apply_serial() is the
// plain digit-walk reference kept for testing.
class SpinBosonHamiltonian : public LinearOperator {
  public:
    SpinBosonHamiltonian(const TwoLevelParams& params,
                         const DiscretizedBath& bath,
                         std::int64_t dim_cap = 200000);

    std::int64_t dim() const override { return dim_; }
    void apply(const std::complex<double>* x, std::complex<double>* y,
               int workers) const override;
    void apply_serial(const std::complex<double>* x,
                      std::complex<double>* y) const;
    Eigen::MatrixXd dense() const override;

    const std::vector<double>& diagonal() const { return diag_; }

  private:
    void apply_range(const std::complex<double>* x, std::complex<double>* y,
                     std::int64_t i0, std::int64_t i1) const;

    int n_modes_ = 0;
    int n_max_ = 1;
    std::int64_t block_ = 1;  // n_max^n_modes
    std::int64_t dim_ = 2;
    double half_delta_ = 0.0;
    std::vector<double> diag_;
    std::vector<double> hop_;      // c_i / (2 sqrt(2 w_i))
    std::vector<std::int64_t> stride_;
    std::vector<double> sqrt_dn_;  // sqrt(n), 0 at n = 0
    std::vector<double> sqrt_up_;  // sqrt(n+1), 0 at n = n_max-1
    std::vector<std::uint8_t> digits_;  // Fock occupation per (state, mode)
};

// -(D/2) tau_x - (xi/2) tau_z + tau_z sum_k w_par_k sz_k + sum_k w_perp_k sx_k
// + sum_pairs V sz_k sz_k'
class CentralSpinHamiltonian : public LinearOperator {
  public:
    CentralSpinHamiltonian(const TwoLevelParams& params,
                           const DiscretizedSpinBath& bath, int spin_cap = 12);

    std::int64_t dim() const override { return dim_; }
    void apply(const std::complex<double>* x, std::complex<double>* y,
               int workers) const override;
    Eigen::MatrixXd dense() const override;

    int n_spins() const { return n_spins_; }

    // basis state: system up, bath spins in a seed-determined z product state
    Eigen::VectorXcd product_initial_state(std::uint64_t seed) const;

  private:
    int n_spins_ = 0;
    std::int64_t dim_ = 2;
    std::int64_t block_ = 1;  // 2^n_spins
    double half_delta_ = 0.0;
    std::vector<double> diag_;
    std::vector<double> w_perp_;
};

// ---------------------------------------------------------------------------
// Time evolution
// ---------------------------------------------------------------------------

struct EvolutionResult {
    std::vector<double> times;
    std::vector<double> tau_z;
    double norm_drift = 0.0;    // max | ||psi|| - 1 |
    double energy_drift = 0.0;  // max |<H>(t) - <H>(0)| / energy scale
    // microcanonical long-time average of tau_z; dense path only
    std::optional<double> equilibrium;
};

struct EvolveOptions {
    std::int64_t dense_threshold = 2048;  // eigendecomposition below this
    int krylov_dim = 40;
    double step_tol = 1e-11;  // local Krylov error estimate per step
    int workers = 0;
    int energy_check_stride = 8;  // honest <H> matvec every k-th sample
};

// Exact unitary propagation of psi0 sampled on t_grid.  Dense path uses the
// eigendecomposition; large systems use adaptive-step Lanczos with interior
// samples taken from the same Krylov subspace.
EvolutionResult evolve(const LinearOperator& hamiltonian,
                       const Eigen::VectorXcd& psi0,
                       const std::vector<double>& t_grid,
                       const EvolveOptions& opt = {});

// ---------------------------------------------------------------------------
// Rate extraction
// ---------------------------------------------------------------------------

struct RateFit {
    double rate = 0.0;
    double rate_stderr = 0.0;
    double amplitude = 0.0;
    double offset = 0.0;
    bool oscillatory = false;
    std::string warning;  // non-fatal fit-quality notes
};

struct FitOptions {
    double transient_time = 0.0;
    double min_decay_factor = 2.718281828459045;
    bool envelope_fit = true;  // peak-envelope fit for oscillatory signals
};

// Least-squares fit of tau_z(t) - equilibrium to A exp(-rate t) over the
// window after the transient.  With no equilibrium given the offset is fitted
// as a free constant.  Oscillatory signals are fitted through the envelope of
// |tau_z - offset| peaks.  Throws InsufficientDecayError unless the envelope
// decays by at least min_decay_factor across the window.
RateFit extract_rate(const EvolutionResult& result,
                     std::optional<double> equilibrium,
                     const FitOptions& opt = {});

}  // namespace oscbath
