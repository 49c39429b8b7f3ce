#include "oscbath/ed.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "oscbath/errors.hpp"
#include "oscbath/parallel.hpp"
#include "oscbath/rng.hpp"

namespace oscbath {

namespace {

constexpr double kPi = 3.14159265358979323846;
using Cplx = std::complex<double>;

// Deterministic reductions: fixed 8192-element blocks summed in order, so the
// result is independent of the worker count.
constexpr std::int64_t kBlock = 8192;

double block_sum(const double* partial, std::int64_t n_blocks) {
    double s = 0.0;
    for (std::int64_t b = 0; b < n_blocks; ++b) s += partial[b];
    return s;
}

Cplx dot(const Eigen::VectorXcd& a, const Eigen::VectorXcd& b, int workers) {
    const std::int64_t n = a.size();
    const std::int64_t n_blocks = (n + kBlock - 1) / kBlock;
    std::vector<Cplx> partial(static_cast<std::size_t>(n_blocks));
    parallel_for_index(n_blocks, workers, [&](std::int64_t blk) {
        const std::int64_t lo = blk * kBlock;
        const std::int64_t hi = std::min(n, lo + kBlock);
        Cplx s = 0.0;
        for (std::int64_t i = lo; i < hi; ++i)
            s += std::conj(a[i]) * b[i];
        partial[static_cast<std::size_t>(blk)] = s;
    });
    Cplx total = 0.0;
    for (const Cplx& p : partial) total += p;
    return total;
}

double squared_norm(const Eigen::VectorXcd& a, int workers) {
    const std::int64_t n = a.size();
    const std::int64_t n_blocks = (n + kBlock - 1) / kBlock;
    std::vector<double> partial(static_cast<std::size_t>(n_blocks));
    parallel_for_index(n_blocks, workers, [&](std::int64_t blk) {
        const std::int64_t lo = blk * kBlock;
        const std::int64_t hi = std::min(n, lo + kBlock);
        double s = 0.0;
        for (std::int64_t i = lo; i < hi; ++i) s += std::norm(a[i]);
        partial[static_cast<std::size_t>(blk)] = s;
    });
    return block_sum(partial.data(), n_blocks);
}

}  // namespace

// ---------------------------------------------------------------------------
// Discretization
// ---------------------------------------------------------------------------

double DiscretizedBath::coupling_weight() const {
    double s = 0.0;
    for (const auto& m : modes) s += m.coupling * m.coupling / m.omega;
    return s;
}

DiscretizedBath discretize(const SpectralDensity& spec, int n_modes,
                           double omega_max, int n_max) {
    if (n_modes < 1)
        throw std::invalid_argument("discretize: n_modes must be >= 1");
    if (!(omega_max > 0.0))
        throw std::invalid_argument("discretize: omega_max must be > 0");
    if (n_max < 1)
        throw std::invalid_argument("discretize: n_max must be >= 1");
    DiscretizedBath bath;
    bath.n_max = n_max;
    const double dw = omega_max / n_modes;
    bath.modes.reserve(static_cast<std::size_t>(n_modes));
    for (int i = 0; i < n_modes; ++i) {
        const double w = (i + 0.5) * dw;
        const double c2 = (2.0 / kPi) * w * spec(w) * dw;
        bath.modes.push_back({w, std::sqrt(c2)});
    }
    return bath;
}

double DiscretizedSpinBath::width() const {
    double s = 0.0;
    for (double w : w_par) s += w * w;
    return 2.0 * std::sqrt(s);
}

DiscretizedSpinBath sample_spin_couplings(int n_spins, double xi0,
                                          std::uint64_t seed, double eta,
                                          double pair_scale) {
    if (n_spins < 1)
        throw std::invalid_argument("sample_spin_couplings: n_spins >= 1");
    if (!(xi0 > 0.0))
        throw std::invalid_argument("sample_spin_couplings: xi0 must be > 0");
    Rng rng(seed);
    DiscretizedSpinBath bath;
    bath.w_par.resize(static_cast<std::size_t>(n_spins));
    double sum_sq = 0.0;
    do {
        sum_sq = 0.0;
        for (double& w : bath.w_par) {
            w = rng.uniform();
            sum_sq += w * w;
        }
    } while (sum_sq == 0.0);
    const double rescale = xi0 / (2.0 * std::sqrt(sum_sq));
    double mean_w = 0.0;
    for (double& w : bath.w_par) {
        w *= rescale;
        mean_w += w / n_spins;
    }
    bath.w_perp.resize(bath.w_par.size());
    for (std::size_t k = 0; k < bath.w_par.size(); ++k)
        bath.w_perp[k] = eta * bath.w_par[k];
    if (pair_scale > 0.0 && n_spins > 1) {
        for (int k = 0; k < n_spins; ++k) {
            bath.pairs.push_back(
                {k, (k + 1) % n_spins,
                 pair_scale * mean_w * rng.uniform(-1.0, 1.0)});
        }
    }
    return bath;
}

// ---------------------------------------------------------------------------
// Operators
// ---------------------------------------------------------------------------

double LinearOperator::tau_z_expectation(const Eigen::VectorXcd& psi) const {
    const std::int64_t half = dim() / 2;
    double up = 0.0, dn = 0.0;
    for (std::int64_t i = 0; i < half; ++i) up += std::norm(psi[i]);
    for (std::int64_t i = half; i < dim(); ++i) dn += std::norm(psi[i]);
    return up - dn;
}

SpinBosonHamiltonian::SpinBosonHamiltonian(const TwoLevelParams& params,
                                           const DiscretizedBath& bath,
                                           std::int64_t dim_cap) {
    if (!(params.delta >= 0.0) || !std::isfinite(params.delta) ||
        !std::isfinite(params.xi))
        throw std::invalid_argument("spin-boson: bad two-level parameters");
    if (bath.n_max < 1)
        throw std::invalid_argument("spin-boson: n_max must be >= 1");
    n_modes_ = static_cast<int>(bath.modes.size());
    n_max_ = bath.n_max;
    block_ = 1;
    for (int j = 0; j < n_modes_; ++j) {
        if (block_ > dim_cap) break;
        block_ *= n_max_;
    }
    dim_ = 2 * block_;
    if (dim_ > dim_cap)
        throw ResourceLimitError(
            "spin-boson dimension 2*n_max^n_modes exceeds the configured cap");

    half_delta_ = 0.5 * params.delta;
    stride_.resize(static_cast<std::size_t>(n_modes_));
    hop_.resize(static_cast<std::size_t>(n_modes_));
    std::int64_t stride = 1;
    double zero_point = 0.0;
    for (int j = 0; j < n_modes_; ++j) {
        const auto& m = bath.modes[static_cast<std::size_t>(j)];
        if (!(m.omega > 0.0))
            throw std::invalid_argument("spin-boson: mode frequencies must be > 0");
        stride_[static_cast<std::size_t>(j)] = stride;
        stride *= n_max_;
        hop_[static_cast<std::size_t>(j)] =
            m.coupling / (2.0 * std::sqrt(2.0 * m.omega));
        zero_point += 0.5 * m.omega;
    }

    sqrt_dn_.assign(static_cast<std::size_t>(n_max_), 0.0);
    sqrt_up_.assign(static_cast<std::size_t>(n_max_), 0.0);
    for (int n = 1; n < n_max_; ++n)
        sqrt_dn_[static_cast<std::size_t>(n)] = std::sqrt(double(n));
    for (int n = 0; n + 1 < n_max_; ++n)
        sqrt_up_[static_cast<std::size_t>(n)] = std::sqrt(double(n + 1));

    digits_.resize(static_cast<std::size_t>(block_) *
                   static_cast<std::size_t>(std::max(n_modes_, 1)));
    for (std::int64_t b = 0; b < block_; ++b) {
        std::int64_t rem = b;
        for (int j = 0; j < n_modes_; ++j) {
            digits_[static_cast<std::size_t>(b) * n_modes_ + j] =
                static_cast<std::uint8_t>(rem % n_max_);
            rem /= n_max_;
        }
    }

    diag_.resize(static_cast<std::size_t>(dim_));
    for (std::int64_t i = 0; i < dim_; ++i) {
        const std::int64_t b = i < block_ ? i : i - block_;
        const double tz = i < block_ ? 1.0 : -1.0;
        double e = -0.5 * params.xi * tz + zero_point;
        for (int j = 0; j < n_modes_; ++j) {
            const int n = digits_[static_cast<std::size_t>(b) * n_modes_ + j];
            e += bath.modes[static_cast<std::size_t>(j)].omega * n;
        }
        diag_[static_cast<std::size_t>(i)] = e;
    }
}

void SpinBosonHamiltonian::apply_range(const Cplx* x, Cplx* y, std::int64_t i0,
                                       std::int64_t i1) const {
    const int n_modes = n_modes_;
    for (std::int64_t i = i0; i < i1; ++i) {
        const bool up = i < block_;
        const std::int64_t b = up ? i : i - block_;
        const double tz = up ? 1.0 : -1.0;
        Cplx acc = diag_[static_cast<std::size_t>(i)] * x[i];
        acc -= half_delta_ * x[up ? i + block_ : i - block_];
        const std::uint8_t* dg =
            digits_.data() + static_cast<std::size_t>(b) * n_modes;
        for (int j = 0; j < n_modes; ++j) {
            const int n = dg[j];
            const double g = tz * hop_[static_cast<std::size_t>(j)];
            const std::int64_t s = stride_[static_cast<std::size_t>(j)];
            const double sd = sqrt_dn_[static_cast<std::size_t>(n)];
            const double su = sqrt_up_[static_cast<std::size_t>(n)];
            // zero factors make the guarded loads inert
            const Cplx lo = x[i - (sd != 0.0 ? s : 0)];
            const Cplx hi = x[i + (su != 0.0 ? s : 0)];
            acc += g * (sd * lo + su * hi);
        }
        y[i] = acc;
    }
}

void SpinBosonHamiltonian::apply(const Cplx* x, Cplx* y, int workers) const {
    const int n_workers = resolve_workers(workers);
    const std::int64_t chunk = 16384;
    const std::int64_t n_chunks = (dim_ + chunk - 1) / chunk;
    parallel_for_index(n_chunks, n_workers, [&](std::int64_t c) {
        const std::int64_t lo = c * chunk;
        apply_range(x, y, lo, std::min(dim_, lo + chunk));
    });
}

void SpinBosonHamiltonian::apply_serial(const Cplx* x, Cplx* y) const {
    // plain reference: recompute Fock digits by division instead of tables
    for (std::int64_t i = 0; i < dim_; ++i) {
        const bool up = i < block_;
        const std::int64_t b = up ? i : i - block_;
        const double tz = up ? 1.0 : -1.0;
        Cplx acc = diag_[static_cast<std::size_t>(i)] * x[i];
        acc -= half_delta_ * x[up ? i + block_ : i - block_];
        std::int64_t rem = b;
        for (int j = 0; j < n_modes_; ++j) {
            const int n = static_cast<int>(rem % n_max_);
            rem /= n_max_;
            const double g = tz * hop_[static_cast<std::size_t>(j)];
            const std::int64_t s = stride_[static_cast<std::size_t>(j)];
            const double sd = sqrt_dn_[static_cast<std::size_t>(n)];
            const double su = sqrt_up_[static_cast<std::size_t>(n)];
            const Cplx lo = x[i - (sd != 0.0 ? s : 0)];
            const Cplx hi = x[i + (su != 0.0 ? s : 0)];
            acc += g * (sd * lo + su * hi);
        }
        y[i] = acc;
    }
}

Eigen::MatrixXd SpinBosonHamiltonian::dense() const {
    if (dim_ > 16384)
        throw ResourceLimitError("spin-boson dense matrix over 16384 dims");
    Eigen::MatrixXd h = Eigen::MatrixXd::Zero(dim_, dim_);
    for (std::int64_t i = 0; i < dim_; ++i) {
        const bool up = i < block_;
        const std::int64_t b = up ? i : i - block_;
        const double tz = up ? 1.0 : -1.0;
        h(i, i) = diag_[static_cast<std::size_t>(i)];
        h(i, up ? i + block_ : i - block_) = -half_delta_;
        for (int j = 0; j < n_modes_; ++j) {
            const int n = digits_[static_cast<std::size_t>(b) * n_modes_ + j];
            const double g = tz * hop_[static_cast<std::size_t>(j)];
            const std::int64_t s = stride_[static_cast<std::size_t>(j)];
            if (n > 0) h(i, i - s) += g * sqrt_dn_[static_cast<std::size_t>(n)];
            if (n + 1 < n_max_)
                h(i, i + s) += g * sqrt_up_[static_cast<std::size_t>(n)];
        }
    }
    return h;
}

CentralSpinHamiltonian::CentralSpinHamiltonian(const TwoLevelParams& params,
                                               const DiscretizedSpinBath& bath,
                                               int spin_cap) {
    if (!(params.delta >= 0.0) || !std::isfinite(params.delta) ||
        !std::isfinite(params.xi))
        throw std::invalid_argument("central-spin: bad two-level parameters");
    if (bath.w_par.size() != bath.w_perp.size())
        throw std::invalid_argument("central-spin: coupling list size mismatch");
    n_spins_ = static_cast<int>(bath.w_par.size());
    if (n_spins_ > spin_cap)
        throw ResourceLimitError("central-spin: spin count exceeds the cap");
    block_ = std::int64_t(1) << n_spins_;
    dim_ = 2 * block_;
    half_delta_ = 0.5 * params.delta;
    w_perp_ = bath.w_perp;

    // bath bit k set  <->  sigma_z_k = -1; system-major layout
    diag_.resize(static_cast<std::size_t>(dim_));
    for (std::int64_t i = 0; i < dim_; ++i) {
        const bool up = i < block_;
        const std::int64_t b = up ? i : i - block_;
        const double tz = up ? 1.0 : -1.0;
        double e = -0.5 * params.xi * tz;
        for (int k = 0; k < n_spins_; ++k) {
            const double sz = (b >> k) & 1 ? -1.0 : 1.0;
            e += tz * bath.w_par[static_cast<std::size_t>(k)] * sz;
        }
        for (const auto& p : bath.pairs) {
            const double sz1 = (b >> p.k1) & 1 ? -1.0 : 1.0;
            const double sz2 = (b >> p.k2) & 1 ? -1.0 : 1.0;
            e += p.v * sz1 * sz2;
        }
        diag_[static_cast<std::size_t>(i)] = e;
    }
}

void CentralSpinHamiltonian::apply(const Cplx* x, Cplx* y, int workers) const {
    const int n_workers = resolve_workers(workers);
    parallel_for_index(dim_, n_workers, [&](std::int64_t i) {
        const bool up = i < block_;
        const std::int64_t b = up ? i : i - block_;
        const std::int64_t base = up ? 0 : block_;
        Cplx acc = diag_[static_cast<std::size_t>(i)] * x[i];
        acc -= half_delta_ * x[up ? i + block_ : i - block_];
        for (int k = 0; k < n_spins_; ++k)
            acc += w_perp_[static_cast<std::size_t>(k)] *
                   x[base + (b ^ (std::int64_t(1) << k))];
        y[i] = acc;
    });
}

Eigen::MatrixXd CentralSpinHamiltonian::dense() const {
    if (dim_ > 16384)
        throw ResourceLimitError("central-spin dense matrix over 16384 dims");
    Eigen::MatrixXd h = Eigen::MatrixXd::Zero(dim_, dim_);
    for (std::int64_t i = 0; i < dim_; ++i) {
        const bool up = i < block_;
        const std::int64_t b = up ? i : i - block_;
        const std::int64_t base = up ? 0 : block_;
        h(i, i) = diag_[static_cast<std::size_t>(i)];
        h(i, up ? i + block_ : i - block_) = -half_delta_;
        for (int k = 0; k < n_spins_; ++k)
            h(i, base + (b ^ (std::int64_t(1) << k))) +=
                w_perp_[static_cast<std::size_t>(k)];
    }
    return h;
}

Eigen::VectorXcd CentralSpinHamiltonian::product_initial_state(
    std::uint64_t seed) const {
    Rng rng(seed, 7);
    std::int64_t b = 0;
    for (int k = 0; k < n_spins_; ++k)
        if (rng.bits() & 1) b |= std::int64_t(1) << k;
    Eigen::VectorXcd psi = Eigen::VectorXcd::Zero(dim_);
    psi[b] = 1.0;  // system bit clear: tau_z = +1
    return psi;
}

// ---------------------------------------------------------------------------
// Evolution
// ---------------------------------------------------------------------------

namespace {

void check_grid(const std::vector<double>& t_grid) {
    if (t_grid.empty()) throw std::invalid_argument("evolve: empty time grid");
    if (t_grid.front() < 0.0)
        throw std::invalid_argument("evolve: times must be >= 0");
    for (std::size_t i = 1; i < t_grid.size(); ++i)
        if (!(t_grid[i] > t_grid[i - 1]))
            throw std::invalid_argument("evolve: times must be increasing");
}

EvolutionResult evolve_dense(const LinearOperator& op,
                             const Eigen::VectorXcd& psi0,
                             const std::vector<double>& t_grid) {
    const Eigen::MatrixXd h = op.dense();
    const double scale_h = h.cwiseAbs().maxCoeff();
    if ((h - h.transpose()).cwiseAbs().maxCoeff() >
        1e-12 * std::max(scale_h, 1.0))
        throw std::invalid_argument("evolve: Hamiltonian is not Hermitian");
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(h);
    const Eigen::VectorXd& evals = es.eigenvalues();
    const Eigen::MatrixXd& vecs = es.eigenvectors();

    const Eigen::VectorXd c_re = vecs.transpose() * psi0.real();
    const Eigen::VectorXd c_im = vecs.transpose() * psi0.imag();
    Eigen::VectorXcd c(c_re.size());
    c.real() = c_re;
    c.imag() = c_im;

    double e0 = 0.0, h_norm_sq = 0.0;
    for (Eigen::Index k = 0; k < evals.size(); ++k) {
        e0 += evals[k] * std::norm(c[k]);
        h_norm_sq += evals[k] * evals[k] * std::norm(c[k]);
    }
    const double scale = std::max({std::sqrt(h_norm_sq), std::abs(e0), 1e-30});

    EvolutionResult out;
    out.times = t_grid;
    out.tau_z.resize(t_grid.size());

    // microcanonical long-time average: sum_k |c_k|^2 <k|tau_z|k>
    const std::int64_t half = op.dim() / 2;
    double eq = 0.0;
    for (Eigen::Index k = 0; k < c.size(); ++k) {
        double tz_kk = 0.0;
        for (Eigen::Index i = 0; i < vecs.rows(); ++i)
            tz_kk += (i < half ? 1.0 : -1.0) * vecs(i, k) * vecs(i, k);
        eq += std::norm(c[k]) * tz_kk;
    }
    out.equilibrium = eq;
    Eigen::VectorXcd u(c.size()), psi(c.size());
    for (std::size_t s = 0; s < t_grid.size(); ++s) {
        for (Eigen::Index k = 0; k < c.size(); ++k)
            u[k] = std::polar(1.0, -evals[k] * t_grid[s]) * c[k];
        const Eigen::VectorXd p_re = vecs * u.real();
        const Eigen::VectorXd p_im = vecs * u.imag();
        psi.real() = p_re;
        psi.imag() = p_im;
        out.tau_z[s] = op.tau_z_expectation(psi);
        out.norm_drift =
            std::max(out.norm_drift, std::abs(psi.norm() - 1.0));
        double e_t = 0.0;
        for (Eigen::Index k = 0; k < c.size(); ++k)
            e_t += evals[k] * std::norm(u[k]);
        out.energy_drift =
            std::max(out.energy_drift, std::abs(e_t - e0) / scale);
    }
    return out;
}

struct LanczosBasis {
    Eigen::MatrixXcd v;        // dim x m columns
    Eigen::VectorXd alpha;     // m
    Eigen::VectorXd beta;      // m-1 inner off-diagonals
    double beta_res = 0.0;     // coupling out of the subspace
    double beta0 = 0.0;        // norm of the seed vector
    int m = 0;
    Eigen::VectorXd evals;     // tridiagonal eigenpairs
    Eigen::MatrixXd evecs;

    void decompose() {
        Eigen::MatrixXd t = Eigen::MatrixXd::Zero(m, m);
        for (int j = 0; j < m; ++j) {
            t(j, j) = alpha[j];
            if (j + 1 < m) {
                t(j, j + 1) = beta[j];
                t(j + 1, j) = beta[j];
            }
        }
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(t);
        evals = es.eigenvalues();
        evecs = es.eigenvectors();
    }

    Eigen::VectorXcd small_exp(double tau) const {
        Eigen::VectorXcd u(m);
        for (int j = 0; j < m; ++j) {
            Cplx s = 0.0;
            for (int k = 0; k < m; ++k)
                s += evecs(j, k) * std::polar(1.0, -evals[k] * tau) *
                     evecs(0, k);
            u[j] = beta0 * s;
        }
        return u;
    }

    double error_estimate(double dt) const {
        const Eigen::VectorXcd u = small_exp(dt);
        return std::abs(beta_res * std::abs(u[m - 1]) * dt) / beta0;
    }
};

void build_lanczos(const LinearOperator& op, const Eigen::VectorXcd& psi,
                   int m_max, int workers, LanczosBasis* out) {
    const std::int64_t n = op.dim();
    out->v.resize(n, m_max);
    out->alpha.resize(m_max);
    out->beta.resize(std::max(m_max - 1, 0));
    out->beta0 = std::sqrt(squared_norm(psi, workers));

    Eigen::VectorXcd v_prev = Eigen::VectorXcd::Zero(n);
    Eigen::VectorXcd v = psi / out->beta0;
    Eigen::VectorXcd w(n);
    int m = 0;
    double beta_prev = 0.0;
    for (int j = 0; j < m_max; ++j) {
        out->v.col(j) = v;
        op.apply(v.data(), w.data(), workers);
        const double a = dot(v, w, workers).real();
        out->alpha[j] = a;
        parallel_for_index(n, workers, [&](std::int64_t i) {
            w[i] -= a * v[i] + beta_prev * v_prev[i];
        });
        const double b = std::sqrt(squared_norm(w, workers));
        m = j + 1;
        out->beta_res = b;
        if (b < 1e-13) break;  // invariant subspace
        if (j + 1 < m_max) {
            out->beta[j] = b;
            v_prev.swap(v);
            parallel_for_index(n, workers,
                               [&](std::int64_t i) { v[i] = w[i] / b; });
            beta_prev = b;
        }
    }
    out->m = m;
    out->decompose();
}

// psi = basis columns * u, parallel over row blocks
void reconstruct(const LanczosBasis& basis, const Eigen::VectorXcd& u,
                 int workers, Eigen::VectorXcd* psi) {
    const std::int64_t n = basis.v.rows();
    psi->resize(n);
    const std::int64_t n_blocks = (n + kBlock - 1) / kBlock;
    parallel_for_index(n_blocks, workers, [&](std::int64_t blk) {
        const std::int64_t lo = blk * kBlock;
        const std::int64_t len = std::min(n, lo + kBlock) - lo;
        psi->segment(lo, len).setZero();
        for (int j = 0; j < basis.m; ++j)
            psi->segment(lo, len) += basis.v.col(j).segment(lo, len) * u[j];
    });
}

EvolutionResult evolve_krylov(const LinearOperator& op,
                              const Eigen::VectorXcd& psi0,
                              const std::vector<double>& t_grid,
                              const EvolveOptions& opt) {
    const int workers = resolve_workers(opt.workers);
    const std::int64_t n = op.dim();
    const double t_end = t_grid.back();

    EvolutionResult out;
    out.times = t_grid;
    out.tau_z.assign(t_grid.size(), 0.0);

    Eigen::VectorXcd psi = psi0;
    Eigen::VectorXcd h_psi(n);
    op.apply(psi.data(), h_psi.data(), workers);
    const double e0 = dot(psi, h_psi, workers).real();
    const double h_norm = std::sqrt(squared_norm(h_psi, workers));
    const double scale = std::max({h_norm, std::abs(e0), 1e-30});

    std::size_t next_sample = 0;
    auto record = [&](std::size_t idx, const Eigen::VectorXcd& state,
                      bool check_energy) {
        out.tau_z[idx] = op.tau_z_expectation(state);
        out.norm_drift = std::max(
            out.norm_drift, std::abs(std::sqrt(squared_norm(state, 1)) - 1.0));
        if (check_energy) {
            Eigen::VectorXcd hs(n);
            op.apply(state.data(), hs.data(), workers);
            const double e_t = dot(state, hs, workers).real();
            out.energy_drift =
                std::max(out.energy_drift, std::abs(e_t - e0) / scale);
        }
    };

    while (next_sample < t_grid.size() && t_grid[next_sample] <= 0.0) {
        record(next_sample, psi, true);
        ++next_sample;
    }

    double t_cur = 0.0;
    double dt = t_end / 256.0;
    int sample_count = 0;
    LanczosBasis basis;
    Eigen::VectorXcd state(n);
    while (t_cur < t_end - 1e-12 * t_end) {
        build_lanczos(op, psi, opt.krylov_dim, workers, &basis);
        dt = std::min(dt, t_end - t_cur);
        if (basis.beta_res >= 1e-13) {
            while (basis.error_estimate(dt) > opt.step_tol) {
                dt *= 0.5;
                if (dt < 1e-9 * t_end)
                    throw DivergenceError(
                        "evolve: Krylov step collapsed; raise krylov_dim");
            }
        }
        // samples inside (t_cur, t_cur + dt]
        while (next_sample < t_grid.size() &&
               t_grid[next_sample] <= t_cur + dt + 1e-12 * t_end) {
            const double tau = t_grid[next_sample] - t_cur;
            reconstruct(basis, basis.small_exp(tau), workers, &state);
            record(next_sample, state,
                   (sample_count++ % opt.energy_check_stride) == 0);
            ++next_sample;
        }
        reconstruct(basis, basis.small_exp(dt), workers, &psi);
        t_cur += dt;
        if (basis.beta_res >= 1e-13 &&
            basis.error_estimate(dt) < 0.005 * opt.step_tol)
            dt *= 1.3;
    }
    if (next_sample < t_grid.size())
        throw std::logic_error("evolve: unreached samples");
    record(t_grid.size() - 1, psi, true);
    return out;
}

}  // namespace

EvolutionResult evolve(const LinearOperator& hamiltonian,
                       const Eigen::VectorXcd& psi0,
                       const std::vector<double>& t_grid,
                       const EvolveOptions& opt) {
    check_grid(t_grid);
    if (psi0.size() != hamiltonian.dim())
        throw std::invalid_argument("evolve: state size mismatch");
    const double n0 = psi0.norm();
    if (!(n0 > 0.0))
        throw std::invalid_argument("evolve: zero initial state");
    if (std::abs(n0 - 1.0) > 1e-8)
        throw std::invalid_argument("evolve: initial state must be normalized");
    if (hamiltonian.dim() <= opt.dense_threshold)
        return evolve_dense(hamiltonian, psi0, t_grid);
    return evolve_krylov(hamiltonian, psi0, t_grid, opt);
}

// ---------------------------------------------------------------------------
// Rate extraction
// ---------------------------------------------------------------------------

namespace {

struct ProfiledFit {
    double rate = 0.0, amplitude = 0.0, offset = 0.0, sse = 0.0;
};

// least squares of y ~ A exp(-G t) (+ C) with G profiled on a log grid
ProfiledFit profile_fit(const std::vector<double>& t,
                        const std::vector<double>& y, bool free_offset,
                        double fixed_offset) {
    const std::size_t n = t.size();
    const double span = t.back() - t.front();
    auto sse_at = [&](double g, double* a_out, double* c_out) {
        double see = 0.0, se1 = 0.0, sey = 0.0, sy = 0.0, syy = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double e = std::exp(-g * (t[i] - t.front()));
            const double yi = y[i] - (free_offset ? 0.0 : fixed_offset);
            see += e * e;
            se1 += e;
            sey += e * yi;
            sy += yi;
            syy += yi * yi;
        }
        double a = 0.0, c = 0.0;
        if (free_offset) {
            const double det = see * n - se1 * se1;
            if (std::abs(det) < 1e-30) {
                a = 0.0;
                c = sy / n;
            } else {
                a = (sey * n - se1 * sy) / det;
                c = (see * sy - se1 * sey) / det;
            }
        } else {
            a = see > 0.0 ? sey / see : 0.0;
        }
        double sse = syy - 2.0 * a * sey - 2.0 * c * sy + a * a * see +
                     2.0 * a * c * se1 + c * c * n;
        if (a_out) *a_out = a;
        if (c_out) *c_out = c;
        return std::max(sse, 0.0);
    };

    double lo = 1e-4 / span;
    double hi = 50.0 * n / span;
    double best_g = lo;
    for (int round = 0; round < 8; ++round) {
        double best = std::numeric_limits<double>::infinity();
        const int steps = 48;
        for (int k = 0; k <= steps; ++k) {
            const double g =
                lo * std::pow(hi / lo, static_cast<double>(k) / steps);
            const double s = sse_at(g, nullptr, nullptr);
            if (s < best) {
                best = s;
                best_g = g;
            }
        }
        const double f = std::pow(hi / lo, 1.0 / steps);
        lo = best_g / f;
        hi = best_g * f;
    }
    ProfiledFit fit;
    fit.rate = best_g;
    fit.sse = sse_at(best_g, &fit.amplitude, &fit.offset);
    if (!free_offset) fit.offset = fixed_offset;
    // shift amplitude reference back to t = 0
    fit.amplitude *= std::exp(fit.rate * t.front());
    return fit;
}

}  // namespace

RateFit extract_rate(const EvolutionResult& result,
                     std::optional<double> equilibrium,
                     const FitOptions& opt) {
    std::vector<double> t, y;
    for (std::size_t i = 0; i < result.times.size(); ++i) {
        if (result.times[i] >= opt.transient_time) {
            t.push_back(result.times[i]);
            y.push_back(result.tau_z[i]);
        }
    }
    if (t.size() < 8)
        throw std::invalid_argument(
            "extract_rate: too few samples after the transient");

    const bool free_offset = !equilibrium.has_value();
    ProfiledFit fit =
        profile_fit(t, y, free_offset, equilibrium.value_or(0.0));

    // envelope of the decaying component
    std::vector<double> dev(t.size());
    double dev_max = 0.0;
    for (std::size_t i = 0; i < t.size(); ++i) {
        dev[i] = y[i] - fit.offset;
        dev_max = std::max(dev_max, std::abs(dev[i]));
    }
    const std::size_t edge = std::max<std::size_t>(t.size() / 6, 2);
    double env_start = 0.0, env_end = 0.0;
    for (std::size_t i = 0; i < edge; ++i)
        env_start = std::max(env_start, std::abs(dev[i]));
    for (std::size_t i = t.size() - edge; i < t.size(); ++i)
        env_end = std::max(env_end, std::abs(dev[i]));
    if (env_start < 1e-12 || dev_max < 1e-12)
        throw InsufficientDecayError("extract_rate: no decaying component");
    if (env_end * opt.min_decay_factor > env_start)
        throw InsufficientDecayError(
            "extract_rate: envelope decays by less than the required factor");

    RateFit out;
    out.offset = fit.offset;

    int sign_changes = 0;
    for (std::size_t i = 1; i < dev.size(); ++i) {
        if ((dev[i] > 1e-3 * dev_max && dev[i - 1] < -1e-3 * dev_max) ||
            (dev[i] < -1e-3 * dev_max && dev[i - 1] > 1e-3 * dev_max))
            ++sign_changes;
    }
    out.oscillatory = sign_changes >= 3;

    if (out.oscillatory && opt.envelope_fit) {
        // log-linear fit through the peaks of |dev|
        std::vector<double> tp, lp;
        for (std::size_t i = 1; i + 1 < dev.size(); ++i) {
            const double a = std::abs(dev[i]);
            if (a > std::abs(dev[i - 1]) && a >= std::abs(dev[i + 1]) &&
                a > 1e-3 * dev_max) {
                tp.push_back(t[i]);
                lp.push_back(std::log(a));
            }
        }
        if (tp.size() >= 4) {
            double st = 0, sl = 0, stt = 0, stl = 0;
            for (std::size_t i = 0; i < tp.size(); ++i) {
                st += tp[i];
                sl += lp[i];
                stt += tp[i] * tp[i];
                stl += tp[i] * lp[i];
            }
            const double m = static_cast<double>(tp.size());
            const double slope = (m * stl - st * sl) / (m * stt - st * st);
            const double icept = (sl - slope * st) / m;
            out.rate = -slope;
            out.amplitude = std::exp(icept);
            double sse = 0.0;
            for (std::size_t i = 0; i < tp.size(); ++i) {
                const double r = lp[i] - (icept + slope * tp[i]);
                sse += r * r;
            }
            const double var =
                tp.size() > 2 ? sse / (m - 2.0) / (stt - st * st / m) : 0.0;
            out.rate_stderr = std::sqrt(std::max(var, 0.0));
            return out;
        }
        out.warning = "oscillation detected but too few envelope peaks; "
                      "fitted the signed decay instead";
    }

    out.rate = fit.rate;
    out.amplitude = fit.amplitude;

    // envelope monotonicity check over coarse blocks
    const std::size_t n_blocks = 8;
    std::vector<double> block_max(n_blocks, 0.0);
    for (std::size_t i = 0; i < dev.size(); ++i) {
        const std::size_t b = std::min(n_blocks - 1, i * n_blocks / dev.size());
        block_max[b] = std::max(block_max[b], std::abs(dev[i]));
    }
    for (std::size_t b = 1; b < n_blocks; ++b) {
        if (block_max[b] > 1.3 * block_max[b - 1] &&
            block_max[b] > 0.05 * dev_max) {
            if (out.warning.empty())
                out.warning = "poor-fit: envelope is not monotone";
            break;
        }
    }

    // profile-curvature standard error
    const std::size_t n = t.size();
    const std::size_t dof = free_offset ? 3 : 2;
    if (n > dof && fit.sse > 0.0) {
        const double h = 0.02 * fit.rate;
        auto sse_of = [&](double g) {
            double see = 0, se1 = 0, sey = 0, sy = 0, syy = 0;
            for (std::size_t i = 0; i < n; ++i) {
                const double e = std::exp(-g * (t[i] - t.front()));
                const double yi =
                    y[i] - (free_offset ? 0.0 : equilibrium.value_or(0.0));
                see += e * e;
                se1 += e;
                sey += e * yi;
                sy += yi;
                syy += yi * yi;
            }
            double a = 0, c = 0;
            if (free_offset) {
                const double det = see * n - se1 * se1;
                a = (sey * n - se1 * sy) / det;
                c = (see * sy - se1 * sey) / det;
            } else {
                a = see > 0.0 ? sey / see : 0.0;
            }
            return std::max(syy - 2 * a * sey - 2 * c * sy + a * a * see +
                                2 * a * c * se1 + c * c * n,
                            0.0);
        };
        const double d2 =
            (sse_of(fit.rate + h) - 2.0 * fit.sse + sse_of(fit.rate - h)) /
            (h * h);
        if (d2 > 0.0) {
            out.rate_stderr =
                std::sqrt(2.0 * fit.sse / static_cast<double>(n - dof) / d2);
        }
    }
    return out;
}

}  // namespace oscbath
