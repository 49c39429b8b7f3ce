#pragma once

#include <string>
#include <vector>

#include "oscbath/config.hpp"

namespace oscbath {

struct RunReport {
    int exit_code = 0;  // 0 success, 1 all methods failed
    std::vector<std::string> files;
    std::string manifest_path;
    std::vector<std::string> messages;
};

// Spin-boson ED rate measurement: discretize the bath, evolve the up x vacuum
// state, fit the relaxation rate.  The horizon starts at
// transient + t_end_factor / closed-form-rate and doubles on insufficient
// decay up to max_extensions times.
struct SpinBosonProtocol {
    double delta = 0.05;
    double xi0 = 1.0;
    double alpha = 0.5;
    int n_modes = 8;
    int n_max = 3;
    double omega_max = 0.0;  // 0: 3*xi0
    std::int64_t dim_cap = 200000;
    int krylov_dim = 40;
    double step_tol = 1e-11;
    std::int64_t dense_threshold = 2048;
    int n_samples = 420;
    double transient = 5.0;
    double t_end_factor = 1.4;
    int max_extensions = 2;
    int workers = 0;
};

struct SpinBosonEdResult {
    double rate = 0.0;
    double rate_stderr = 0.0;
    double norm_drift = 0.0;
    double energy_drift = 0.0;
    std::string fit_warning;
};

SpinBosonEdResult spin_boson_ed_rate(const SpinBosonProtocol& proto, double xi);

// Central-spin rate at one bias: evolve one random bath per seed, average the
// curves, fit the signed decay against the mean microcanonical equilibrium,
// and bootstrap the seed ensemble for a 95% confidence interval.
struct CentralSpinProtocol {
    int n_spins = 8;
    double xi0 = 1.0;
    double delta = 0.05;
    double eta = 2.0;
    double pair_scale = 0.0;
    int spin_cap = 12;
    std::vector<std::uint64_t> seeds{1, 2, 3, 4, 5, 6, 7, 8};
    double t_max = 2000.0;
    int n_samples = 600;
    double transient = 5.0;
    int n_boot = 300;
    std::uint64_t boot_seed = 11;
    int workers = 0;
};

struct CentralSpinRate {
    double rate = 0.0;
    double ci_lo = 0.0;
    double ci_hi = 0.0;
    double norm_drift = 0.0;
    double energy_drift = 0.0;
};

CentralSpinRate central_spin_seed_rate(const CentralSpinProtocol& proto,
                                       double xi);

// Sweep every requested method over the xi grid, emit one CSV per method, a
// shared JSON manifest, and (in compare mode) a pairwise comparison table.
RunReport run(const RunConfig& config);

// Point evaluators for the oracle-backed methods; shared by run() and the
// validate suite.
RatePoint ed_oracle_point(const RunConfig& config, double xi);
RatePoint stochastic_point(const RunConfig& config, double xi);

// ED + stochastic validation suite at the configured scale; prints one
// pass/fail line per check and returns 0 when everything passed.
int validate(const RunConfig& config);

}  // namespace oscbath
