#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "oscbath/ed.hpp"
#include "oscbath/rates.hpp"

namespace oscbath {

// Classical bias-noise surrogate: a stationary Gaussian process with
// relaxation rate xi0 and variance 2*xi0^2, i.e. the same fluctuation rate
// and width the engineered bath induces.
struct NoiseModel {
    double xi0 = 1.0;
    double dt = 0.05;
    std::uint64_t seed = 1;
};

// Stationary-start sample path via the exact discrete-time update
//   x_{n+1} = x_n e^{-xi0 dt} + sigma sqrt(1 - e^{-2 xi0 dt}) N(0,1),
// sigma^2 = 2 xi0^2.  Entry k is the bias held constant on step k.
// Requires dt <= 0.1/xi0.  Deterministic given (seed, stream).
std::vector<double> ou_trajectory(const NoiseModel& model, std::int64_t n_steps,
                                  std::uint64_t stream = 0);

// tau_z(t) under piecewise-constant bias xi + path[k]: one exact Bloch
// rotation per step, starting from tau_z = +1.  Returns n_steps + 1 samples
// including t = 0.  Rotations preserve the Bloch norm to 1e-10 or better.
std::vector<double> propagate_bloch(const TwoLevelParams& params,
                                    std::span<const double> bias_path,
                                    double dt, double* norm_drift = nullptr);

struct DecayCurve {
    std::vector<double> times;
    std::vector<double> mean;
    std::vector<double> stderr_vals;
};

struct MeasuredRate {
    double rate = 0.0;
    std::optional<std::pair<double, double>> ci;  // 95% bootstrap, n >= 100
    RateFit fit;
    DecayCurve curve;
};

struct MeasureOptions {
    int max_samples = 600;     // decimated ensemble-curve length
    double transient = 0.0;    // defaults to 5/xi0
    int n_boot = 200;
    std::uint64_t boot_seed = 12345;
    int workers = 0;
};

// Ensemble average of tau_z(t) over independent realizations, exponential
// fit through extract_rate (the classical-noise equilibrium is 0), bootstrap
// confidence interval over realizations.  Realizations draw their own RNG
// streams from (seed, index), so results do not depend on scheduling.
MeasuredRate measure_rate(const TwoLevelParams& params, const NoiseModel& model,
                          int n_realizations, double t_max,
                          const MeasureOptions& opt = {});

}  // namespace oscbath
