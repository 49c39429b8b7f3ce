#include "oscbath/stochastic.hpp"

#include <algorithm>
#include <cmath>

#include "oscbath/errors.hpp"
#include "oscbath/parallel.hpp"
#include "oscbath/rng.hpp"

namespace oscbath {

namespace {

void check_model(const NoiseModel& model) {
    if (!(model.xi0 > 0.0))
        throw std::invalid_argument("noise model: xi0 must be > 0");
    if (!(model.dt > 0.0) || model.dt > 0.1 / model.xi0)
        throw std::invalid_argument(
            "noise model: dt must satisfy 0 < dt <= 0.1/xi0");
}

}  // namespace

std::vector<double> ou_trajectory(const NoiseModel& model,
                                  std::int64_t n_steps, std::uint64_t stream) {
    check_model(model);
    if (n_steps < 1)
        throw std::invalid_argument("ou_trajectory: n_steps must be >= 1");
    Rng rng(model.seed, stream);
    const double sigma = std::sqrt(2.0) * model.xi0;
    const double decay = std::exp(-model.xi0 * model.dt);
    const double kick = sigma * std::sqrt(1.0 - decay * decay);
    std::vector<double> path(static_cast<std::size_t>(n_steps));
    double x = sigma * rng.normal();  // stationary start
    for (auto& v : path) {
        v = x;
        x = x * decay + kick * rng.normal();
    }
    return path;
}

std::vector<double> propagate_bloch(const TwoLevelParams& params,
                                    std::span<const double> bias_path,
                                    double dt, double* norm_drift) {
    if (!(params.delta >= 0.0) || !std::isfinite(params.delta))
        throw std::invalid_argument("propagate_bloch: bad delta");
    if (!(dt > 0.0)) throw std::invalid_argument("propagate_bloch: bad dt");
    std::vector<double> tau_z;
    tau_z.reserve(bias_path.size() + 1);
    // Bloch vector of the up state; field b = (-delta, 0, -(xi + noise))
    double vx = 0.0, vy = 0.0, vz = 1.0;
    tau_z.push_back(vz);
    const double bx = -params.delta;
    for (const double noise : bias_path) {
        const double bz = -(params.xi + noise);
        const double bn = std::sqrt(bx * bx + bz * bz);
        if (bn == 0.0) {
            tau_z.push_back(vz);
            continue;
        }
        const double ax = bx / bn, az = bz / bn;
        const double th = bn * dt;
        const double ct = std::cos(th), st = std::sin(th);
        // Rodrigues rotation about (ax, 0, az)
        const double cx = -az * vy;
        const double cy = az * vx - ax * vz;
        const double cz = ax * vy;
        const double adotv = ax * vx + az * vz;
        const double one_m = 1.0 - ct;
        const double nx = vx * ct + cx * st + ax * adotv * one_m;
        const double ny = vy * ct + cy * st;
        const double nz = vz * ct + cz * st + az * adotv * one_m;
        vx = nx;
        vy = ny;
        vz = nz;
        tau_z.push_back(vz);
        if (norm_drift) {
            const double n = std::sqrt(vx * vx + vy * vy + vz * vz);
            *norm_drift = std::max(*norm_drift, std::abs(n - 1.0));
        }
    }
    return tau_z;
}

MeasuredRate measure_rate(const TwoLevelParams& params, const NoiseModel& model,
                          int n_realizations, double t_max,
                          const MeasureOptions& opt) {
    check_model(model);
    if (n_realizations < 1)
        throw std::invalid_argument("measure_rate: need realizations");
    if (!(t_max > model.dt))
        throw std::invalid_argument("measure_rate: t_max too small");

    const std::int64_t n_steps =
        static_cast<std::int64_t>(std::ceil(t_max / model.dt));
    const std::int64_t stride =
        std::max<std::int64_t>(1, n_steps / std::max(opt.max_samples, 8));
    const std::int64_t n_samples = n_steps / stride + 1;

    // per-realization decimated curves, reduced in fixed order afterwards so
    // the result is independent of the worker count
    std::vector<std::vector<double>> curves(
        static_cast<std::size_t>(n_realizations));
    const int workers = resolve_workers(opt.workers);
    parallel_for_index(n_realizations, workers, [&](std::int64_t r) {
        const auto path =
            ou_trajectory(model, n_steps, static_cast<std::uint64_t>(r));
        const auto tz = propagate_bloch(params, path, model.dt);
        auto& c = curves[static_cast<std::size_t>(r)];
        c.resize(static_cast<std::size_t>(n_samples));
        for (std::int64_t s = 0; s < n_samples; ++s)
            c[static_cast<std::size_t>(s)] =
                tz[static_cast<std::size_t>(s * stride)];
    });

    MeasuredRate out;
    out.curve.times.resize(static_cast<std::size_t>(n_samples));
    for (std::int64_t s = 0; s < n_samples; ++s)
        out.curve.times[static_cast<std::size_t>(s)] =
            static_cast<double>(s * stride) * model.dt;
    out.curve.mean.assign(static_cast<std::size_t>(n_samples), 0.0);
    out.curve.stderr_vals.assign(static_cast<std::size_t>(n_samples), 0.0);
    for (const auto& c : curves)
        for (std::size_t s = 0; s < c.size(); ++s) out.curve.mean[s] += c[s];
    for (auto& m : out.curve.mean) m /= n_realizations;
    if (n_realizations > 1) {
        for (const auto& c : curves) {
            for (std::size_t s = 0; s < c.size(); ++s) {
                const double d = c[s] - out.curve.mean[s];
                out.curve.stderr_vals[s] += d * d;
            }
        }
        for (auto& v : out.curve.stderr_vals)
            v = std::sqrt(v / (static_cast<double>(n_realizations) *
                               (n_realizations - 1.0)));
    }

    const double transient =
        opt.transient > 0.0 ? opt.transient : 5.0 / model.xi0;
    FitOptions fit_opt;
    fit_opt.transient_time = transient;

    EvolutionResult mean_curve;
    mean_curve.times = out.curve.times;
    mean_curve.tau_z = out.curve.mean;
    out.fit = extract_rate(mean_curve, 0.0, fit_opt);
    out.rate = out.fit.rate;

    if (n_realizations >= 100 && opt.n_boot > 1) {
        Rng boot_rng(opt.boot_seed);
        std::vector<double> rates;
        rates.reserve(static_cast<std::size_t>(opt.n_boot));
        EvolutionResult resampled;
        resampled.times = out.curve.times;
        resampled.tau_z.resize(out.curve.mean.size());
        for (int b = 0; b < opt.n_boot; ++b) {
            std::fill(resampled.tau_z.begin(), resampled.tau_z.end(), 0.0);
            for (int r = 0; r < n_realizations; ++r) {
                const auto& c = curves[static_cast<std::size_t>(
                    boot_rng.bits() % static_cast<std::uint64_t>(n_realizations))];
                for (std::size_t s = 0; s < c.size(); ++s)
                    resampled.tau_z[s] += c[s];
            }
            for (auto& v : resampled.tau_z) v /= n_realizations;
            try {
                rates.push_back(extract_rate(resampled, 0.0, fit_opt).rate);
            } catch (const InsufficientDecayError&) {
                // drop degenerate resamples
            }
        }
        if (rates.size() >= 16) {
            std::sort(rates.begin(), rates.end());
            const auto lo_idx = static_cast<std::size_t>(0.025 * rates.size());
            const auto hi_idx =
                std::min(rates.size() - 1,
                         static_cast<std::size_t>(0.975 * rates.size()));
            out.ci = {rates[lo_idx], rates[hi_idx]};
        }
    }
    return out;
}

}  // namespace oscbath
