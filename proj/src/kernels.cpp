#include "oscbath/kernels.hpp"

#include <cmath>
#include <mutex>
#include <shared_mutex>
#include <unordered_map>

namespace oscbath {

namespace {

constexpr double kPi = 3.14159265358979323846;

double coth(double x) {
    return x < 1e-8 ? (1.0 / x) * (1.0 + x * x / 3.0) : 1.0 / std::tanh(x);
}

void check_time(double t) {
    if (!std::isfinite(t) || t < 0.0)
        throw std::invalid_argument("kernel time must be finite and >= 0");
}

double leaf_upper(const SpectralDensity& leaf) {
    if (leaf.family() == SpectralFamily::Tabulated)
        return leaf.table().back()[0];
    return 30.0 * leaf.scale();
}

}  // namespace

struct BathKernels::Cache {
    std::shared_mutex mutex;
    std::unordered_map<double, double> q1, q2;
    bool enabled = false;

    bool lookup(const std::unordered_map<double, double>& map, double t,
                double* out) {
        std::shared_lock lock(mutex);
        if (!enabled) return false;
        auto it = map.find(t);
        if (it == map.end()) return false;
        *out = it->second;
        return true;
    }

    void store(std::unordered_map<double, double>& map, double t, double v) {
        std::unique_lock lock(mutex);
        if (enabled) map.emplace(t, v);
    }
};

BathKernels::BathKernels(KernelMode mode, SpectralDensity spec,
                         double temperature, quad::Options opt)
    : mode_(mode),
      spec_(std::move(spec)),
      temperature_(temperature),
      opt_(opt),
      cache_(std::make_shared<Cache>()) {}

BathKernels BathKernels::analytic(const SpectralDensity& spec,
                                  double temperature) {
    if (spec.family() != SpectralFamily::OhmicExpCutoff)
        throw UnsupportedModeError(
            "analytic kernels require the ohmic-exp-cutoff family");
    if (temperature < 0.0)
        throw std::invalid_argument("temperature must be >= 0");
    return BathKernels(KernelMode::Analytic, spec, temperature, {});
}

BathKernels BathKernels::numeric(const SpectralDensity& spec,
                                 double temperature,
                                 const quad::Options& opt) {
    if (temperature < 0.0)
        throw std::invalid_argument("temperature must be >= 0");
    return BathKernels(KernelMode::Numeric, spec, temperature, opt);
}

void BathKernels::set_cache_enabled(bool enabled) {
    std::unique_lock lock(cache_->mutex);
    cache_->enabled = enabled;
    if (!enabled) {
        cache_->q1.clear();
        cache_->q2.clear();
    }
}

bool BathKernels::cache_enabled() const {
    std::shared_lock lock(cache_->mutex);
    return cache_->enabled;
}

double BathKernels::q1(double t) const {
    check_time(t);
    if (mode_ == KernelMode::Analytic)
        return 2.0 * kPi * spec_.alpha() * std::atan(spec_.xi0() * t);
    double cached;
    if (cache_->lookup(cache_->q1, t, &cached)) return cached;
    const double v = q1_numeric(t);
    cache_->store(cache_->q1, t, v);
    return v;
}

double BathKernels::q2(double t) const {
    check_time(t);
    if (mode_ == KernelMode::Analytic) {
        if (temperature_ != 0.0)
            throw UnsupportedModeError("analytic Q2 is a T = 0 form");
        const double x = spec_.xi0() * t;
        return spec_.alpha() * kPi * std::log1p(x * x);
    }
    double cached;
    if (cache_->lookup(cache_->q2, t, &cached)) return cached;
    const double v = q2_numeric(t);
    cache_->store(cache_->q2, t, v);
    return v;
}

double BathKernels::coherence_factor(double t) const {
    return std::cos(q1(t) / kPi) * std::exp(-q2(t) / kPi);
}

double BathKernels::q1_numeric(double t) const {
    if (t == 0.0) return 0.0;
    double total = 0.0;
    for (const SpectralDensity* leaf : spec_.leaves()) {
        auto env = [leaf](double w) { return eval_j_over_w2(*leaf, w); };
        total += quad::integrate_oscillatory(env, quad::Trig::Sin, t,
                                             leaf->scale(), opt_);
    }
    return total;
}

double BathKernels::q2_numeric(double t) const {
    if (t == 0.0) return 0.0;
    const double temp = temperature_;
    double total = 0.0;
    for (const SpectralDensity* leaf : spec_.leaves()) {
        auto weighted = [leaf, temp](double w) {
            const double base = eval_j_over_w2(*leaf, w);
            return temp > 0.0 ? base * coth(w / (2.0 * temp)) : base;
        };
        const double upper = leaf_upper(*leaf);
        const double s = leaf->scale();
        const double omega_split = 2.0 * kPi / t;
        if (omega_split >= upper) {
            // factor oscillates at most one period over the support
            auto integrand = [&](double w) {
                const double half = std::sin(0.5 * w * t);
                return weighted(w) * 2.0 * half * half;
            };
            total += quad::integrate_to_infinity(integrand, 0.0, s, opt_);
            continue;
        }
        // one full period near the origin, then 1 and -cos separately
        auto integrand = [&](double w) {
            const double half = std::sin(0.5 * w * t);
            return weighted(w) * 2.0 * half * half;
        };
        total += quad::integrate(integrand, 0.0, omega_split, opt_);
        total += quad::integrate_to_infinity(weighted, omega_split, s, opt_);
        total -= quad::integrate_oscillatory(weighted, quad::Trig::Cos, t, s,
                                             opt_, omega_split);
    }
    return total;
}

}  // namespace oscbath
