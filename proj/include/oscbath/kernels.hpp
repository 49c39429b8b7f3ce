#pragma once

#include <memory>

#include "oscbath/quadrature.hpp"
#include "oscbath/spectral.hpp"

namespace oscbath {

enum class KernelMode { Analytic, Numeric };

// Influence-functional kernels of a bath with spectral density J(w) at
// temperature T:
//
//   Q1(t) = int_0^inf (J(w)/w^2) sin(w t) dw
//   Q2(t) = int_0^inf (J(w)/w^2) (1 - cos(w t)) coth(w/2T) dw
//
// Analytic mode is available for the ohmic-exp-cutoff family, where
// Q1 = 2*pi*alpha*atan(xi0 t) and, at T = 0, Q2 = alpha*pi*log(1+xi0^2 t^2).
// Numeric mode evaluates the integrals with oscillation-aware quadrature for
// any family and temperature.  Evaluation is pure; the optional memo cache is
// transparent and safe under concurrent use.
class BathKernels {
  public:
    static BathKernels analytic(const SpectralDensity& spec,
                                double temperature = 0.0);
    static BathKernels numeric(const SpectralDensity& spec, double temperature,
                               const quad::Options& opt = {1e-12, 1e-12});

    double q1(double t) const;
    double q2(double t) const;

    // cos(Q1(t)/pi) * exp(-Q2(t)/pi); equals 1/(1 + xi0^2 t^2) for the
    // analytic alpha = 1/2 bath.
    double coherence_factor(double t) const;

    KernelMode mode() const { return mode_; }
    double temperature() const { return temperature_; }
    const SpectralDensity& spec() const { return spec_; }

    void set_cache_enabled(bool enabled);
    bool cache_enabled() const;

  private:
    struct Cache;

    BathKernels(KernelMode mode, SpectralDensity spec, double temperature,
                quad::Options opt);

    double q1_numeric(double t) const;
    double q2_numeric(double t) const;

    KernelMode mode_;
    SpectralDensity spec_;
    double temperature_;
    quad::Options opt_;
    std::shared_ptr<Cache> cache_;
};

}  // namespace oscbath
