#pragma once

#include <array>
#include <string>
#include <vector>

#include "oscbath/errors.hpp"

namespace oscbath {

enum class SpectralFamily { OhmicExpCutoff, CubicExpCutoff, Tabulated, Composite };

std::string family_name(SpectralFamily family);

// Bath spectral density J(w).  Immutable after construction; all evaluation
// is pure.  J(w) = 0 for w <= 0 in every family.
//
//   ohmic-exp-cutoff : J(w) = 2*pi*alpha * w * exp(-w/xi0)
//   cubic-exp-cutoff : J(w) = amp * (w^3/wc^2) * exp(-w/wc)   (high-frequency
//                      template used by the Gamma2 matching solver; not a
//                      user-facing family)
//   tabulated        : piecewise-linear through (w, J) samples, 0 outside
//   composite        : pointwise sum of parts
class SpectralDensity {
  public:
    static SpectralDensity ohmic_exp_cutoff(double alpha, double xi0);
    static SpectralDensity cubic_exp_cutoff(double amplitude, double cutoff);
    static SpectralDensity tabulated(std::vector<std::array<double, 2>> samples);
    static SpectralDensity composite(std::vector<SpectralDensity> parts);

    double operator()(double omega) const;

    SpectralFamily family() const { return family_; }
    double alpha() const { return alpha_; }
    double xi0() const { return xi0_; }
    double amplitude() const { return alpha_; }
    double cutoff() const { return xi0_; }

    // Decay (or support) scale used to split semi-infinite integrals.
    double scale() const;

    const std::vector<SpectralDensity>& parts() const { return parts_; }
    const std::vector<std::array<double, 2>>& table() const { return table_; }

    // Non-composite constituents, flattened recursively.
    std::vector<const SpectralDensity*> leaves() const;

  private:
    SpectralDensity() = default;

    SpectralFamily family_ = SpectralFamily::OhmicExpCutoff;
    double alpha_ = 0.0;  // alpha, or amplitude for cubic
    double xi0_ = 1.0;    // xi0, or cutoff for cubic
    std::vector<std::array<double, 2>> table_;
    std::vector<SpectralDensity> parts_;
};

double eval_j(const SpectralDensity& spec, double omega);

// J(w)/w^2 evaluated stably per family (the ohmic family reduces to
// 2*pi*alpha*exp(-w/xi0)/w rather than a 0/0 ratio).  Zero for w <= 0.
double eval_j_over_w2(const SpectralDensity& spec, double omega);

struct FluctuationStats {
    double variance;          // <xi_B^2>
    double width;             // sqrt(variance)
    double correlation_rate;  // inverse memory time estimate
};

// (2/pi) * integral of J over [0, inf).  Closed form for the parametric
// families, exact piecewise integral for tables, additive over composites.
double bias_variance(const SpectralDensity& spec);

// width = sqrt(bias_variance); correlation_rate = int J dw / int (J/w) dw,
// which equals xi0 exactly for the ohmic-exp-cutoff family.
FluctuationStats fluctuation_stats(const SpectralDensity& spec);

// S(w) = J(w) * coth(w / 2T); the T = 0 limit returns J(w) exactly.
double power_spectrum(const SpectralDensity& spec, double temperature,
                      double omega);

SpectralDensity compose(const SpectralDensity& base,
                        const SpectralDensity& highfreq);

// Two-column CSV (omega, J) with a one-line header and strictly increasing
// omega.
SpectralDensity load_tabulated_csv(const std::string& path);

}  // namespace oscbath
