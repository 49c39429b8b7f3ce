#pragma once

#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "oscbath/kernels.hpp"
#include "oscbath/spectral.hpp"

namespace oscbath {

struct TwoLevelParams {
    double delta = 0.0;             // tunneling matrix element, > 0
    double xi = 0.0;                // bias, signed
    std::optional<double> gamma2;   // dephasing-limited damping scale
};

// Computation-method tags.  The strings are the stable interface vocabulary
// used in configs, CSV output, and manifests.
enum class RateMethod {
    GoldenRuleNumeric,  // "golden-rule-numeric"
    ClosedForm,         // "analytic-eq26"
    SpinBathBase,       // "spin-bath-eq9"
    SpinBathDamped,     // "spin-bath-eq10"
    EdOracle,           // "ed-oracle"
    Stochastic,         // "stochastic"
};

std::string method_tag(RateMethod method);
RateMethod parse_method_tag(const std::string& tag);

struct RatePoint {
    double xi = 0.0;
    double gamma = 0.0;
    std::optional<double> sigma;
    std::string error;  // empty on success; points never abort a sweep
};

struct RateCurve {
    std::string method;
    std::vector<RatePoint> points;  // xi strictly increasing
};

struct GoldenRuleOptions {
    quad::Options quad{1e-12, 1e-12};
    double coherence_floor = 1e-14;
    std::vector<std::string>* warnings = nullptr;
};

// Incoherent relaxation rate Delta^2 * int_0^inf cos(xi t) * C(t) dt with
// C(t) the kernel coherence factor.  The integral is taken in half-period
// panels of cos(xi t) with Euler acceleration (plain adaptive quadrature when
// |xi| is tiny against the bath scale) and truncated once C drops below the
// coherence floor, with a bounded tail estimate added.  Emits validity
// warnings (not errors) when delta is not small against |xi| or the bath
// scale.
double golden_rule_rate(const TwoLevelParams& p, const BathKernels& kernels,
                        const GoldenRuleOptions& opt = {});

// (pi Delta^2 / 2 xi0) exp(-|xi|/xi0); by construction exactly pi/2 times
// spin_bath_rate without gamma2.
double analytic_rate(const TwoLevelParams& p, double xi0);

// (Delta^2/xi0) exp(-|xi|/xi0), or (Delta^2/Gamma2) exp(-|xi|/xi0) when
// gamma2 is set (requires gamma2 >= xi0).
double spin_bath_rate(const TwoLevelParams& p, double xi0);

// int_0^inf J(w)/w^2 dw (diverges for an ohmic density).
double tunneling_suppression(const SpectralDensity& highfreq,
                             const quad::Options& opt = {1e-12, 1e-12});

// Adiabatic dressing by high-frequency modes:
// Delta_eff = Delta * exp(-(1/2pi) int J'(w)/w^2 dw) <= Delta.
double delta_eff(double delta, const SpectralDensity& highfreq,
                 const quad::Options& opt = {1e-12, 1e-12});

// Solve for a high-frequency density J'(w) = A (w^3/wc^2) exp(-w/wc) such
// that delta_eff(Delta, J')^2 / xi0 = Delta^2 / gamma2, i.e. the golden-rule
// rate with the composite bath reproduces the damped spin-bath form.  A
// cutoff of 0 selects the default 1000 * xi0.
SpectralDensity match_gamma2(double delta, double xi0, double gamma2,
                             double cutoff = 0.0);

// Warnings for leaving the perturbative validity domain (delta not small).
std::vector<std::string> validity_warnings(const TwoLevelParams& p, double xi0);

// One rate evaluation per grid point; failures are recorded on the point
// rather than aborting the sweep.  Points are independent and may be
// evaluated in parallel; output order follows the grid.
using PointFn = std::function<RatePoint(double xi)>;
RateCurve rate_sweep(std::span<const double> xi_grid, RateMethod method,
                     const PointFn& point_fn, int workers = 1);

PointFn closed_form_points(const TwoLevelParams& p, double xi0);
PointFn spin_bath_points(const TwoLevelParams& p, double xi0);
PointFn golden_rule_points(const TwoLevelParams& p, const BathKernels& kernels,
                           const GoldenRuleOptions& opt = {});

}  // namespace oscbath
