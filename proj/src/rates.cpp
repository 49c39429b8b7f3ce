#include "oscbath/rates.hpp"

#include <cmath>

#include <limits>

#include "oscbath/parallel.hpp"

namespace oscbath {

namespace {

constexpr double kPi = 3.14159265358979323846;

void check_params(const TwoLevelParams& p) {
    if (!std::isfinite(p.delta) || !std::isfinite(p.xi))
        throw std::invalid_argument("two-level parameters must be finite");
    if (p.delta < 0.0)
        throw std::invalid_argument("delta must be non-negative");
}

double spin_bath_base(double delta, double xi, double xi0) {
    return delta * delta / xi0 * std::exp(-std::abs(xi) / xi0);
}

}  // namespace

std::string method_tag(RateMethod method) {
    switch (method) {
        case RateMethod::GoldenRuleNumeric: return "golden-rule-numeric";
        case RateMethod::ClosedForm: return "analytic-eq26";
        case RateMethod::SpinBathBase: return "spin-bath-eq9";
        case RateMethod::SpinBathDamped: return "spin-bath-eq10";
        case RateMethod::EdOracle: return "ed-oracle";
        case RateMethod::Stochastic: return "stochastic";
    }
    throw std::invalid_argument("unknown rate method");
}

RateMethod parse_method_tag(const std::string& tag) {
    for (RateMethod m :
         {RateMethod::GoldenRuleNumeric, RateMethod::ClosedForm,
          RateMethod::SpinBathBase, RateMethod::SpinBathDamped,
          RateMethod::EdOracle, RateMethod::Stochastic}) {
        if (method_tag(m) == tag) return m;
    }
    throw std::invalid_argument("unknown rate method tag: " + tag);
}

std::vector<std::string> validity_warnings(const TwoLevelParams& p,
                                           double xi0) {
    std::vector<std::string> out;
    if (p.delta > 0.1 * std::abs(p.xi))
        out.push_back("delta > 0.1*|xi|: leading-order-in-delta rate may be "
                      "inaccurate");
    if (p.delta > 0.1 * xi0)
        out.push_back("delta > 0.1*xi0: leading-order-in-delta rate may be "
                      "inaccurate");
    return out;
}

double golden_rule_rate(const TwoLevelParams& p, const BathKernels& kernels,
                        const GoldenRuleOptions& opt) {
    check_params(p);
    if (p.delta == 0.0) return 0.0;

    const double bath_scale = kernels.spec().scale();
    if (opt.warnings) {
        auto warns = validity_warnings(p, bath_scale);
        opt.warnings->insert(opt.warnings->end(), warns.begin(), warns.end());
    }

    const double q = std::abs(p.xi);
    auto coherence = [&](double t) { return kernels.coherence_factor(t); };

    double integral = 0.0;
    if (q < 1e-3 * bath_scale) {
        // non-oscillatory: march doubling panels until the coherence factor
        // falls below the floor, then add the 1/t^2 tail estimate
        auto f = [&](double t) { return std::cos(q * t) * coherence(t); };
        const double s = 1.0 / bath_scale;
        double lo = 0.0, width = s;
        for (int k = 0; k < 200; ++k) {
            integral += quad::integrate(f, lo, lo + width, opt.quad);
            lo += width;
            width *= 2.0;
            if (coherence(lo) < opt.coherence_floor) break;
        }
        integral += coherence(lo) * lo;  // bounded tail, C(t) ~ const/t^2
    } else {
        // half-period panels of cos(q t) with Euler acceleration
        const double half_period = kPi / q;
        quad::Options panel_opt = opt.quad;
        panel_opt.abs_tol *= 0.1;
        panel_opt.max_depth = 24;
        auto f = [&](double t) { return std::cos(q * t) * coherence(t); };
        quad::EulerSum acc;
        double lo = 0.0;
        double hi = 0.5 * half_period;
        int quiet = 0;
        for (std::int64_t k = 0; k < 2000000; ++k) {
            const double piece = quad::integrate(f, lo, hi, panel_opt);
            acc.add(piece);
            const double tol = std::max(opt.quad.abs_tol,
                                        opt.quad.rel_tol * std::abs(acc.value())) +
                               1e-300;
            if (acc.terms() >= 6 && acc.last_increment() < tol &&
                std::abs(piece) < 8.0 * tol) {
                if (++quiet >= 3) break;
            } else {
                quiet = 0;
            }
            lo = hi;
            hi += half_period;
            if (coherence(lo) < opt.coherence_floor) {
                // alternating tail is bounded by half the next panel
                acc.add(0.5 * quad::integrate(f, lo, hi, panel_opt));
                break;
            }
        }
        integral = acc.value();
    }

    const double rate = p.delta * p.delta * integral;
    // clamp quadrature jitter around zero, not genuine sign changes
    if (std::abs(rate) < 1e-12 * p.delta * p.delta) return 0.0;
    return rate;
}

double analytic_rate(const TwoLevelParams& p, double xi0) {
    check_params(p);
    if (!(xi0 > 0.0)) throw std::invalid_argument("xi0 must be > 0");
    return 0.5 * kPi * spin_bath_base(p.delta, p.xi, xi0);
}

double spin_bath_rate(const TwoLevelParams& p, double xi0) {
    check_params(p);
    if (!(xi0 > 0.0)) throw std::invalid_argument("xi0 must be > 0");
    if (!p.gamma2) return spin_bath_base(p.delta, p.xi, xi0);
    if (*p.gamma2 < xi0)
        throw std::invalid_argument("gamma2 must satisfy gamma2 >= xi0");
    return p.delta * p.delta / *p.gamma2 * std::exp(-std::abs(p.xi) / xi0);
}

double tunneling_suppression(const SpectralDensity& highfreq,
                             const quad::Options& opt) {
    double total = 0.0;
    for (const SpectralDensity* leaf : highfreq.leaves()) {
        auto f = [leaf](double w) { return eval_j_over_w2(*leaf, w); };
        if (leaf->family() == SpectralFamily::Tabulated) {
            total += quad::integrate(f, 0.0, leaf->table().back()[0], opt);
        } else {
            total += quad::integrate_to_infinity(f, 0.0, leaf->scale(), opt);
        }
    }
    return total;
}

double delta_eff(double delta, const SpectralDensity& highfreq,
                 const quad::Options& opt) {
    if (!(delta >= 0.0) || !std::isfinite(delta))
        throw std::invalid_argument("delta must be finite and >= 0");
    const double integral = tunneling_suppression(highfreq, opt);
    return delta * std::exp(-integral / (2.0 * kPi));
}

SpectralDensity match_gamma2(double delta, double xi0, double gamma2,
                             double cutoff) {
    if (!(xi0 > 0.0)) throw std::invalid_argument("xi0 must be > 0");
    if (!(delta >= 0.0)) throw std::invalid_argument("delta must be >= 0");
    if (gamma2 < xi0)
        throw std::invalid_argument(
            "gamma2 < xi0 would require amplification of delta");
    if (cutoff == 0.0) cutoff = 1000.0 * xi0;
    if (!(cutoff > xi0))
        throw std::invalid_argument("high-frequency cutoff must exceed xi0");
    // delta_eff^2/xi0 = delta^2/gamma2  <=>  int J'/w^2 = pi ln(gamma2/xi0),
    // and the cubic template integrates to exactly its amplitude
    const double amplitude = kPi * std::log(gamma2 / xi0);
    return SpectralDensity::cubic_exp_cutoff(amplitude, cutoff);
}

RateCurve rate_sweep(std::span<const double> xi_grid, RateMethod method,
                     const PointFn& point_fn, int workers) {
    for (std::size_t i = 1; i < xi_grid.size(); ++i) {
        if (!(xi_grid[i] > xi_grid[i - 1]))
            throw std::invalid_argument("xi grid must be strictly increasing");
    }
    RateCurve curve;
    curve.method = method_tag(method);
    curve.points.resize(xi_grid.size());
    const int n_workers = resolve_workers(workers);
    parallel_for_index(
        static_cast<std::int64_t>(xi_grid.size()), n_workers,
        [&](std::int64_t i) {
            const double xi = xi_grid[static_cast<std::size_t>(i)];
            RatePoint& pt = curve.points[static_cast<std::size_t>(i)];
            try {
                pt = point_fn(xi);
            } catch (const std::exception& e) {
                pt.gamma = std::numeric_limits<double>::quiet_NaN();
                pt.error = e.what();
            }
            pt.xi = xi;
        });
    return curve;
}

PointFn closed_form_points(const TwoLevelParams& p, double xi0) {
    return [p, xi0](double xi) {
        TwoLevelParams q = p;
        q.xi = xi;
        return RatePoint{xi, analytic_rate(q, xi0), std::nullopt, {}};
    };
}

PointFn spin_bath_points(const TwoLevelParams& p, double xi0) {
    return [p, xi0](double xi) {
        TwoLevelParams q = p;
        q.xi = xi;
        return RatePoint{xi, spin_bath_rate(q, xi0), std::nullopt, {}};
    };
}

PointFn golden_rule_points(const TwoLevelParams& p, const BathKernels& kernels,
                           const GoldenRuleOptions& opt) {
    return [p, kernels, opt](double xi) {
        TwoLevelParams q = p;
        q.xi = xi;
        GoldenRuleOptions o = opt;
        o.warnings = nullptr;  // per-point warnings stay out of parallel paths
        return RatePoint{xi, golden_rule_rate(q, kernels, o), std::nullopt, {}};
    };
}

}  // namespace oscbath
