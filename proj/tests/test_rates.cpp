#include <doctest.h>

#include <cmath>

#include "oscbath/rates.hpp"
#include "oscbath/rng.hpp"
#include "oracles.hpp"

using namespace oscbath;

namespace {
constexpr double kPi = 3.14159265358979323846;

BathKernels kernels_half(double xi0 = 1.0) {
    return BathKernels::analytic(SpectralDensity::ohmic_exp_cutoff(0.5, xi0));
}
}  // namespace

TEST_CASE("golden-rule rate against the closed form") {
    const auto k = kernels_half();
    CHECK(golden_rule_rate({1.0, 0.0, {}}, k) ==
          doctest::Approx(kPi / 2.0).epsilon(1e-8));
    CHECK(golden_rule_rate({1.0, 2.0, {}}, k) ==
          doctest::Approx(0.5 * kPi * std::exp(-2.0)).epsilon(1e-8));
    CHECK(golden_rule_rate({0.0, 1.0, {}}, k) == 0.0);
}

TEST_CASE("golden-rule rate is even in the bias") {
    const auto k = kernels_half();
    for (double xi : {0.3, 1.7, 4.0}) {
        CHECK(golden_rule_rate({0.01, xi, {}}, k) ==
              golden_rule_rate({0.01, -xi, {}}, k));
    }
}

TEST_CASE("golden-rule rate scales with all energies") {
    Rng rng(3);
    const TwoLevelParams p{0.02, 1.3, {}};
    const double base = golden_rule_rate(p, kernels_half());
    for (int i = 0; i < 4; ++i) {
        const double s = rng.uniform(0.1, 10.0);
        const double scaled = golden_rule_rate(
            {p.delta * s, p.xi * s, {}}, kernels_half(s));
        CHECK(scaled == doctest::Approx(s * base).epsilon(1e-6));
    }
}

TEST_CASE("contour cross-check by independent quadrature") {
    // Delta^2 int_0^inf cos(xi t)/(1 + t^2) dt = (pi Delta^2/2) e^{-|xi|}
    for (double xi : {0.0, 0.5, 1.0, 2.0, 4.0}) {
        const double direct = oracle::cosine_transform(
            [](double t) { return 1.0 / (1.0 + t * t); }, xi, 2000.0, 400);
        CHECK(direct ==
              doctest::Approx(0.5 * kPi * std::exp(-xi)).epsilon(1e-8));
    }
}

TEST_CASE("closed-form rate values and validation") {
    CHECK(analytic_rate({1.0, 0.0, {}}, 1.0) == doctest::Approx(kPi / 2.0));
    CHECK(analytic_rate({1.0, -3.0, {}}, 3.0) ==
          doctest::Approx(kPi / 6.0 * std::exp(-1.0)).epsilon(1e-15));
    // quadratic in delta, exactly
    CHECK(analytic_rate({2.0, 1.0, {}}, 1.0) ==
          4.0 * analytic_rate({1.0, 1.0, {}}, 1.0));
    CHECK_THROWS_AS(analytic_rate({1.0, 0.0, {}}, 0.0), std::invalid_argument);
    CHECK_THROWS_AS(analytic_rate({-1.0, 0.0, {}}, 1.0), std::invalid_argument);
}

TEST_CASE("closed-form rate decays strictly in |xi|") {
    double prev = analytic_rate({1.0, 0.0, {}}, 1.0);
    for (double xi = 0.25; xi <= 6.0; xi += 0.25) {
        const double v = analytic_rate({1.0, xi, {}}, 1.0);
        CHECK(v < prev);
        prev = v;
    }
}

TEST_CASE("spin-bath reference forms") {
    CHECK(spin_bath_rate({1.0, 0.0, {}}, 1.0) == doctest::Approx(1.0));
    CHECK(spin_bath_rate({1.0, 1.0, 4.0}, 1.0) ==
          doctest::Approx(std::exp(-1.0) / 4.0).epsilon(1e-15));
    CHECK_THROWS_AS(spin_bath_rate({1.0, 0.0, 0.5}, 1.0),
                    std::invalid_argument);
}

TEST_CASE("closed form is exactly pi/2 times the spin-bath form") {
    Rng rng(17);
    for (int i = 0; i < 200; ++i) {
        const TwoLevelParams p{rng.uniform(0.01, 2.0),
                               rng.uniform(-8.0, 8.0),
                               {}};
        const double xi0 = rng.uniform(0.1, 5.0);
        CHECK(analytic_rate(p, xi0) ==
              0.5 * kPi * spin_bath_rate(p, xi0));  // bit-exact by construction
    }
}

TEST_CASE("high-frequency dressing of the tunneling element") {
    const auto none = SpectralDensity::cubic_exp_cutoff(0.0, 100.0);
    CHECK(delta_eff(3.0, none) == 3.0);

    // suppression integral pi => delta/e^{1/2} under the 1/(2 pi) exponent
    const auto jp = SpectralDensity::cubic_exp_cutoff(kPi, 50.0);
    const double integral = oracle::simpson(
        [&](double w) { return eval_j_over_w2(jp, w); }, 0.0, 2500.0, 1e-12);
    CHECK(integral == doctest::Approx(kPi).epsilon(1e-10));
    CHECK(delta_eff(1.0, jp) ==
          doctest::Approx(std::exp(-0.5)).epsilon(1e-10));

    // monotone non-increasing in the amplitude
    double prev = 1.0;
    for (double amp : {0.1, 0.5, 2.0, 10.0}) {
        const double v =
            delta_eff(1.0, SpectralDensity::cubic_exp_cutoff(amp, 50.0));
        CHECK(v <= prev);
        CHECK(v <= 1.0);
        prev = v;
    }

    // an ohmic high-frequency density has a divergent suppression integral
    CHECK_THROWS_AS(
        delta_eff(1.0, SpectralDensity::ohmic_exp_cutoff(0.5, 50.0)),
        DivergenceError);
}

TEST_CASE("gamma2 matching solves the template amplitude") {
    const double e2 = std::exp(2.0);
    const auto none = match_gamma2(1.0, 1.0, 1.0);
    CHECK(none.amplitude() == 0.0);

    const auto jp = match_gamma2(1.0, 1.0, e2);
    CHECK(jp.amplitude() == doctest::Approx(2.0 * kPi).epsilon(1e-14));
    // delta_eff of the matched density equals delta/e regardless of formula
    CHECK(delta_eff(1.0, jp) == doctest::Approx(std::exp(-1.0)).epsilon(1e-10));
    // matching contract to 1e-10 relative
    const double deff = delta_eff(1.0, jp);
    CHECK(deff * deff / 1.0 == doctest::Approx(1.0 / e2).epsilon(1e-10));

    CHECK_THROWS_AS(match_gamma2(1.0, 1.0, 0.5), std::invalid_argument);
}

TEST_CASE("validity warnings fire outside the perturbative domain") {
    std::vector<std::string> warnings;
    GoldenRuleOptions opt;
    opt.warnings = &warnings;
    golden_rule_rate({0.5, 1.0, {}}, kernels_half(), opt);
    CHECK(warnings.size() == 2);  // delta > 0.1*|xi| and delta > 0.1*xi0
    warnings.clear();
    golden_rule_rate({0.001, 1.0, {}}, kernels_half(), opt);
    CHECK(warnings.empty());
}

TEST_CASE("rate sweeps") {
    const std::vector<double> grid{-2.0, -1.0, 0.0, 1.0, 2.0};
    const auto closed = rate_sweep(grid, RateMethod::ClosedForm,
                                   closed_form_points({1.0, 0.0, {}}, 1.0), 2);
    CHECK(closed.method == "analytic-eq26");
    CHECK(closed.points.size() == 5);
    CHECK(closed.points[0].gamma == closed.points[4].gamma);
    CHECK(closed.points[1].gamma == closed.points[3].gamma);
    CHECK(closed.points[2].gamma > closed.points[1].gamma);

    const auto golden =
        rate_sweep(grid, RateMethod::GoldenRuleNumeric,
                   golden_rule_points({0.01, 0.0, {}}, kernels_half()), 2);
    for (std::size_t i = 0; i < grid.size(); ++i) {
        const double reference =
            analytic_rate({0.01, grid[i], {}}, 1.0);
        CHECK(std::abs(golden.points[i].gamma / reference - 1.0) < 1e-6);
    }

    const auto empty = rate_sweep({}, RateMethod::ClosedForm,
                                  closed_form_points({1.0, 0.0, {}}, 1.0), 1);
    CHECK(empty.points.empty());

    CHECK_THROWS_AS(rate_sweep(std::vector<double>{1.0, 1.0},
                               RateMethod::ClosedForm,
                               closed_form_points({1.0, 0.0, {}}, 1.0), 1),
                    std::invalid_argument);
}

TEST_CASE("failed sweep points are recorded, not dropped") {
    const std::vector<double> grid{0.0, 1.0, 2.0};
    const auto curve = rate_sweep(
        grid, RateMethod::ClosedForm,
        [](double xi) -> RatePoint {
            if (xi == 1.0) throw std::runtime_error("synthetic failure");
            return {xi, 1.0, {}, {}};
        },
        2);
    CHECK(curve.points.size() == 3);
    CHECK(curve.points[0].error.empty());
    CHECK(curve.points[1].error == "synthetic failure");
    CHECK(std::isnan(curve.points[1].gamma));
    CHECK(curve.points[2].error.empty());
}

TEST_CASE("method tags round-trip") {
    for (RateMethod m :
         {RateMethod::GoldenRuleNumeric, RateMethod::ClosedForm,
          RateMethod::SpinBathBase, RateMethod::SpinBathDamped,
          RateMethod::EdOracle, RateMethod::Stochastic}) {
        CHECK(parse_method_tag(method_tag(m)) == m);
    }
    CHECK_THROWS_AS(parse_method_tag("bogus"), std::invalid_argument);
}
