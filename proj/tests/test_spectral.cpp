#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include "oscbath/rng.hpp"
#include "oscbath/spectral.hpp"
#include "oracles.hpp"

using namespace oscbath;

namespace {
constexpr double kPi = 3.14159265358979323846;

SpectralDensity ohmic_half() { return SpectralDensity::ohmic_exp_cutoff(0.5, 1.0); }
}  // namespace

TEST_CASE("ohmic density point values") {
    const auto j = ohmic_half();
    CHECK(j(0.0) == 0.0);
    CHECK(j(-3.0) == 0.0);
    CHECK(j(1.0) == doctest::Approx(kPi * std::exp(-1.0)).epsilon(1e-15));
    CHECK_THROWS_AS(j(std::nan("")), std::invalid_argument);
}

TEST_CASE("ohmic density peaks at xi0") {
    const auto j = SpectralDensity::ohmic_exp_cutoff(0.5, 2.5);
    double best_w = 0.0, best = -1.0;
    for (double w = 0.01; w < 20.0; w += 0.01) {
        if (j(w) > best) {
            best = j(w);
            best_w = w;
        }
    }
    CHECK(best_w == doctest::Approx(2.5).epsilon(1e-2));
    // derivative vanishes at the cutoff scale
    const double h = 1e-6;
    CHECK(std::abs(j(2.5 + h) - j(2.5 - h)) / (2 * h) < 1e-4);
}

TEST_CASE("bias variance closed forms and quadrature oracle") {
    CHECK(bias_variance(ohmic_half()) == doctest::Approx(2.0).epsilon(1e-14));
    CHECK(bias_variance(SpectralDensity::ohmic_exp_cutoff(0.5, 3.0)) ==
          doctest::Approx(18.0).epsilon(1e-14));

    // moment identity against the independent Simpson oracle: 4*alpha*xi0^2
    Rng rng(2024);
    for (int i = 0; i < 6; ++i) {
        const double alpha = rng.uniform(0.05, 2.0);
        const double xi0 = rng.uniform(0.2, 5.0);
        const auto spec = SpectralDensity::ohmic_exp_cutoff(alpha, xi0);
        const double by_quad =
            (2.0 / kPi) *
            oracle::simpson([&](double w) { return spec(w); }, 0.0, 50.0 * xi0,
                            1e-13 * xi0 * xi0);
        CHECK(bias_variance(spec) ==
              doctest::Approx(4.0 * alpha * xi0 * xi0).epsilon(1e-12));
        CHECK(bias_variance(spec) == doctest::Approx(by_quad).epsilon(1e-10));
    }

    const auto zero_table = SpectralDensity::tabulated({{0.0, 0.0}, {5.0, 0.0}});
    CHECK(bias_variance(zero_table) == 0.0);
}

TEST_CASE("fluctuation statistics") {
    const auto stats = fluctuation_stats(ohmic_half());
    CHECK(stats.variance == doctest::Approx(2.0).epsilon(1e-14));
    CHECK(stats.width == doctest::Approx(std::sqrt(2.0)).epsilon(1e-14));
    CHECK(stats.correlation_rate == doctest::Approx(1.0).epsilon(1e-12));

    // correlation-rate oracle: ratio of Simpson moments
    const auto spec = SpectralDensity::ohmic_exp_cutoff(0.3, 1.7);
    const double num =
        oracle::simpson([&](double w) { return spec(w); }, 0.0, 80.0, 1e-13);
    const double den = oracle::simpson(
        [&](double w) { return w > 1e-14 ? spec(w) / w : 0.0; }, 0.0, 80.0,
        1e-13);
    CHECK(fluctuation_stats(spec).correlation_rate ==
          doctest::Approx(num / den).epsilon(1e-9));

    // scale covariance: doubling xi0 doubles both width and rate
    const auto doubled = fluctuation_stats(SpectralDensity::ohmic_exp_cutoff(0.5, 2.0));
    CHECK(doubled.width == doctest::Approx(2.0 * stats.width).epsilon(1e-13));
    CHECK(doubled.correlation_rate ==
          doctest::Approx(2.0 * stats.correlation_rate).epsilon(1e-12));
}

TEST_CASE("power spectrum") {
    const auto j = ohmic_half();
    CHECK(power_spectrum(j, 0.0, 0.7) == j(0.7));  // coth -> 1 at T = 0

    // independent coth evaluation
    const double x = 2.0 / (2.0 * 1.0);
    const double coth_ind =
        (std::exp(x) + std::exp(-x)) / (std::exp(x) - std::exp(-x));
    CHECK(power_spectrum(j, 1.0, 2.0) ==
          doctest::Approx(j(2.0) * coth_ind).epsilon(1e-13));

    // w -> 0+ limit at T > 0 is 4*pi*alpha*T for the ohmic family
    const double t = 0.7;
    CHECK(power_spectrum(j, t, 1e-8) ==
          doctest::Approx(4.0 * kPi * 0.5 * t).epsilon(1e-6));

    CHECK_THROWS_AS(power_spectrum(j, 1.0, 0.0), std::invalid_argument);
    CHECK_THROWS_AS(power_spectrum(j, 1.0, -1.0), std::invalid_argument);
    CHECK_THROWS_AS(power_spectrum(j, -0.5, 1.0), std::invalid_argument);
}

TEST_CASE("composite densities sum pointwise and in moments") {
    const auto j = ohmic_half();
    const auto zero = SpectralDensity::tabulated({{0.0, 0.0}, {9.0, 0.0}});
    const auto with_zero = compose(j, zero);
    const auto doubled = compose(j, j);
    for (int i = 0; i < 64; ++i) {
        const double w = 0.1 + 0.2 * i;
        CHECK(with_zero(w) == j(w));
        CHECK(doubled(w) == doctest::Approx(2.0 * j(w)).epsilon(1e-15));
    }

    const auto a = SpectralDensity::ohmic_exp_cutoff(0.4, 1.3);
    const auto b = SpectralDensity::cubic_exp_cutoff(2.0, 4.0);
    CHECK(bias_variance(compose(a, b)) ==
          doctest::Approx(bias_variance(a) + bias_variance(b)).epsilon(1e-10));
    // additivity against quadrature of the composed evaluation
    const auto ab = compose(a, b);
    const double by_quad =
        (2.0 / kPi) *
        oracle::simpson([&](double w) { return ab(w); }, 0.0, 160.0, 1e-12);
    CHECK(bias_variance(ab) == doctest::Approx(by_quad).epsilon(1e-9));
}

TEST_CASE("non-negativity over random parameters") {
    Rng rng(99);
    for (int i = 0; i < 10000; ++i) {
        const double alpha = rng.uniform(0.0, 3.0);
        const double xi0 = rng.uniform(0.05, 8.0);
        const double w = rng.uniform(-5.0, 40.0);
        CHECK(SpectralDensity::ohmic_exp_cutoff(alpha, xi0)(w) >= 0.0);
    }
}

TEST_CASE("scale covariance of the ohmic family") {
    Rng rng(7);
    const auto base = ohmic_half();
    for (int i = 0; i < 200; ++i) {
        const double s = rng.uniform(0.1, 10.0);
        const double w = rng.uniform(0.0, 12.0);
        const auto scaled = SpectralDensity::ohmic_exp_cutoff(0.5, s);
        CHECK(scaled(s * w) == doctest::Approx(s * base(w)).epsilon(1e-13));
    }
}

TEST_CASE("tabulated densities interpolate linearly with zero extrapolation") {
    const auto t = SpectralDensity::tabulated({{1.0, 0.0}, {2.0, 4.0}, {4.0, 0.0}});
    CHECK(t(0.5) == 0.0);
    CHECK(t(8.0) == 0.0);
    CHECK(t(1.5) == doctest::Approx(2.0));
    CHECK(t(3.0) == doctest::Approx(2.0));
    CHECK(t(2.0) == doctest::Approx(4.0));
    CHECK(bias_variance(t) ==
          doctest::Approx((2.0 / kPi) * 6.0).epsilon(1e-14));  // triangle area

    CHECK_THROWS_AS(SpectralDensity::tabulated({}), InvalidSpecError);
    CHECK_THROWS_AS(SpectralDensity::tabulated({{1.0, 1.0}, {1.0, 2.0}}),
                    InvalidSpecError);
    CHECK_THROWS_AS(SpectralDensity::tabulated({{1.0, -1.0}}), InvalidSpecError);
}

TEST_CASE("tabulated CSV loading") {
    namespace fs = std::filesystem;
    const auto path = fs::temp_directory_path() / "oscbath_table_test.csv";
    {
        std::ofstream out(path);
        out << "omega,j\n0.0,0.0\n1.0,2.5\n2.0,0.0\n";
    }
    const auto spec = load_tabulated_csv(path.string());
    CHECK(spec(1.0) == doctest::Approx(2.5));
    CHECK(spec(0.5) == doctest::Approx(1.25));
    fs::remove(path);

    {
        std::ofstream out(path);
        out << "omega,j\n0.0,0.0\nnot-a-number,1\n";
    }
    CHECK_THROWS_WITH_AS(load_tabulated_csv(path.string()),
                         doctest::Contains(":3"), InvalidSpecError);
    fs::remove(path);

    CHECK_THROWS_AS(load_tabulated_csv("/nonexistent/file.csv"),
                    InvalidSpecError);
}
