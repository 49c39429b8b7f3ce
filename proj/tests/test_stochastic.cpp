#include <doctest.h>

#include <cmath>

#include "oscbath/stochastic.hpp"

using namespace oscbath;

TEST_CASE("ou trajectories have the matched variance and memory") {
    const NoiseModel model{1.0, 0.1, 20240517};
    const auto path = ou_trajectory(model, 1000000);
    double mean = 0.0;
    for (double v : path) mean += v;
    mean /= static_cast<double>(path.size());
    double var = 0.0;
    for (double v : path) var += (v - mean) * (v - mean);
    var /= static_cast<double>(path.size() - 1);
    CHECK(var == doctest::Approx(2.0).epsilon(0.01));

    // lag 1/xi0 autocorrelation: e^{-1} * 2 xi0^2 within 2%
    const std::size_t lag = 10;
    double acf = 0.0;
    for (std::size_t i = 0; i + lag < path.size(); ++i)
        acf += (path[i] - mean) * (path[i + lag] - mean);
    acf /= static_cast<double>(path.size() - lag);
    CHECK(acf == doctest::Approx(2.0 * std::exp(-1.0)).epsilon(0.02));
}

TEST_CASE("trajectories are deterministic by seed and stream") {
    const NoiseModel model{2.0, 0.02, 7};
    const auto a = ou_trajectory(model, 1000, 3);
    const auto b = ou_trajectory(model, 1000, 3);
    const auto c = ou_trajectory(model, 1000, 4);
    CHECK(a == b);
    CHECK(a != c);
}

TEST_CASE("time-step precondition") {
    CHECK_THROWS_AS(ou_trajectory({1.0, 0.2, 1}, 10), std::invalid_argument);
    CHECK_THROWS_AS(ou_trajectory({4.0, 0.05, 1}, 10), std::invalid_argument);
    CHECK_NOTHROW(ou_trajectory({4.0, 0.025, 1}, 10));
}

TEST_CASE("bloch propagation limits") {
    // no noise, xi = 0: Rabi at frequency delta
    std::vector<double> quiet(2000, 0.0);
    const auto rabi = propagate_bloch({0.4, 0.0, {}}, quiet, 0.05);
    for (std::size_t k = 0; k < rabi.size(); k += 100) {
        const double t = 0.05 * static_cast<double>(k);
        CHECK(rabi[k] == doctest::Approx(std::cos(0.4 * t)).epsilon(1e-9));
    }

    // no tunneling: populations frozen
    const auto frozen = propagate_bloch({0.0, 1.3, {}}, quiet, 0.05);
    for (double v : frozen) CHECK(v == 1.0);
}

TEST_CASE("bloch norm is preserved over long noisy runs") {
    const NoiseModel model{1.0, 0.05, 99};
    const auto path = ou_trajectory(model, 100000);
    double drift = 0.0;
    propagate_bloch({0.05, 0.7, {}}, path, model.dt, &drift);
    CHECK(drift <= 1e-10);
}

TEST_CASE("measured rate at zero bias sits at the golden-rule scale") {
    const double delta = 0.02;
    const NoiseModel model{1.0, 0.05, 42};
    MeasureOptions opt;
    opt.n_boot = 120;
    const auto m = measure_rate({delta, 0.0, {}}, model, 128, 6000.0, opt);
    const double scale = m.rate / (delta * delta);
    CHECK(scale > 0.2);
    CHECK(scale < 5.0);
    CHECK(!m.ci.has_value());  // below 100 realizations: no reported CI
    CHECK(m.curve.times.size() == m.curve.mean.size());

    const auto with_ci = measure_rate({delta, 0.0, {}}, model, 128, 6000.0, opt);
    CHECK(with_ci.rate == m.rate);  // deterministic given seed
}

TEST_CASE("rates fall with bias, with confidence intervals") {
    const double delta = 0.02;
    const NoiseModel model{1.0, 0.05, 1234};
    MeasureOptions opt;
    opt.n_boot = 120;
    const auto at0 = measure_rate({delta, 0.0, {}}, model, 144, 5000.0, opt);
    const auto at2 = measure_rate({delta, 2.0, {}}, model, 144, 16000.0, opt);
    REQUIRE(at0.ci.has_value());
    REQUIRE(at2.ci.has_value());
    CHECK(at0.rate > at2.rate);
    CHECK(at0.ci->first > at2.ci->second);  // gap exceeds the combined CIs
}

TEST_CASE("ensemble measurement is independent of the worker count") {
    const double delta = 0.03;
    const NoiseModel model{1.0, 0.05, 31415};
    MeasureOptions one;
    one.workers = 1;
    one.n_boot = 40;
    MeasureOptions two = one;
    two.workers = 2;
    const auto a = measure_rate({delta, 0.5, {}}, model, 96, 3000.0, one);
    const auto b = measure_rate({delta, 0.5, {}}, model, 96, 3000.0, two);
    CHECK(a.rate == b.rate);  // bit-identical
    CHECK(a.curve.mean == b.curve.mean);
}
