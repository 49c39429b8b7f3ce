#include <doctest.h>

#include <cmath>

#include "oscbath/quadrature.hpp"
#include "oracles.hpp"

using namespace oscbath;

TEST_CASE("adaptive panels reproduce closed-form integrals") {
    CHECK(quad::integrate([](double x) { return x * x; }, 0.0, 1.0) ==
          doctest::Approx(1.0 / 3.0).epsilon(1e-13));
    CHECK(quad::integrate([](double x) { return std::sin(x); }, 0.0,
                          3.14159265358979323846) ==
          doctest::Approx(2.0).epsilon(1e-12));
    CHECK(quad::integrate([](double x) { return std::exp(-x * x); }, -8.0,
                          8.0) ==
          doctest::Approx(std::sqrt(3.14159265358979323846)).epsilon(1e-12));
}

TEST_CASE("semi-infinite integration with exponential envelopes") {
    CHECK(quad::integrate_to_infinity([](double x) { return std::exp(-x); },
                                      0.0, 1.0) ==
          doctest::Approx(1.0).epsilon(1e-11));
    CHECK(quad::integrate_to_infinity(
              [](double x) { return x * std::exp(-x / 3.0); }, 0.0, 3.0) ==
          doctest::Approx(9.0).epsilon(1e-11));
    // offset start
    CHECK(quad::integrate_to_infinity([](double x) { return std::exp(-x); },
                                      2.0, 1.0) ==
          doctest::Approx(std::exp(-2.0)).epsilon(1e-11));
}

TEST_CASE("divergent tails are reported") {
    CHECK_THROWS_AS(quad::integrate_to_infinity(
                        [](double x) { return 1.0 / (1.0 + x); }, 0.0, 1.0),
                    DivergenceError);
}

TEST_CASE("euler summation accelerates the alternating harmonic series") {
    quad::EulerSum acc;
    for (int k = 1; k <= 40; ++k)
        acc.add((k % 2 ? 1.0 : -1.0) / k);
    CHECK(acc.value() == doctest::Approx(std::log(2.0)).epsilon(1e-12));
}

TEST_CASE("oscillatory integrals against Laplace-transform identities") {
    // int_0^inf e^{-x} sin(qx) = q/(1+q^2); cos: 1/(1+q^2)
    for (double q : {0.3, 1.0, 4.0, 17.0}) {
        const double s = quad::integrate_oscillatory(
            [](double x) { return std::exp(-x); }, quad::Trig::Sin, q, 1.0);
        const double c = quad::integrate_oscillatory(
            [](double x) { return std::exp(-x); }, quad::Trig::Cos, q, 1.0);
        CHECK(s == doctest::Approx(q / (1.0 + q * q)).epsilon(1e-9));
        CHECK(c == doctest::Approx(1.0 / (1.0 + q * q)).epsilon(1e-9));
    }
}

TEST_CASE("oscillatory integral with an interior start offset") {
    // int_a^inf e^{-x} cos(qx) dx against the independent Simpson oracle
    const double q = 3.0, a = 0.7;
    const double got = quad::integrate_oscillatory(
        [](double x) { return std::exp(-x); }, quad::Trig::Cos, q, 1.0, {}, a);
    const double want =
        oracle::simpson([&](double x) { return std::exp(-x) * std::cos(q * x); },
                        a, 50.0, 1e-14);
    CHECK(got == doctest::Approx(want).epsilon(1e-9));
}

TEST_CASE("tiny frequencies fall back to the plain path") {
    const double v = quad::integrate_oscillatory(
        [](double x) { return std::exp(-x); }, quad::Trig::Cos, 1e-8, 1.0);
    CHECK(v == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("endpoint-singular envelopes integrate through the product") {
    // int_0^inf sin(qx) e^{-x}/x dx = atan(q)
    for (double q : {0.5, 2.0, 8.0}) {
        const double v = quad::integrate_oscillatory(
            [](double x) { return std::exp(-x) / x; }, quad::Trig::Sin, q, 1.0);
        CHECK(v == doctest::Approx(std::atan(q)).epsilon(1e-9));
    }
}

TEST_CASE("argument validation") {
    CHECK_THROWS_AS(quad::integrate([](double x) { return x; }, 1.0, 0.0),
                    std::invalid_argument);
    CHECK_THROWS_AS(quad::integrate_to_infinity(
                        [](double x) { return std::exp(-x); }, 0.0, -1.0),
                    std::invalid_argument);
}
