// Serial-vs-OpenMP benchmark for the hot kernels: the spin-boson matvec, a
// rate sweep, and the stochastic ensemble.

#include <chrono>
#include <cstdio>
#include <functional>
#include <vector>

#include "oscbath/ed.hpp"
#include "oscbath/kernels.hpp"
#include "oscbath/parallel.hpp"
#include "oscbath/rates.hpp"
#include "oscbath/stochastic.hpp"

namespace {

double seconds(const std::function<void()>& body, int repeats) {
    const auto t0 = std::chrono::steady_clock::now();
    for (int r = 0; r < repeats; ++r) body();
    const auto t1 = std::chrono::steady_clock::now();
    return std::chrono::duration<double>(t1 - t0).count() / repeats;
}

void report(const char* name, double serial, double parallel, int workers) {
    std::printf("%-28s serial %8.3f ms   %d workers %8.3f ms   speedup %.2fx\n",
                name, 1e3 * serial, workers, 1e3 * parallel,
                serial / parallel);
}

}  // namespace

int main() {
    using namespace oscbath;
    const int workers = resolve_workers(0);
    std::printf("workers: %d\n", workers);

    // spin-boson matvec, 10 modes (dim 118098)
    {
        const auto spec = SpectralDensity::ohmic_exp_cutoff(0.5, 1.0);
        const auto bath = discretize(spec, 10, 3.0, 3);
        SpinBosonHamiltonian h({0.05, -1.0, {}}, bath, 1 << 20);
        Eigen::VectorXcd x = Eigen::VectorXcd::Random(h.dim());
        Eigen::VectorXcd y(h.dim());
        const double t_serial = seconds(
            [&] { h.apply_serial(x.data(), y.data()); }, 20);
        const double t_par =
            seconds([&] { h.apply(x.data(), y.data(), workers); }, 20);
        report("spin-boson matvec", t_serial, t_par, workers);
    }

    // golden-rule sweep, 33 points
    {
        const auto spec = SpectralDensity::ohmic_exp_cutoff(0.5, 1.0);
        const auto kernels = BathKernels::analytic(spec);
        std::vector<double> grid;
        for (int i = 0; i < 33; ++i) grid.push_back(-4.0 + 0.25 * i);
        const auto fn = golden_rule_points({0.01, 0.0, {}}, kernels);
        const double t_serial = seconds(
            [&] { rate_sweep(grid, RateMethod::GoldenRuleNumeric, fn, 1); }, 3);
        const double t_par = seconds(
            [&] { rate_sweep(grid, RateMethod::GoldenRuleNumeric, fn, workers); },
            3);
        report("golden-rule sweep", t_serial, t_par, workers);
    }

    // stochastic ensemble, 128 realizations
    {
        const NoiseModel model{1.0, 0.05, 42};
        MeasureOptions opt;
        opt.n_boot = 0;
        const double t_serial = seconds(
            [&] {
                MeasureOptions o = opt;
                o.workers = 1;
                measure_rate({0.05, 0.0, {}}, model, 128, 1500.0, o);
            },
            2);
        const double t_par = seconds(
            [&] {
                MeasureOptions o = opt;
                o.workers = workers;
                measure_rate({0.05, 0.0, {}}, model, 128, 1500.0, o);
            },
            2);
        report("stochastic ensemble", t_serial, t_par, workers);
    }
    return 0;
}
