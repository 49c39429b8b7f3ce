#include "oscbath/run.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <set>

#include <json.hpp>

#include "oscbath/csv.hpp"
#include "oscbath/ed.hpp"
#include "oscbath/errors.hpp"
#include "oscbath/rng.hpp"
#include "oscbath/stochastic.hpp"
#include "oscbath/version.hpp"

namespace oscbath {

namespace {

std::vector<double> linspace(double lo, double hi, int n) {
    std::vector<double> out(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i)
        out[static_cast<std::size_t>(i)] = lo + (hi - lo) * i / (n - 1);
    return out;
}

}  // namespace

// ---------------------------------------------------------------------------
// Measurement protocols shared by sweeps, validate, and the acceptance suite
// ---------------------------------------------------------------------------

SpinBosonEdResult spin_boson_ed_rate(const SpinBosonProtocol& proto,
                                     double xi) {
    const auto spec = SpectralDensity::ohmic_exp_cutoff(proto.alpha, proto.xi0);
    const double omega_max =
        proto.omega_max > 0.0 ? proto.omega_max : 3.0 * proto.xi0;
    const auto bath =
        discretize(spec, proto.n_modes, omega_max, proto.n_max);
    // negative bias puts the initial "up" state in the upper well
    TwoLevelParams p{proto.delta, -std::abs(xi), std::nullopt};
    SpinBosonHamiltonian h(p, bath, proto.dim_cap);
    Eigen::VectorXcd psi0 = Eigen::VectorXcd::Zero(h.dim());
    psi0[0] = 1.0;

    const double guess =
        analytic_rate({proto.delta, xi, std::nullopt}, proto.xi0);
    double t_end = proto.transient + proto.t_end_factor / guess;

    EvolveOptions eopt;
    eopt.krylov_dim = proto.krylov_dim;
    eopt.step_tol = proto.step_tol;
    eopt.workers = proto.workers;
    eopt.dense_threshold = proto.dense_threshold;

    FitOptions fopt;
    fopt.transient_time = proto.transient;

    for (int attempt = 0;; ++attempt) {
        const auto grid = linspace(0.0, t_end, proto.n_samples);
        const auto res = evolve(h, psi0, grid, eopt);
        try {
            const auto fit = extract_rate(res, res.equilibrium, fopt);
            return {fit.rate, fit.rate_stderr, res.norm_drift,
                    res.energy_drift, fit.warning};
        } catch (const InsufficientDecayError&) {
            if (attempt >= proto.max_extensions) throw;
            t_end *= 2.0;
        }
    }
}

CentralSpinRate central_spin_seed_rate(const CentralSpinProtocol& proto,
                                       double xi) {
    if (proto.seeds.empty())
        throw std::invalid_argument("central-spin protocol: no seeds");
    const std::size_t n_seeds = proto.seeds.size();
    const auto grid = linspace(0.0, proto.t_max, proto.n_samples);

    std::vector<std::vector<double>> curves(n_seeds);
    std::vector<double> eqs(n_seeds);
    double norm_drift = 0.0, energy_drift = 0.0;
    for (std::size_t s = 0; s < n_seeds; ++s) {
        const auto bath = sample_spin_couplings(
            proto.n_spins, proto.xi0, proto.seeds[s], proto.eta,
            proto.pair_scale);
        TwoLevelParams p{proto.delta, -std::abs(xi), std::nullopt};
        CentralSpinHamiltonian h(p, bath, proto.spin_cap);
        EvolveOptions eopt;
        eopt.workers = proto.workers;
        const auto res =
            evolve(h, h.product_initial_state(proto.seeds[s]), grid, eopt);
        curves[s] = res.tau_z;
        eqs[s] = res.equilibrium.value_or(0.0);
        norm_drift = std::max(norm_drift, res.norm_drift);
        energy_drift = std::max(energy_drift, res.energy_drift);
    }

    FitOptions fopt;
    fopt.transient_time = proto.transient;
    fopt.envelope_fit = false;  // seed-averaged curves use the signed fit

    auto fit_subset = [&](const std::vector<std::size_t>& idx) {
        EvolutionResult mean;
        mean.times = grid;
        mean.tau_z.assign(grid.size(), 0.0);
        double eq = 0.0;
        for (std::size_t s : idx) {
            for (std::size_t i = 0; i < grid.size(); ++i)
                mean.tau_z[i] += curves[s][i];
            eq += eqs[s];
        }
        for (auto& v : mean.tau_z) v /= static_cast<double>(idx.size());
        eq /= static_cast<double>(idx.size());
        return extract_rate(mean, eq, fopt).rate;
    };

    std::vector<std::size_t> all(n_seeds);
    for (std::size_t s = 0; s < n_seeds; ++s) all[s] = s;

    CentralSpinRate out;
    out.rate = fit_subset(all);
    out.norm_drift = norm_drift;
    out.energy_drift = energy_drift;

    Rng rng(proto.boot_seed);
    std::vector<double> rates;
    rates.reserve(static_cast<std::size_t>(proto.n_boot));
    for (int b = 0; b < proto.n_boot; ++b) {
        std::vector<std::size_t> idx(n_seeds);
        for (auto& v : idx)
            v = static_cast<std::size_t>(rng.bits() % n_seeds);
        try {
            rates.push_back(fit_subset(idx));
        } catch (const InsufficientDecayError&) {
        }
    }
    if (rates.size() >= 16) {
        std::sort(rates.begin(), rates.end());
        out.ci_lo = rates[static_cast<std::size_t>(0.025 * rates.size())];
        out.ci_hi = rates[std::min(rates.size() - 1,
                                   static_cast<std::size_t>(0.975 * rates.size()))];
    } else {
        out.ci_lo = out.ci_hi = out.rate;
    }
    return out;
}

// ---------------------------------------------------------------------------
// Sweep points
// ---------------------------------------------------------------------------

RatePoint ed_oracle_point(const RunConfig& cfg, double xi) {
    SpinBosonProtocol proto;
    proto.delta = cfg.delta;
    proto.xi0 = cfg.xi0;
    proto.alpha = cfg.alpha;
    proto.n_modes = cfg.oracle.n_modes;
    proto.n_max = cfg.oracle.n_max;
    proto.omega_max = cfg.oracle.omega_max;
    proto.dim_cap = cfg.oracle.dim_cap;
    proto.krylov_dim = cfg.oracle.krylov_dim;
    proto.transient = 5.0 / cfg.xi0;
    proto.workers = cfg.workers;
    const auto res = spin_boson_ed_rate(proto, xi);
    RatePoint pt;
    pt.xi = xi;
    pt.gamma = res.rate;
    pt.sigma = res.rate_stderr;
    return pt;
}

RatePoint stochastic_point(const RunConfig& cfg, double xi) {
    NoiseModel model;
    model.xi0 = cfg.xi0;
    model.dt = cfg.noise.dt > 0.0 ? cfg.noise.dt : 0.05 / cfg.xi0;
    model.seed = cfg.seed;
    TwoLevelParams p{cfg.delta, xi, cfg.gamma2};
    const double guess = spin_bath_rate({cfg.delta, xi, std::nullopt}, cfg.xi0);
    double t_max =
        cfg.noise.t_max > 0.0 ? cfg.noise.t_max : 5.0 / cfg.xi0 + 2.5 / guess;
    MeasureOptions mopt;
    mopt.workers = cfg.workers;
    for (int attempt = 0;; ++attempt) {
        try {
            const auto m =
                measure_rate(p, model, cfg.noise.realizations, t_max, mopt);
            RatePoint pt;
            pt.xi = xi;
            pt.gamma = m.rate;
            if (m.ci)
                pt.sigma = 0.25 * (m.ci->second - m.ci->first);
            return pt;
        } catch (const InsufficientDecayError&) {
            if (attempt >= 2) throw;
            t_max *= 2.0;
        }
    }
}

// ---------------------------------------------------------------------------
// run()
// ---------------------------------------------------------------------------

RunReport run(const RunConfig& cfg) {
    namespace fs = std::filesystem;
    RunReport report;
    fs::create_directories(cfg.output_dir);
    const auto grid = cfg.grid.values();
    const auto spec = cfg.bath_density();

    nlohmann::json manifest;
    manifest["schema_version"] = 1;
    manifest["artifact_version"] = kVersion;
    manifest["config"] = nlohmann::json::parse(config_json(cfg));
    manifest["quadrature"] = {{"abs_tol", 1e-12},
                              {"rel_tol", 1e-12},
                              {"coherence_floor", 1e-14}};

    std::map<std::string, RateCurve> curves;
    nlohmann::json method_reports = nlohmann::json::array();
    int n_failed_methods = 0;

    for (RateMethod method : cfg.methods) {
        PointFn fn;
        switch (method) {
            case RateMethod::ClosedForm:
                fn = closed_form_points(cfg.params(), cfg.xi0);
                break;
            case RateMethod::SpinBathBase: {
                TwoLevelParams p = cfg.params();
                p.gamma2.reset();
                fn = spin_bath_points(p, cfg.xi0);
                break;
            }
            case RateMethod::SpinBathDamped:
                fn = spin_bath_points(cfg.params(), cfg.xi0);
                break;
            case RateMethod::GoldenRuleNumeric: {
                const bool analytic_ok =
                    spec.family() == SpectralFamily::OhmicExpCutoff &&
                    cfg.temperature == 0.0;
                BathKernels kernels =
                    analytic_ok ? BathKernels::analytic(spec, 0.0)
                                : BathKernels::numeric(spec, cfg.temperature);
                fn = golden_rule_points(cfg.params(), kernels);
                break;
            }
            case RateMethod::EdOracle:
                fn = [cfg](double xi) { return ed_oracle_point(cfg, xi); };
                break;
            case RateMethod::Stochastic:
                fn = [cfg](double xi) { return stochastic_point(cfg, xi); };
                break;
        }
        // oracle-backed points manage their own parallelism
        const bool heavy = method == RateMethod::EdOracle ||
                           method == RateMethod::Stochastic;
        const RateCurve curve =
            rate_sweep(grid, method, fn, heavy ? 1 : cfg.workers);
        const std::string tag = method_tag(method);
        const std::string file =
            (fs::path(cfg.output_dir) / ("rates_" + tag + ".csv")).string();
        io::write_text_atomic(file, io::rate_curve_csv(curve));
        report.files.push_back(file);

        int n_errors = 0;
        nlohmann::json errors = nlohmann::json::array();
        for (const auto& pt : curve.points) {
            if (!pt.error.empty()) {
                ++n_errors;
                errors.push_back({{"xi", pt.xi}, {"error", pt.error}});
            }
        }
        if (n_errors == static_cast<int>(curve.points.size()) &&
            !curve.points.empty())
            ++n_failed_methods;
        method_reports.push_back({{"method", tag},
                                  {"file", fs::path(file).filename().string()},
                                  {"points", curve.points.size()},
                                  {"failed_points", n_errors},
                                  {"errors", errors}});
        curves[tag] = curve;
    }

    if (cfg.compare && curves.size() >= 1) {
        std::vector<std::string> tags;
        for (RateMethod m : cfg.methods) tags.push_back(method_tag(m));
        std::vector<std::string> header{"xi"};
        for (const auto& t : tags) header.push_back("gamma_" + t);
        for (std::size_t a = 0; a < tags.size(); ++a)
            for (std::size_t b = a + 1; b < tags.size(); ++b)
                header.push_back("relerr_" + tags[a] + "_" + tags[b]);
        const bool have_ratio = curves.count("analytic-eq26") &&
                                curves.count("spin-bath-eq9");
        if (have_ratio) header.push_back("ratio_analytic_spin_bath");

        std::string body = io::csv_row(header);
        for (std::size_t i = 0; i < grid.size(); ++i) {
            std::vector<std::string> row{io::format_float(grid[i])};
            for (const auto& t : tags) {
                const auto& pt = curves[t].points[i];
                row.push_back(pt.error.empty() ? io::format_float(pt.gamma)
                                               : "");
            }
            for (std::size_t a = 0; a < tags.size(); ++a) {
                for (std::size_t b = a + 1; b < tags.size(); ++b) {
                    const auto& pa = curves[tags[a]].points[i];
                    const auto& pb = curves[tags[b]].points[i];
                    if (!pa.error.empty() || !pb.error.empty()) {
                        row.push_back("");
                        continue;
                    }
                    const double denom =
                        std::max(std::abs(pa.gamma), std::abs(pb.gamma));
                    row.push_back(io::format_float(
                        denom > 0.0 ? std::abs(pa.gamma - pb.gamma) / denom
                                    : 0.0));
                }
            }
            if (have_ratio) {
                const auto& pa = curves["analytic-eq26"].points[i];
                const auto& pb = curves["spin-bath-eq9"].points[i];
                row.push_back(pb.gamma != 0.0
                                  ? io::format_float(pa.gamma / pb.gamma)
                                  : "");
            }
            body += io::csv_row(row);
        }
        const std::string file =
            (fs::path(cfg.output_dir) / "compare.csv").string();
        io::write_text_atomic(file, body);
        report.files.push_back(file);
        manifest["compare_file"] = "compare.csv";
    }

    manifest["methods"] = method_reports;
    nlohmann::json file_list = nlohmann::json::array();
    for (const auto& f : report.files)
        file_list.push_back(fs::path(f).filename().string());
    manifest["files"] = file_list;

    report.manifest_path =
        (fs::path(cfg.output_dir) / "manifest.json").string();
    io::write_text_atomic(report.manifest_path, manifest.dump(2) + "\n");

    report.exit_code =
        (!cfg.methods.empty() &&
         n_failed_methods == static_cast<int>(cfg.methods.size()))
            ? 1
            : 0;
    return report;
}

// ---------------------------------------------------------------------------
// validate()
// ---------------------------------------------------------------------------

namespace {

bool check(std::vector<std::string>* lines, const std::string& name, bool ok,
           const std::string& detail) {
    lines->push_back(std::string(ok ? "PASS " : "FAIL ") + name +
                     (detail.empty() ? "" : ": " + detail));
    return ok;
}

std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.4g", v);
    return buf;
}

}  // namespace

int validate(const RunConfig& cfg) {
    std::vector<std::string> lines;
    bool all_ok = true;
    const double xi0 = cfg.xi0;

    // noise statistics
    {
        NoiseModel model{xi0, 0.1 / xi0, cfg.seed};
        const std::int64_t n = 1000000;
        const auto path = ou_trajectory(model, n);
        double mean = 0.0;
        for (double v : path) mean += v;
        mean /= static_cast<double>(n);
        double var = 0.0;
        for (double v : path) var += (v - mean) * (v - mean);
        var /= static_cast<double>(n - 1);
        const double target = 2.0 * xi0 * xi0;
        all_ok &= check(&lines, "noise variance",
                        std::abs(var / target - 1.0) < 0.01,
                        fmt(var) + " vs " + fmt(target));

        const auto lag = static_cast<std::size_t>(std::lround(1.0 / (xi0 * model.dt)));
        double acf = 0.0;
        for (std::size_t i = 0; i + lag < path.size(); ++i)
            acf += (path[i] - mean) * (path[i + lag] - mean);
        acf /= static_cast<double>(n - lag);
        const double acf_target = std::exp(-1.0) * target;
        all_ok &= check(&lines, "noise autocorrelation at lag 1/xi0",
                        std::abs(acf / acf_target - 1.0) < 0.02,
                        fmt(acf) + " vs " + fmt(acf_target));
    }

    // bath discretization weight
    {
        const auto spec = cfg.bath_density();
        const double omega_max =
            cfg.oracle.omega_max > 0.0 ? cfg.oracle.omega_max : 3.0 * xi0;
        const auto bath =
            discretize(spec, cfg.oracle.n_modes, omega_max, cfg.oracle.n_max);
        const double weight = bath.coupling_weight();
        const double truncated =
            (2.0 / 3.14159265358979323846) *
            quad::integrate([&](double w) { return spec(w); }, 0.0, omega_max,
                            {1e-12, 1e-12});
        const double bound =
            5.0 / (cfg.oracle.n_modes * double(cfg.oracle.n_modes)) + 1e-10;
        all_ok &= check(&lines, "discretized coupling weight",
                        std::abs(weight / truncated - 1.0) < bound,
                        fmt(weight) + " vs " + fmt(truncated));
    }

    // spin-boson ED against the golden rule
    {
        SpinBosonProtocol proto;
        proto.delta = 0.05 * xi0;
        proto.xi0 = xi0;
        proto.alpha = cfg.alpha;
        proto.n_modes = cfg.oracle.n_modes;
        proto.n_max = cfg.oracle.n_max;
        proto.omega_max = cfg.oracle.omega_max;
        proto.dim_cap = cfg.oracle.dim_cap;
        proto.krylov_dim = cfg.oracle.krylov_dim;
        proto.transient = 5.0 / xi0;
        proto.workers = cfg.workers;
        try {
            const auto r = spin_boson_ed_rate(proto, xi0);
            const double gr =
                analytic_rate({proto.delta, xi0, std::nullopt}, xi0);
            all_ok &= check(&lines, "spin-boson ED rate vs golden rule",
                            std::abs(r.rate / gr - 1.0) < 0.25,
                            fmt(r.rate) + " vs " + fmt(gr));
            all_ok &= check(&lines, "spin-boson unitarity",
                            r.norm_drift <= 1e-8 && r.energy_drift <= 1e-8,
                            "norm " + fmt(r.norm_drift) + ", energy " +
                                fmt(r.energy_drift));
        } catch (const std::exception& e) {
            all_ok &= check(&lines, "spin-boson ED rate vs golden rule", false,
                            e.what());
        }
    }

    // central-spin rate ordering
    {
        CentralSpinProtocol proto;
        proto.n_spins = cfg.oracle.n_spins;
        proto.xi0 = xi0;
        proto.delta = 0.05 * xi0;
        proto.eta = cfg.oracle.eta;
        proto.pair_scale = cfg.oracle.pair_scale;
        proto.seeds = cfg.oracle.seeds;
        proto.transient = 5.0 / xi0;
        proto.workers = cfg.workers;
        try {
            std::vector<CentralSpinRate> rates;
            for (double xi : {0.0, 1.0, 2.0}) {
                proto.t_max = (xi == 0.0 ? 2000.0 : xi == 1.0 ? 3000.0 : 8000.0) / xi0;
                rates.push_back(central_spin_seed_rate(proto, xi * xi0));
            }
            const bool monotone = rates[0].rate > rates[1].rate &&
                                  rates[1].rate > rates[2].rate;
            const bool separated = rates[0].ci_lo > rates[1].ci_hi &&
                                   rates[1].ci_lo > rates[2].ci_hi;
            all_ok &= check(&lines, "central-spin rate ordering",
                            monotone && separated,
                            fmt(rates[0].rate) + " > " + fmt(rates[1].rate) +
                                " > " + fmt(rates[2].rate) +
                                (separated ? " (CIs separated)"
                                           : " (CIs overlap)"));
        } catch (const std::exception& e) {
            all_ok &= check(&lines, "central-spin rate ordering", false,
                            e.what());
        }
    }

    // stochastic twin
    {
        const double delta = 0.02 * xi0;
        NoiseModel model{xi0, cfg.noise.dt > 0.0 ? cfg.noise.dt : 0.05 / xi0,
                         cfg.seed};
        MeasureOptions mopt;
        mopt.workers = cfg.workers;
        try {
            std::vector<MeasuredRate> ms;
            for (double xi : {0.0, 1.0, 2.0}) {
                const double guess =
                    delta * delta / xi0 * std::exp(-0.8 * xi);
                ms.push_back(measure_rate({delta, xi * xi0, std::nullopt},
                                          model, cfg.noise.realizations,
                                          2.5 / guess, mopt));
            }
            const bool monotone =
                ms[0].rate > ms[1].rate && ms[1].rate > ms[2].rate;
            bool separated = true;
            for (int i = 0; i < 2; ++i) {
                if (!ms[i].ci || !ms[i + 1].ci) separated = false;
                else separated &= ms[i].ci->first > ms[i + 1].ci->second;
            }
            all_ok &= check(&lines, "stochastic rate ordering",
                            monotone && separated,
                            fmt(ms[0].rate) + " > " + fmt(ms[1].rate) + " > " +
                                fmt(ms[2].rate));
            const double norm = ms[0].rate / (delta * delta / xi0);
            all_ok &= check(&lines, "stochastic zero-bias rate scale",
                            norm > 0.2 && norm < 5.0,
                            "Gamma(0)/(delta^2/xi0) = " + fmt(norm));
        } catch (const std::exception& e) {
            all_ok &= check(&lines, "stochastic rate ordering", false, e.what());
        }
    }

    for (const auto& line : lines) std::printf("%s\n", line.c_str());
    return all_ok ? 0 : 1;
}

}  // namespace oscbath
