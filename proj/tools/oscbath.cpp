// Command-line front end: rate sweeps, kernel dumps, oracle validation,
// high-frequency matching, and SMM presets.

#include <cstdio>
#include <map>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "oscbath/config.hpp"
#include "oscbath/csv.hpp"
#include "oscbath/ed.hpp"
#include "oscbath/errors.hpp"
#include "oscbath/kernels.hpp"
#include "oscbath/run.hpp"
#include "oscbath/version.hpp"

namespace {

using oscbath::ConfigError;

struct CommonFlags {
    std::string config_path;
    std::map<std::string, std::string> overrides;
};

// every flag maps onto a config key; flags override file values
void add_override_flags(CLI::App* cmd, CommonFlags* flags) {
    cmd->add_option("-c,--config", flags->config_path,
                    "configuration file (key = value, or JSON)");
    static const std::vector<std::pair<std::string, std::string>> keys = {
        {"--delta", "delta"},
        {"--xi", "xi"},
        {"--xi0", "xi0"},
        {"--gamma2", "gamma2"},
        {"--alpha", "alpha"},
        {"--temperature", "temperature"},
        {"--bath", "bath"},
        {"--grid-min", "grid.min"},
        {"--grid-max", "grid.max"},
        {"--grid-count", "grid.count"},
        {"--grid-scale", "grid.scale"},
        {"--methods", "methods"},
        {"--unit", "unit"},
        {"--workers", "workers"},
        {"--seed", "seed"},
        {"--output-dir", "output.dir"},
        {"--preset", "preset"},
        {"--oracle-n-modes", "oracle.n_modes"},
        {"--oracle-n-max", "oracle.n_max"},
        {"--oracle-omega-max", "oracle.omega_max"},
        {"--oracle-dim-cap", "oracle.dim_cap"},
        {"--oracle-krylov-dim", "oracle.krylov_dim"},
        {"--oracle-n-spins", "oracle.n_spins"},
        {"--oracle-eta", "oracle.eta"},
        {"--oracle-pair-scale", "oracle.pair_scale"},
        {"--oracle-seeds", "oracle.seeds"},
        {"--noise-dt", "noise.dt"},
        {"--noise-realizations", "noise.realizations"},
        {"--noise-t-max", "noise.t_max"},
    };
    for (const auto& [flag, key] : keys) {
        const std::string k = key;
        cmd->add_option_function<std::string>(
            flag,
            [flags, k](const std::string& v) { flags->overrides[k] = v; },
            "override config key " + k);
    }
}

oscbath::RunConfig build_config(const CommonFlags& flags) {
    if (!flags.config_path.empty())
        return oscbath::load_config(flags.config_path, flags.overrides);
    return oscbath::config_from_pairs(flags.overrides);
}

int cmd_rates(const CommonFlags& flags, bool compare) {
    auto overrides = flags;
    if (compare) overrides.overrides["compare"] = "true";
    const auto cfg = build_config(overrides);
    const auto report = oscbath::run(cfg);
    for (const auto& f : report.files) std::printf("wrote %s\n", f.c_str());
    std::printf("wrote %s\n", report.manifest_path.c_str());
    return report.exit_code;
}

int cmd_kernels(const CommonFlags& flags, const std::string& mode,
                double t_min, double t_max, int t_count,
                const std::string& t_scale, const std::string& out_path) {
    auto pairs = flags.overrides;
    if (!pairs.count("delta")) pairs["delta"] = "1";  // unused by kernels
    oscbath::RunConfig cfg = flags.config_path.empty()
                                 ? oscbath::config_from_pairs(pairs)
                                 : oscbath::load_config(flags.config_path, pairs);
    const auto spec = cfg.bath_density();
    const bool analytic =
        mode == "analytic" ||
        (mode == "auto" &&
         spec.family() == oscbath::SpectralFamily::OhmicExpCutoff &&
         cfg.temperature == 0.0);
    const auto kernels =
        analytic ? oscbath::BathKernels::analytic(spec, cfg.temperature)
                 : oscbath::BathKernels::numeric(spec, cfg.temperature);

    if (t_count < 1) throw ConfigError("kernels: t-count must be >= 1");
    if (t_scale == "log" && !(t_min > 0.0))
        throw ConfigError("kernels: log scale requires t-min > 0");
    std::vector<double> ts, q1, q2, coh;
    for (int i = 0; i < t_count; ++i) {
        const double f =
            t_count == 1 ? 0.0 : static_cast<double>(i) / (t_count - 1);
        const double t = t_scale == "log"
                             ? t_min * std::pow(t_max / t_min, f)
                             : t_min + f * (t_max - t_min);
        ts.push_back(t);
        q1.push_back(kernels.q1(t));
        q2.push_back(kernels.q2(t));
        coh.push_back(kernels.coherence_factor(t));
    }
    const std::string body = oscbath::io::kernel_dump_csv(ts, q1, q2, coh);
    if (out_path.empty()) {
        std::fputs(body.c_str(), stdout);
    } else {
        oscbath::io::write_text_atomic(out_path, body);
        std::printf("wrote %s\n", out_path.c_str());
    }
    return 0;
}

int cmd_match(double delta, double xi0, double gamma2, double cutoff) {
    const auto highfreq = oscbath::match_gamma2(delta, xi0, gamma2, cutoff);
    const double integral = oscbath::tunneling_suppression(highfreq);
    const double deff = oscbath::delta_eff(delta, highfreq);
    const double target = delta * delta / gamma2;
    const double matched = deff * deff / xi0;
    nlohmann::json j;
    j["amplitude"] = highfreq.amplitude();
    j["cutoff"] = highfreq.cutoff();
    j["suppression_integral"] = integral;
    j["delta_eff"] = deff;
    j["delta_eff_sq_over_xi0"] = matched;
    j["delta_sq_over_gamma2"] = target;
    j["relative_residual"] = std::abs(matched / target - 1.0);
    std::printf("%s\n", j.dump(2).c_str());
    return 0;
}

int cmd_presets(const std::string& unit) {
    const double factor = oscbath::unit_factor_from_kelvin(unit);
    std::printf("%-8s %6s %10s %10s %12s %12s  notes\n", "name", "S",
                ("D[" + unit + "]").c_str(), ("E[" + unit + "]").c_str(),
                ("delta[" + unit + "]").c_str(),
                ("xi0[" + unit + "]").c_str());
    for (const auto& p : oscbath::smm_presets()) {
        std::printf("%-8s %6g %10g %10g %12g %12g  %s\n", p.name.c_str(),
                    p.total_spin, p.d_kelvin * factor, p.e_kelvin * factor,
                    p.delta_kelvin * factor, p.xi0_kelvin * factor,
                    p.notes.c_str());
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"two-level relaxation rates under engineered oscillator "
                 "baths"};
    app.set_version_flag("--version", oscbath::kVersion);
    app.require_subcommand(1);

    CommonFlags rates_flags;
    bool compare = false;
    auto* rates = app.add_subcommand("rates", "sweep rates over a bias grid");
    add_override_flags(rates, &rates_flags);
    rates->add_flag("--compare", compare,
                    "emit pairwise relative errors and the analytic/spin-bath "
                    "ratio column");

    CommonFlags kernel_flags;
    std::string kernel_mode = "auto", t_scale = "linear", kernel_out;
    double t_min = 0.0, t_max = 20.0;
    int t_count = 201;
    auto* kernels = app.add_subcommand("kernels", "dump Q1/Q2/coherence CSV");
    add_override_flags(kernels, &kernel_flags);
    kernels->add_option("--mode", kernel_mode, "auto|analytic|numeric")
        ->check(CLI::IsMember({"auto", "analytic", "numeric"}));
    kernels->add_option("--t-min", t_min, "grid start");
    kernels->add_option("--t-max", t_max, "grid end");
    kernels->add_option("--t-count", t_count, "grid size");
    kernels->add_option("--t-scale", t_scale, "linear|log")
        ->check(CLI::IsMember({"linear", "log"}));
    kernels->add_option("-o,--output", kernel_out, "output file (default stdout)");

    CommonFlags validate_flags;
    auto* validate = app.add_subcommand(
        "validate", "run the ED and stochastic oracle checks");
    add_override_flags(validate, &validate_flags);

    double m_delta = 1.0, m_xi0 = 1.0, m_gamma2 = 0.0, m_cutoff = 0.0;
    auto* match = app.add_subcommand(
        "match", "solve for the high-frequency density matching gamma2");
    match->add_option("--delta", m_delta)->required();
    match->add_option("--xi0", m_xi0)->required();
    match->add_option("--gamma2", m_gamma2)->required();
    match->add_option("--cutoff", m_cutoff, "template cutoff (0: 1000*xi0)");

    std::string presets_unit = "K";
    auto* presets = app.add_subcommand("presets", "list SMM parameter presets");
    presets->add_option("--unit", presets_unit, "K|mK|uK");

    CLI11_PARSE(app, argc, argv);

    try {
        if (rates->parsed()) return cmd_rates(rates_flags, compare);
        if (kernels->parsed())
            return cmd_kernels(kernel_flags, kernel_mode, t_min, t_max,
                               t_count, t_scale, kernel_out);
        if (validate->parsed())
            return oscbath::validate(build_config(validate_flags));
        if (match->parsed())
            return cmd_match(m_delta, m_xi0, m_gamma2, m_cutoff);
        if (presets->parsed()) return cmd_presets(presets_unit);
    } catch (const ConfigError& e) {
        std::fprintf(stderr, "%s\n", e.what());
        return 2;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 0;
}
