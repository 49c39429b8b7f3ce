#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "oscbath/rates.hpp"

namespace oscbath {

struct GridSpec {
    double min = 0.0;
    double max = 5.0;
    int count = 21;
    bool log_scale = false;

    std::vector<double> values() const;
};

struct OracleSettings {
    int n_modes = 8;
    int n_max = 3;
    double omega_max = 0.0;  // 0: use 3*xi0
    std::int64_t dim_cap = 200000;
    int krylov_dim = 40;
    int n_spins = 8;
    double eta = 0.2;
    double pair_scale = 0.0;
    std::vector<std::uint64_t> seeds{1, 2, 3, 4, 5, 6, 7, 8};
};

struct NoiseSettings {
    double dt = 0.0;     // 0: use 0.05/xi0
    int realizations = 256;
    double t_max = 0.0;  // 0: derive from the closed-form rate estimate
};

struct RunConfig {
    double delta = 0.0;
    double xi = 0.0;
    std::optional<double> gamma2;
    double xi0 = 0.0;
    double alpha = 0.5;
    double temperature = 0.0;
    std::string bath = "ohmic-exp-cutoff";  // or "table:<path>"
    GridSpec grid;
    std::vector<RateMethod> methods{RateMethod::ClosedForm};
    bool compare = false;
    std::string unit = "K";
    int workers = 0;
    std::uint64_t seed = 1;
    std::string output_dir = ".";
    std::string preset;  // optional SMM preset name
    OracleSettings oracle;
    NoiseSettings noise;

    TwoLevelParams params() const { return {delta, xi, gamma2}; }
    SpectralDensity bath_density() const;
};

struct SmmPreset {
    std::string name;
    double total_spin;
    double d_kelvin;
    double e_kelvin;
    double delta_kelvin;
    double xi0_kelvin;
    std::string notes;
};

const std::vector<SmmPreset>& smm_presets();

// Exact powers of ten: 1 K = 1e3 mK = 1e6 uK.
double unit_factor_from_kelvin(const std::string& unit);

// Key-value text (key = value, '#' comments) or JSON when the path ends in
// .json; JSON objects nest with dotted keys.  Overrides are applied after the
// file.  All invariant violations are reported together in the ConfigError.
RunConfig load_config(const std::string& path,
                      const std::map<std::string, std::string>& overrides = {});
RunConfig config_from_pairs(const std::map<std::string, std::string>& pairs);

// Effective-config echo used for the run manifest; every value needed to
// recompute the outputs appears here.
std::string config_json(const RunConfig& config);

}  // namespace oscbath
