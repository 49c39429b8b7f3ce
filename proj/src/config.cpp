#include "oscbath/config.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "oscbath/errors.hpp"

namespace oscbath {

namespace {

std::string trim(const std::string& s) {
    const auto a = s.find_first_not_of(" \t\r\n");
    if (a == std::string::npos) return {};
    const auto b = s.find_last_not_of(" \t\r\n");
    return s.substr(a, b - a + 1);
}

std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, sep)) {
        item = trim(item);
        if (!item.empty()) out.push_back(item);
    }
    return out;
}

void flatten_json(const nlohmann::json& j, const std::string& prefix,
                  std::map<std::string, std::string>* out) {
    if (j.is_object()) {
        for (const auto& [key, value] : j.items()) {
            flatten_json(value, prefix.empty() ? key : prefix + "." + key, out);
        }
        return;
    }
    if (j.is_array()) {
        std::string joined;
        for (const auto& v : j) {
            if (!joined.empty()) joined += ",";
            joined += v.is_string() ? v.get<std::string>() : v.dump();
        }
        (*out)[prefix] = joined;
        return;
    }
    (*out)[prefix] = j.is_string() ? j.get<std::string>() : j.dump();
}

std::map<std::string, std::string> parse_key_value_file(
    const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("config: cannot open " + path);
    std::map<std::string, std::string> pairs;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            throw ConfigError("config: " + path + ":" +
                              std::to_string(line_no) +
                              ": expected 'key = value'");
        }
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (key.empty()) {
            throw ConfigError("config: " + path + ":" +
                              std::to_string(line_no) + ": empty key");
        }
        pairs[key] = value;
    }
    return pairs;
}

class PairReader {
  public:
    explicit PairReader(const std::map<std::string, std::string>& pairs)
        : pairs_(pairs) {}

    bool has(const std::string& key) const { return pairs_.count(key) > 0; }

    std::string str(const std::string& key, const std::string& fallback) {
        used_.insert(key);
        const auto it = pairs_.find(key);
        return it == pairs_.end() ? fallback : it->second;
    }

    double num(const std::string& key, double fallback) {
        used_.insert(key);
        const auto it = pairs_.find(key);
        if (it == pairs_.end()) return fallback;
        try {
            std::size_t pos = 0;
            const double v = std::stod(it->second, &pos);
            if (pos != it->second.size()) throw std::invalid_argument("");
            return v;
        } catch (const std::exception&) {
            errors.push_back("field '" + key + "': not a number: '" +
                             it->second + "'");
            return fallback;
        }
    }

    std::vector<std::string> unknown_keys() const {
        std::vector<std::string> out;
        for (const auto& [key, value] : pairs_) {
            if (!used_.count(key)) out.push_back(key);
        }
        return out;
    }

    std::vector<std::string> errors;

  private:
    const std::map<std::string, std::string>& pairs_;
    std::set<std::string> used_;
};

}  // namespace

std::vector<double> GridSpec::values() const {
    std::vector<double> out;
    out.reserve(static_cast<std::size_t>(std::max(count, 0)));
    if (count == 1) {
        out.push_back(min);
        return out;
    }
    for (int i = 0; i < count; ++i) {
        const double f = static_cast<double>(i) / (count - 1);
        out.push_back(log_scale ? min * std::pow(max / min, f)
                                : min + f * (max - min));
    }
    return out;
}

SpectralDensity RunConfig::bath_density() const {
    if (bath.rfind("table:", 0) == 0)
        return load_tabulated_csv(bath.substr(6));
    return SpectralDensity::ohmic_exp_cutoff(alpha, xi0);
}

const std::vector<SmmPreset>& smm_presets() {
    static const std::vector<SmmPreset> presets = {
        {"Fe8", 10.0, 0.295, 0.056, 1e-7, 1e-2,
         "delta and xi0 are order-of-magnitude scales for the tunneling "
         "element and the bias fluctuation width"},
        {"Mn12", 10.0, 0.65, 0.0, 1e-7, 1e-2,
         "tabulated |E| = 0 sits at the boundary of the biaxial condition "
         "0 < |E| < D; delta and xi0 follow the Fe8 hierarchy"},
        {"Mn4-9/2", 4.5, 0.68, 0.064, 1e-7, 1e-2,
         "delta and xi0 follow the Fe8 hierarchy"},
        {"Mn4-8", 8.0, 0.43, 0.029, 1e-7, 1e-2,
         "delta and xi0 follow the Fe8 hierarchy"},
    };
    return presets;
}

double unit_factor_from_kelvin(const std::string& unit) {
    if (unit == "K") return 1.0;
    if (unit == "mK") return 1e3;
    if (unit == "uK") return 1e6;
    throw ConfigError("unknown unit '" + unit + "' (expected K, mK, or uK)");
}

RunConfig config_from_pairs(const std::map<std::string, std::string>& pairs) {
    PairReader reader(pairs);
    RunConfig cfg;

    cfg.unit = reader.str("unit", cfg.unit);
    cfg.preset = reader.str("preset", cfg.preset);
    std::vector<std::string>& errors = reader.errors;

    double unit_factor = 1.0;
    try {
        unit_factor = unit_factor_from_kelvin(cfg.unit);
    } catch (const ConfigError& e) {
        errors.push_back(e.what());
    }

    if (!cfg.preset.empty()) {
        bool found = false;
        for (const auto& p : smm_presets()) {
            if (p.name == cfg.preset) {
                cfg.delta = p.delta_kelvin * unit_factor;
                cfg.xi0 = p.xi0_kelvin * unit_factor;
                found = true;
                break;
            }
        }
        if (!found)
            errors.push_back("unknown preset '" + cfg.preset + "'");
    }

    cfg.delta = reader.num("delta", cfg.delta);
    cfg.xi = reader.num("xi", cfg.xi);
    cfg.xi0 = reader.num("xi0", cfg.xi0);
    if (reader.has("gamma2")) cfg.gamma2 = reader.num("gamma2", 0.0);
    cfg.alpha = reader.num("alpha", cfg.alpha);
    cfg.temperature = reader.num("temperature", cfg.temperature);
    cfg.bath = reader.str("bath", cfg.bath);
    cfg.grid.min = reader.num("grid.min", cfg.grid.min);
    cfg.grid.max = reader.num("grid.max", cfg.grid.max);
    cfg.grid.count = static_cast<int>(reader.num("grid.count", cfg.grid.count));
    const std::string scale = reader.str("grid.scale", "linear");
    if (scale == "log") cfg.grid.log_scale = true;
    else if (scale != "linear")
        errors.push_back("field 'grid.scale': expected linear or log");
    if (reader.has("methods")) {
        cfg.methods.clear();
        for (const auto& tag : split(reader.str("methods", ""), ',')) {
            try {
                cfg.methods.push_back(parse_method_tag(tag));
            } catch (const std::exception& e) {
                errors.push_back(std::string("field 'methods': ") + e.what());
            }
        }
    }
    const std::string cmp = reader.str("compare", cfg.compare ? "true" : "false");
    cfg.compare = (cmp == "true" || cmp == "1" || cmp == "yes");
    cfg.workers = static_cast<int>(reader.num("workers", cfg.workers));
    cfg.seed = static_cast<std::uint64_t>(reader.num("seed", 1.0));
    cfg.output_dir = reader.str("output.dir", cfg.output_dir);

    cfg.oracle.n_modes =
        static_cast<int>(reader.num("oracle.n_modes", cfg.oracle.n_modes));
    cfg.oracle.n_max =
        static_cast<int>(reader.num("oracle.n_max", cfg.oracle.n_max));
    cfg.oracle.omega_max = reader.num("oracle.omega_max", cfg.oracle.omega_max);
    cfg.oracle.dim_cap = static_cast<std::int64_t>(
        reader.num("oracle.dim_cap", static_cast<double>(cfg.oracle.dim_cap)));
    cfg.oracle.krylov_dim =
        static_cast<int>(reader.num("oracle.krylov_dim", cfg.oracle.krylov_dim));
    cfg.oracle.n_spins =
        static_cast<int>(reader.num("oracle.n_spins", cfg.oracle.n_spins));
    cfg.oracle.eta = reader.num("oracle.eta", cfg.oracle.eta);
    cfg.oracle.pair_scale =
        reader.num("oracle.pair_scale", cfg.oracle.pair_scale);
    if (reader.has("oracle.seeds")) {
        cfg.oracle.seeds.clear();
        for (const auto& s : split(reader.str("oracle.seeds", ""), ',')) {
            try {
                cfg.oracle.seeds.push_back(std::stoull(s));
            } catch (const std::exception&) {
                errors.push_back("field 'oracle.seeds': bad entry '" + s + "'");
            }
        }
    }
    cfg.noise.dt = reader.num("noise.dt", cfg.noise.dt);
    cfg.noise.realizations = static_cast<int>(
        reader.num("noise.realizations", cfg.noise.realizations));
    cfg.noise.t_max = reader.num("noise.t_max", cfg.noise.t_max);

    for (const auto& key : reader.unknown_keys())
        errors.push_back("unknown field '" + key + "'");

    // invariant validation, collected rather than first-failure
    if (!(cfg.delta > 0.0)) errors.push_back("delta must be > 0");
    if (!(cfg.xi0 > 0.0)) errors.push_back("xi0 must be > 0");
    if (cfg.alpha < 0.0) errors.push_back("alpha must be >= 0");
    if (cfg.temperature < 0.0) errors.push_back("temperature must be >= 0");
    if (cfg.gamma2 && *cfg.gamma2 < cfg.xi0)
        errors.push_back("gamma2 must satisfy gamma2 >= xi0");
    if (cfg.grid.count < 1)
        errors.push_back("grid.count must be >= 1 (empty grids are rejected)");
    if (cfg.grid.count > 1 && !(cfg.grid.max > cfg.grid.min))
        errors.push_back("grid.max must exceed grid.min");
    if (cfg.grid.log_scale && !(cfg.grid.min > 0.0))
        errors.push_back("log grids require grid.min > 0");
    if (cfg.methods.empty())
        errors.push_back("methods must name at least one computation method");
    for (RateMethod m : cfg.methods) {
        if (m == RateMethod::SpinBathDamped && !cfg.gamma2)
            errors.push_back("method spin-bath-eq10 requires gamma2");
    }
    if (cfg.bath.rfind("table:", 0) == 0) {
        const std::string path = cfg.bath.substr(6);
        if (!std::filesystem::exists(path))
            errors.push_back("bath table file not found: " + path);
    } else if (cfg.bath != "ohmic-exp-cutoff") {
        errors.push_back("bath must be 'ohmic-exp-cutoff' or 'table:<path>'");
    }
    if (cfg.oracle.n_modes < 1) errors.push_back("oracle.n_modes must be >= 1");
    if (cfg.oracle.n_max < 1) errors.push_back("oracle.n_max must be >= 1");
    if (cfg.oracle.n_spins < 1) errors.push_back("oracle.n_spins must be >= 1");
    if (cfg.oracle.seeds.empty()) errors.push_back("oracle.seeds must be non-empty");
    if (cfg.noise.realizations < 1)
        errors.push_back("noise.realizations must be >= 1");
    if (cfg.noise.dt < 0.0) errors.push_back("noise.dt must be >= 0");
    if (cfg.noise.dt > 0.0 && cfg.xi0 > 0.0 && cfg.noise.dt > 0.1 / cfg.xi0)
        errors.push_back("noise.dt must be <= 0.1/xi0");

    if (!errors.empty()) {
        std::string joined = "invalid configuration:";
        for (const auto& e : errors) joined += "\n  - " + e;
        throw ConfigError(joined);
    }
    return cfg;
}

RunConfig load_config(const std::string& path,
                      const std::map<std::string, std::string>& overrides) {
    std::map<std::string, std::string> pairs;
    if (path.size() >= 5 && path.substr(path.size() - 5) == ".json") {
        std::ifstream in(path);
        if (!in) throw ConfigError("config: cannot open " + path);
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(in);
        } catch (const nlohmann::json::parse_error& e) {
            throw ConfigError(std::string("config: ") + path + ": " + e.what());
        }
        flatten_json(j, "", &pairs);
    } else {
        pairs = parse_key_value_file(path);
    }
    for (const auto& [key, value] : overrides) pairs[key] = value;
    return config_from_pairs(pairs);
}

std::string config_json(const RunConfig& cfg) {
    nlohmann::json j;
    j["delta"] = cfg.delta;
    j["xi"] = cfg.xi;
    if (cfg.gamma2) j["gamma2"] = *cfg.gamma2;
    j["xi0"] = cfg.xi0;
    j["alpha"] = cfg.alpha;
    j["temperature"] = cfg.temperature;
    j["bath"] = cfg.bath;
    j["grid"] = {{"min", cfg.grid.min},
                 {"max", cfg.grid.max},
                 {"count", cfg.grid.count},
                 {"scale", cfg.grid.log_scale ? "log" : "linear"}};
    std::vector<std::string> tags;
    for (RateMethod m : cfg.methods) tags.push_back(method_tag(m));
    j["methods"] = tags;
    j["compare"] = cfg.compare;
    j["unit"] = cfg.unit;
    j["workers"] = cfg.workers;
    j["seed"] = cfg.seed;
    j["output_dir"] = cfg.output_dir;
    if (!cfg.preset.empty()) j["preset"] = cfg.preset;
    j["oracle"] = {{"n_modes", cfg.oracle.n_modes},
                   {"n_max", cfg.oracle.n_max},
                   {"omega_max", cfg.oracle.omega_max},
                   {"dim_cap", cfg.oracle.dim_cap},
                   {"krylov_dim", cfg.oracle.krylov_dim},
                   {"n_spins", cfg.oracle.n_spins},
                   {"eta", cfg.oracle.eta},
                   {"pair_scale", cfg.oracle.pair_scale},
                   {"seeds", cfg.oracle.seeds}};
    j["noise"] = {{"dt", cfg.noise.dt},
                  {"realizations", cfg.noise.realizations},
                  {"t_max", cfg.noise.t_max}};
    return j.dump(2);
}

}  // namespace oscbath
