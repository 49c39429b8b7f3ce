#include <doctest.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>

#include <json.hpp>

#include "oscbath/config.hpp"
#include "oscbath/csv.hpp"
#include "oscbath/rng.hpp"
#include "oscbath/run.hpp"

using namespace oscbath;
namespace fs = std::filesystem;

namespace {

fs::path write_temp(const std::string& name, const std::string& content) {
    const fs::path path = fs::temp_directory_path() / name;
    std::ofstream out(path);
    out << content;
    return path;
}

std::string slurp(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    return std::string(std::istreambuf_iterator<char>(in), {});
}

}  // namespace

TEST_CASE("17-digit floats round-trip exactly") {
    Rng rng(8);
    for (int i = 0; i < 1000; ++i) {
        const double v = std::exp(rng.uniform(-30.0, 30.0)) *
                         (rng.bits() & 1 ? 1.0 : -1.0);
        CHECK(std::stod(io::format_float(v)) == v);
    }
}

TEST_CASE("csv rows quote separators") {
    CHECK(io::csv_row({"a", "b"}) == "a,b\n");
    CHECK(io::csv_row({"a,b", "c\"d"}) == "\"a,b\",\"c\"\"d\"\n");
}

TEST_CASE("minimal config picks the documented defaults") {
    const auto path = write_temp("oscbath_min.cfg",
                                 "delta = 0.01\nxi0 = 1\ngrid.count = 5\n"
                                 "grid.min = 0\ngrid.max = 2\n");
    const auto cfg = load_config(path.string());
    CHECK(cfg.alpha == 0.5);
    CHECK(cfg.temperature == 0.0);
    REQUIRE(cfg.methods.size() == 1);
    CHECK(cfg.methods[0] == RateMethod::ClosedForm);
    CHECK(cfg.unit == "K");
    fs::remove(path);
}

TEST_CASE("gamma2 below xi0 is rejected with the constraint named") {
    const auto path = write_temp(
        "oscbath_g2.cfg", "delta = 0.01\nxi0 = 2\ngamma2 = 1\n");
    CHECK_THROWS_WITH_AS(load_config(path.string()),
                         doctest::Contains("gamma2 must satisfy gamma2 >= xi0"),
                         ConfigError);
    fs::remove(path);
}

TEST_CASE("violations are collected, not first-failure") {
    const auto path = write_temp("oscbath_bad.cfg",
                                 "delta = -1\nxi0 = 0\ngrid.count = 0\n"
                                 "methods = bogus\nmystery = 1\n");
    try {
        load_config(path.string());
        FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
        const std::string msg = e.what();
        CHECK(msg.find("delta must be > 0") != std::string::npos);
        CHECK(msg.find("xi0 must be > 0") != std::string::npos);
        CHECK(msg.find("grid.count") != std::string::npos);
        CHECK(msg.find("bogus") != std::string::npos);
        CHECK(msg.find("unknown field 'mystery'") != std::string::npos);
    }
    fs::remove(path);
}

TEST_CASE("parse errors carry line numbers") {
    const auto path =
        write_temp("oscbath_line.cfg", "delta = 0.01\nthis line is wrong\n");
    CHECK_THROWS_WITH_AS(load_config(path.string()), doctest::Contains(":2"),
                         ConfigError);
    fs::remove(path);
}

TEST_CASE("presets fill delta and xi0 in the working unit") {
    const auto path =
        write_temp("oscbath_preset.cfg",
                   "preset = Fe8\ngrid.count = 3\ngrid.min = 0\ngrid.max = 1\n");
    const auto cfg = load_config(path.string());
    CHECK(cfg.delta == doctest::Approx(1e-7));   // 0.1 uK in kelvin
    CHECK(cfg.xi0 == doctest::Approx(1e-2));     // 10 mK in kelvin

    const auto in_uk = load_config(path.string(), {{"unit", "uK"}});
    CHECK(in_uk.delta == doctest::Approx(0.1));
    CHECK(in_uk.xi0 == doctest::Approx(1e4));
    fs::remove(path);

    const auto& presets = smm_presets();
    REQUIRE(presets.size() == 4);
    CHECK(presets[1].name == "Mn12");
    CHECK(presets[1].e_kelvin == 0.0);
    for (const auto& p : presets) {
        CHECK(p.d_kelvin > 0.0);
        CHECK(std::abs(p.e_kelvin) < p.d_kelvin);
    }
}

TEST_CASE("json configs nest and flags override") {
    const auto path = write_temp("oscbath_cfg.json", R"({
        "delta": 0.02, "xi0": 2.0,
        "grid": {"min": 0, "max": 4, "count": 9},
        "methods": ["analytic-eq26", "spin-bath-eq9"],
        "oracle": {"n_modes": 6, "seeds": [1, 2]}
    })");
    const auto cfg = load_config(path.string());
    CHECK(cfg.delta == 0.02);
    CHECK(cfg.grid.count == 9);
    CHECK(cfg.methods.size() == 2);
    CHECK(cfg.oracle.n_modes == 6);
    REQUIRE(cfg.oracle.seeds.size() == 2);

    const auto overridden =
        load_config(path.string(), {{"delta", "0.05"}, {"grid.count", "3"}});
    CHECK(overridden.delta == 0.05);
    CHECK(overridden.grid.count == 3);
    fs::remove(path);
}

TEST_CASE("run emits per-method CSVs, compare table, and manifest") {
    RunConfig cfg;
    cfg.delta = 0.01;
    cfg.xi0 = 1.0;
    cfg.grid = {0.0, 4.0, 9, false};
    cfg.methods = {RateMethod::ClosedForm, RateMethod::SpinBathBase,
                   RateMethod::GoldenRuleNumeric};
    cfg.compare = true;
    const fs::path dir = fs::temp_directory_path() / "oscbath_run_test";
    fs::remove_all(dir);
    cfg.output_dir = dir.string();

    const auto report = run(cfg);
    CHECK(report.exit_code == 0);
    CHECK(fs::exists(dir / "rates_analytic-eq26.csv"));
    CHECK(fs::exists(dir / "rates_spin-bath-eq9.csv"));
    CHECK(fs::exists(dir / "rates_golden-rule-numeric.csv"));
    CHECK(fs::exists(dir / "compare.csv"));

    // manifest carries the full effective configuration
    const auto manifest = nlohmann::json::parse(slurp(dir / "manifest.json"));
    CHECK(manifest["schema_version"] == 1);
    CHECK(manifest["config"]["delta"] == 0.01);
    CHECK(manifest["config"]["grid"]["count"] == 9);
    CHECK(manifest["methods"].size() == 3);

    // the ratio column is pi/2 at every grid point
    std::ifstream cmp(dir / "compare.csv");
    std::string header;
    std::getline(cmp, header);
    CHECK(header.find("ratio_analytic_spin_bath") != std::string::npos);
    std::string line;
    int rows = 0;
    while (std::getline(cmp, line)) {
        const auto pos = line.rfind(',');
        const double ratio = std::stod(line.substr(pos + 1));
        CHECK(ratio == doctest::Approx(1.5707963267948966).epsilon(1e-14));
        // golden-rule vs closed-form relative error lives two columns left
        ++rows;
    }
    CHECK(rows == 9);

    // golden-rule against the closed form: max relative error below 1e-6
    std::ifstream gr(dir / "rates_golden-rule-numeric.csv");
    std::ifstream cf(dir / "rates_analytic-eq26.csv");
    std::getline(gr, line);
    std::getline(cf, line);
    std::string gline, cline;
    while (std::getline(gr, gline) && std::getline(cf, cline)) {
        const double g = std::stod(gline.substr(gline.find(',') + 1));
        const double c = std::stod(cline.substr(cline.find(',') + 1));
        CHECK(std::abs(g / c - 1.0) < 1e-6);
    }
    fs::remove_all(dir);
}

TEST_CASE("identical configs give byte-identical csv bodies") {
    RunConfig cfg;
    cfg.delta = 0.02;
    cfg.xi0 = 1.0;
    cfg.grid = {0.0, 3.0, 7, false};
    cfg.methods = {RateMethod::ClosedForm, RateMethod::GoldenRuleNumeric,
                   RateMethod::Stochastic};
    cfg.noise.realizations = 64;
    cfg.noise.t_max = 1500.0;
    cfg.seed = 5;

    const fs::path dir1 = fs::temp_directory_path() / "oscbath_rep_1";
    const fs::path dir2 = fs::temp_directory_path() / "oscbath_rep_2";
    fs::remove_all(dir1);
    fs::remove_all(dir2);

    cfg.output_dir = dir1.string();
    cfg.workers = 1;
    run(cfg);
    cfg.output_dir = dir2.string();
    cfg.workers = 2;
    run(cfg);

    for (const auto& name :
         {"rates_analytic-eq26.csv", "rates_golden-rule-numeric.csv",
          "rates_stochastic.csv"}) {
        CHECK(slurp(dir1 / name) == slurp(dir2 / name));
    }
    fs::remove_all(dir1);
    fs::remove_all(dir2);
}

TEST_CASE("curve csv shape") {
    RateCurve curve;
    curve.method = "analytic-eq26";
    curve.points.push_back({0.0, 1.5, std::nullopt, ""});
    curve.points.push_back({1.0, std::nan(""), std::nullopt, "went wrong"});
    const auto body = io::rate_curve_csv(curve);
    CHECK(body.find("xi,gamma,sigma,method,error\n") == 0);
    CHECK(body.find(",,analytic-eq26,went wrong") != std::string::npos);
}
