#include "oscbath/spectral.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include "oscbath/quadrature.hpp"

namespace oscbath {

namespace {
constexpr double kPi = 3.14159265358979323846;

void check_finite(double v, const char* what) {
    if (!std::isfinite(v)) {
        throw std::invalid_argument(std::string(what) + " must be finite");
    }
}
}  // namespace

std::string family_name(SpectralFamily family) {
    switch (family) {
        case SpectralFamily::OhmicExpCutoff: return "ohmic-exp-cutoff";
        case SpectralFamily::CubicExpCutoff: return "cubic-exp-cutoff";
        case SpectralFamily::Tabulated: return "tabulated";
        case SpectralFamily::Composite: return "composite";
    }
    return "unknown";
}

SpectralDensity SpectralDensity::ohmic_exp_cutoff(double alpha, double xi0) {
    check_finite(alpha, "alpha");
    check_finite(xi0, "xi0");
    if (alpha < 0.0) throw InvalidSpecError("ohmic_exp_cutoff: alpha < 0");
    if (!(xi0 > 0.0)) throw InvalidSpecError("ohmic_exp_cutoff: xi0 must be > 0");
    SpectralDensity s;
    s.family_ = SpectralFamily::OhmicExpCutoff;
    s.alpha_ = alpha;
    s.xi0_ = xi0;
    return s;
}

SpectralDensity SpectralDensity::cubic_exp_cutoff(double amplitude,
                                                  double cutoff) {
    check_finite(amplitude, "amplitude");
    check_finite(cutoff, "cutoff");
    if (amplitude < 0.0) throw InvalidSpecError("cubic_exp_cutoff: amplitude < 0");
    if (!(cutoff > 0.0)) throw InvalidSpecError("cubic_exp_cutoff: cutoff must be > 0");
    SpectralDensity s;
    s.family_ = SpectralFamily::CubicExpCutoff;
    s.alpha_ = amplitude;
    s.xi0_ = cutoff;
    return s;
}

SpectralDensity SpectralDensity::tabulated(
    std::vector<std::array<double, 2>> samples) {
    if (samples.empty()) throw InvalidSpecError("tabulated: empty table");
    for (std::size_t i = 0; i < samples.size(); ++i) {
        check_finite(samples[i][0], "table omega");
        check_finite(samples[i][1], "table value");
        if (samples[i][1] < 0.0)
            throw InvalidSpecError("tabulated: J(w) must be non-negative");
        if (i > 0 && !(samples[i][0] > samples[i - 1][0]))
            throw InvalidSpecError("tabulated: omega must be strictly increasing");
    }
    SpectralDensity s;
    s.family_ = SpectralFamily::Tabulated;
    s.table_ = std::move(samples);
    s.xi0_ = s.table_.back()[0];
    return s;
}

SpectralDensity SpectralDensity::composite(std::vector<SpectralDensity> parts) {
    if (parts.empty()) throw InvalidSpecError("composite: no parts");
    SpectralDensity s;
    s.family_ = SpectralFamily::Composite;
    s.parts_ = std::move(parts);
    return s;
}

double SpectralDensity::operator()(double omega) const {
    check_finite(omega, "omega");
    if (omega <= 0.0) return 0.0;
    switch (family_) {
        case SpectralFamily::OhmicExpCutoff:
            return 2.0 * kPi * alpha_ * omega * std::exp(-omega / xi0_);
        case SpectralFamily::CubicExpCutoff:
            return alpha_ * (omega * omega * omega) / (xi0_ * xi0_) *
                   std::exp(-omega / xi0_);
        case SpectralFamily::Tabulated: {
            if (omega < table_.front()[0] || omega > table_.back()[0]) return 0.0;
            std::size_t lo = 0, hi = table_.size() - 1;
            while (hi - lo > 1) {
                const std::size_t mid = (lo + hi) / 2;
                if (table_[mid][0] <= omega) lo = mid;
                else hi = mid;
            }
            const double w0 = table_[lo][0], w1 = table_[hi][0];
            const double j0 = table_[lo][1], j1 = table_[hi][1];
            const double f = (omega - w0) / (w1 - w0);
            return j0 + f * (j1 - j0);
        }
        case SpectralFamily::Composite: {
            double sum = 0.0;
            for (const auto& p : parts_) sum += p(omega);
            return sum;
        }
    }
    return 0.0;
}

double SpectralDensity::scale() const {
    switch (family_) {
        case SpectralFamily::OhmicExpCutoff:
        case SpectralFamily::CubicExpCutoff:
            return xi0_;
        case SpectralFamily::Tabulated:
            // support ends at the last sample; 30*scale covers it exactly
            return table_.back()[0] / 30.0;
        case SpectralFamily::Composite: {
            double s = 0.0;
            for (const auto& p : parts_) s = std::max(s, p.scale());
            return s;
        }
    }
    return 1.0;
}

std::vector<const SpectralDensity*> SpectralDensity::leaves() const {
    std::vector<const SpectralDensity*> out;
    if (family_ != SpectralFamily::Composite) {
        out.push_back(this);
        return out;
    }
    for (const auto& p : parts_) {
        auto sub = p.leaves();
        out.insert(out.end(), sub.begin(), sub.end());
    }
    return out;
}

double eval_j(const SpectralDensity& spec, double omega) { return spec(omega); }

double eval_j_over_w2(const SpectralDensity& spec, double omega) {
    if (!(omega > 0.0)) return 0.0;
    switch (spec.family()) {
        case SpectralFamily::OhmicExpCutoff:
            return 2.0 * kPi * spec.alpha() * std::exp(-omega / spec.xi0()) /
                   omega;
        case SpectralFamily::CubicExpCutoff:
            return spec.amplitude() * omega /
                   (spec.cutoff() * spec.cutoff()) *
                   std::exp(-omega / spec.cutoff());
        case SpectralFamily::Composite: {
            double sum = 0.0;
            for (const auto& p : spec.parts()) sum += eval_j_over_w2(p, omega);
            return sum;
        }
        default:
            return spec(omega) / (omega * omega);
    }
}

namespace {

// integral of J over [0, inf)
double integral_j(const SpectralDensity& spec) {
    switch (spec.family()) {
        case SpectralFamily::OhmicExpCutoff:
            return 2.0 * kPi * spec.alpha() * spec.xi0() * spec.xi0();
        case SpectralFamily::CubicExpCutoff:
            // amp/wc^2 * int w^3 exp(-w/wc) = 6 * amp * wc^2
            return 6.0 * spec.amplitude() * spec.cutoff() * spec.cutoff();
        case SpectralFamily::Tabulated: {
            // trapezoid is exact for a piecewise-linear density
            const auto& t = spec.table();
            double sum = 0.0;
            for (std::size_t i = 1; i < t.size(); ++i)
                sum += 0.5 * (t[i][1] + t[i - 1][1]) * (t[i][0] - t[i - 1][0]);
            return sum;
        }
        case SpectralFamily::Composite: {
            double sum = 0.0;
            for (const auto& p : spec.parts()) sum += integral_j(p);
            return sum;
        }
    }
    return 0.0;
}

// integral of J(w)/w over [0, inf)
double integral_j_over_w(const SpectralDensity& spec) {
    switch (spec.family()) {
        case SpectralFamily::OhmicExpCutoff:
            return 2.0 * kPi * spec.alpha() * spec.xi0();
        case SpectralFamily::CubicExpCutoff:
            return 2.0 * spec.amplitude() * spec.cutoff();
        case SpectralFamily::Tabulated: {
            const auto& t = spec.table();
            if (t.size() == 1) return 0.0;
            double sum = 0.0;
            for (std::size_t i = 1; i < t.size(); ++i) {
                const double a = t[i - 1][0], b = t[i][0];
                sum += quad::integrate(
                    [&](double w) { return w > 0.0 ? spec(w) / w : 0.0; },
                    std::max(a, 0.0), b, {1e-12, 1e-12});
            }
            return sum;
        }
        case SpectralFamily::Composite: {
            double sum = 0.0;
            for (const auto& p : spec.parts()) sum += integral_j_over_w(p);
            return sum;
        }
    }
    return 0.0;
}

}  // namespace

double bias_variance(const SpectralDensity& spec) {
    return (2.0 / kPi) * integral_j(spec);
}

FluctuationStats fluctuation_stats(const SpectralDensity& spec) {
    FluctuationStats out{};
    out.variance = bias_variance(spec);
    out.width = std::sqrt(out.variance);
    const double denom = integral_j_over_w(spec);
    out.correlation_rate = denom > 0.0 ? integral_j(spec) / denom : 0.0;
    return out;
}

double power_spectrum(const SpectralDensity& spec, double temperature,
                      double omega) {
    check_finite(omega, "omega");
    check_finite(temperature, "temperature");
    if (!(omega > 0.0))
        throw std::invalid_argument(
            "power_spectrum: defined on positive frequencies only");
    if (temperature < 0.0)
        throw std::invalid_argument("power_spectrum: temperature must be >= 0");
    const double j = spec(omega);
    if (temperature == 0.0) return j;
    const double x = omega / (2.0 * temperature);
    // coth(x), series below the underflow knee of tanh
    const double coth = x < 1e-8 ? (1.0 / x) * (1.0 + x * x / 3.0)
                                 : 1.0 / std::tanh(x);
    return j * coth;
}

SpectralDensity compose(const SpectralDensity& base,
                        const SpectralDensity& highfreq) {
    std::vector<SpectralDensity> parts;
    parts.push_back(base);
    parts.push_back(highfreq);
    return SpectralDensity::composite(std::move(parts));
}

SpectralDensity load_tabulated_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw InvalidSpecError("load_tabulated_csv: cannot open " + path);
    std::string line;
    if (!std::getline(in, line))
        throw InvalidSpecError("load_tabulated_csv: empty file " + path);
    std::vector<std::array<double, 2>> samples;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        std::istringstream ss(line);
        std::string a, b;
        if (!std::getline(ss, a, ',') || !std::getline(ss, b)) {
            throw InvalidSpecError("load_tabulated_csv: " + path + ":" +
                                   std::to_string(line_no) +
                                   ": expected two comma-separated columns");
        }
        try {
            samples.push_back({std::stod(a), std::stod(b)});
        } catch (const std::exception&) {
            throw InvalidSpecError("load_tabulated_csv: " + path + ":" +
                                   std::to_string(line_no) + ": bad number");
        }
    }
    return SpectralDensity::tabulated(std::move(samples));
}

}  // namespace oscbath
