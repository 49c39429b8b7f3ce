#include "oscbath/csv.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <stdexcept>

namespace oscbath::io {

std::string format_float(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

std::string csv_row(const std::vector<std::string>& fields) {
    std::string out;
    for (std::size_t i = 0; i < fields.size(); ++i) {
        if (i) out += ',';
        const std::string& f = fields[i];
        if (f.find_first_of(",\"\n") != std::string::npos) {
            out += '"';
            for (char c : f) {
                if (c == '"') out += '"';
                out += c;
            }
            out += '"';
        } else {
            out += f;
        }
    }
    out += '\n';
    return out;
}

void write_text_atomic(const std::string& path, const std::string& content) {
    const std::string tmp = path + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw std::runtime_error("cannot write " + tmp);
        out << content;
        if (!out.flush()) throw std::runtime_error("write failed: " + tmp);
    }
    std::filesystem::rename(tmp, path);
}

std::string rate_curve_csv(const RateCurve& curve) {
    std::string out = csv_row({"xi", "gamma", "sigma", "method", "error"});
    for (const auto& pt : curve.points) {
        const bool failed = !pt.error.empty() || std::isnan(pt.gamma);
        out += csv_row({format_float(pt.xi),
                        failed ? "" : format_float(pt.gamma),
                        pt.sigma ? format_float(*pt.sigma) : "",
                        curve.method, pt.error});
    }
    return out;
}

std::string kernel_dump_csv(const std::vector<double>& t,
                            const std::vector<double>& q1,
                            const std::vector<double>& q2,
                            const std::vector<double>& coherence) {
    std::string out = csv_row({"t", "q1", "q2", "coherence"});
    for (std::size_t i = 0; i < t.size(); ++i) {
        out += csv_row({format_float(t[i]), format_float(q1[i]),
                        format_float(q2[i]), format_float(coherence[i])});
    }
    return out;
}

std::string evolution_csv(const std::vector<double>& t,
                          const std::vector<double>& tau_z) {
    std::string out = csv_row({"t", "tau_z"});
    for (std::size_t i = 0; i < t.size(); ++i)
        out += csv_row({format_float(t[i]), format_float(tau_z[i])});
    return out;
}

std::string decay_curve_csv(const std::vector<double>& t,
                            const std::vector<double>& mean,
                            const std::vector<double>& stderr_vals) {
    std::string out = csv_row({"t", "mean_tau_z", "stderr"});
    for (std::size_t i = 0; i < t.size(); ++i) {
        out += csv_row({format_float(t[i]), format_float(mean[i]),
                        format_float(stderr_vals[i])});
    }
    return out;
}

}  // namespace oscbath::io
