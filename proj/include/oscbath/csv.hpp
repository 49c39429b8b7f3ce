#pragma once

#include <string>
#include <vector>

#include "oscbath/rates.hpp"

namespace oscbath::io {

// Floating-point formatting used in every CSV body: 17 significant digits,
// '.' decimal separator, locale-independent.
std::string format_float(double v);

// RFC-4180-style row assembly; fields containing separators or quotes are
// quoted.
std::string csv_row(const std::vector<std::string>& fields);

// Write-then-rename so readers never observe a partial file.
void write_text_atomic(const std::string& path, const std::string& content);

// Columns: xi,gamma,sigma,method,error.  Failed points emit an empty gamma
// cell and the error message.
std::string rate_curve_csv(const RateCurve& curve);

// Columns: t,q1,q2,coherence over the given time grid.
std::string kernel_dump_csv(const std::vector<double>& t,
                            const std::vector<double>& q1,
                            const std::vector<double>& q2,
                            const std::vector<double>& coherence);

// Columns: t,tau_z.
std::string evolution_csv(const std::vector<double>& t,
                          const std::vector<double>& tau_z);

// Columns: t,mean_tau_z,stderr.
std::string decay_curve_csv(const std::vector<double>& t,
                            const std::vector<double>& mean,
                            const std::vector<double>& stderr_vals);

}  // namespace oscbath::io
