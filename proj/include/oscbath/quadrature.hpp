#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <vector>

#include "oscbath/errors.hpp"

namespace oscbath::quad {

struct Options {
    double abs_tol = 1e-10;
    double rel_tol = 1e-10;
    int max_depth = 48;
};

namespace detail {

// 15-point Kronrod extension of 7-point Gauss on [-1, 1].
inline constexpr double kXgk[8] = {
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144838258730,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.000000000000000000000000000000000};
inline constexpr double kWgk[8] = {
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714};
inline constexpr double kWg[4] = {
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327};

template <class F>
inline double gauss_kronrod_panel(F&& f, double a, double b, double* err) {
    const double c = 0.5 * (a + b);
    const double h = 0.5 * (b - a);
    const double fc = f(c);
    double gauss = fc * kWg[3];
    double kron = fc * kWgk[7];
    for (int j = 0; j < 7; ++j) {
        const double x = h * kXgk[j];
        const double fsum = f(c - x) + f(c + x);
        kron += fsum * kWgk[j];
        if (j % 2 == 1) gauss += fsum * kWg[j / 2];
    }
    kron *= h;
    gauss *= h;
    if (err) *err = std::abs(kron - gauss);
    return kron;
}

template <class F>
inline double adaptive_rec(F&& f, double a, double b, double tol, int depth,
                           int max_depth, bool* converged) {
    double err = 0.0;
    const double whole = gauss_kronrod_panel(f, a, b, &err);
    if (err <= tol || b - a < 1e-15 * (std::abs(a) + std::abs(b)))
        return whole;
    if (depth >= max_depth) {
        if (err > 1e3 * tol + 1e-300) *converged = false;
        return whole;
    }
    const double c = 0.5 * (a + b);
    return adaptive_rec(f, a, c, 0.5 * tol, depth + 1, max_depth, converged) +
           adaptive_rec(f, c, b, 0.5 * tol, depth + 1, max_depth, converged);
}

}  // namespace detail

// Adaptive Gauss-Kronrod integration over a finite interval.
template <class F>
inline double integrate(F&& f, double a, double b, const Options& opt = {}) {
    if (!(a <= b)) throw std::invalid_argument("integrate: bad interval");
    if (a == b) return 0.0;
    bool converged = true;
    double err0 = 0.0;
    const double first = detail::gauss_kronrod_panel(f, a, b, &err0);
    const double tol =
        std::max(opt.abs_tol, opt.rel_tol * std::abs(first)) + 1e-300;
    if (err0 <= tol) return first;
    const double value =
        detail::adaptive_rec(f, a, b, tol, 0, opt.max_depth, &converged);
    if (!converged)
        throw DivergenceError("integrate: failed to converge on interval");
    return value;
}

// Integral over [a, inf) of an integrand that decays on the given scale.
// The head [a, a + 30*scale] is integrated adaptively; the tail is summed in
// doubling panels until two consecutive panels fall below tolerance.
template <class F>
inline double integrate_to_infinity(F&& f, double a, double scale,
                                    const Options& opt = {}) {
    if (!(scale > 0.0))
        throw std::invalid_argument("integrate_to_infinity: scale must be > 0");
    const double head_end = a + 30.0 * scale;
    double total = integrate(f, a, head_end, opt);
    double lo = head_end;
    double width = 30.0 * scale;
    int quiet = 0;
    for (int k = 0; k < 60; ++k) {
        const double hi = lo + width;
        const double piece = integrate(f, lo, hi, opt);
        total += piece;
        const double tol =
            std::max(opt.abs_tol, opt.rel_tol * std::abs(total)) + 1e-300;
        if (std::abs(piece) < 0.25 * tol) {
            if (++quiet >= 2) return total;
        } else {
            quiet = 0;
        }
        lo = hi;
        width *= 2.0;
    }
    throw DivergenceError("integrate_to_infinity: tail does not converge");
}

// Euler transformation of an alternating series (van Wijngaarden averaging).
class EulerSum {
  public:
    void add(double term) {
        if (n_ == 0) {
            wksp_.assign(1, term);
            sum_ = 0.5 * term;
            n_ = 1;
            last_increment_ = sum_;
            return;
        }
        double tmp = wksp_[0];
        wksp_[0] = term;
        for (int j = 0; j < n_ - 1; ++j) {
            const double dum = wksp_[j + 1];
            wksp_[j + 1] = 0.5 * (wksp_[j] + tmp);
            tmp = dum;
        }
        wksp_.push_back(0.5 * (wksp_[n_ - 1] + tmp));
        if (std::abs(wksp_[n_]) <= std::abs(wksp_[n_ - 1])) {
            last_increment_ = 0.5 * wksp_[n_];
            sum_ += last_increment_;
            ++n_;
        } else {
            last_increment_ = wksp_[n_];
            sum_ += last_increment_;
            wksp_.pop_back();
        }
    }

    double value() const { return sum_; }
    double last_increment() const { return std::abs(last_increment_); }
    int terms() const { return n_; }

  private:
    std::vector<double> wksp_;
    double sum_ = 0.0;
    double last_increment_ = std::numeric_limits<double>::infinity();
    int n_ = 0;
};

enum class Trig { Sin, Cos };

// Integral over [a, inf) of envelope(x) * sin(q x) (or cos).  The envelope
// must be smooth and decaying on the given scale.  For q*scale below 1e-3 the
// factor barely oscillates over the envelope support and plain semi-infinite
// integration is used.  Otherwise the axis is partitioned at the zeros of the
// trig factor and the alternating panel series is accelerated with the Euler
// transformation; panels stop once the accelerated increments and the raw
// panel magnitudes are both negligible.  Endpoints are never evaluated, so an
// envelope with an integrable endpoint singularity is fine as long as the
// product stays finite at the quadrature nodes.
template <class F>
inline double integrate_oscillatory(F&& envelope, Trig trig, double q,
                                    double scale, const Options& opt = {},
                                    double a = 0.0) {
    if (!(q >= 0.0) || !std::isfinite(q))
        throw std::invalid_argument("integrate_oscillatory: bad frequency");
    auto product = [&](double x) {
        return envelope(x) * (trig == Trig::Sin ? std::sin(q * x) : std::cos(q * x));
    };
    if (q * scale < 1e-3)
        return integrate_to_infinity(product, a, scale, opt);

    const double pi = 3.14159265358979323846;
    const double half_period = pi / q;
    // first trig zero strictly above a
    double z = (trig == Trig::Cos) ? 0.5 * half_period : half_period;
    if (a > 0.0) {
        const double offset = (trig == Trig::Cos) ? 0.5 : 1.0;
        const double k = std::ceil(a * q / pi - offset + 1e-12);
        z = (std::max(k, 0.0) + offset) * half_period;
        while (z <= a) z += half_period;
    }

    Options panel_opt = opt;
    panel_opt.abs_tol = 0.1 * opt.abs_tol;
    panel_opt.max_depth = 24;

    EulerSum acc;
    double lo = a;
    double hi = z;
    const std::int64_t max_panels = 2000000;
    int quiet = 0;
    for (std::int64_t k = 0; k < max_panels; ++k) {
        const double piece = integrate(product, lo, hi, panel_opt);
        acc.add(piece);
        const double tol =
            std::max(opt.abs_tol, opt.rel_tol * std::abs(acc.value())) + 1e-300;
        if (acc.terms() >= 6 && acc.last_increment() < tol &&
            std::abs(piece) < 8.0 * tol) {
            if (++quiet >= 3) return acc.value();
        } else {
            quiet = 0;
        }
        lo = hi;
        hi += half_period;
    }
    throw DivergenceError("integrate_oscillatory: series does not converge");
}

}  // namespace oscbath::quad
