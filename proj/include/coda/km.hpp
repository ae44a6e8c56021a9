#pragma once

// Product-limit estimate of the CDF for left-censored positive data, plus a
// monotone interpolant so values can be drawn below a detection limit.
//
// Left censoring is handled by the usual axis reversal: negate values, run
// the right-censored Kaplan-Meier product limit, and read the CDF back as
// P(X <= x) = S(-x^-).  With no censored points this reduces exactly to the
// empirical CDF.

#include <coda/rng.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

namespace coda {

struct LeftCensoredECDF {
    std::vector<double> support;  // distinct observed values, ascending
    std::vector<double> cdf;      // P(X <= support[k]); final entry is 1

    // Monotone piecewise-cubic interpolant through (0,0) and (support, cdf).
    std::vector<double> xs, ys, ms;

    double evaluate(double x) const {
        if (x <= xs.front()) return 0.0;
        if (x >= xs.back()) return 1.0;
        std::size_t hi = static_cast<std::size_t>(
            std::upper_bound(xs.begin(), xs.end(), x) - xs.begin());
        const std::size_t lo = hi - 1;
        const double h = xs[hi] - xs[lo];
        const double t = (x - xs[lo]) / h;
        const double t2 = t * t, t3 = t2 * t;
        return ys[lo] * (2.0 * t3 - 3.0 * t2 + 1.0) + h * ms[lo] * (t3 - 2.0 * t2 + t) +
               ys[hi] * (-2.0 * t3 + 3.0 * t2) + h * ms[hi] * (t3 - t2);
    }
};

namespace detail {

// Fritsch-Carlson slopes: the Hermite spline through monotone data stays
// monotone.
inline std::vector<double> pchip_slopes(const std::vector<double>& x, const std::vector<double>& y) {
    const std::size_t n = x.size();
    std::vector<double> d(n - 1), m(n);
    for (std::size_t k = 0; k + 1 < n; ++k) d[k] = (y[k + 1] - y[k]) / (x[k + 1] - x[k]);
    if (n == 2) {
        m[0] = m[1] = d[0];
        return m;
    }
    for (std::size_t k = 1; k + 1 < n; ++k) {
        if (d[k - 1] * d[k] <= 0.0) {
            m[k] = 0.0;
        } else {
            const double w1 = 2.0 * (x[k + 1] - x[k]) + (x[k] - x[k - 1]);
            const double w2 = (x[k + 1] - x[k]) + 2.0 * (x[k] - x[k - 1]);
            m[k] = (w1 + w2) / (w1 / d[k - 1] + w2 / d[k]);
        }
    }
    auto endpoint = [](double h0, double h1, double d0, double d1) {
        double m0 = ((2.0 * h0 + h1) * d0 - h0 * d1) / (h0 + h1);
        if (m0 * d0 <= 0.0)
            m0 = 0.0;
        else if (d0 * d1 <= 0.0 && std::abs(m0) > 3.0 * std::abs(d0))
            m0 = 3.0 * d0;
        return m0;
    };
    m[0] = endpoint(x[1] - x[0], x[2] - x[1], d[0], d[1]);
    m[n - 1] = endpoint(x[n - 1] - x[n - 2], x[n - 2] - x[n - 3], d[n - 2], d[n - 3]);
    return m;
}

}  // namespace detail

/**
 * Left-censored product-limit CDF over the observed support.  `observed`
 * are exact positive values; `censor_limits` are bounds for values only
 * known to lie below them.
 */
inline LeftCensoredECDF km_left_censored(const std::vector<double>& observed,
                                         const std::vector<double>& censor_limits) {
    if (observed.empty()) throw std::invalid_argument("km_left_censored: no observed values");
    for (double v : observed)
        if (!(v > 0.0)) throw std::invalid_argument("km_left_censored: observed value <= 0");
    for (double v : censor_limits)
        if (!(v > 0.0)) throw std::invalid_argument("km_left_censored: censor limit <= 0");

    // Flip the axis: events at -observed, right-censored points at -limits.
    std::vector<double> ev(observed.size());
    for (std::size_t i = 0; i < observed.size(); ++i) ev[i] = -observed[i];
    std::sort(ev.begin(), ev.end());
    std::vector<double> all;
    all.reserve(observed.size() + censor_limits.size());
    all.insert(all.end(), ev.begin(), ev.end());
    for (double v : censor_limits) all.push_back(-v);
    std::sort(all.begin(), all.end());

    LeftCensoredECDF e;
    double surv = 1.0;
    for (std::size_t i = 0; i < ev.size();) {
        const double t = ev[i];
        std::size_t d = 0;
        while (i + d < ev.size() && ev[i + d] == t) ++d;
        // At risk: everything (event or censored) at or after t.
        const std::size_t n_at_risk = all.end() - std::lower_bound(all.begin(), all.end(), t);
        // P(X <= -t) uses the product over strictly earlier event times.
        e.support.push_back(-t);
        e.cdf.push_back(surv);
        surv *= 1.0 - static_cast<double>(d) / static_cast<double>(n_at_risk);
        i += d;
    }
    std::reverse(e.support.begin(), e.support.end());
    std::reverse(e.cdf.begin(), e.cdf.end());

    e.xs.reserve(e.support.size() + 1);
    e.ys.reserve(e.support.size() + 1);
    e.xs.push_back(0.0);
    e.ys.push_back(0.0);
    e.xs.insert(e.xs.end(), e.support.begin(), e.support.end());
    e.ys.insert(e.ys.end(), e.cdf.begin(), e.cdf.end());
    e.ms = detail::pchip_slopes(e.xs, e.ys);
    return e;
}

/**
 * Seeded draw from the interpolated CDF restricted to (0, limit).  When the
 * interpolant carries no mass below the limit the draw falls back to
 * Uniform(0.1 * limit, limit) and `fallback` is set.
 */
inline double km_draw_below(const LeftCensoredECDF& e, double limit, Rng& rng,
                            bool* fallback = nullptr) {
    if (!(limit > 0.0)) throw std::invalid_argument("km_draw_below: limit must be positive");
    const double mass = e.evaluate(limit);
    if (!(mass > 1e-12)) {
        if (fallback) *fallback = true;
        return rng.uniform(0.1 * limit, limit);
    }
    if (fallback) *fallback = false;
    const double u = rng.uniform01_open0() * mass;
    double lo = 0.0, hi = std::min(limit, e.xs.back());
    for (int it = 0; it < 80; ++it) {
        const double mid = 0.5 * (lo + hi);
        (e.evaluate(mid) < u ? lo : hi) = mid;
    }
    double x = 0.5 * (lo + hi);
    if (!(x > 0.0)) x = std::numeric_limits<double>::min();
    if (!(x < limit)) x = std::nextafter(limit, 0.0);
    return x;
}

}  // namespace coda
