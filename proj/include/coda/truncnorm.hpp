#pragma once

// Upper-truncated normal utilities: the conditional mean and seeded draws of
// X ~ N(mu, sigma^2) given X < upper.  All tail arithmetic is kept stable far
// below the point where Phi underflows.

#include <coda/rng.hpp>

#include <cmath>
#include <limits>
#include <stdexcept>

namespace coda {

inline constexpr double kInvSqrt2Pi = 0.3989422804014326779399461;
inline constexpr double kSqrt2 = 1.4142135623730950488016887;

// Standardized truncation point below which Phi is treated as underflowed.
inline constexpr double kTruncSaturationA = -37.0;
// Offset (in sigma units) returned for the mean in the saturated regime.
inline constexpr double kTruncSaturationEps = 1e-8;

inline double norm_pdf(double z) { return kInvSqrt2Pi * std::exp(-0.5 * z * z); }

inline double norm_cdf(double z) { return 0.5 * std::erfc(-z / kSqrt2); }

// ln Phi(z); switches to the asymptotic tail expansion once Phi underflows.
inline double norm_logcdf(double z) {
    if (z > kTruncSaturationA) return std::log(norm_cdf(z));
    const double z2 = z * z;
    return -0.5 * z2 - std::log(-z) - 0.5 * std::log(2.0 * 3.14159265358979323846) +
           std::log1p(-1.0 / z2 + 3.0 / (z2 * z2));
}

// Hazard ratio phi(z)/Phi(z) of the lower tail.  Direct ratio while both
// terms are representable, Mills expansion beyond.
inline double norm_hazard_lower(double z) {
    if (z > kTruncSaturationA) {
        const double c = norm_cdf(z);
        if (c > 0.0) return norm_pdf(z) / c;
    }
    const double z2 = z * z;
    // Phi(z)/phi(z) ~ -1/z - ... for z -> -inf; invert the series.
    const double mills = (-1.0 / z) * (1.0 - 1.0 / z2 + 3.0 / (z2 * z2));
    return 1.0 / mills;
}

/**
 * Quantile of the standard normal (Wichura's AS241 rational approximations),
 * accurate to full double precision over (0, 1).
 */
inline double norm_quantile(double p) {
    if (!(p > 0.0) || !(p < 1.0))
        throw std::invalid_argument("norm_quantile: p must lie in (0,1)");
    const double q = p - 0.5;
    if (std::abs(q) <= 0.425) {
        const double r = 0.180625 - q * q;
        return q *
               (((((((2.5090809287301226727e+3 * r + 3.3430575583588128105e+4) * r +
                     6.7265770927008700853e+4) * r + 4.5921953931549871457e+4) * r +
                   1.3731693765509461125e+4) * r + 1.9715909503065514427e+3) * r +
                 1.3314166789178437745e+2) * r + 3.3871328727963666080e+0) /
               (((((((5.2264952788528545610e+3 * r + 2.8729085735721942674e+4) * r +
                     3.9307895800092710610e+4) * r + 2.1213794301586595867e+4) * r +
                   5.3941960214247511077e+3) * r + 6.8718700749205790830e+2) * r +
                 4.2313330701600911252e+1) * r + 1.0);
    }
    double r = (q < 0.0) ? p : 1.0 - p;
    r = std::sqrt(-std::log(r));
    double val;
    if (r <= 5.0) {
        r -= 1.6;
        val = (((((((7.74545014278341407640e-4 * r + 2.27238449892691845833e-2) * r +
                    2.41780725177450611770e-1) * r + 1.27045825245236838258e+0) * r +
                  3.64784832476320460504e+0) * r + 5.76949722146069140550e+0) * r +
                4.63033784615654529590e+0) * r + 1.42343711074968357734e+0) /
              (((((((1.05075007164441684324e-9 * r + 5.47593808499534494600e-4) * r +
                    1.51986665636164571966e-2) * r + 1.48103976427480074590e-1) * r +
                  6.89767334985100004550e-1) * r + 1.67638483018380384940e+0) * r +
                2.05319162663775882187e+0) * r + 1.0);
    } else {
        r -= 5.0;
        val = (((((((2.01033439929228813265e-7 * r + 2.71155556874348757815e-5) * r +
                    1.24266094738807843860e-3) * r + 2.65321895265761230930e-2) * r +
                  2.96560571828504891230e-1) * r + 1.78482653991729133580e+0) * r +
                5.46378491116411436990e+0) * r + 6.65790464350110377720e+0) /
              (((((((2.04426310338993978564e-15 * r + 1.42151175831644588870e-7) * r +
                    1.84631831751005468180e-5) * r + 7.86869131145613259100e-4) * r +
                  1.48753612908506148525e-2) * r + 1.36929880922735805310e-1) * r +
                5.99832206555887937690e-1) * r + 1.0);
    }
    return (q < 0.0) ? -val : val;
}

struct TruncatedNormalSpec {
    double mu = 0.0;
    double sigma = 1.0;
    double upper = 0.0;
};

inline void validate(const TruncatedNormalSpec& s) {
    if (!(s.sigma > 0.0) || !std::isfinite(s.sigma))
        throw std::invalid_argument("truncated normal: sigma must be positive and finite");
    if (!std::isfinite(s.mu) || !std::isfinite(s.upper))
        throw std::invalid_argument("truncated normal: mu and upper must be finite");
}

/**
 * Conditional mean E[X | X < upper] = mu - sigma * phi(a)/Phi(a) with
 * a = (upper - mu)/sigma.  Once a drops below the saturation point the
 * conditional distribution is numerically a point mass at the bound; the
 * mean is reported as upper - 1e-8 * sigma and `saturated` is set.
 */
inline double trunc_normal_mean(const TruncatedNormalSpec& s, bool* saturated = nullptr) {
    validate(s);
    const double a = (s.upper - s.mu) / s.sigma;
    if (a < kTruncSaturationA) {
        if (saturated) *saturated = true;
        return s.upper - kTruncSaturationEps * s.sigma;
    }
    if (saturated) *saturated = false;
    return s.mu - s.sigma * norm_hazard_lower(a);
}

/**
 * Seeded draw from X | X < upper by inverse transform: Phi^{-1}(u * Phi(a))
 * mapped back through mu + sigma z.  In the saturated regime the quantile is
 * solved from the asymptotic log-tail instead, and `saturated` is set.
 */
inline double trunc_normal_draw(const TruncatedNormalSpec& s, Rng& rng, bool* saturated = nullptr) {
    validate(s);
    const double a = (s.upper - s.mu) / s.sigma;
    const double u = rng.uniform01_open0();
    double z;
    if (a >= kTruncSaturationA && u * norm_cdf(a) >= 1e-300) {
        if (saturated) *saturated = false;
        z = norm_quantile(u * norm_cdf(a));
    } else {
        if (saturated) *saturated = true;
        // Solve ln Phi(z) = ln u + ln Phi(a) in the far tail by Newton steps
        // seeded from the leading-order inversion.
        const double target = std::log(u) + norm_logcdf(a);
        const double c = 0.5 * std::log(2.0 * 3.14159265358979323846);
        z = -std::sqrt(std::max(1.0, -2.0 * (target + c)));
        for (int it = 0; it < 40; ++it) {
            const double f = norm_logcdf(z) - target;
            const double step = f / norm_hazard_lower(z);
            z -= step;
            if (std::abs(step) < 1e-12 * std::max(1.0, std::abs(z))) break;
        }
    }
    double x = s.mu + s.sigma * z;
    if (!(x < s.upper)) x = std::nextafter(s.upper, -std::numeric_limits<double>::infinity());
    return x;
}

}  // namespace coda
