#pragma once

// Maximum-likelihood fit of a lognormal to left-censored positive data.
// Observed values contribute density terms in log space; censored values
// contribute Phi((log limit - mu)/sigma) mass terms.

#include <coda/truncnorm.hpp>

#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

namespace coda {

struct CensoredLognormalFit {
    double mu = 0.0;     // mean of log values
    double sigma = 1.0;  // sd of log values
    double loglik = 0.0;
    int iterations = 0;
};

namespace detail {

struct CensLnProblem {
    std::vector<double> logw;  // log of observed values
    std::vector<double> logv;  // log of censoring limits

    // Negative log-likelihood and gradient in (mu, s = ln sigma).
    double eval(double mu, double s, double* gmu, double* gs) const {
        const double sigma = std::exp(s);
        double f = 0.0, dmu = 0.0, ds = 0.0;
        for (double w : logw) {
            const double z = (w - mu) / sigma;
            f += 0.5 * z * z + s + 0.9189385332046727;  // + ln sqrt(2 pi)
            dmu += -z / sigma;
            ds += -(z * z - 1.0);
        }
        for (double v : logv) {
            const double a = (v - mu) / sigma;
            f -= norm_logcdf(a);
            const double lam = norm_hazard_lower(a);
            dmu += lam / sigma;
            ds += a * lam;
        }
        if (gmu) *gmu = dmu;
        if (gs) *gs = ds;
        return f;
    }
};

}  // namespace detail

/**
 * Fit (mu, sigma) of a lognormal by maximizing the censored likelihood with
 * a damped Newton/BFGS-style descent on (mu, ln sigma).  Throws on fewer
 * than two observed values, on an all-censored sample, on a degenerate
 * sigma -> 0 fit, and on non-convergence within max_iter iterations.
 */
inline CensoredLognormalFit fit_censored_lognormal(const std::vector<double>& observed,
                                                   const std::vector<double>& censor_limits,
                                                   int max_iter = 200) {
    if (observed.size() < 2)
        throw std::invalid_argument(
            "fit_censored_lognormal: need at least two observed values, got " +
            std::to_string(observed.size()));
    detail::CensLnProblem prob;
    prob.logw.reserve(observed.size());
    for (double w : observed) {
        if (!(w > 0.0)) throw std::invalid_argument("fit_censored_lognormal: observed value <= 0");
        prob.logw.push_back(std::log(w));
    }
    for (double v : censor_limits) {
        if (!(v > 0.0)) throw std::invalid_argument("fit_censored_lognormal: censor limit <= 0");
        prob.logv.push_back(std::log(v));
    }

    // Moment start from the observed part.
    double mu = 0.0;
    for (double w : prob.logw) mu += w;
    mu /= static_cast<double>(prob.logw.size());
    double var = 0.0;
    for (double w : prob.logw) var += (w - mu) * (w - mu);
    var /= static_cast<double>(prob.logw.size());
    if (var <= 0.0 && prob.logv.empty())
        throw std::runtime_error("fit_censored_lognormal: all observed values equal, sigma degenerate");
    double s = 0.5 * std::log(std::max(var, 1e-4));

    // BFGS on two parameters with Armijo backtracking.
    double h00 = 1.0, h01 = 0.0, h11 = 1.0;  // inverse-Hessian estimate
    double gmu, gs;
    double f = prob.eval(mu, s, &gmu, &gs);
    int it = 0;
    for (; it < max_iter; ++it) {
        const double scale = std::max({1.0, std::abs(mu), std::abs(s)});
        if (std::max(std::abs(gmu), std::abs(gs)) < 1e-9 * std::max(1.0, std::abs(f)) * scale) break;
        double pmu = -(h00 * gmu + h01 * gs);
        double ps = -(h01 * gmu + h11 * gs);
        if (pmu * gmu + ps * gs > 0.0) {  // not a descent direction: reset
            h00 = h11 = 1.0;
            h01 = 0.0;
            pmu = -gmu;
            ps = -gs;
        }
        double step = 1.0;
        double nmu = mu, ns = s, nf = f;
        const double slope = pmu * gmu + ps * gs;
        for (int bt = 0; bt < 60; ++bt) {
            nmu = mu + step * pmu;
            ns = std::max(-30.0, std::min(30.0, s + step * ps));
            nf = prob.eval(nmu, ns, nullptr, nullptr);
            if (std::isfinite(nf) && nf <= f + 1e-4 * step * slope) break;
            step *= 0.5;
        }
        double ngmu, ngs;
        nf = prob.eval(nmu, ns, &ngmu, &ngs);
        // BFGS update of the inverse Hessian.
        const double dx0 = nmu - mu, dx1 = ns - s;
        const double dg0 = ngmu - gmu, dg1 = ngs - gs;
        const double dxdg = dx0 * dg0 + dx1 * dg1;
        if (dxdg > 1e-12) {
            const double hg0 = h00 * dg0 + h01 * dg1;
            const double hg1 = h01 * dg0 + h11 * dg1;
            const double dgh = dg0 * hg0 + dg1 * hg1;
            const double c1 = (dxdg + dgh) / (dxdg * dxdg);
            h00 += c1 * dx0 * dx0 - (hg0 * dx0 + dx0 * hg0) / dxdg;
            h01 += c1 * dx0 * dx1 - (hg0 * dx1 + dx0 * hg1) / dxdg;
            h11 += c1 * dx1 * dx1 - (hg1 * dx1 + dx1 * hg1) / dxdg;
        }
        mu = nmu;
        s = ns;
        f = nf;
        gmu = ngmu;
        gs = ngs;
    }
    if (it >= max_iter)
        throw std::runtime_error("fit_censored_lognormal: no convergence after " +
                                 std::to_string(max_iter) + " iterations (mu=" +
                                 std::to_string(mu) + ", log sigma=" + std::to_string(s) +
                                 ", |grad|=" + std::to_string(std::max(std::abs(gmu), std::abs(gs))) + ")");
    if (s < -20.0)
        throw std::runtime_error("fit_censored_lognormal: sigma collapsed to zero (degenerate fit)");
    CensoredLognormalFit fit;
    fit.mu = mu;
    fit.sigma = std::exp(s);
    fit.loglik = -f;
    fit.iterations = it;
    return fit;
}

}  // namespace coda
