#include <catch2/catch_amalgamated.hpp>

#include <coda/censored_lognormal.hpp>
#include <coda/km.hpp>
#include <coda/rng.hpp>

#include <algorithm>
#include <cmath>
#include <vector>

TEST_CASE("uncensored lognormal fit equals the closed-form MLE", "[censored]") {
    // With no censored mass the MLE is the sample mean of logs and the
    // 1/n-denominator standard deviation of logs.
    std::vector<double> obs = {std::exp(0.0), std::exp(1.0), std::exp(2.0)};
    auto fit = coda::fit_censored_lognormal(obs, {});
    REQUIRE(fit.mu == Catch::Approx(1.0).margin(1e-6));
    REQUIRE(fit.sigma == Catch::Approx(std::sqrt(2.0 / 3.0)).margin(1e-6));

    coda::Rng rng(3);
    std::vector<double> big;
    for (int i = 0; i < 500; ++i) big.push_back(std::exp(rng.normal(0.7, 1.3)));
    double m = 0.0;
    for (double w : big) m += std::log(w);
    m /= big.size();
    double v = 0.0;
    for (double w : big) v += (std::log(w) - m) * (std::log(w) - m);
    v /= big.size();
    auto f2 = coda::fit_censored_lognormal(big, {});
    REQUIRE(f2.mu == Catch::Approx(m).margin(1e-6));
    REQUIRE(f2.sigma == Catch::Approx(std::sqrt(v)).margin(1e-6));
}

TEST_CASE("censored fit recovers simulation parameters", "[censored]") {
    const double mu = 1.5, sigma = 0.8, dl = std::exp(1.2);
    coda::Rng rng(101);
    std::vector<double> obs, lims;
    for (int i = 0; i < 6000; ++i) {
        const double x = std::exp(rng.normal(mu, sigma));
        if (x < dl)
            lims.push_back(dl);
        else
            obs.push_back(x);
    }
    REQUIRE(lims.size() > 1000);  // heavy censoring actually present
    auto fit = coda::fit_censored_lognormal(obs, lims);
    REQUIRE(fit.mu == Catch::Approx(mu).margin(0.05));
    REQUIRE(fit.sigma == Catch::Approx(sigma).margin(0.05));

    // The optimum dominates nearby parameter pairs under the same likelihood.
    coda::detail::CensLnProblem prob;
    for (double w : obs) prob.logw.push_back(std::log(w));
    for (double v : lims) prob.logv.push_back(std::log(v));
    const double best = prob.eval(fit.mu, std::log(fit.sigma), nullptr, nullptr);
    for (double dmu : {-0.05, 0.05})
        for (double dls : {-0.05, 0.05})
            REQUIRE(best <= prob.eval(fit.mu + dmu, std::log(fit.sigma) + dls, nullptr, nullptr));
    REQUIRE(fit.loglik == Catch::Approx(-best));
}

TEST_CASE("degenerate lognormal inputs are rejected", "[censored]") {
    REQUIRE_THROWS_AS(coda::fit_censored_lognormal({3.0}, {1.0, 1.0}), std::invalid_argument);
    REQUIRE_THROWS_AS(coda::fit_censored_lognormal({}, {1.0}), std::invalid_argument);
    REQUIRE_THROWS_AS(coda::fit_censored_lognormal({2.0, -1.0}, {}), std::invalid_argument);
    REQUIRE_THROWS_AS(coda::fit_censored_lognormal({2.0, 3.0}, {0.0}), std::invalid_argument);
    // All observed identical with no censored mass: sigma is degenerate.
    REQUIRE_THROWS(coda::fit_censored_lognormal({2.0, 2.0, 2.0}, {}));
}

TEST_CASE("left-censored product limit matches the hand example", "[censored]") {
    auto e = coda::km_left_censored({2.0, 3.5}, {1.0});
    REQUIRE(e.support == std::vector<double>{2.0, 3.5});
    REQUIRE(e.cdf[0] == Catch::Approx(2.0 / 3.0).epsilon(1e-12));
    REQUIRE(e.cdf[1] == Catch::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("without censoring the product limit is the plain ecdf", "[censored]") {
    coda::Rng rng(5);
    std::vector<double> obs;
    for (int i = 0; i < 40; ++i) obs.push_back(1.0 + 10.0 * rng.uniform01());
    obs.push_back(obs[3]);  // force a tie
    auto e = coda::km_left_censored(obs, {});
    std::vector<double> sorted = obs;
    std::sort(sorted.begin(), sorted.end());
    for (std::size_t k = 0; k < e.support.size(); ++k) {
        const double x = e.support[k];
        const double plain =
            static_cast<double>(std::upper_bound(sorted.begin(), sorted.end(), x) - sorted.begin()) /
            static_cast<double>(sorted.size());
        REQUIRE(e.cdf[k] == Catch::Approx(plain).epsilon(1e-12));
    }
    REQUIRE(e.cdf.back() == Catch::Approx(1.0));
    REQUIRE(std::is_sorted(e.support.begin(), e.support.end()));
    REQUIRE(std::is_sorted(e.cdf.begin(), e.cdf.end()));
}

TEST_CASE("interpolant hits nodes, stays monotone, anchors at zero", "[censored]") {
    auto e = coda::km_left_censored({1.0, 2.0, 2.0, 5.0, 9.0}, {0.7, 3.0});
    REQUIRE(e.evaluate(0.0) == 0.0);
    REQUIRE(e.evaluate(-1.0) == 0.0);
    for (std::size_t k = 0; k < e.support.size(); ++k)
        REQUIRE(e.evaluate(e.support[k]) == Catch::Approx(e.cdf[k]).margin(1e-12));
    double prev = -1.0;
    for (double x = 0.0; x <= 10.0; x += 0.01) {
        const double f = e.evaluate(x);
        REQUIRE(f >= prev - 1e-12);
        REQUIRE(f >= 0.0);
        REQUIRE(f <= 1.0);
        prev = f;
    }
    REQUIRE(e.evaluate(9.0) == Catch::Approx(1.0));
    REQUIRE(e.evaluate(50.0) == 1.0);
}

TEST_CASE("restricted draws land in range and track the curve", "[censored]") {
    coda::Rng gen(21);
    std::vector<double> obs;
    for (int i = 0; i < 200; ++i) obs.push_back(std::exp(gen.normal(1.0, 0.7)));
    auto e = coda::km_left_censored(obs, {});
    const double limit = std::exp(1.0);
    const double mass = e.evaluate(limit);
    REQUIRE(mass > 0.2);

    coda::Rng rng(77);
    const int n = 4000;
    std::vector<double> draws(n);
    for (int i = 0; i < n; ++i) {
        bool fb = true;
        draws[i] = coda::km_draw_below(e, limit, rng, &fb);
        REQUIRE_FALSE(fb);
        REQUIRE(draws[i] > 0.0);
        REQUIRE(draws[i] < limit);
    }
    // Kolmogorov-Smirnov sanity against the restricted curve.
    std::sort(draws.begin(), draws.end());
    double ks = 0.0;
    for (int i = 0; i < n; ++i) {
        const double fx = e.evaluate(draws[i]) / mass;
        ks = std::max(ks, std::abs(fx - (i + 1.0) / n));
        ks = std::max(ks, std::abs(fx - static_cast<double>(i) / n));
    }
    REQUIRE(ks < 0.05);

    coda::Rng r1(9), r2(9);
    for (int i = 0; i < 20; ++i)
        REQUIRE(coda::km_draw_below(e, limit, r1) == coda::km_draw_below(e, limit, r2));
}

TEST_CASE("zero interpolated mass falls back to a flagged uniform", "[censored]") {
    auto e = coda::km_left_censored({10.0, 11.0, 12.0}, {});
    coda::Rng rng(4);
    for (int i = 0; i < 200; ++i) {
        bool fb = false;
        const double x = coda::km_draw_below(e, 1e-9, rng, &fb);
        REQUIRE(fb);
        REQUIRE(x >= 0.1e-9);
        REQUIRE(x <= 1e-9);
    }
    REQUIRE_THROWS_AS(coda::km_draw_below(e, 0.0, rng), std::invalid_argument);
    REQUIRE_THROWS_AS(coda::km_left_censored({}, {1.0}), std::invalid_argument);
    REQUIRE_THROWS_AS(coda::km_left_censored({1.0, -2.0}, {}), std::invalid_argument);
}
