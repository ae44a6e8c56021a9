#pragma once

// Zero-replacement methods for compositional count data.
//
// Three families:
//   * multiplicative: replace zeros below their detection limit and shrink
//     the observed cells by a row factor that preserves the row total;
//   * log-ratio model based: censored-regression EM, Bayesian data
//     augmentation, and low-rank SVD completion in log-ratio coordinates;
//   * simple count conventions: uniform-below-limit and zeros-to-one.
//
// All stochastic methods draw from an explicit seeded stream.

#include <coda/censored_lognormal.hpp>
#include <coda/geometry.hpp>
#include <coda/imputation.hpp>
#include <coda/km.hpp>
#include <coda/rng.hpp>
#include <coda/truncnorm.hpp>

#include <Eigen/Dense>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <limits>
#include <set>
#include <string>
#include <vector>

namespace coda {

// ---------------------------------------------------------------------------
// Multiplicative family
// ---------------------------------------------------------------------------

namespace detail {

// Shared multiplicative adjustment: masked cells take their replacement
// value delta, observed cells shrink by 1 - sum(delta)/rowtotal so the row
// total is preserved.  A factor <= 0 produces negative observed cells; the
// row is flagged and the values are kept as computed.
inline ImputationResult multiplicative_adjust(const Matrix& x, const Mask& mask,
                                              const Matrix& delta) {
    ImputationResult r;
    r.values = x;
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
        double replaced = 0.0;
        bool any = false;
        for (Eigen::Index j = 0; j < x.cols(); ++j)
            if (mask(i, j)) {
                replaced += delta(i, j);
                any = true;
            }
        if (!any) continue;
        const double total = x.row(i).sum();
        const double factor = 1.0 - replaced / total;
        for (Eigen::Index j = 0; j < x.cols(); ++j)
            r.values(i, j) = mask(i, j) ? delta(i, j) : x(i, j) * factor;
        if (!(factor > 0.0)) r.diag.negative_rows.push_back(static_cast<int>(i));
    }
    if (!r.diag.negative_rows.empty()) {
        r.status = ImputeStatus::degenerate;
        r.reason = "row adjustment factor <= 0 in " +
                   std::to_string(r.diag.negative_rows.size()) + " row(s)";
    }
    return r;
}

}  // namespace detail

/**
 * Multiplicative simple replacement: each zero becomes fraction * its
 * detection limit and the row's observed cells shrink to keep the original
 * row total.
 */
inline ImputationResult multiplicative_replacement(const Matrix& x, const DetectionLimits& dl,
                                                   double fraction = 0.65) {
    validate_zero_bearing(x, "multiplicative_replacement");
    if (!(fraction > 0.0) || !std::isfinite(fraction))
        throw std::invalid_argument("multiplicative_replacement: fraction must be positive");
    const Mask mask = zero_mask(x);
    dl.validate_for(x, mask);
    Matrix delta = Matrix::Zero(x.rows(), x.cols());
    for (Eigen::Index i = 0; i < x.rows(); ++i)
        for (Eigen::Index j = 0; j < x.cols(); ++j)
            if (mask(i, j)) delta(i, j) = fraction * dl(i, j);
    return detail::multiplicative_adjust(x, mask, delta);
}

/**
 * Multiplicative lognormal replacement: per zero-bearing column, fit a
 * left-censored lognormal to the positive values, then replace each zero by
 * the truncated distribution's log-scale expectation below its limit (or a
 * random truncated draw when `random` is set), followed by the same
 * row-total-preserving adjustment.  A column whose fit fails (including
 * fewer than two positive observations) falls back to fraction * limit with
 * a diagnostic note.
 */
inline ImputationResult multiplicative_lognormal(const Matrix& x, const DetectionLimits& dl,
                                                 Rng& rng, bool random = false,
                                                 double fallback_fraction = 0.65) {
    validate_zero_bearing(x, "multiplicative_lognormal");
    const Mask mask = zero_mask(x);
    dl.validate_for(x, mask);
    Matrix delta = Matrix::Zero(x.rows(), x.cols());
    std::vector<std::string> notes;
    bool saturated_any = false;
    for (Eigen::Index j = 0; j < x.cols(); ++j) {
        if (!mask.col(j).any()) continue;
        std::vector<double> obs, lims;
        for (Eigen::Index i = 0; i < x.rows(); ++i)
            (mask(i, j) ? lims : obs).push_back(mask(i, j) ? dl(i, j) : x(i, j));
        bool fitted = false;
        CensoredLognormalFit fit;
        if (obs.size() >= 2) {
            try {
                fit = fit_censored_lognormal(obs, lims);
                fitted = true;
            } catch (const std::exception& e) {
                notes.push_back("column " + std::to_string(j) + ": lognormal fit failed (" +
                                e.what() + "); fell back to fraction*limit");
            }
        } else {
            notes.push_back("column " + std::to_string(j) +
                            ": fewer than two positive observations; fell back to fraction*limit");
        }
        for (Eigen::Index i = 0; i < x.rows(); ++i) {
            if (!mask(i, j)) continue;
            if (!fitted) {
                delta(i, j) = fallback_fraction * dl(i, j);
                continue;
            }
            const TruncatedNormalSpec spec{fit.mu, fit.sigma, std::log(dl(i, j))};
            bool sat = false;
            const double logv =
                random ? trunc_normal_draw(spec, rng, &sat) : trunc_normal_mean(spec, &sat);
            saturated_any = saturated_any || sat;
            delta(i, j) = std::exp(logv);
        }
    }
    ImputationResult r = detail::multiplicative_adjust(x, mask, delta);
    r.diag.notes = std::move(notes);
    r.diag.saturation = saturated_any;
    return r;
}

/**
 * Multiplicative replacement from the left-censored product-limit CDF: per
 * zero-bearing column, estimate the CDF from positive values and censoring
 * limits, replace each zero by the geometric mean of seeded draws below its
 * limit, then apply the row-total-preserving adjustment.  A zero-bearing
 * column with fewer than two distinct positive values fails the whole
 * replicate.
 */
inline ImputationResult multiplicative_km(const Matrix& x, const DetectionLimits& dl, Rng& rng,
                                          int n_draws = 1000) {
    validate_zero_bearing(x, "multiplicative_km");
    if (n_draws < 1) throw std::invalid_argument("multiplicative_km: n_draws must be >= 1");
    const Mask mask = zero_mask(x);
    dl.validate_for(x, mask);
    Matrix delta = Matrix::Zero(x.rows(), x.cols());
    std::vector<std::string> notes;
    for (Eigen::Index j = 0; j < x.cols(); ++j) {
        if (!mask.col(j).any()) continue;
        std::vector<double> obs, lims;
        for (Eigen::Index i = 0; i < x.rows(); ++i)
            (mask(i, j) ? lims : obs).push_back(mask(i, j) ? dl(i, j) : x(i, j));
        std::set<double> distinct(obs.begin(), obs.end());
        if (distinct.size() < 2) {
            ImputationResult r;
            r.values = x;
            r.status = ImputeStatus::failed;
            r.reason = "column " + std::to_string(j) +
                       " has fewer than two distinct positive values";
            return r;
        }
        const LeftCensoredECDF ecdf = km_left_censored(obs, lims);
        for (Eigen::Index i = 0; i < x.rows(); ++i) {
            if (!mask(i, j)) continue;
            double logsum = 0.0;
            bool fell_back = false;
            for (int k = 0; k < n_draws; ++k) {
                bool fb = false;
                logsum += std::log(km_draw_below(ecdf, dl(i, j), rng, &fb));
                fell_back = fell_back || fb;
            }
            if (fell_back)
                notes.push_back("cell (" + std::to_string(i) + "," + std::to_string(j) +
                                "): no estimated mass below limit; uniform fallback");
            delta(i, j) = std::exp(logsum / n_draws);
        }
    }
    ImputationResult r = detail::multiplicative_adjust(x, mask, delta);
    r.diag.notes = std::move(notes);
    return r;
}

// ---------------------------------------------------------------------------
// Bayesian-multiplicative count replacement
// ---------------------------------------------------------------------------

struct DirichletPrior {
    enum class Kind { haldane, perks, jeffreys, bayes_laplace, custom };
    Kind kind = Kind::bayes_laplace;
    double strength = 0.0;          // custom only
    std::vector<double> weights;    // custom only; must sum to 1

    static DirichletPrior haldane() { return {Kind::haldane, 0.0, {}}; }
    static DirichletPrior perks() { return {Kind::perks, 0.0, {}}; }
    static DirichletPrior jeffreys() { return {Kind::jeffreys, 0.0, {}}; }
    static DirichletPrior bayes_laplace() { return {Kind::bayes_laplace, 0.0, {}}; }
    static DirichletPrior custom(double s, std::vector<double> t) {
        return {Kind::custom, s, std::move(t)};
    }
};

/**
 * Bayesian-multiplicative replacement for counts: per row, zeros take the
 * posterior share s*t_j/(N+s) under the chosen Dirichlet prior and positive
 * parts shrink multiplicatively so the row stays a unit composition.  The
 * output is row-closed proportions.  The zero-strength prior cannot replace
 * zeros and yields a degenerate (flagged) result when zeros are present.
 */
inline ImputationResult bayes_multiplicative(const Matrix& counts, const DirichletPrior& prior) {
    validate_zero_bearing(counts, "bayes_multiplicative");
    const Eigen::Index n = counts.rows(), d = counts.cols();
    const Mask mask = zero_mask(counts);

    double s = 0.0;
    std::vector<double> t(static_cast<std::size_t>(d), 1.0 / static_cast<double>(d));
    switch (prior.kind) {
        case DirichletPrior::Kind::haldane: s = 0.0; break;
        case DirichletPrior::Kind::perks: s = 1.0; break;
        case DirichletPrior::Kind::jeffreys: s = static_cast<double>(d) / 2.0; break;
        case DirichletPrior::Kind::bayes_laplace: s = static_cast<double>(d); break;
        case DirichletPrior::Kind::custom: {
            s = prior.strength;
            if (!(s >= 0.0)) throw std::invalid_argument("bayes_multiplicative: strength must be >= 0");
            if (prior.weights.size() != static_cast<std::size_t>(d))
                throw std::invalid_argument("bayes_multiplicative: weight size mismatch");
            double tot = 0.0;
            for (double w : prior.weights) {
                if (!(w > 0.0)) throw std::invalid_argument("bayes_multiplicative: weights must be positive");
                tot += w;
            }
            if (std::abs(tot - 1.0) > 1e-8)
                throw std::invalid_argument("bayes_multiplicative: weights must sum to 1");
            t = prior.weights;
            break;
        }
    }

    ImputationResult r;
    r.values = Matrix::Zero(n, d);
    bool zeros_anywhere = false;
    for (Eigen::Index i = 0; i < n; ++i) {
        const double total = counts.row(i).sum();
        double zero_weight = 0.0;
        bool any = false;
        for (Eigen::Index j = 0; j < d; ++j)
            if (mask(i, j)) {
                zero_weight += t[static_cast<std::size_t>(j)];
                any = true;
            }
        zeros_anywhere = zeros_anywhere || any;
        const double shrink = any ? 1.0 - (s / (total + s)) * zero_weight : 1.0;
        for (Eigen::Index j = 0; j < d; ++j) {
            if (mask(i, j))
                r.values(i, j) = s * t[static_cast<std::size_t>(j)] / (total + s);
            else
                r.values(i, j) = (counts(i, j) / total) * shrink;
        }
    }
    if (zeros_anywhere && s == 0.0) {
        r.status = ImputeStatus::degenerate;
        r.reason = "zero prior strength cannot replace zeros";
    }
    return r;
}

// ---------------------------------------------------------------------------
// Log-ratio model family
// ---------------------------------------------------------------------------

namespace detail {

// Last column with no zeros, usable as a log-ratio reference; -1 if none.
inline int last_positive_column(const Matrix& x) {
    for (Eigen::Index j = x.cols() - 1; j >= 0; --j)
        if ((x.col(j).array() > 0.0).all()) return static_cast<int>(j);
    return -1;
}

// Initial fill: zeros at 65% of their detection limit, observed unchanged.
inline Matrix fraction_fill(const Matrix& x, const Mask& mask, const DetectionLimits& dl,
                            double fraction = 0.65) {
    Matrix m = x;
    for (Eigen::Index i = 0; i < x.rows(); ++i)
        for (Eigen::Index j = 0; j < x.cols(); ++j)
            if (mask(i, j)) m(i, j) = fraction * dl(i, j);
    return m;
}

struct Deadline {
    std::chrono::steady_clock::time_point at{};
    bool active = false;
    static Deadline in(double seconds) {
        Deadline d;
        if (seconds > 0.0) {
            d.active = true;
            d.at = std::chrono::steady_clock::now() +
                   std::chrono::duration_cast<std::chrono::steady_clock::duration>(
                       std::chrono::duration<double>(seconds));
        }
        return d;
    }
    bool expired() const { return active && std::chrono::steady_clock::now() > at; }
};

inline ImputationResult fail(const Matrix& x, std::string reason) {
    ImputationResult r;
    r.values = x;
    r.status = ImputeStatus::failed;
    r.reason = std::move(reason);
    return r;
}

}  // namespace detail

struct LogratioEmOptions {
    int max_iter = 50;
    double tol = 1e-4;        // relative coordinate change
    int reference = -1;       // -1: last zero-free column
    int screen_top_k = 0;     // >0: per column, keep only the k most
                              // proportional predictors (lowest log-ratio
                              // variance against the target part)
    double time_limit_s = 0;  // 0: unlimited
};

/**
 * Censored-regression EM in additive log-ratio coordinates.  Each
 * zero-bearing column is regressed on all the others; censored entries take
 * the conditional mean of the fitted normal truncated at ln(limit/x_ref).
 * Deterministic; imputed values never exceed their detection limits; the
 * result is invariant (to numerical precision) under the choice of
 * reference.
 */
inline ImputationResult logratio_em(const Matrix& x, const DetectionLimits& dl,
                                    const LogratioEmOptions& opts = {}) {
    validate_zero_bearing(x, "logratio_em");
    const Mask mask = zero_mask(x);
    dl.validate_for(x, mask);
    const Eigen::Index n = x.rows(), d = x.cols();
    if (!mask.any()) {
        ImputationResult r;
        r.values = x;
        return r;
    }
    int ref = opts.reference;
    if (ref < 0) {
        ref = detail::last_positive_column(x);
        if (ref < 0) return detail::fail(x, "no zero-free column available as reference");
    } else {
        if (ref >= d) throw std::invalid_argument("logratio_em: reference out of range");
        if (mask.col(ref).any())
            throw std::invalid_argument("logratio_em: reference column contains zeros");
    }
    if (n < 3) return detail::fail(x, "need at least three rows");
    const auto deadline = detail::Deadline::in(opts.time_limit_s);

    Matrix m = detail::fraction_fill(x, mask, dl);
    Matrix z = alr(m, ref);
    const Eigen::Index q = d - 1;
    auto acol = [&](Eigen::Index j) { return j < static_cast<Eigen::Index>(ref) ? j : j - 1; };

    std::vector<int> censored_cols;
    for (Eigen::Index j = 0; j < d; ++j)
        if (j != ref && mask.col(j).any()) censored_cols.push_back(static_cast<int>(j));

    // Optional proportionality screening, fixed from the initial fill.
    std::vector<std::vector<int>> predictors(censored_cols.size());
    Matrix tvar;
    const bool screening = opts.screen_top_k > 0 && opts.screen_top_k < static_cast<int>(q) - 1;
    if (screening) tvar = variation_matrix(m);
    for (std::size_t ci = 0; ci < censored_cols.size(); ++ci) {
        const int j = censored_cols[ci];
        std::vector<int> cand;
        for (Eigen::Index k = 0; k < d; ++k)
            if (static_cast<int>(k) != j && k != static_cast<Eigen::Index>(ref))
                cand.push_back(static_cast<int>(k));
        if (screening) {
            std::sort(cand.begin(), cand.end(),
                      [&](int a, int b) { return tvar(j, a) < tvar(j, b); });
            cand.resize(static_cast<std::size_t>(opts.screen_top_k));
            std::sort(cand.begin(), cand.end());
        }
        predictors[ci] = std::move(cand);
    }

    ImputationResult r;
    double max_change = std::numeric_limits<double>::infinity();
    int it = 0;
    for (; it < opts.max_iter && max_change >= opts.tol; ++it) {
        if (deadline.expired()) return detail::fail(x, "timeout");
        max_change = 0.0;
        for (std::size_t ci = 0; ci < censored_cols.size(); ++ci) {
            const int j = censored_cols[ci];
            const Eigen::Index c = acol(j);
            const auto& pred = predictors[ci];
            Matrix w1(n, static_cast<Eigen::Index>(pred.size()) + 1);
            w1.col(0).setOnes();
            for (std::size_t k = 0; k < pred.size(); ++k) w1.col(1 + k) = z.col(acol(pred[k]));
            Eigen::ColPivHouseholderQR<Matrix> qr(w1);
            const Eigen::Index rank = qr.rank();
            const double dof = static_cast<double>(n) - static_cast<double>(rank);
            if (dof < 1.0) return detail::fail(x, "singular regression (no residual degrees of freedom)");
            const Vector coef = qr.solve(z.col(c));
            const Vector fitted = w1 * coef;
            const double rss = (z.col(c) - fitted).squaredNorm();
            const double sigma = std::sqrt(std::max(rss, 0.0) / dof);
            for (Eigen::Index i = 0; i < n; ++i) {
                if (!mask(i, j)) continue;
                const double psi = std::log(dl(i, j)) - std::log(x(i, ref));
                double znew;
                if (sigma < 1e-12) {
                    znew = std::min(fitted[i], psi - 1e-12 * std::max(1.0, std::abs(psi)));
                } else {
                    znew = trunc_normal_mean({fitted[i], sigma, psi});
                }
                max_change = std::max(max_change,
                                      std::abs(znew - z(i, c)) / (1.0 + std::abs(z(i, c))));
                z(i, c) = znew;
            }
        }
    }
    r.diag.iterations = it;
    if (max_change >= opts.tol)
        r.diag.notes.push_back("stopped at max_iter with relative change " +
                               std::to_string(max_change));

    r.values = x;
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j < d; ++j)
            if (mask(i, j)) r.values(i, j) = std::exp(z(i, acol(j))) * x(i, ref);
    return r;
}

struct LogratioDaOptions {
    int n_iter = 1500;
    int burn_in = 500;
    int reference = -1;
    double time_limit_s = 0;
};

/**
 * Bayesian data augmentation in additive log-ratio coordinates: alternate
 * truncated-normal draws for censored coordinates with conjugate
 * normal/inverse-Wishart parameter draws under a noninformative prior.  The
 * imputation is the average of the post-burn-in censored draws mapped back
 * to the original scale.  Intended for low dimension; failure (chain
 * divergence, non-positive-definite covariance) is reported, not patched.
 */
inline ImputationResult logratio_da(const Matrix& x, const DetectionLimits& dl, Rng& rng,
                                    const LogratioDaOptions& opts = {}) {
    validate_zero_bearing(x, "logratio_da");
    if (opts.burn_in >= opts.n_iter)
        throw std::invalid_argument("logratio_da: burn_in must be below n_iter");
    const Mask mask = zero_mask(x);
    dl.validate_for(x, mask);
    const Eigen::Index n = x.rows(), d = x.cols();
    if (!mask.any()) {
        ImputationResult r;
        r.values = x;
        return r;
    }
    int ref = opts.reference;
    if (ref < 0) {
        ref = detail::last_positive_column(x);
        if (ref < 0) return detail::fail(x, "no zero-free column available as reference");
    } else if (ref >= d || mask.col(ref).any()) {
        throw std::invalid_argument("logratio_da: invalid reference column");
    }
    const Eigen::Index q = d - 1;
    if (n - 1 < q)
        return detail::fail(x, "too few rows for the covariance draw (need rows > columns)");
    const auto deadline = detail::Deadline::in(opts.time_limit_s);

    // Start from the multiplicative simple replacement; if that row is
    // degenerate, keep the plain 65%-of-limit fill for it.
    Matrix m0 = detail::fraction_fill(x, mask, dl);
    {
        ImputationResult mr = multiplicative_replacement(x, dl);
        if (mr.status != ImputeStatus::failed) {
            std::set<int> bad(mr.diag.negative_rows.begin(), mr.diag.negative_rows.end());
            for (Eigen::Index i = 0; i < n; ++i)
                if (!bad.count(static_cast<int>(i))) m0.row(i) = mr.values.row(i);
        }
    }
    Matrix z = alr(m0, ref);
    auto acol = [&](Eigen::Index j) { return j < static_cast<Eigen::Index>(ref) ? j : j - 1; };

    struct Cell {
        Eigen::Index row, col;  // col in coordinate space
        double bound;
    };
    std::vector<Cell> cells;
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j < d; ++j)
            if (mask(i, j))
                cells.push_back({i, acol(j), std::log(dl(i, j)) - std::log(x(i, ref))});

    Vector zsum = Vector::Zero(static_cast<Eigen::Index>(cells.size()));
    const int kept = opts.n_iter - opts.burn_in;
    int ridge_events = 0;

    for (int t = 0; t < opts.n_iter; ++t) {
        if (deadline.expired()) return detail::fail(x, "timeout");
        // Parameter draw.
        const Vector mean = z.colwise().mean().transpose();
        Matrix centered = z.rowwise() - mean.transpose();
        Matrix scatter = centered.transpose() * centered;
        Eigen::LLT<Matrix> llt(scatter);
        if (llt.info() != Eigen::Success) {
            const double eps = 1e-8 * scatter.trace() / static_cast<double>(d);
            ++ridge_events;
            for (int boost = 0; boost < 4 && llt.info() != Eigen::Success; ++boost)
                llt.compute(scatter +
                            eps * std::pow(10.0, boost) * Matrix::Identity(q, q));
            if (llt.info() != Eigen::Success)
                return detail::fail(x, "covariance scatter not positive definite");
        }
        const Matrix ls = llt.matrixL();
        // Bartlett: A lower-triangular, A_ii^2 ~ chi^2(n-1-i), then
        // Sigma = (Ls A^{-T})(Ls A^{-T})' is inverse-Wishart(n-1, scatter).
        Matrix a = Matrix::Zero(q, q);
        for (Eigen::Index i = 0; i < q; ++i) {
            a(i, i) = std::sqrt(rng.chi_squared(static_cast<double>(n - 1 - i)));
            for (Eigen::Index k = 0; k < i; ++k) a(i, k) = rng.normal();
        }
        const Matrix at = a.transpose();
        const Matrix b =
            at.triangularView<Eigen::Upper>().solve<Eigen::OnTheRight>(ls);  // Ls * A^{-T}
        const Matrix sigma = b * b.transpose();
        Vector g(q);
        for (Eigen::Index i = 0; i < q; ++i) g[i] = rng.normal();
        const Vector mu = mean + b * g / std::sqrt(static_cast<double>(n));

        // Conditional moments from the precision matrix.
        Eigen::LLT<Matrix> slt(sigma);
        if (slt.info() != Eigen::Success) {
            const double eps = 1e-8 * sigma.trace() / static_cast<double>(d);
            ++ridge_events;
            slt.compute(sigma + eps * Matrix::Identity(q, q));
            if (slt.info() != Eigen::Success)
                return detail::fail(x, "drawn covariance not positive definite");
        }
        const Matrix prec = slt.solve(Matrix::Identity(q, q));

        // Censored coordinate draws, within-row Gibbs on current values.
        for (std::size_t cidx = 0; cidx < cells.size(); ++cidx) {
            const auto& cell = cells[cidx];
            const Eigen::Index c = cell.col;
            const double pcc = prec(c, c);
            if (!(pcc > 0.0)) return detail::fail(x, "conditional precision not positive");
            double shift = 0.0;
            for (Eigen::Index k = 0; k < q; ++k)
                if (k != c) shift += prec(c, k) * (z(cell.row, k) - mu[k]);
            const double cmean = mu[c] - shift / pcc;
            const double csd = std::sqrt(1.0 / pcc);
            const double draw = trunc_normal_draw({cmean, csd, cell.bound}, rng);
            if (!std::isfinite(draw) || std::abs(draw) > 1e8)
                return detail::fail(x, "chain diverged");
            z(cell.row, c) = draw;
            if (t >= opts.burn_in) zsum[static_cast<Eigen::Index>(cidx)] += draw;
        }
    }

    ImputationResult r;
    r.values = x;
    for (std::size_t cidx = 0; cidx < cells.size(); ++cidx) {
        const auto& cell = cells[cidx];
        Eigen::Index j = cell.col < static_cast<Eigen::Index>(ref) ? cell.col : cell.col + 1;
        r.values(cell.row, j) =
            std::exp(zsum[static_cast<Eigen::Index>(cidx)] / kept) * x(cell.row, ref);
    }
    r.diag.iterations = opts.n_iter;
    if (ridge_events > 0)
        r.diag.notes.push_back("applied diagonal ridge " + std::to_string(ridge_events) +
                               " time(s)");
    return r;
}

struct LogratioSvdOptions {
    int rank = 2;
    double beta = 0.5;  // weight of the original observed cells in the update
    double tol = 1e-6;  // relative Frobenius change of the coordinates
    int max_iter = 200;
    double time_limit_s = 0;
};

/**
 * Low-rank completion in isometric log-ratio coordinates: alternate a
 * rank-limited SVD reconstruction with reinforcement of the observed cells
 * ((1-beta)*reconstruction + beta*original) and a detection-limit box clip
 * on the censored cells.  Observed cells are returned bit-identical.
 */
inline ImputationResult logratio_svd(const Matrix& x, const DetectionLimits& dl,
                                     const LogratioSvdOptions& opts = {}) {
    validate_zero_bearing(x, "logratio_svd");
    const Mask mask = zero_mask(x);
    dl.validate_for(x, mask);
    const Eigen::Index n = x.rows(), d = x.cols();
    const Eigen::Index max_rank = std::min<Eigen::Index>(n, d - 1) - 1;
    if (opts.rank < 1 || static_cast<Eigen::Index>(opts.rank) > max_rank)
        throw std::invalid_argument("logratio_svd: rank must lie in [1, min(rows, cols-1)-1]");
    if (!(opts.beta >= 0.0 && opts.beta <= 1.0))
        throw std::invalid_argument("logratio_svd: beta must lie in [0, 1]");
    ImputationResult r;
    if (!mask.any()) {
        r.values = x;
        return r;
    }
    const auto deadline = detail::Deadline::in(opts.time_limit_s);

    Matrix m = detail::fraction_fill(x, mask, dl);
    {
        ImputationResult mr = multiplicative_replacement(x, dl);
        if (mr.status == ImputeStatus::ok) m = mr.values;
    }
    Matrix z = ilr(m);
    int it = 0;
    for (; it < opts.max_iter; ++it) {
        if (deadline.expired()) return detail::fail(x, "timeout");
        Eigen::BDCSVD<Matrix> svd(z, Eigen::ComputeThinU | Eigen::ComputeThinV);
        const Eigen::Index s = std::min<Eigen::Index>(opts.rank, svd.nonzeroSingularValues());
        const Matrix rz = svd.matrixU().leftCols(s) *
                          svd.singularValues().head(s).asDiagonal() *
                          svd.matrixV().leftCols(s).transpose();
        Matrix xz = ilr_inverse(rz);  // unit row sums
        for (Eigen::Index i = 0; i < n; ++i) {
            double obs_orig = 0.0, obs_rec = 0.0;
            for (Eigen::Index j = 0; j < d; ++j)
                if (!mask(i, j)) {
                    obs_orig += x(i, j);
                    obs_rec += xz(i, j);
                }
            const double scale = obs_orig / obs_rec;  // restore the row's size
            for (Eigen::Index j = 0; j < d; ++j) {
                const double rec = xz(i, j) * scale;
                if (mask(i, j))
                    m(i, j) = std::min(rec, dl(i, j));
                else
                    m(i, j) = (1.0 - opts.beta) * rec + opts.beta * x(i, j);
            }
        }
        Matrix znew = ilr(m);
        const double rel = (znew - z).norm() / std::max(z.norm(), 1e-12);
        z.swap(znew);
        if (rel < opts.tol) {
            ++it;
            break;
        }
    }
    r.diag.iterations = it;
    r.values = x;
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j < d; ++j)
            if (mask(i, j)) r.values(i, j) = m(i, j);
    return r;
}

struct PlsEmOptions {
    int n_components = 0;  // 0: per-column cross-validated choice
    int max_iter = 50;
    double tol = 1e-4;
    double time_limit_s = 0;
};

namespace detail {

// PLS1 (NIPALS) on centered data; returns intercept + coefficients.
inline Vector pls1_fit(const Matrix& w, const Vector& y, int ncomp) {
    const Eigen::Index n = w.rows(), p = w.cols();
    Eigen::RowVectorXd wmean = w.colwise().mean();
    const double ymean = y.mean();
    Matrix e = w.rowwise() - wmean;
    Vector f = y.array() - ymean;
    Matrix weights(p, ncomp), loadings(p, ncomp);
    Vector qs(ncomp);
    for (int k = 0; k < ncomp; ++k) {
        Vector wv = e.transpose() * f;
        const double nw = wv.norm();
        if (nw < 1e-14) {
            weights.conservativeResize(Eigen::NoChange, k);
            loadings.conservativeResize(Eigen::NoChange, k);
            qs.conservativeResize(k);
            ncomp = k;
            break;
        }
        wv /= nw;
        Vector t = e * wv;
        const double tt = t.squaredNorm();
        Vector pv = e.transpose() * t / tt;
        const double qv = f.dot(t) / tt;
        e -= t * pv.transpose();
        f -= qv * t;
        weights.col(k) = wv;
        loadings.col(k) = pv;
        qs[k] = qv;
    }
    Vector beta = Vector::Zero(p);
    if (ncomp > 0) {
        // beta = W (P'W)^{-1} q
        const Matrix pw = loadings.leftCols(ncomp).transpose() * weights.leftCols(ncomp);
        beta = weights.leftCols(ncomp) *
               pw.colPivHouseholderQr().solve(qs.head(ncomp));
    }
    Vector out(p + 1);
    out[0] = ymean - wmean.dot(beta);
    out.tail(p) = beta;
    return out;
}

inline Vector pls1_predict(const Vector& coef, const Matrix& w) {
    Vector out = w * coef.tail(w.cols());
    out.array() += coef[0];
    return out;
}

// Deterministic leave-10%-out choice of the latent dimension by prediction
// error on the rows where the response is observed.
inline int pls1_select_components(const Matrix& w, const Vector& y, int cap) {
    const Eigen::Index n = w.rows();
    const int folds = 10;
    const int kmax = std::max(1, std::min<int>(cap, std::min<Eigen::Index>(10, n - 1)));
    double best = std::numeric_limits<double>::infinity();
    int best_k = 1;
    for (int k = 1; k <= kmax; ++k) {
        double sse = 0.0;
        long cnt = 0;
        for (int fold = 0; fold < folds; ++fold) {
            std::vector<Eigen::Index> tr, te;
            for (Eigen::Index i = 0; i < n; ++i)
                (static_cast<int>(i % folds) == fold ? te : tr).push_back(i);
            if (te.empty() || static_cast<int>(tr.size()) < 3) continue;
            Matrix wt(static_cast<Eigen::Index>(tr.size()), w.cols());
            Vector yt(static_cast<Eigen::Index>(tr.size()));
            for (std::size_t i = 0; i < tr.size(); ++i) {
                wt.row(static_cast<Eigen::Index>(i)) = w.row(tr[i]);
                yt[static_cast<Eigen::Index>(i)] = y[tr[i]];
            }
            const Vector coef = pls1_fit(wt, yt, k);
            for (Eigen::Index i : te) {
                const double pred = w.row(i).dot(coef.tail(w.cols())) + coef[0];
                sse += (pred - y[i]) * (pred - y[i]);
                ++cnt;
            }
        }
        const double mse = cnt > 0 ? sse / static_cast<double>(cnt) : best;
        if (mse < best - 1e-15) {
            best = mse;
            best_k = k;
        }
    }
    return best_k;
}

}  // namespace detail

/**
 * Censored-regression EM with partial least squares: per zero-bearing
 * column, express the data in pivot coordinates with that part leading,
 * regress the leading coordinate on the remaining ones through a latent
 * decomposition, and update censored entries by the truncated conditional
 * mean.  With the latent dimension at full rank this reproduces the
 * least-squares EM; smaller dimensions keep it usable when columns outnumber
 * rows.  The default picks the dimension per column by deterministic
 * leave-10%-out cross-validation over 1..min(10, rows-1).
 */
inline ImputationResult pls_em(const Matrix& x, const DetectionLimits& dl,
                               const PlsEmOptions& opts = {}) {
    validate_zero_bearing(x, "pls_em");
    const Mask mask = zero_mask(x);
    dl.validate_for(x, mask);
    const Eigen::Index n = x.rows(), d = x.cols();
    ImputationResult r;
    if (!mask.any()) {
        r.values = x;
        return r;
    }
    if (n < 4) return detail::fail(x, "need at least four rows");
    const auto deadline = detail::Deadline::in(opts.time_limit_s);

    Matrix m = detail::fraction_fill(x, mask, dl);
    std::vector<int> censored_cols;
    for (Eigen::Index j = 0; j < d; ++j)
        if (mask.col(j).any()) censored_cols.push_back(static_cast<int>(j));

    const double c0 = std::sqrt(static_cast<double>(d - 1) / static_cast<double>(d));
    r.diag.pls_components.assign(static_cast<std::size_t>(d), -1);

    // Coordinates for one column: leading pivot balance vs the rest.
    auto pivot_coords = [&](int j, Matrix& w, Vector& y) {
        const Matrix z = ilr(m, j);
        y = z.col(0);
        w = z.rightCols(d - 2);
    };

    // Choose latent dimensions once, from the initial fill, using rows where
    // the column is observed.
    std::vector<int> ncomp(censored_cols.size(), std::max(1, opts.n_components));
    for (std::size_t ci = 0; ci < censored_cols.size(); ++ci) {
        const int j = censored_cols[ci];
        if (opts.n_components > 0) {
            ncomp[ci] = std::min<int>(opts.n_components, static_cast<int>(d) - 2);
        } else {
            Matrix w;
            Vector y;
            pivot_coords(j, w, y);
            std::vector<Eigen::Index> rows;
            for (Eigen::Index i = 0; i < n; ++i)
                if (!mask(i, j)) rows.push_back(i);
            if (rows.size() < 6) {
                ncomp[ci] = 1;
            } else {
                Matrix wo(static_cast<Eigen::Index>(rows.size()), w.cols());
                Vector yo(static_cast<Eigen::Index>(rows.size()));
                for (std::size_t i = 0; i < rows.size(); ++i) {
                    wo.row(static_cast<Eigen::Index>(i)) = w.row(rows[i]);
                    yo[static_cast<Eigen::Index>(i)] = y[rows[i]];
                }
                ncomp[ci] = detail::pls1_select_components(wo, yo, static_cast<int>(d) - 2);
            }
        }
        r.diag.pls_components[static_cast<std::size_t>(j)] = ncomp[ci];
    }

    double max_change = std::numeric_limits<double>::infinity();
    int it = 0;
    for (; it < opts.max_iter && max_change >= opts.tol; ++it) {
        if (deadline.expired()) return detail::fail(x, "timeout");
        max_change = 0.0;
        for (std::size_t ci = 0; ci < censored_cols.size(); ++ci) {
            const int j = censored_cols[ci];
            Matrix w;
            Vector y;
            pivot_coords(j, w, y);
            const Vector coef = detail::pls1_fit(w, y, ncomp[ci]);
            const Vector fitted = detail::pls1_predict(coef, w);
            const double dof = std::max(1.0, static_cast<double>(n) - ncomp[ci] - 1.0);
            const double sigma = std::sqrt((y - fitted).squaredNorm() / dof);
            for (Eigen::Index i = 0; i < n; ++i) {
                if (!mask(i, j)) continue;
                // Bound on the leading coordinate from value <= limit with
                // the row's other parts held fixed.
                double logg = 0.0;
                for (Eigen::Index k = 0; k < d; ++k)
                    if (k != j) logg += std::log(m(i, k));
                logg /= static_cast<double>(d - 1);
                const double psi = c0 * (std::log(dl(i, j)) - logg);
                double znew;
                if (sigma < 1e-12)
                    znew = std::min(fitted[i], psi - 1e-12 * std::max(1.0, std::abs(psi)));
                else
                    znew = trunc_normal_mean({fitted[i], sigma, psi});
                max_change =
                    std::max(max_change, std::abs(znew - y[i]) / (1.0 + std::abs(y[i])));
                m(i, j) = std::exp(znew / c0 + logg);
            }
        }
    }
    r.diag.iterations = it;
    if (max_change >= opts.tol)
        r.diag.notes.push_back("stopped at max_iter with relative change " +
                               std::to_string(max_change));
    r.values = x;
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j < d; ++j)
            if (mask(i, j)) r.values(i, j) = m(i, j);
    return r;
}

// ---------------------------------------------------------------------------
// Simple count conventions
// ---------------------------------------------------------------------------

/**
 * Uniform draw below the limit: each zero becomes Uniform(0.1 * limit,
 * limit); observed cells are untouched (no multiplicative adjustment).
 */
inline ImputationResult detection_limit_uniform(const Matrix& x, const DetectionLimits& dl,
                                                Rng& rng) {
    validate_zero_bearing(x, "detection_limit_uniform");
    const Mask mask = zero_mask(x);
    dl.validate_for(x, mask);
    ImputationResult r;
    r.values = x;
    for (Eigen::Index i = 0; i < x.rows(); ++i)
        for (Eigen::Index j = 0; j < x.cols(); ++j)
            if (mask(i, j)) r.values(i, j) = rng.uniform(0.1 * dl(i, j), dl(i, j));
    return r;
}

/** Count convention: every zero becomes one; all other cells untouched. */
inline ImputationResult add_one(const Matrix& x) {
    validate_zero_bearing(x, "add_one");
    ImputationResult r;
    r.values = x;
    for (Eigen::Index i = 0; i < x.rows(); ++i)
        for (Eigen::Index j = 0; j < x.cols(); ++j)
            if (x(i, j) == 0.0) r.values(i, j) = 1.0;
    return r;
}

// ---------------------------------------------------------------------------
// Registry
// ---------------------------------------------------------------------------

// Stable method identifiers used by the CLI, configs, and result tables.
inline const std::vector<std::string>& method_names() {
    static const std::vector<std::string> names = {
        "mult_repl", "mult_lognorm", "mult_KMSS", "lr_em", "lr_da",
        "lr_SVD",    "GBM",          "PLS",       "dl_unif", "add1"};
    return names;
}

struct MethodParams {
    double fraction = 0.65;
    bool lognorm_random = false;
    int km_draws = 1000;
    LogratioEmOptions em;
    LogratioDaOptions da;
    LogratioSvdOptions svd;
    PlsEmOptions pls;
    DirichletPrior prior = DirichletPrior::bayes_laplace();
    double time_limit_s = 0;  // propagated to the iterative methods
};

/**
 * Run one method by its stable identifier.  `seed` feeds the stochastic
 * methods; deterministic methods ignore it.
 */
inline ImputationResult run_method(const std::string& name, const Matrix& x,
                                   const DetectionLimits& dl, std::uint64_t seed,
                                   MethodParams params = {}) {
    Rng rng(seed);
    params.em.time_limit_s = params.em.time_limit_s > 0 ? params.em.time_limit_s : params.time_limit_s;
    params.da.time_limit_s = params.da.time_limit_s > 0 ? params.da.time_limit_s : params.time_limit_s;
    params.svd.time_limit_s =
        params.svd.time_limit_s > 0 ? params.svd.time_limit_s : params.time_limit_s;
    params.pls.time_limit_s =
        params.pls.time_limit_s > 0 ? params.pls.time_limit_s : params.time_limit_s;
    if (name == "mult_repl") return multiplicative_replacement(x, dl, params.fraction);
    if (name == "mult_lognorm")
        return multiplicative_lognormal(x, dl, rng, params.lognorm_random, params.fraction);
    if (name == "mult_KMSS") return multiplicative_km(x, dl, rng, params.km_draws);
    if (name == "lr_em") return logratio_em(x, dl, params.em);
    if (name == "lr_da") return logratio_da(x, dl, rng, params.da);
    if (name == "lr_SVD") return logratio_svd(x, dl, params.svd);
    if (name == "GBM") return bayes_multiplicative(x, params.prior);
    if (name == "PLS") return pls_em(x, dl, params.pls);
    if (name == "dl_unif") return detection_limit_uniform(x, dl, rng);
    if (name == "add1") return add_one(x);
    throw std::invalid_argument("run_method: unknown method '" + name + "'");
}

}  // namespace coda
