#pragma once

// Count-data experiment machinery: quantile-threshold zero insertion,
// Dirichlet-multinomial simulation, ceiling quantization at global scales,
// the log-ratio shift experiment, and the zero-free dataset generator.

#include <coda/geometry.hpp>
#include <coda/imputation.hpp>
#include <coda/rng.hpp>

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace coda {

// Empirical quantile with linear interpolation between order statistics
// (h = (n-1)p): the convention used everywhere in this library.
inline double quantile_linear(std::vector<double> v, double p) {
    if (v.empty()) throw std::invalid_argument("quantile_linear: empty sample");
    if (!(p >= 0.0 && p <= 1.0)) throw std::invalid_argument("quantile_linear: p outside [0,1]");
    std::sort(v.begin(), v.end());
    const double h = static_cast<double>(v.size() - 1) * p;
    const auto lo = static_cast<std::size_t>(std::floor(h));
    if (lo + 1 >= v.size()) return v.back();
    return v[lo] + (h - static_cast<double>(lo)) * (v[lo + 1] - v[lo]);
}

// ---------------------------------------------------------------------------
// Zero insertion
// ---------------------------------------------------------------------------

struct ZeroInsertionPlan {
    double quantile_p = 0.0;
    std::vector<int> target_columns;  // resolved, ascending
    Mask realized_mask;
    DetectionLimits realized_dl;      // per-column thresholds
    double realized_zero_rate = 0.0;  // zero cells / total cells in the output
};

struct ZeroInsertion {
    Matrix counts;
    ZeroInsertionPlan plan;
};

/**
 * Insert zeros into the listed columns of a zero-free matrix: each targeted
 * column's cells strictly below its empirical p-quantile become zero.  The
 * plan records the per-column thresholds as detection limits, the realized
 * mask, and the realized zero rate (which differs from p under ties).
 */
inline ZeroInsertion insert_zeros(const Matrix& counts, double p, const std::vector<int>& columns) {
    require_positive(counts, "insert_zeros");
    if (!(p > 0.0 && p < 1.0)) throw std::invalid_argument("insert_zeros: p must lie in (0,1)");
    if (columns.empty()) throw std::invalid_argument("insert_zeros: no target columns");
    const Eigen::Index n = counts.rows(), d = counts.cols();
    std::vector<int> targets = columns;
    std::sort(targets.begin(), targets.end());
    targets.erase(std::unique(targets.begin(), targets.end()), targets.end());
    if (targets.front() < 0 || targets.back() >= d)
        throw std::invalid_argument("insert_zeros: target column out of range");

    Eigen::RowVectorXd thresholds(d);
    for (Eigen::Index j = 0; j < d; ++j) {
        std::vector<double> col(counts.col(j).data(), counts.col(j).data() + n);
        thresholds[j] = quantile_linear(std::move(col), p);
    }

    ZeroInsertion out;
    out.counts = counts;
    out.plan.quantile_p = p;
    out.plan.target_columns = targets;
    out.plan.realized_mask = Mask::Constant(n, d, false);
    long zeros = 0;
    for (int j : targets)
        for (Eigen::Index i = 0; i < n; ++i)
            if (counts(i, j) < thresholds[j]) {
                out.counts(i, j) = 0.0;
                out.plan.realized_mask(i, j) = true;
                ++zeros;
            }
    out.plan.realized_dl = DetectionLimits::per_column(thresholds);
    out.plan.realized_zero_rate =
        static_cast<double>(zeros) / static_cast<double>(n) / static_cast<double>(d);
    return out;
}

/** Zero insertion into every second column (1-based even indices 2,4,6,...). */
inline ZeroInsertion insert_zeros_every_second(const Matrix& counts, double p) {
    std::vector<int> cols;
    for (Eigen::Index j = 1; j < counts.cols(); j += 2) cols.push_back(static_cast<int>(j));
    return insert_zeros(counts, p, cols);
}

// ---------------------------------------------------------------------------
// Dirichlet-multinomial simulation
// ---------------------------------------------------------------------------

struct DMSpec {
    std::vector<double> alpha;
    long depth = 0;
    int n = 0;
};

inline void validate(const DMSpec& s) {
    if (s.alpha.size() < 2) throw std::invalid_argument("DMSpec: need at least two parts");
    for (double a : s.alpha)
        if (!(a > 0.0) || !std::isfinite(a))
            throw std::invalid_argument("DMSpec: alpha entries must be positive");
    if (s.depth < 1) throw std::invalid_argument("DMSpec: depth must be >= 1");
    if (s.n < 1) throw std::invalid_argument("DMSpec: need at least one sample");
}

/** Each row ~ Multinomial(depth, q) with q ~ Dirichlet(alpha); exact row sums. */
inline Matrix simulate_dm(const DMSpec& spec, Rng& rng) {
    validate(spec);
    const auto d = static_cast<Eigen::Index>(spec.alpha.size());
    Matrix x(spec.n, d);
    for (int i = 0; i < spec.n; ++i) {
        const std::vector<double> q = rng.dirichlet(spec.alpha);
        const std::vector<long> row = rng.multinomial(spec.depth, q);
        for (Eigen::Index j = 0; j < d; ++j) x(i, j) = static_cast<double>(row[static_cast<std::size_t>(j)]);
    }
    return x;
}

// ---------------------------------------------------------------------------
// Ceiling quantization
// ---------------------------------------------------------------------------

/** Global rescale with ceiling quantization: cell -> ceil(scale * cell). */
inline Matrix quantize_scale(const Matrix& counts, double scale) {
    if (!(scale > 0.0) || !std::isfinite(scale))
        throw std::invalid_argument("quantize_scale: scale must be positive");
    return (counts * scale).array().ceil().matrix();
}

// ---------------------------------------------------------------------------
// Log-ratio shift experiment
// ---------------------------------------------------------------------------

struct ScaleSummary {
    double scale = 0.0;
    double mean_lr = 0.0;  // log10 of ratio of column means over kept rows
    int n_kept = 0;
    int n_dropped = 0;
};

struct ShiftRow {
    double scale = 0.0;
    int sample = 0;
    double lr_shift = 0.0;  // log10(x1/x2) at this scale minus at the raw counts
};

struct ShiftExperiment {
    Matrix raw;  // the simulated counts the scales were applied to
    std::vector<ScaleSummary> per_scale;
    std::vector<ShiftRow> shifts;
};

/**
 * Simulate one Dirichlet-multinomial dataset, quantize it at each scale, and
 * report the mean log-ratio log10(mean(x1)/mean(x2)) per scale plus each
 * kept sample's log-ratio shift against the unscaled counts.  Rows whose
 * first or second part is zero at a scale are dropped from that scale's
 * summary and counted.
 */
inline ShiftExperiment logratio_shift_experiment(const DMSpec& spec,
                                                 const std::vector<double>& scales, Rng& rng) {
    validate(spec);
    if (scales.empty()) throw std::invalid_argument("logratio_shift_experiment: no scales");
    for (double s : scales)
        if (!(s > 0.0 && s <= 1.0))
            throw std::invalid_argument("logratio_shift_experiment: scales must lie in (0,1]");
    ShiftExperiment out;
    out.raw = simulate_dm(spec, rng);
    const Eigen::Index n = out.raw.rows();
    for (double s : scales) {
        const Matrix q = quantize_scale(out.raw, s);
        ScaleSummary sum;
        sum.scale = s;
        double t1 = 0.0, t2 = 0.0;
        for (Eigen::Index i = 0; i < n; ++i) {
            if (q(i, 0) <= 0.0 || q(i, 1) <= 0.0) {
                ++sum.n_dropped;
                continue;
            }
            ++sum.n_kept;
            t1 += q(i, 0);
            t2 += q(i, 1);
            // Raw parts are positive whenever the quantized parts are.
            ShiftRow row;
            row.scale = s;
            row.sample = static_cast<int>(i);
            row.lr_shift =
                std::log10(q(i, 0) / q(i, 1)) - std::log10(out.raw(i, 0) / out.raw(i, 1));
            out.shifts.push_back(row);
        }
        if (sum.n_kept > 0) sum.mean_lr = std::log10(t1 / t2);
        out.per_scale.push_back(sum);
    }
    return out;
}

// ---------------------------------------------------------------------------
// Zero-free dataset generator
// ---------------------------------------------------------------------------

struct ZeroFreeResult {
    Matrix counts;
    long long depth_used = 0;
    int retries = 0;  // times the depth was doubled
};

/**
 * Produce a strictly positive count matrix shaped like the input: per row,
 * draw a composition from Dirichlet(counts + 1/2) and scale it to a fixed
 * depth with half-up rounding.  If any cell rounds to zero the depth is
 * doubled (same drawn compositions) and rounding retried, up to ten
 * doublings; row sums match the final depth within half a cell per column.
 */
inline ZeroFreeResult make_zero_free(const Matrix& counts, long long depth_full, Rng& rng) {
    if (counts.rows() == 0 || counts.cols() < 2)
        throw std::invalid_argument("make_zero_free: need a nonempty matrix with >= 2 columns");
    if ((counts.array() < 0.0).any() || !counts.array().isFinite().all())
        throw std::invalid_argument("make_zero_free: counts must be nonnegative and finite");
    if (depth_full < 1) throw std::invalid_argument("make_zero_free: depth must be >= 1");
    const Eigen::Index n = counts.rows(), d = counts.cols();

    Matrix p(n, d);
    std::vector<double> alpha(static_cast<std::size_t>(d));
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = 0; j < d; ++j) alpha[static_cast<std::size_t>(j)] = counts(i, j) + 0.5;
        const std::vector<double> q = rng.dirichlet(alpha);
        for (Eigen::Index j = 0; j < d; ++j) p(i, j) = q[static_cast<std::size_t>(j)];
    }

    ZeroFreeResult out;
    long long depth = depth_full;
    for (int attempt = 0;; ++attempt) {
        out.counts = (p.array() * static_cast<double>(depth) + 0.5).floor().matrix();
        if ((out.counts.array() > 0.0).all()) {
            out.depth_used = depth;
            out.retries = attempt;
            return out;
        }
        if (attempt == 10)
            throw std::runtime_error(
                "make_zero_free: zeros persist after ten depth doublings (depth " +
                std::to_string(depth) + ")");
        depth *= 2;
    }
}

}  // namespace coda
