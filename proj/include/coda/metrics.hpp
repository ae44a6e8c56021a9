#pragma once

// Distortion metrics for imputed compositions (covariance-structure and
// compositional-error deviation), plus the per-run record type, its CSV
// serialization, and failure-rate accounting across runs.

#include <coda/geometry.hpp>
#include <coda/imputation.hpp>

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <tuple>
#include <vector>

namespace coda {

/**
 * Average difference in covariance structure: (1/(D-1)) * ||S - S'||_F
 * where S and S' are the (n-1)-denominator covariance matrices of the ILR
 * coordinates of the two inputs, taken in the library's fixed pivot basis.
 * The Frobenius norm makes the value independent of which orthonormal
 * log-ratio basis is used.
 */
inline double adcs(const Matrix& original, const Matrix& imputed) {
    if (original.rows() != imputed.rows() || original.cols() != imputed.cols())
        throw std::invalid_argument("adcs: shape mismatch");
    if (original.rows() < 2) throw std::invalid_argument("adcs: need at least two rows");
    const auto cov = [](const Matrix& x) {
        const Matrix z = ilr(x);
        const Matrix c = z.rowwise() - z.colwise().mean();
        return Matrix((c.transpose() * c) / static_cast<double>(z.rows() - 1));
    };
    return (cov(original) - cov(imputed)).norm() / static_cast<double>(original.cols() - 1);
}

/**
 * Compositional error deviation: the mean, over masked rows, of the
 * Aitchison distance between truth and imputation, each normalized by the
 * largest pairwise Aitchison distance among the fully observed rows.
 */
inline double ced(const Matrix& original, const Matrix& imputed, const Mask& mask) {
    if (original.rows() != imputed.rows() || original.cols() != imputed.cols())
        throw std::invalid_argument("ced: shape mismatch");
    if (mask.rows() != original.rows() || mask.cols() != original.cols())
        throw std::invalid_argument("ced: mask shape mismatch");
    std::vector<Eigen::Index> masked, observed;
    for (Eigen::Index i = 0; i < original.rows(); ++i)
        (mask.row(i).any() ? masked : observed).push_back(i);
    if (masked.empty()) throw std::invalid_argument("ced: no masked rows");
    if (observed.size() < 2)
        throw std::invalid_argument("ced: need at least two fully observed rows");

    double denom = 0.0;
    for (std::size_t a = 0; a + 1 < observed.size(); ++a)
        for (std::size_t b = a + 1; b < observed.size(); ++b)
            denom = std::max(denom, aitchison_distance(original.row(observed[a]).transpose(),
                                                       original.row(observed[b]).transpose()));
    // Proportional rows leave only roundoff (~1e-16) in the log-ratio
    // differences; any meaningful spread is orders of magnitude larger.
    if (denom < 1e-12)
        throw std::domain_error("ced: fully observed rows are all proportional");

    double total = 0.0;
    for (Eigen::Index i : masked)
        total += aitchison_distance(original.row(i).transpose(), imputed.row(i).transpose());
    return total / static_cast<double>(masked.size()) / denom;
}

// ---------------------------------------------------------------------------
// Run records and accounting
// ---------------------------------------------------------------------------

struct MetricRecord {
    std::string method;
    std::string variant = "raw";
    int m = 0;       // number of parts
    double p = 0.0;  // zero-insertion quantile level
    int rep = 0;
    ImputeStatus status = ImputeStatus::ok;
    double ced = std::numeric_limits<double>::quiet_NaN();   // present iff ok
    double adcs = std::numeric_limits<double>::quiet_NaN();  // present iff ok
    double runtime_s = 0.0;
    int neg_rows = 0;
};

// Shortest decimal representation that parses back to the same double, so
// result files are byte-stable across writers.
inline std::string format_double(double v) {
    if (std::isnan(v)) return "nan";
    for (int prec = 1; prec <= 17; ++prec) {
        std::ostringstream os;
        os.precision(prec);
        os << v;
        if (std::stod(os.str()) == v) return os.str();
    }
    return std::to_string(v);
}

inline const char* metric_csv_header() {
    return "method,variant,m,p,rep,status,ced,adcs,runtime_s,neg_rows";
}

inline std::string to_csv_line(const MetricRecord& r) {
    const bool ok = r.status == ImputeStatus::ok;
    std::string line = r.method + ',' + r.variant + ',' + std::to_string(r.m) + ',' +
                       format_double(r.p) + ',' + std::to_string(r.rep) + ',' +
                       to_string(r.status) + ',';
    line += ok ? format_double(r.ced) : "";
    line += ',';
    line += ok ? format_double(r.adcs) : "";
    line += ',' + format_double(r.runtime_s) + ',' + std::to_string(r.neg_rows);
    return line;
}

struct FailureSummary {
    std::string method;
    std::string variant;
    int m = 0;
    double p = 0.0;
    int n_records = 0;
    int n_ok = 0;
    int n_failed = 0;
    int n_degenerate = 0;
    int n_negative_rows = 0;  // records with at least one negative row
    double failure_rate = 0.0;
    double degenerate_rate = 0.0;
    double mean_runtime_ok = std::numeric_limits<double>::quiet_NaN();
};

/**
 * Per (method, variant, m, p): failure and degenerate rates, negative-row
 * incidence, and mean runtime over ok runs.  The summary is independent of
 * the input order.
 */
inline std::vector<FailureSummary> failure_accounting(const std::vector<MetricRecord>& records) {
    using Key = std::tuple<std::string, std::string, int, double>;
    std::map<Key, FailureSummary> groups;
    std::map<Key, double> runtime_totals;
    for (const auto& r : records) {
        const Key key{r.method, r.variant, r.m, r.p};
        auto& g = groups[key];
        if (g.n_records == 0) {
            g.method = r.method;
            g.variant = r.variant;
            g.m = r.m;
            g.p = r.p;
        }
        ++g.n_records;
        switch (r.status) {
            case ImputeStatus::ok:
                ++g.n_ok;
                runtime_totals[key] += r.runtime_s;
                break;
            case ImputeStatus::failed: ++g.n_failed; break;
            case ImputeStatus::degenerate: ++g.n_degenerate; break;
        }
        if (r.neg_rows > 0) ++g.n_negative_rows;
    }
    std::vector<FailureSummary> out;
    out.reserve(groups.size());
    for (auto& [key, g] : groups) {
        g.failure_rate = static_cast<double>(g.n_failed) / g.n_records;
        g.degenerate_rate = static_cast<double>(g.n_degenerate) / g.n_records;
        if (g.n_ok > 0) g.mean_runtime_ok = runtime_totals[key] / g.n_ok;
        out.push_back(std::move(g));
    }
    return out;
}

}  // namespace coda
