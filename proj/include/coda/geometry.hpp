#pragma once

// Log-ratio geometry for strictly positive compositions.
//
// A composition lives on the simplex up to scale: multiplying a row by a
// positive constant never changes any quantity computed here.  Rows of a
// matrix are samples, columns are parts.

#include <Eigen/Dense>

#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

namespace coda {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

inline void require_positive(const Matrix& x, const char* who) {
    if (x.rows() == 0 || x.cols() == 0)
        throw std::invalid_argument(std::string(who) + ": empty matrix");
    for (Eigen::Index i = 0; i < x.rows(); ++i)
        for (Eigen::Index j = 0; j < x.cols(); ++j)
            if (!(x(i, j) > 0.0) || !std::isfinite(x(i, j)))
                throw std::invalid_argument(std::string(who) + ": entry (" + std::to_string(i) +
                                            "," + std::to_string(j) +
                                            ") is not strictly positive and finite");
}

// Rescale each row to the given total.
inline Matrix closure(const Matrix& x, double total = 1.0) {
    require_positive(x, "closure");
    Matrix out = x;
    for (Eigen::Index i = 0; i < x.rows(); ++i) out.row(i) *= total / x.row(i).sum();
    return out;
}

inline Vector closure(const Vector& x, double total = 1.0) {
    Matrix m = x.transpose();
    return closure(m, total).row(0).transpose();
}

/**
 * Centered log-ratio transform: ln of each part over the row's geometric
 * mean.  Output rows sum to zero.
 */
inline Matrix clr(const Matrix& x) {
    require_positive(x, "clr");
    Matrix logx = x.array().log().matrix();
    Vector rowmean = logx.rowwise().mean();
    return logx.colwise() - rowmean;
}

inline Matrix clr_inverse(const Matrix& y) {
    Matrix x = y.array().exp().matrix();
    return closure(x);
}

/**
 * Additive log-ratio transform against one reference part: column j of the
 * output is ln(x_j / x_ref) with the reference column dropped.
 */
inline Matrix alr(const Matrix& x, int ref) {
    require_positive(x, "alr");
    const Eigen::Index d = x.cols();
    if (d < 2) throw std::invalid_argument("alr: need at least two parts");
    if (ref < 0 || ref >= d) throw std::invalid_argument("alr: reference out of range");
    Matrix out(x.rows(), d - 1);
    Eigen::Index c = 0;
    for (Eigen::Index j = 0; j < d; ++j) {
        if (j == ref) continue;
        out.col(c++) = (x.col(j).array() / x.col(ref).array()).log().matrix();
    }
    return out;
}

inline Matrix alr_inverse(const Matrix& z, int ref) {
    const Eigen::Index d = z.cols() + 1;
    if (ref < 0 || ref >= d) throw std::invalid_argument("alr_inverse: reference out of range");
    Matrix x(z.rows(), d);
    Eigen::Index c = 0;
    for (Eigen::Index j = 0; j < d; ++j) {
        if (j == ref)
            x.col(j).setOnes();
        else
            x.col(j) = z.col(c++).array().exp().matrix();
    }
    return closure(x);
}

/**
 * Orthonormal balance basis with sequential pivots: column i contrasts part
 * i against the geometric mean of parts i+1..D.  Satisfies H' H = I and
 * every column sums to zero, so z = clr(x) * H is an isometry.
 */
inline Matrix pivot_contrast_matrix(int d) {
    if (d < 2) throw std::invalid_argument("pivot_contrast_matrix: need at least two parts");
    Matrix h = Matrix::Zero(d, d - 1);
    for (int i = 0; i < d - 1; ++i) {
        const double r = static_cast<double>(d - 1 - i);  // parts after the pivot
        h(i, i) = std::sqrt(r / (r + 1.0));
        for (int j = i + 1; j < d; ++j) h(j, i) = -1.0 / std::sqrt(r * (r + 1.0));
    }
    return h;
}

// Row order that moves `pivot` to the front, keeping the rest in place.
inline std::vector<int> pivot_order(int d, int pivot) {
    if (pivot < 0 || pivot >= d) throw std::invalid_argument("pivot_order: pivot out of range");
    std::vector<int> order;
    order.reserve(d);
    order.push_back(pivot);
    for (int j = 0; j < d; ++j)
        if (j != pivot) order.push_back(j);
    return order;
}

/**
 * Isometric log-ratio transform in pivot coordinates.  The chosen part is
 * permuted to the front, then projected onto the sequential balance basis;
 * coordinate 0 carries that part against the geometric mean of all others.
 */
inline Matrix ilr(const Matrix& x, int pivot = 0) {
    require_positive(x, "ilr");
    const int d = static_cast<int>(x.cols());
    if (d < 2) throw std::invalid_argument("ilr: need at least two parts");
    const std::vector<int> order = pivot_order(d, pivot);
    Matrix xp(x.rows(), d);
    for (int j = 0; j < d; ++j) xp.col(j) = x.col(order[j]);
    return clr(xp) * pivot_contrast_matrix(d);
}

inline Matrix ilr_inverse(const Matrix& z, int pivot = 0) {
    const int d = static_cast<int>(z.cols()) + 1;
    const std::vector<int> order = pivot_order(d, pivot);
    Matrix xp = clr_inverse(z * pivot_contrast_matrix(d).transpose());
    Matrix x(z.rows(), d);
    for (int j = 0; j < d; ++j) x.col(order[j]) = xp.col(j);
    return x;
}

enum class LogRatioKind { alr, clr, ilr };

// Coordinate matrix plus enough basis metadata to invert it.
struct LogRatioCoordinates {
    Matrix values;
    LogRatioKind kind = LogRatioKind::ilr;
    int parts = 0;      // D of the source composition
    int reference = 0;  // alr only
    int pivot = 0;      // ilr only
};

inline LogRatioCoordinates to_coordinates(const Matrix& x, LogRatioKind kind, int ref_or_pivot = 0) {
    LogRatioCoordinates c;
    c.kind = kind;
    c.parts = static_cast<int>(x.cols());
    switch (kind) {
        case LogRatioKind::alr:
            c.reference = ref_or_pivot;
            c.values = alr(x, ref_or_pivot);
            break;
        case LogRatioKind::clr:
            c.values = clr(x);
            break;
        case LogRatioKind::ilr:
            c.pivot = ref_or_pivot;
            c.values = ilr(x, ref_or_pivot);
            break;
    }
    return c;
}

inline Matrix from_coordinates(const LogRatioCoordinates& c) {
    switch (c.kind) {
        case LogRatioKind::alr: return alr_inverse(c.values, c.reference);
        case LogRatioKind::clr: return clr_inverse(c.values);
        case LogRatioKind::ilr: return ilr_inverse(c.values, c.pivot);
    }
    throw std::logic_error("from_coordinates: unknown kind");
}

/**
 * Aitchison distance between two compositions: the Euclidean norm of the
 * difference of their centered log-ratio vectors, equal to the root mean
 * pairwise log-ratio discrepancy with a 1/(2D) normalization.
 */
inline double aitchison_distance(const Vector& x, const Vector& y) {
    if (x.size() != y.size()) throw std::invalid_argument("aitchison_distance: size mismatch");
    if (x.size() < 2) throw std::invalid_argument("aitchison_distance: need at least two parts");
    Vector a(x.size());
    for (Eigen::Index j = 0; j < x.size(); ++j) {
        if (!(x[j] > 0.0) || !(y[j] > 0.0))
            throw std::invalid_argument("aitchison_distance: nonpositive part");
        a[j] = std::log(x[j]) - std::log(y[j]);
    }
    const double mean = a.mean();
    return std::sqrt((a.array() - mean).square().sum());
}

/**
 * Pairwise log-ratio variance matrix: entry (j,k) is the sample variance
 * (n-1 denominator) of ln(column j / column k) over rows.  Symmetric, zero
 * diagonal.
 */
inline Matrix variation_matrix(const Matrix& x) {
    require_positive(x, "variation_matrix");
    const Eigen::Index n = x.rows(), d = x.cols();
    if (n < 2) throw std::invalid_argument("variation_matrix: need at least two rows");
    Matrix logx = x.array().log().matrix();
    Matrix t = Matrix::Zero(d, d);
    for (Eigen::Index j = 0; j < d; ++j) {
        for (Eigen::Index k = j + 1; k < d; ++k) {
            Vector r = logx.col(j) - logx.col(k);
            const double mean = r.mean();
            const double v = (r.array() - mean).square().sum() / static_cast<double>(n - 1);
            t(j, k) = v;
            t(k, j) = v;
        }
    }
    return t;
}

}  // namespace coda
