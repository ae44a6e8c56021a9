#pragma once

// Shared types for zero-replacement methods: detection limits, masks,
// outcome status, and diagnostics.
//
// Every method receives a nonnegative matrix whose zeros are the cells to
// replace, plus detection limits that are strictly positive on those cells.
// Methods never modify observed cells except through the documented
// row-level multiplicative adjustment; degenerate arithmetic is reported,
// never clamped away.

#include <coda/geometry.hpp>

#include <Eigen/Dense>

#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

namespace coda {

using Mask = Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic>;

inline Mask zero_mask(const Matrix& x) { return x.array() == 0.0; }

// Detection limits, either one value per column broadcast over rows or a
// full per-cell matrix.
class DetectionLimits {
  public:
    static DetectionLimits per_column(const Eigen::RowVectorXd& row) {
        DetectionLimits d;
        d.row_ = row;
        d.per_column_ = true;
        return d;
    }
    static DetectionLimits per_cell(const Matrix& m) {
        DetectionLimits d;
        d.cell_ = m;
        d.per_column_ = false;
        return d;
    }

    double operator()(Eigen::Index i, Eigen::Index j) const {
        return per_column_ ? row_[j] : cell_(i, j);
    }

    Eigen::Index cols() const { return per_column_ ? row_.size() : cell_.cols(); }

    void validate_for(const Matrix& x, const Mask& mask) const {
        if (cols() != x.cols())
            throw std::invalid_argument("detection limits: column count mismatch");
        if (!per_column_ && cell_.rows() != x.rows())
            throw std::invalid_argument("detection limits: row count mismatch");
        for (Eigen::Index i = 0; i < x.rows(); ++i)
            for (Eigen::Index j = 0; j < x.cols(); ++j)
                if (mask(i, j) && !((*this)(i, j) > 0.0 && std::isfinite((*this)(i, j))))
                    throw std::invalid_argument("detection limits: not strictly positive at masked cell (" +
                                                std::to_string(i) + "," + std::to_string(j) + ")");
    }

  private:
    Eigen::RowVectorXd row_;
    Matrix cell_;
    bool per_column_ = true;
};

enum class ImputeStatus { ok, degenerate, failed };

inline const char* to_string(ImputeStatus s) {
    switch (s) {
        case ImputeStatus::ok: return "ok";
        case ImputeStatus::degenerate: return "degenerate";
        case ImputeStatus::failed: return "failed";
    }
    return "?";
}

struct ImputeDiagnostics {
    std::string variant = "raw";
    std::vector<int> negative_rows;    // rows whose multiplicative factor was <= 0
    std::vector<std::string> notes;    // per-column fallbacks and similar events
    std::vector<int> pls_components;   // chosen latent dimensions per column (-1 = n/a)
    int iterations = 0;
    bool saturation = false;           // any truncated-normal tail saturation
};

struct ImputationResult {
    Matrix values;
    ImputeStatus status = ImputeStatus::ok;
    std::string reason;  // non-empty when status != ok
    ImputeDiagnostics diag;
};

inline void validate_zero_bearing(const Matrix& x, const char* who) {
    if (x.rows() == 0 || x.cols() < 2)
        throw std::invalid_argument(std::string(who) + ": need a nonempty matrix with >= 2 columns");
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
        bool any_positive = false;
        for (Eigen::Index j = 0; j < x.cols(); ++j) {
            const double v = x(i, j);
            if (!(v >= 0.0) || !std::isfinite(v))
                throw std::invalid_argument(std::string(who) + ": entry (" + std::to_string(i) + "," +
                                            std::to_string(j) + ") is negative or not finite");
            any_positive = any_positive || v > 0.0;
        }
        if (!any_positive)
            throw std::invalid_argument(std::string(who) + ": row " + std::to_string(i) +
                                        " has no positive entries");
    }
}

/**
 * Replace every value by its ceiling, simulating an integer read-out of the
 * imputed matrix.  Integer cells are unchanged; status and flags carry over,
 * and the variant tag becomes "ceil".
 */
inline ImputationResult apply_ceiling(ImputationResult r) {
    r.values = r.values.array().ceil().matrix();
    r.diag.variant = "ceil";
    return r;
}

}  // namespace coda
