#pragma once

#include "fgb/common.hpp"

#include <span>
#include <vector>

namespace fgb {

/**
 * Clamped knot sequence of a B-spline space.
 *
 * Holds K + d + 1 knots with d + 1 copies of 0 at the start and d + 1
 * copies of 1 at the end. Interior knots are strictly increasing.
 */
class KnotVector {
public:
    KnotVector(std::vector<double> knots, int degree);

    const std::vector<double>& knots() const noexcept { return knots_; }
    int degree() const noexcept { return degree_; }
    int order() const noexcept { return degree_ + 1; }
    int num_basis() const noexcept {
        return static_cast<int>(knots_.size()) - degree_ - 1;
    }
    double operator[](std::size_t i) const { return knots_[i]; }

    /// Ratio of the largest to the smallest span t_{k+q} - t_k over all bases.
    double span_ratio() const;

private:
    std::vector<double> knots_;
    int degree_;
};

/// Equally spaced clamped knots for `num_basis` B-splines of order `order`.
KnotVector make_knots(int num_basis, int order);

/// Values phi_k(t) for all k at a single point t in [0, 1].
/// The last non-degenerate span is closed at t = 1.
Vector eval_basis_at(const KnotVector& knots, double t);

/// First and last basis index (inclusive) that are structurally non-zero.
struct SupportRange {
    int first = 0;
    int last = -1;
    int size() const noexcept { return last - first + 1; }
    bool contains(int k) const noexcept { return k >= first && k <= last; }
};

/// B-spline basis evaluated on a time grid.
struct BasisSystem {
    KnotVector knots;
    Vector grid;         // t_1..t_T
    Matrix values;       // K x T, values(k, m) = phi_k(t_m)
    BoolMatrix support;  // K x T, values(k, m) != 0
    std::vector<SupportRange> column_support;  // per time point

    int num_basis() const noexcept { return static_cast<int>(values.rows()); }
    int num_times() const noexcept { return static_cast<int>(values.cols()); }
};

BasisSystem eval_basis(const KnotVector& knots, const Vector& grid);

/// Indicator 1{B_k^{(m)} != 0} for the time index m (0-based).
std::vector<bool> support_indicator(const BasisSystem& bs, Index m);

/// Equally spaced grid t_m = m / (T - 1), m = 0..T-1.
Vector uniform_grid(int num_times);

}  // namespace fgb
