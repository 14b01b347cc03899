#pragma once

#include "fgb/basis.hpp"
#include "fgb/common.hpp"

#include <vector>

namespace fgb {

/// Grid index range [begin, end) of one experimental phase.
struct Phase {
    Index begin = 0;
    Index end = 0;
    Index size() const noexcept { return end - begin; }
};

/// Phases starting at the given grid points. `starts` holds the start time
/// of every phase after the first; each value must coincide with a grid point.
std::vector<Phase> phases_from_starts(const Vector& grid, const std::vector<double>& starts);

/// Phases covering [0, b1), [b1, b2), ..., [b_last, 1]; a boundary that is not a
/// grid point starts its phase at the first grid point at or after it.
std::vector<Phase> phases_from_boundaries(const Vector& grid, const std::vector<double>& boundaries);

/// Discretized function-on-scalar data: Y = X gamma B + X R + theta + E.
class FunctionalDataset {
public:
    FunctionalDataset(Matrix Y, Matrix X, Vector grid, std::vector<Phase> phases);

    const Matrix& Y() const noexcept { return Y_; }
    const Matrix& X() const noexcept { return X_; }
    const Vector& grid() const noexcept { return grid_; }
    const std::vector<Phase>& phases() const noexcept { return phases_; }

    Index n() const noexcept { return Y_.rows(); }
    Index T() const noexcept { return Y_.cols(); }
    Index p() const noexcept { return X_.cols(); }

    /// Phase index owning grid point m.
    std::size_t phase_of(Index m) const;

    /// Copy with a leading column of ones in X.
    FunctionalDataset with_intercept() const;

private:
    Matrix Y_;
    Matrix X_;
    Vector grid_;
    std::vector<Phase> phases_;
};

/// X gamma B.
Matrix predict(const Matrix& X, const Matrix& gamma, const BasisSystem& basis);

struct CoefficientCurves {
    Matrix values;     // p x T', beta_j(t) = gamma_j^T phi(t)
    BoolMatrix zero;   // p x T', group l1 norm of the supporting coefficients is 0
};

/// Coefficient functions on an arbitrary evaluation grid. Points whose
/// supporting coefficients are all zero are exactly 0 and flagged.
CoefficientCurves coefficient_functions(const Matrix& gamma, const KnotVector& knots,
                                        const Vector& eval_grid);

/// Same, reusing an already evaluated basis.
CoefficientCurves coefficient_functions(const Matrix& gamma, const BasisSystem& basis);

}  // namespace fgb
