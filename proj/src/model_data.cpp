#include "fgb/model_data.hpp"

#include <cmath>
#include <sstream>

namespace fgb {

namespace {

void check_finite(const Matrix& m, const char* name) {
    for (Index j = 0; j < m.cols(); ++j) {
        for (Index i = 0; i < m.rows(); ++i) {
            if (!std::isfinite(m(i, j))) {
                std::ostringstream os;
                os << name << " has a non-finite entry at (" << i << ", " << j << ")";
                throw Error(ErrorKind::invalid_input, os.str());
            }
        }
    }
}

std::vector<Phase> phases_from_indices(Index T, const std::vector<Index>& starts) {
    std::vector<Phase> out;
    Index begin = 0;
    for (Index s : starts) {
        out.push_back({begin, s});
        begin = s;
    }
    out.push_back({begin, T});
    return out;
}

}  // namespace

std::vector<Phase> phases_from_starts(const Vector& grid, const std::vector<double>& starts) {
    std::vector<Index> idx;
    for (double s : starts) {
        Index found = -1;
        for (Index m = 0; m < grid.size(); ++m) {
            if (std::abs(grid[m] - s) <= 1e-12) {
                found = m;
                break;
            }
        }
        if (found < 0) {
            std::ostringstream os;
            os.precision(17);
            os << "phase boundary " << s << " is not a grid point";
            throw Error(ErrorKind::invalid_input, os.str());
        }
        if (found == 0 || (!idx.empty() && found <= idx.back())) {
            std::ostringstream os;
            os.precision(17);
            os << "phase boundary " << s << " would create an empty phase";
            throw Error(ErrorKind::invalid_input, os.str());
        }
        idx.push_back(found);
    }
    return phases_from_indices(grid.size(), idx);
}

std::vector<Phase> phases_from_boundaries(const Vector& grid,
                                          const std::vector<double>& boundaries) {
    std::vector<Index> idx;
    for (double b : boundaries) {
        Index m = 0;
        while (m < grid.size() && grid[m] < b) ++m;
        if (m == 0 || m >= grid.size() || (!idx.empty() && m <= idx.back())) {
            std::ostringstream os;
            os << "phase boundary " << b << " leaves an empty phase";
            throw Error(ErrorKind::invalid_input, os.str());
        }
        idx.push_back(m);
    }
    return phases_from_indices(grid.size(), idx);
}

FunctionalDataset::FunctionalDataset(Matrix Y, Matrix X, Vector grid, std::vector<Phase> phases)
    : Y_(std::move(Y)), X_(std::move(X)), grid_(std::move(grid)), phases_(std::move(phases)) {
    require(Y_.rows() >= 2, ErrorKind::invalid_input, "need at least two subjects");
    require(Y_.cols() >= 2, ErrorKind::invalid_input, "need at least two time points");
    require(X_.cols() >= 1, ErrorKind::invalid_input, "design matrix has no columns");
    if (X_.rows() != Y_.rows()) {
        throw Error(ErrorKind::dimension_mismatch,
                    "X is " + shape(X_) + " but Y is " + shape(Y_));
    }
    if (grid_.size() != Y_.cols()) {
        throw Error(ErrorKind::dimension_mismatch, "grid length does not match the columns of Y");
    }
    check_finite(Y_, "Y");
    check_finite(X_, "X");
    if (phases_.empty()) phases_.push_back({0, Y_.cols()});
    Index expect = 0;
    for (const auto& ph : phases_) {
        require(ph.begin == expect && ph.end > ph.begin, ErrorKind::invalid_input,
                "phases must be contiguous, non-empty and ordered");
        expect = ph.end;
    }
    require(expect == Y_.cols(), ErrorKind::invalid_input, "phases do not cover the grid");
}

std::size_t FunctionalDataset::phase_of(Index m) const {
    for (std::size_t p = 0; p < phases_.size(); ++p) {
        if (m >= phases_[p].begin && m < phases_[p].end) return p;
    }
    throw Error(ErrorKind::index_out_of_range, "time index outside every phase");
}

FunctionalDataset FunctionalDataset::with_intercept() const {
    Matrix X(X_.rows(), X_.cols() + 1);
    X.col(0).setOnes();
    X.rightCols(X_.cols()) = X_;
    return FunctionalDataset(Y_, std::move(X), grid_, phases_);
}

Matrix predict(const Matrix& X, const Matrix& gamma, const BasisSystem& basis) {
    if (X.cols() != gamma.rows() || gamma.cols() != basis.num_basis()) {
        throw Error(ErrorKind::dimension_mismatch, "cannot form X gamma B with X " + shape(X) +
                                                       ", gamma " + shape(gamma) + ", B " +
                                                       shape(basis.values));
    }
    return X * (gamma * basis.values);
}

CoefficientCurves coefficient_functions(const Matrix& gamma, const BasisSystem& basis) {
    if (gamma.cols() != basis.num_basis()) {
        throw Error(ErrorKind::dimension_mismatch,
                    "gamma has " + std::to_string(gamma.cols()) + " columns, basis has " +
                        std::to_string(basis.num_basis()) + " functions");
    }
    const Index p = gamma.rows();
    const Index T = basis.num_times();
    CoefficientCurves out{gamma * basis.values, BoolMatrix::Constant(p, T, false)};
    for (Index m = 0; m < T; ++m) {
        const auto& r = basis.column_support[static_cast<std::size_t>(m)];
        for (Index j = 0; j < p; ++j) {
            double l1 = 0.0;
            for (int k = r.first; k <= r.last; ++k) l1 += std::abs(gamma(j, k));
            if (l1 == 0.0) {
                out.zero(j, m) = true;
                out.values(j, m) = 0.0;
            }
        }
    }
    return out;
}

CoefficientCurves coefficient_functions(const Matrix& gamma, const KnotVector& knots,
                                        const Vector& eval_grid) {
    return coefficient_functions(gamma, eval_basis(knots, eval_grid));
}

}  // namespace fgb
