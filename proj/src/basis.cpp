#include "fgb/basis.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace fgb {

KnotVector::KnotVector(std::vector<double> knots, int degree)
    : knots_(std::move(knots)), degree_(degree) {
    require(degree_ >= 0, ErrorKind::invalid_configuration, "negative spline degree");
    const auto q = static_cast<std::size_t>(degree_ + 1);
    require(knots_.size() >= 2 * q, ErrorKind::invalid_configuration,
            "knot vector too short for the requested degree");
    for (std::size_t i = 0; i < q; ++i) {
        require(knots_[i] == 0.0 && knots_[knots_.size() - 1 - i] == 1.0,
                ErrorKind::invalid_configuration, "knot vector is not clamped to [0, 1]");
    }
    for (std::size_t i = q - 1; i + q < knots_.size(); ++i) {
        require(knots_[i] < knots_[i + 1], ErrorKind::invalid_configuration,
                "interior knots must be strictly increasing");
    }
}

double KnotVector::span_ratio() const {
    const int q = order();
    double lo = std::numeric_limits<double>::infinity();
    double hi = 0.0;
    for (int k = 0; k < num_basis(); ++k) {
        const double w = knots_[k + q] - knots_[k];
        lo = std::min(lo, w);
        hi = std::max(hi, w);
    }
    return hi / lo;
}

KnotVector make_knots(int num_basis, int order) {
    require(order >= 1, ErrorKind::invalid_configuration, "spline order must be >= 1");
    if (num_basis < order) {
        std::ostringstream os;
        os << "basis count K=" << num_basis << " is smaller than the order q=" << order;
        throw Error(ErrorKind::invalid_configuration, os.str());
    }
    const int degree = order - 1;
    const int spans = num_basis - order + 1;
    std::vector<double> knots;
    knots.reserve(static_cast<std::size_t>(num_basis + order));
    for (int i = 0; i < order; ++i) knots.push_back(0.0);
    for (int i = 1; i < spans; ++i) knots.push_back(static_cast<double>(i) / spans);
    for (int i = 0; i < order; ++i) knots.push_back(1.0);
    return KnotVector(std::move(knots), degree);
}

Vector eval_basis_at(const KnotVector& knots, double t) {
    const auto& kn = knots.knots();
    const int nk = static_cast<int>(kn.size());
    const int q = knots.order();
    const int num_basis = knots.num_basis();

    // degree-0 indicators, one per knot span
    std::vector<double> n(static_cast<std::size_t>(nk - 1), 0.0);
    if (t >= kn[nk - 1]) {
        // closed at the right end: the last non-degenerate span owns t = 1
        for (int s = nk - 2; s >= 0; --s) {
            if (kn[s] < kn[s + 1]) {
                n[s] = 1.0;
                break;
            }
        }
    } else {
        for (int s = 0; s + 1 < nk; ++s) {
            if (kn[s] <= t && t < kn[s + 1]) {
                n[s] = 1.0;
                break;
            }
        }
    }

    for (int d = 1; d < q; ++d) {
        const int len = nk - 1 - d;
        for (int k = 0; k < len; ++k) {
            double left = 0.0;
            double right = 0.0;
            const double dl = kn[k + d] - kn[k];
            const double dr = kn[k + d + 1] - kn[k + 1];
            if (dl > 0.0 && n[k] != 0.0) left = (t - kn[k]) / dl * n[k];
            if (dr > 0.0 && n[k + 1] != 0.0) right = (kn[k + d + 1] - t) / dr * n[k + 1];
            n[k] = left + right;
        }
    }

    Vector out(num_basis);
    for (int k = 0; k < num_basis; ++k) out[k] = n[k];
    return out;
}

BasisSystem eval_basis(const KnotVector& knots, const Vector& grid) {
    const Index T = grid.size();
    require(T >= 1, ErrorKind::invalid_input, "empty time grid");
    for (Index m = 0; m < T; ++m) {
        if (!(grid[m] >= 0.0 && grid[m] <= 1.0)) {
            std::ostringstream os;
            os << "grid point " << m << " (" << grid[m] << ") is outside [0, 1]";
            throw Error(ErrorKind::invalid_input, os.str());
        }
        if (m > 0 && !(grid[m] > grid[m - 1])) {
            std::ostringstream os;
            os << "grid is not strictly increasing at index " << m;
            throw Error(ErrorKind::invalid_input, os.str());
        }
    }

    const int K = knots.num_basis();
    BasisSystem bs{knots, grid, Matrix::Zero(K, T), BoolMatrix::Constant(K, T, false), {}};
    bs.column_support.resize(static_cast<std::size_t>(T));
    for (Index m = 0; m < T; ++m) {
        bs.values.col(m) = eval_basis_at(knots, grid[m]);
        SupportRange r{K, -1};
        for (int k = 0; k < K; ++k) {
            if (bs.values(k, m) != 0.0) {
                bs.support(k, m) = true;
                r.first = std::min(r.first, k);
                r.last = std::max(r.last, k);
            }
        }
        bs.column_support[static_cast<std::size_t>(m)] = r;
    }
    return bs;
}

std::vector<bool> support_indicator(const BasisSystem& bs, Index m) {
    if (m < 0 || m >= bs.num_times()) {
        std::ostringstream os;
        os << "time index " << m << " outside [0, " << bs.num_times() << ")";
        throw Error(ErrorKind::index_out_of_range, os.str());
    }
    std::vector<bool> out(static_cast<std::size_t>(bs.num_basis()));
    for (int k = 0; k < bs.num_basis(); ++k) out[static_cast<std::size_t>(k)] = bs.support(k, m);
    return out;
}

Vector uniform_grid(int num_times) {
    require(num_times >= 2, ErrorKind::invalid_input, "grid needs at least two points");
    Vector g(num_times);
    for (int m = 0; m < num_times; ++m) g[m] = static_cast<double>(m) / (num_times - 1);
    g[num_times - 1] = 1.0;
    return g;
}

}  // namespace fgb
