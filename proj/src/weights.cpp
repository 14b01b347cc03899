#include "fgb/weights.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace fgb {

double epanechnikov(double u, double b) {
    const double z = u / b;
    return z * z < 1.0 ? 0.75 * (1.0 - z * z) / b : 0.0;
}

Matrix ols_pointwise(const Matrix& X, const Matrix& Y) {
    if (X.rows() != Y.rows()) {
        throw Error(ErrorKind::dimension_mismatch, "X is " + shape(X) + " but Y is " + shape(Y));
    }
    const Matrix xtx = X.transpose() * X;
    Eigen::LDLT<Matrix> ldlt(xtx);
    const Eigen::SelfAdjointEigenSolver<Matrix> eig(xtx, Eigen::EigenvaluesOnly);
    const double hi = eig.eigenvalues().maxCoeff();
    const double lo = eig.eigenvalues().minCoeff();
    if (!(hi > 0.0) || lo <= 1e-12 * hi) {
        throw Error(ErrorKind::rank_deficient, "X^T X is singular; the design is rank deficient");
    }
    return ldlt.solve(X.transpose() * Y);
}

LocalLinearSmoother local_linear_smoother(const Vector& phase_grid, double bandwidth) {
    require(bandwidth > 0.0, ErrorKind::bandwidth, "bandwidth must be positive");
    const Index T = phase_grid.size();
    LocalLinearSmoother s{Matrix::Zero(T, T), Matrix::Zero(T, T)};
    for (Index m = 0; m < T; ++m) {
        const double t = phase_grid[m];
        double s0 = 0.0, s1 = 0.0, s2 = 0.0;
        for (Index l = 0; l < T; ++l) {
            const double w = epanechnikov(phase_grid[l] - t, bandwidth);
            const double d = (phase_grid[l] - t) / bandwidth;
            s0 += w;
            s1 += w * d;
            s2 += w * d * d;
        }
        const double det = s0 * s2 - s1 * s1;
        if (!(s0 > 0.0) || !(det > 1e-12 * s0 * s0)) {
            std::ostringstream os;
            os << "bandwidth " << bandwidth << " leaves the local linear fit at t=" << t
               << " undetermined";
            throw Error(ErrorKind::bandwidth, os.str());
        }
        for (Index l = 0; l < T; ++l) {
            const double w = epanechnikov(phase_grid[l] - t, bandwidth);
            const double d = (phase_grid[l] - t) / bandwidth;
            s.level(m, l) = w * (s2 - s1 * d) / det;
            s.slope(m, l) = w * (s0 * d - s1) / det;
        }
    }
    return s;
}

LocalLinearFit local_linear_theta(const Matrix& residuals, const Vector& grid,
                                  std::span<const Phase> phases,
                                  std::span<const double> bandwidths) {
    require(residuals.cols() == grid.size(), ErrorKind::dimension_mismatch,
            "residual columns do not match the grid");
    require(bandwidths.size() == phases.size(), ErrorKind::dimension_mismatch,
            "need one bandwidth per phase");
    LocalLinearFit fit{Matrix::Zero(residuals.rows(), residuals.cols()),
                       Matrix::Zero(residuals.rows(), residuals.cols())};
    for (std::size_t p = 0; p < phases.size(); ++p) {
        const Phase& ph = phases[p];
        require(ph.size() >= 2, ErrorKind::bandwidth, "each phase needs at least two grid points");
        const auto sm = local_linear_smoother(grid.segment(ph.begin, ph.size()), bandwidths[p]);
        const auto block = residuals.middleCols(ph.begin, ph.size());
        fit.theta.middleCols(ph.begin, ph.size()) = block * sm.level.transpose();
        fit.slope.middleCols(ph.begin, ph.size()) = block * sm.slope.transpose();
    }
    return fit;
}

std::vector<double> default_bandwidth_candidates(const Vector& grid, const Phase& phase) {
    const double spacing = (grid[grid.size() - 1] - grid[0]) / static_cast<double>(grid.size() - 1);
    const double lo = 2.0 * spacing;
    const double hi = grid[phase.end - 1] - grid[phase.begin];
    if (hi <= lo) return {lo};
    std::vector<double> out(10);
    for (int i = 0; i < 10; ++i) out[i] = lo * std::pow(hi / lo, i / 9.0);
    return out;
}

double gcv_score(const Matrix& residuals, const Vector& grid, const Phase& phase, double b) {
    LocalLinearSmoother sm;
    try {
        sm = local_linear_smoother(grid.segment(phase.begin, phase.size()), b);
    } catch (const Error& e) {
        if (e.kind() == ErrorKind::bandwidth) return std::numeric_limits<double>::infinity();
        throw;
    }
    const double Tpa = static_cast<double>(phase.size());
    const auto block = residuals.middleCols(phase.begin, phase.size());
    const double rss = (block - block * sm.level.transpose()).squaredNorm();
    const double denom = 1.0 - sm.trace() / Tpa;
    if (!(denom > 0.0)) return std::numeric_limits<double>::infinity();
    return (rss / Tpa) / (denom * denom);
}

std::vector<double> select_bandwidth_gcv(const Matrix& residuals, const Vector& grid,
                                         std::span<const Phase> phases,
                                         const std::vector<std::vector<double>>& candidates) {
    std::vector<double> out;
    for (std::size_t p = 0; p < phases.size(); ++p) {
        std::vector<double> cand = p < candidates.size() ? candidates[p] : std::vector<double>{};
        if (cand.empty()) cand = default_bandwidth_candidates(grid, phases[p]);
        std::sort(cand.begin(), cand.end());
        if (cand.size() == 1) {
            out.push_back(cand.front());
            continue;
        }
        double best_b = 0.0;
        double best = std::numeric_limits<double>::infinity();
        for (double b : cand) {
            const double s = gcv_score(residuals, grid, phases[p], b);
            if (s < best) {
                best = s;
                best_b = b;
            }
        }
        if (!std::isfinite(best)) {
            std::ostringstream os;
            os << "every bandwidth candidate for phase " << p << " gives a degenerate smoother";
            throw Error(ErrorKind::degenerate_smoother, os.str());
        }
        out.push_back(best_b);
    }
    return out;
}

Matrix inverse_sqrt_spd(const Matrix& S, double rel_floor) {
    const Eigen::SelfAdjointEigenSolver<Matrix> eig(0.5 * (S + S.transpose()));
    Vector ev = eig.eigenvalues();
    const double floor = rel_floor * ev.maxCoeff();
    for (Index i = 0; i < ev.size(); ++i) ev[i] = 1.0 / std::sqrt(std::max(ev[i], floor));
    Matrix out = eig.eigenvectors() * ev.asDiagonal() * eig.eigenvectors().transpose();
    return 0.5 * (out + out.transpose());
}

WeightModel weight_model_from_components(Matrix sigma_theta, double sigma2) {
    if (!(sigma2 > 1e-12)) {
        std::ostringstream os;
        os << "estimated noise variance " << sigma2 << " is degenerate";
        throw Error(ErrorKind::degenerate_noise, os.str());
    }
    sigma_theta = 0.5 * (sigma_theta + sigma_theta.transpose());
    const Eigen::SelfAdjointEigenSolver<Matrix> eig(sigma_theta);
    if (eig.eigenvalues().minCoeff() < 0.0) {
        const Vector ev = eig.eigenvalues().cwiseMax(0.0);
        sigma_theta = eig.eigenvectors() * ev.asDiagonal() * eig.eigenvectors().transpose();
        sigma_theta = 0.5 * (sigma_theta + sigma_theta.transpose());
    }
    WeightModel wm;
    wm.sigma = sigma_theta + sigma2 * Matrix::Identity(sigma_theta.rows(), sigma_theta.cols());
    wm.sigma_theta = std::move(sigma_theta);
    wm.sigma2 = sigma2;
    wm.W = inverse_sqrt_spd(wm.sigma);
    return wm;
}

WeightModel estimate_weight_model(const FunctionalDataset& ds, const Matrix& beta_ols,
                                  const Matrix& theta_hat) {
    const Index n = ds.n();
    require(n >= 2, ErrorKind::invalid_input, "need at least two subjects");
    require(theta_hat.rows() == n && theta_hat.cols() == ds.T(), ErrorKind::dimension_mismatch,
            "theta_hat must be n x T");
    const Matrix resid = ds.Y() - ds.X() * beta_ols - theta_hat;
    const double sigma2 = resid.squaredNorm() / static_cast<double>(n * ds.T());
    const Matrix centered = theta_hat.rowwise() - theta_hat.colwise().mean();
    Matrix cov = centered.transpose() * centered / static_cast<double>(n - 1);
    return weight_model_from_components(std::move(cov), sigma2);
}

WeightModel estimate_weights(const FunctionalDataset& ds) {
    const Matrix beta_ols = ols_pointwise(ds.X(), ds.Y());
    const Matrix resid = ds.Y() - ds.X() * beta_ols;
    const auto bw = select_bandwidth_gcv(resid, ds.grid(), ds.phases());
    const auto ll = local_linear_theta(resid, ds.grid(), ds.phases(), bw);
    WeightModel wm = estimate_weight_model(ds, beta_ols, ll.theta);
    wm.bandwidth = bw;
    return wm;
}

WeightModel with_identity_weight(WeightModel wm) {
    wm.W = Matrix::Identity(wm.sigma.rows(), wm.sigma.cols());
    return wm;
}

}  // namespace fgb
