#pragma once

#include "fgb/common.hpp"
#include "fgb/model_data.hpp"

#include <span>
#include <vector>

namespace fgb {

/// Epanechnikov kernel K_b(u) = 0.75 (1 - (u/b)^2)_+ / b.
double epanechnikov(double u, double b);

/// Pointwise least squares: column m is (X^T X)^{-1} X^T Y^{(m)}.
Matrix ols_pointwise(const Matrix& X, const Matrix& Y);

/// Linear operators of the local linear fit restricted to one phase:
/// theta_hat = residuals * level^T and theta_slope = residuals * slope^T.
struct LocalLinearSmoother {
    Matrix level;  // T_pa x T_pa
    Matrix slope;  // T_pa x T_pa, derivative scaled by the bandwidth
    double trace() const { return level.trace(); }
};

LocalLinearSmoother local_linear_smoother(const Vector& phase_grid, double bandwidth);

struct LocalLinearFit {
    Matrix theta;  // n x T
    Matrix slope;  // n x T
};

/// Phase-wise local linear smoothing of each residual curve. Only grid points
/// of the same phase enter a fit; `bandwidths` holds one value per phase.
LocalLinearFit local_linear_theta(const Matrix& residuals, const Vector& grid,
                                  std::span<const Phase> phases,
                                  std::span<const double> bandwidths);

/// 10 log-spaced values from twice the grid spacing to the phase length.
std::vector<double> default_bandwidth_candidates(const Vector& grid, const Phase& phase);

/// GCV(b) = (RSS(b)/T_pa) / (1 - tr(S_b)/T_pa)^2 on one phase, with RSS pooled
/// over subjects. Returns +inf for a bandwidth that leaves a fit undetermined.
double gcv_score(const Matrix& residuals, const Vector& grid, const Phase& phase, double b);

/// GCV-minimizing bandwidth per phase; ties go to the smaller bandwidth.
/// An empty candidate list for a phase selects from the default candidates.
std::vector<double> select_bandwidth_gcv(const Matrix& residuals, const Vector& grid,
                                         std::span<const Phase> phases,
                                         const std::vector<std::vector<double>>& candidates = {});

struct WeightModel {
    Matrix sigma_theta;  // T x T
    double sigma2 = 0.0;
    Matrix sigma;        // sigma_theta + sigma2 I
    Matrix W;            // W W^T = sigma^{-1}
    std::vector<double> bandwidth;
};

/// Symmetric inverse square root with eigenvalues floored at rel_floor * max.
Matrix inverse_sqrt_spd(const Matrix& S, double rel_floor = 1e-10);

/// Builds sigma and W from the two variance components.
WeightModel weight_model_from_components(Matrix sigma_theta, double sigma2);

WeightModel estimate_weight_model(const FunctionalDataset& ds, const Matrix& beta_ols,
                                  const Matrix& theta_hat);

/// Full pipeline: pointwise OLS, GCV bandwidths, local linear random effects,
/// variance components, and W.
WeightModel estimate_weights(const FunctionalDataset& ds);

/// Keeps the covariance estimate but uses W = I.
WeightModel with_identity_weight(WeightModel wm);

}  // namespace fgb
