#pragma once

#include "fgb/basis.hpp"
#include "fgb/common.hpp"

#include <cstdint>
#include <optional>
#include <vector>

namespace fgb {

/**
 * Precomputed quantities of the weighted loss
 *
 *     f(gamma) = 1/2 || (Y - X gamma B) W ||_F^2
 *
 * shared by every fit on the same (X, Y, B, W). The loss is a quadratic form
 * in gamma whose Hessian is X^T X (x) B W W^T B^T; both factors are
 * diagonalized once so that ridge, GLS and the ADMM steps act entrywise in
 * spectral coordinates. Nothing here depends on lambda or alpha, and the
 * object is immutable after construction.
 */
class BridgeProblem {
public:
    BridgeProblem(const Matrix& X, const Matrix& Y, const BasisSystem& basis, const Matrix& W);

    Index n() const noexcept { return X_.rows(); }
    Index p() const noexcept { return X_.cols(); }
    Index K() const noexcept { return B_.rows(); }
    Index T() const noexcept { return B_.cols(); }

    const Matrix& X() const noexcept { return X_; }
    const Matrix& Y() const noexcept { return Y_; }
    const Matrix& B() const noexcept { return B_; }
    const Matrix& W() const noexcept { return W_; }
    const std::vector<SupportRange>& groups() const noexcept { return groups_; }

    const Matrix& xtx() const noexcept { return xtx_; }
    /// B W W^T B^T.
    const Matrix& gram_b() const noexcept { return gram_b_; }
    /// X^T Y W W^T B^T.
    const Matrix& cross() const noexcept { return cross_; }
    /// W W^T B^T (T x K).
    const Matrix& wwb() const noexcept { return wwb_; }
    double yw_squared() const noexcept { return yw_sq_; }

    /// V_X^T gamma U_B, with X^T X = V_X diag(dx^2) V_X^T and B W W^T B^T = U_B diag(db^2) U_B^T.
    Matrix to_spectral(const Matrix& gamma) const;
    Matrix from_spectral(const Matrix& s) const;
    /// dx^2 db^2^T, the diagonal of the Hessian in spectral coordinates.
    const Matrix& curvature() const noexcept { return curvature_; }
    const Matrix& cross_spectral() const noexcept { return cross_spec_; }

    /// || (Y - X gamma B) W ||_F^2.
    double weighted_rss(const Matrix& gamma) const;
    double loss(const Matrix& gamma) const { return 0.5 * weighted_rss(gamma); }

    /// p x T matrix of || 1{B^{(m)}} (.) gamma_j ||_1.
    Matrix group_l1(const Matrix& gamma) const;
    /// sum_{j,m} group_l1^alpha.
    double bridge_penalty(const Matrix& gamma, double alpha) const;

    /// Closed-form generalized least squares (X^T X)^{-1} X^T Y W W^T B^T (B W W^T B^T)^{-1}.
    Matrix gls() const;
    /// Minimizer of f(gamma) + ridge_lambda sum_j ||gamma_j||_2^2.
    Matrix ridge(double ridge_lambda) const;

private:
    Matrix X_, Y_, B_, W_;
    std::vector<SupportRange> groups_;
    Matrix xtx_, gram_b_, cross_, wwb_;
    double yw_sq_ = 0.0;
    Matrix vx_, ub_, curvature_, cross_spec_;
};

/// rho_s = exp(4 s / S2 - 1), s = 1..S2.
double rho_schedule(int step, int inner_steps);

/// What alpha = 1 means for the inner problem: a plain Lasso (D = 1) run
/// with the full inner budget, or S2 = 1 per macro iteration.
enum class AlphaOneMode { practical, literal };

struct BridgeConfig {
    double lambda = 0.0;
    double alpha = 0.5;
    int S1 = 20;
    int S2 = 50;
    double early_stop_tol = 1e-6;
    /// Fixed warm-start penalty; chosen by 5-fold CV when absent.
    std::optional<double> ridge_lambda;
    std::uint64_t ridge_cv_seed = 20210501;
    AlphaOneMode alpha_one_mode = AlphaOneMode::practical;

    void validate() const;
};

struct BridgeFit {
    Matrix gamma;                        // p x K
    std::vector<double> objective_trace;  // L after each macro iteration
    std::vector<double> residual_norm_trace;  // ||E W||_F after each macro iteration
    int converged_at = 0;                // macro iteration that triggered early stop, 0 if none
    Matrix D;                            // inner Lasso weights at gamma
    double ridge_lambda = 0.0;
    double objective = 0.0;
    BridgeConfig config;
};

/// Objective minimized by the fit: f + lambda g(alpha) for alpha < 1,
/// f + lambda ||gamma||_1 in alpha = 1 mode.
double bridge_objective(const BridgeProblem& prob, const Matrix& gamma, double lambda,
                        double alpha);

/// zeta_{j,m} = ((1 - alpha)/alpha)^alpha || 1{B^{(m)}} (.) gamma_j ||_1^alpha.
Matrix zeta_update(const Matrix& gamma, double alpha, const std::vector<SupportRange>& groups);

/// Smallest zeta entering the inner weights; exact zeros are raised to it.
inline constexpr double kZetaFloor = 1e-10;

/// D_{jk} = sum_m alpha^alpha (1 - alpha)^{1 - alpha} zeta_{j,m}^{1 - 1/alpha} 1{B_k^{(m)} != 0}.
Matrix d_weights(const Matrix& zeta, double alpha, const std::vector<SupportRange>& groups,
                 Index num_basis);

inline double soft_threshold(double v, double thr) {
    if (v > thr) return v - thr;
    if (v < -thr) return v + thr;
    return 0.0;
}

/// Inner Lasso weights at gamma: d_weights(zeta_update(gamma)) for alpha < 1, all ones at alpha = 1.
Matrix lasso_weights(const BridgeProblem& prob, const Matrix& gamma, double alpha);

/// Exactly `inner_steps` ADMM steps on min f(gamma) + lambda <D, |gamma|>,
/// started at `init` with a zero dual. Returns the thresholded iterate eta.
Matrix admm_lasso_inner(const BridgeProblem& prob, const Matrix& D, double lambda,
                        int inner_steps, const Matrix& init);

/// Warm-start penalty selected by K-fold cross-validation over subjects.
/// With fewer subjects than folds every subject is its own fold.
double select_ridge_lambda_cv(const BridgeProblem& prob, int folds = 5, int num_values = 20,
                              std::uint64_t seed = 20210501);

/// Ridge warm start; an absent ridge_lambda is chosen by cross-validation.
Matrix ridge_warm_start(const BridgeProblem& prob, double ridge_lambda);

/// Nested ADMM fit of the group bridge objective. `warm_start` overrides the
/// ridge start (its penalty is then recorded as the config value or 0).
/// For lambda > 0 and alpha < 1 the macro loop is followed by greedy pruning
/// of coefficients on the exact objective and a refit from the pruned point.
/// The returned gamma is the best iterate seen.
BridgeFit fit_group_bridge(const BridgeProblem& prob, const BridgeConfig& config,
                           const Matrix* warm_start = nullptr);

}  // namespace fgb
