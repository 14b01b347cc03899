#pragma once

#include "fgb/common.hpp"
#include "fgb/solver.hpp"

#include <cstdint>
#include <functional>
#include <optional>
#include <utility>
#include <vector>

namespace fgb {

/// Coefficient (j, k); flattened as j * K + k.
using CoefIndex = std::pair<Index, Index>;

std::vector<CoefIndex> support_of(const Matrix& gamma);
std::vector<CoefIndex> full_index(Index p, Index K);

/// P_lambda on the given index set: (X^T X)_{jj'} (B W W^T B^T)_{kk'} + lambda D_{jk} on the diagonal.
Matrix build_P(const BridgeProblem& prob, const std::vector<CoefIndex>& idx, double lambda,
               const Matrix& D);

/// Q as an explicit |idx| x nT matrix, row (j,k) = vec(X^{(j)} B_k^T W W^T) with subject-major columns.
Matrix build_Q_dense(const BridgeProblem& prob, const std::vector<CoefIndex>& idx);

/// Q Cov{vec(theta + E)} Q^T for subject-independent noise with per-subject covariance sigma (T x T).
Matrix build_QSQ(const BridgeProblem& prob, const std::vector<CoefIndex>& idx,
                 const Matrix& sigma);

/// Symmetric matrix with negative eigenvalues set to 0.
Matrix clip_psd(const Matrix& S);

struct GammaCovariance {
    std::vector<CoefIndex> support;
    Matrix cov;  // |support| x |support|
};

/// Sandwich P^{-1} (Q Cov Q^T) P^{-T}, clipped to PSD.
Matrix sandwich(const Matrix& P, const Matrix& qsq);

GammaCovariance covariance_gamma(const BridgeProblem& prob, const Matrix& gamma, double lambda,
                                 const Matrix& D, const Matrix& sigma);

struct ExpansionConfig {
    double lambda = 0.0;
    double alpha = 0.5;
    /// Perturbation half-width; 1e-4 max|gamma| when absent (1e-4 for an all-zero fit).
    std::optional<double> eps;
    std::uint64_t seed = 7;
};

/// pK x pK covariance after perturbing the zero entries of gamma.
Matrix expand_covariance(const BridgeProblem& prob, const Matrix& gamma, const Matrix& D,
                         const Matrix& sigma, const ExpansionConfig& config);

/// B^T Cov_{jj} B on the grid for coefficient j from a pK x pK covariance.
Matrix beta_covariance(const Matrix& full_cov, const Matrix& B, Index j);

struct ConfidenceBand {
    double level = 0.95;
    double critical = 0.0;
    int draws = 0;
    Vector estimate;
    Vector sd;
    Vector lower;
    Vector upper;
    Vector half_width() const { return critical * sd; }
};

/// Draws of a zero-mean Gaussian field with covariance `cov`, reduced to one
/// statistic each. Draws are generated in fixed seeded chunks so the result
/// does not depend on the number of threads.
std::vector<double> simulate_statistic(const Matrix& cov, int draws, std::uint64_t seed,
                                       int threads,
                                       const std::function<double(const Vector&)>& stat);

inline constexpr int kDrawChunk = 1000;

/// Joint band beta_hat +- c s_hat with c the level quantile of max_t |G(t)| / s_hat(t).
ConfidenceBand joint_band(const Vector& beta_hat, const Matrix& beta_cov, double level,
                          int draws = 100000, std::uint64_t seed = 11, int threads = 1);

/// Lower-tail p-value of min_{t in window} beta_hat / s_hat against simulated nulls.
/// The window is the grid index range [first, last).
double suppression_test(const Vector& beta_hat, const Matrix& beta_cov, Index first, Index last,
                        int draws = 100000, std::uint64_t seed = 13, int threads = 1);

}  // namespace fgb
