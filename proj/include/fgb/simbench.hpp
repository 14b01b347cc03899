#pragma once

#include "fgb/basis.hpp"
#include "fgb/common.hpp"
#include "fgb/model_data.hpp"
#include "fgb/solver.hpp"
#include "fgb/tuning.hpp"

#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <vector>

namespace fgb {

/// beta_1 = 0, beta_2 = sin(pi t), beta_3 piecewise; j is 1-based.
double true_beta(int j, double t);

/// 3 x T matrix of c0 * beta_j(t_m).
Matrix true_beta_curves(const Vector& grid, double c0 = 1.0);

struct SimScenario {
    std::string label = "base";
    Index n = 100;
    int T = 100;
    int K = 30;
    int q = 4;
    std::uint64_t seed = 1;
    double c0 = 1.0;
    std::vector<double> boundaries{0.4, 0.8};
    std::vector<double> sigma_steps{0.5, 1.0, 2.0};  // one per phase
    double ar_rho = 0.9;
    double noise_sd = 1.0;

    void validate() const;
    /// base, case1 (T = 1000, K = 40), case2 (c0 = 5), case3 (c0 = 0.2).
    static SimScenario preset(const std::string& label);
};

struct SimData {
    FunctionalDataset data;
    Matrix beta;   // 3 x T
    Matrix theta;  // n x T
};

SimData generate(const SimScenario& scn);

/// Pointwise OLS followed by second-difference P-spline smoothing of each
/// coefficient curve with the penalty chosen by GCV.
struct TwoStepFit {
    Matrix gamma;                 // p x K
    std::vector<double> penalty;  // per coefficient
    std::vector<Matrix> hat;      // per coefficient, T x T map from pointwise to smoothed curve
};

TwoStepFit two_step_fos(const FunctionalDataset& ds, const BasisSystem& basis);

/// Grid covariance of the smoothed curve j given the per-subject noise covariance.
Matrix two_step_covariance(const TwoStepFit& fit, const FunctionalDataset& ds, const Matrix& sigma,
                           Index j);

struct SplineOracle {
    Vector gamma_star;   // dense least-squares approximation
    Vector gamma_tilde;  // sparse modification
    double approx_error = 0.0;  // ||beta* - beta||_inf on the fine grid
    double c_star = 0.0;
    std::vector<int> a1;  // knot spans where |beta| < C* K^-r
    std::vector<int> zeroed;  // coefficients outside A^3
};

/// Sparse spline modification of a dense approximation on a fine grid.
/// Without c_star the constant is calibrated as the dense error times K^r.
SplineOracle sparse_spline_oracle(const std::function<double(double)>& beta, int K, int q,
                                  std::optional<double> c_star = std::nullopt, int r = 2,
                                  int fine_points = 20001);

struct MetricsReport {
    double rmse = 0.0;
    double l_inf = 0.0;
    double coverage = std::numeric_limits<double>::quiet_NaN();
    double fpr = 0.0;
    double tpr = 0.0;
    double precision = 0.0;
    bool precision_defined = false;
    double f1 = 0.0;
};

/// Truth counts as zero where |beta| < kTruthZero.
inline constexpr double kTruthZero = 1e-12;

/// L2 norm on [grid_0, grid_T] by the trapezoid rule.
double l2_norm(const Vector& values, const Vector& grid);

/// Metrics of one estimated curve; lower/upper are optional band limits.
MetricsReport evaluate(const Vector& estimate, const Vector& truth, const Vector& grid,
                       double delta = 0.0, const Vector* lower = nullptr,
                       const Vector* upper = nullptr);

struct RocPoint {
    double delta = 0.0;
    double fpr = 0.0;
    double tpr = 0.0;
};

std::vector<RocPoint> roc_curve(const Vector& estimate, const Vector& truth,
                                const std::vector<double>& deltas);

/// Fraction of truth-zero points with lo <= t <= hi that are estimated non-zero.
double segment_fpr(const Vector& estimate, const Vector& truth, const Vector& grid, double lo,
                   double hi);

enum class Method { proposed, identity, alpha1, gls, two_step };
const char* to_string(Method m);
Method parse_method(const std::string& name);

struct StudyConfig {
    SimScenario scenario;
    int replications = 1;
    std::vector<Method> methods{Method::proposed};
    GridSpec grid;
    BridgeConfig solver;
    bool bands = true;
    double level = 0.95;
    int band_draws = 100000;
    std::vector<double> deltas;  // defaults to 21 values from 0 to c0
    int threads = 1;

    std::vector<double> delta_grid() const;
};

struct MethodOutcome {
    Method method = Method::proposed;
    MetricsReport metrics;
    std::vector<RocPoint> roc;
    double fpr_early = 0.0;    // t in [0, 0.2]
    double fpr_late = 0.0;     // t in [0.8, 1]
    double fpr_overall = 0.0;
    double lambda = 0.0;
    double alpha = 0.0;
    Vector beta3;  // estimate of the locally sparse coefficient
    Matrix gamma;
};

struct ReplicationOutcome {
    int index = 0;
    std::uint64_t seed = 0;
    std::vector<MethodOutcome> methods;
};

struct SummaryRow {
    Method method = Method::proposed;
    std::string metric;
    double mean = 0.0;
    double se = std::numeric_limits<double>::quiet_NaN();
};

struct StudyResult {
    StudyConfig config;
    Vector grid;
    std::vector<ReplicationOutcome> replications;

    std::vector<SummaryRow> summary() const;
    /// Mean ROC per method over replications.
    std::vector<std::pair<Method, std::vector<RocPoint>>> mean_roc() const;
    double mean_metric(Method m, const std::string& metric) const;
};

/// Runs one replication of every requested method on data from the given seed.
ReplicationOutcome run_replication(const StudyConfig& config, int index);

StudyResult run_study(const StudyConfig& config);

}  // namespace fgb
