#pragma once

#include "fgb/common.hpp"
#include "fgb/solver.hpp"

#include <string>
#include <vector>

namespace fgb {

struct GlsResult {
    Matrix gamma;         // p x K
    double rss = 0.0;     // ||(Y - X gamma B) W||^2
    double sigma2 = 0.0;  // rss / (nT)
};

GlsResult gls_estimate(const BridgeProblem& prob);

/// nu = max{1 - log(n) / (2 log(pK)), 1/2}.
double ebic_nu(Index n, Index p, Index K);

/// Number of non-zero entries.
Index degrees_of_freedom(const Matrix& gamma);

/// T rss / rss_gls + df log(n)/n + nu df log(pK)/n.
double adjusted_ebic(double rss, double rss_gls, Index df, Index n, Index T, Index p, Index K,
                     double nu);

/// rss / (n sigma2) + T log(sigma2) + df log(n)/n + nu df log(pK)/n.
double unadjusted_ebic(double rss, double sigma2, Index df, Index n, Index T, Index p, Index K,
                       double nu);

/// Log-linear lambdas and linear alphas.
struct GridSpec {
    int num_lambda = 100;
    double lambda_min = 0.1;
    double lambda_max = 100.0;
    int num_alpha = 18;
    double alpha_min = 0.05;
    double alpha_max = 0.95;

    std::vector<double> lambdas() const;
    std::vector<double> alphas() const;
    void validate() const;
    std::string to_string() const;
    /// "100:0.1:100,18:0.05:0.95"
    static GridSpec parse(const std::string& text);
};

struct GridCell {
    double lambda = 0.0;
    double alpha = 0.0;
    double score = 0.0;
    double rss = 0.0;
    Index df = 0;
    bool ok = false;
    std::string diagnostic;
    Matrix gamma;
};

struct TuningOptions {
    BridgeConfig solver;  // lambda and alpha are overwritten per cell
    bool unadjusted = false;
    int threads = 1;
};

struct TuningGrid {
    std::vector<double> lambdas;
    std::vector<double> alphas;
    std::vector<GridCell> cells;  // cells[i * alphas.size() + a]
    std::size_t best = 0;
    double nu = 0.0;
    double ridge_lambda = 0.0;
    GlsResult gls;

    const GridCell& best_cell() const { return cells[best]; }
    const GridCell& at(std::size_t i_lambda, std::size_t i_alpha) const {
        return cells[i_lambda * alphas.size() + i_alpha];
    }
    /// lambdas.size() x alphas.size() matrix of scores.
    Matrix scores() const;
};

/// Index of the minimum score; ties go to the larger lambda, then the smaller alpha.
std::size_t select_best(const std::vector<GridCell>& cells);

/// Fits every (lambda, alpha) from one shared ridge start and scores each fit.
TuningGrid grid_search(const BridgeProblem& prob, const GridSpec& grid,
                       const TuningOptions& options);

}  // namespace fgb
