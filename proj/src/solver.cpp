#include "fgb/solver.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <sstream>

namespace fgb {

namespace {

// keeps floored weights finite for very small alpha
constexpr double kMaxGroupWeight = 1e250;
constexpr int kPrunePasses = 3;

void symmetric_eigen(const Matrix& S, Matrix& vectors, Vector& values) {
    const Eigen::SelfAdjointEigenSolver<Matrix> eig(0.5 * (S + S.transpose()));
    vectors = eig.eigenvectors();
    values = eig.eigenvalues().cwiseMax(0.0);
}

}  // namespace

BridgeProblem::BridgeProblem(const Matrix& X, const Matrix& Y, const BasisSystem& basis,
                             const Matrix& W)
    : X_(X), Y_(Y), B_(basis.values), W_(W), groups_(basis.column_support) {
    if (X_.rows() != Y_.rows() || Y_.cols() != B_.cols() || W_.rows() != B_.cols() ||
        W_.cols() != B_.cols()) {
        throw Error(ErrorKind::dimension_mismatch, "inconsistent shapes: X " + shape(X_) + ", Y " +
                                                       shape(Y_) + ", B " + shape(B_) + ", W " +
                                                       shape(W_));
    }
    const Matrix wwt = W_ * W_.transpose();
    wwb_ = wwt * B_.transpose();
    xtx_ = X_.transpose() * X_;
    gram_b_ = B_ * wwb_;
    gram_b_ = 0.5 * (gram_b_ + gram_b_.transpose());
    cross_ = X_.transpose() * (Y_ * wwb_);
    yw_sq_ = (Y_ * W_).squaredNorm();

    Vector lx, lb;
    symmetric_eigen(xtx_, vx_, lx);
    symmetric_eigen(gram_b_, ub_, lb);
    curvature_ = lx * lb.transpose();
    cross_spec_ = to_spectral(cross_);
}

Matrix BridgeProblem::to_spectral(const Matrix& gamma) const {
    return vx_.transpose() * gamma * ub_;
}

Matrix BridgeProblem::from_spectral(const Matrix& s) const {
    return vx_ * s * ub_.transpose();
}

double BridgeProblem::weighted_rss(const Matrix& gamma) const {
    const double quad = (xtx_ * gamma * gram_b_).cwiseProduct(gamma).sum();
    const double lin = cross_.cwiseProduct(gamma).sum();
    return std::max(0.0, yw_sq_ - 2.0 * lin + quad);
}

Matrix BridgeProblem::group_l1(const Matrix& gamma) const {
    const Index p = gamma.rows();
    const Index T = static_cast<Index>(groups_.size());
    Matrix out(p, T);
    for (Index j = 0; j < p; ++j) {
        for (Index m = 0; m < T; ++m) {
            const auto& r = groups_[static_cast<std::size_t>(m)];
            double s = 0.0;
            for (int k = r.first; k <= r.last; ++k) s += std::abs(gamma(j, k));
            out(j, m) = s;
        }
    }
    return out;
}

double BridgeProblem::bridge_penalty(const Matrix& gamma, double alpha) const {
    const Matrix l1 = group_l1(gamma);
    double s = 0.0;
    for (Index m = 0; m < l1.cols(); ++m) {
        for (Index j = 0; j < l1.rows(); ++j) {
            if (l1(j, m) > 0.0) s += std::pow(l1(j, m), alpha);
        }
    }
    return s;
}

Matrix BridgeProblem::gls() const {
    for (Index i = 0; i < curvature_.size(); ++i) {
        if (!(curvature_.data()[i] > 1e-12 * curvature_.maxCoeff())) {
            throw Error(ErrorKind::rank_deficient,
                        "X^T X or B W W^T B^T is singular; the GLS estimator is undefined");
        }
    }
    return from_spectral(cross_spec_.cwiseQuotient(curvature_));
}

Matrix BridgeProblem::ridge(double ridge_lambda) const {
    require(ridge_lambda >= 0.0, ErrorKind::invalid_configuration,
            "ridge penalty must be non-negative");
    if (ridge_lambda == 0.0) return gls();
    const Matrix denom = curvature_.array() + 2.0 * ridge_lambda;
    return from_spectral(cross_spec_.cwiseQuotient(denom));
}

double rho_schedule(int step, int inner_steps) {
    return std::exp(4.0 * step / inner_steps - 1.0);
}

void BridgeConfig::validate() const {
    require(S1 >= 1 && S2 >= 1, ErrorKind::invalid_configuration, "S1 and S2 must be >= 1");
    require(alpha > 0.0 && alpha <= 1.0, ErrorKind::invalid_configuration,
            "alpha must lie in (0, 1]");
    require(lambda >= 0.0 && std::isfinite(lambda), ErrorKind::invalid_configuration,
            "lambda must be finite and >= 0");
    require(early_stop_tol >= 0.0, ErrorKind::invalid_configuration,
            "early-stop tolerance must be >= 0");
    if (ridge_lambda) {
        require(*ridge_lambda >= 0.0, ErrorKind::invalid_configuration,
                "ridge penalty must be >= 0");
    }
}

double bridge_objective(const BridgeProblem& prob, const Matrix& gamma, double lambda,
                        double alpha) {
    const double f = prob.loss(gamma);
    if (lambda == 0.0) return f;
    if (alpha >= 1.0) return f + lambda * gamma.cwiseAbs().sum();
    return f + lambda * prob.bridge_penalty(gamma, alpha);
}

Matrix zeta_update(const Matrix& gamma, double alpha, const std::vector<SupportRange>& groups) {
    const double scale = std::pow((1.0 - alpha) / alpha, alpha);
    const Index p = gamma.rows();
    Matrix zeta(p, static_cast<Index>(groups.size()));
    for (Index m = 0; m < zeta.cols(); ++m) {
        const auto& r = groups[static_cast<std::size_t>(m)];
        for (Index j = 0; j < p; ++j) {
            double s = 0.0;
            for (int k = r.first; k <= r.last; ++k) s += std::abs(gamma(j, k));
            zeta(j, m) = s > 0.0 ? scale * std::pow(s, alpha) : 0.0;
        }
    }
    return zeta;
}

Matrix d_weights(const Matrix& zeta, double alpha, const std::vector<SupportRange>& groups,
                 Index num_basis) {
    require(zeta.cols() == static_cast<Index>(groups.size()), ErrorKind::dimension_mismatch,
            "zeta must have one column per time point");
    const double c = std::pow(alpha, alpha) * std::pow(1.0 - alpha, 1.0 - alpha);
    const double expo = 1.0 - 1.0 / alpha;
    const double floor_weight = std::min(std::pow(kZetaFloor, expo), kMaxGroupWeight);
    Matrix D = Matrix::Zero(zeta.rows(), num_basis);
    for (Index m = 0; m < zeta.cols(); ++m) {
        const auto& r = groups[static_cast<std::size_t>(m)];
        for (Index j = 0; j < zeta.rows(); ++j) {
            const double z = zeta(j, m);
            const double w =
                z > kZetaFloor ? std::min(std::pow(z, expo), kMaxGroupWeight) : floor_weight;
            for (int k = r.first; k <= r.last; ++k) D(j, k) += c * w;
        }
    }
    return D;
}

Matrix lasso_weights(const BridgeProblem& prob, const Matrix& gamma, double alpha) {
    if (alpha >= 1.0) return Matrix::Ones(prob.p(), prob.K());
    return d_weights(zeta_update(gamma, alpha, prob.groups()), alpha, prob.groups(), prob.K());
}

Matrix admm_lasso_inner(const BridgeProblem& prob, const Matrix& D, double lambda,
                        int inner_steps, const Matrix& init) {
    const Index p = prob.p();
    const Index K = prob.K();
    require(D.rows() == p && D.cols() == K && init.rows() == p && init.cols() == K,
            ErrorKind::dimension_mismatch, "D and the initial value must be p x K");
    const Matrix& cross = prob.cross_spectral();
    const Matrix& curv = prob.curvature();
    const Matrix lambda_d = lambda * D;

    Matrix eta = init;
    Matrix eta_s = prob.to_spectral(eta);
    Matrix psi = Matrix::Zero(p, K);
    Matrix xi_s(p, K);
    Matrix arg(p, K);
    for (int s = 1; s <= inner_steps; ++s) {
        const double rho = rho_schedule(s, inner_steps);
        xi_s = (cross - psi + rho * eta_s).cwiseQuotient((curv.array() + rho).matrix());
        arg = prob.from_spectral(xi_s + psi / rho);
        const double inv_rho = 1.0 / rho;
        for (Index i = 0; i < eta.size(); ++i) {
            eta.data()[i] = soft_threshold(arg.data()[i], lambda_d.data()[i] * inv_rho);
        }
        eta_s = prob.to_spectral(eta);
        psi += rho * (xi_s - eta_s);
    }
    return eta;
}

double select_ridge_lambda_cv(const BridgeProblem& prob, int folds, int num_values,
                              std::uint64_t seed) {
    const Index n = prob.n();
    require(folds >= 2 && n >= 2, ErrorKind::invalid_configuration,
            "cross-validation needs at least two folds and two subjects");
    folds = static_cast<int>(std::min<Index>(folds, n));
    require(num_values >= 1, ErrorKind::invalid_configuration, "empty ridge penalty ladder");

    // per-subject sufficient statistics of the weighted loss
    const Matrix ym = prob.Y() * prob.wwb();  // n x K
    const Vector yw2 = (prob.Y() * prob.W()).rowwise().squaredNorm();
    const Matrix& X = prob.X();

    std::vector<Index> order(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), Index{0});
    std::mt19937_64 rng(seed);
    std::shuffle(order.begin(), order.end(), rng);
    std::vector<int> fold_of(static_cast<std::size_t>(n));
    for (Index i = 0; i < n; ++i) fold_of[static_cast<std::size_t>(order[i])] = static_cast<int>(i % folds);

    const double scale =
        prob.xtx().trace() * prob.gram_b().trace() / static_cast<double>(prob.p() * prob.K());
    std::vector<double> ladder(static_cast<std::size_t>(num_values));
    for (int v = 0; v < num_values; ++v) {
        const double e = num_values == 1 ? -3.0 : -6.0 + 7.0 * v / (num_values - 1);
        ladder[static_cast<std::size_t>(v)] = scale * std::pow(10.0, e);
    }

    Vector lb;
    Matrix ub;
    symmetric_eigen(prob.gram_b(), ub, lb);
    std::vector<double> err(ladder.size(), 0.0);
    for (int f = 0; f < folds; ++f) {
        Matrix xtx_tr = Matrix::Zero(prob.p(), prob.p());
        Matrix xtx_te = Matrix::Zero(prob.p(), prob.p());
        Matrix c_tr = Matrix::Zero(prob.p(), prob.K());
        Matrix c_te = Matrix::Zero(prob.p(), prob.K());
        double y_te = 0.0;
        for (Index i = 0; i < n; ++i) {
            const auto xi = X.row(i).transpose();
            if (fold_of[static_cast<std::size_t>(i)] == f) {
                xtx_te.noalias() += xi * xi.transpose();
                c_te.noalias() += xi * ym.row(i);
                y_te += yw2[i];
            } else {
                xtx_tr.noalias() += xi * xi.transpose();
                c_tr.noalias() += xi * ym.row(i);
            }
        }
        Matrix vx;
        Vector lx;
        symmetric_eigen(xtx_tr, vx, lx);
        const Matrix c_spec = vx.transpose() * c_tr * ub;
        const Matrix curv = lx * lb.transpose();
        for (std::size_t v = 0; v < ladder.size(); ++v) {
            const Matrix g = vx * c_spec.cwiseQuotient((curv.array() + 2.0 * ladder[v]).matrix()) *
                             ub.transpose();
            const double quad = (xtx_te * g * prob.gram_b()).cwiseProduct(g).sum();
            err[v] += y_te - 2.0 * c_te.cwiseProduct(g).sum() + quad;
        }
    }
    const auto best = std::min_element(err.begin(), err.end()) - err.begin();
    return ladder[static_cast<std::size_t>(best)];
}

Matrix ridge_warm_start(const BridgeProblem& prob, double ridge_lambda) {
    return prob.ridge(ridge_lambda);
}

namespace {

void sparsify(Matrix& gamma) {
    const double cut = 1e-8 * gamma.cwiseAbs().maxCoeff();
    for (Index i = 0; i < gamma.size(); ++i) {
        if (std::abs(gamma.data()[i]) < cut) gamma.data()[i] = 0.0;
    }
}

}  // namespace

BridgeFit fit_group_bridge(const BridgeProblem& prob, const BridgeConfig& config,
                           const Matrix* warm_start) {
    config.validate();
    BridgeFit fit;
    fit.config = config;

    Matrix start;
    if (warm_start) {
        require(warm_start->rows() == prob.p() && warm_start->cols() == prob.K(),
                ErrorKind::dimension_mismatch, "warm start must be p x K");
        start = *warm_start;
        fit.ridge_lambda = config.ridge_lambda.value_or(0.0);
    } else {
        fit.ridge_lambda = config.ridge_lambda
                               ? *config.ridge_lambda
                               : select_ridge_lambda_cv(prob, 5, 20, config.ridge_cv_seed);
        start = ridge_warm_start(prob, fit.ridge_lambda);
    }

    const double lambda = config.lambda;
    const double alpha = config.alpha;
    const int inner =
        (alpha >= 1.0 && config.alpha_one_mode == AlphaOneMode::literal) ? 1 : config.S2;

    Matrix best = start;
    double best_obj = bridge_objective(prob, start, lambda, alpha);
    const Matrix zero = Matrix::Zero(prob.p(), prob.K());
    const double zero_obj = bridge_objective(prob, zero, lambda, alpha);
    if (zero_obj < best_obj) {
        best = zero;
        best_obj = zero_obj;
    }

    auto macro = [&](Matrix gamma, bool record) {
        double prev_norm = std::sqrt(prob.weighted_rss(gamma));
        for (int v = 1; v <= config.S1; ++v) {
            const Matrix D = lasso_weights(prob, gamma, alpha);
            gamma = admm_lasso_inner(prob, D, lambda, inner, gamma);

            Matrix candidate = gamma;
            sparsify(candidate);
            const double obj = bridge_objective(prob, candidate, lambda, alpha);
            const double norm = std::sqrt(prob.weighted_rss(gamma));
            if (record) {
                fit.objective_trace.push_back(obj);
                fit.residual_norm_trace.push_back(norm);
            }
            if (!std::isfinite(obj) || !std::isfinite(norm)) {
                std::ostringstream os;
                os << "objective became non-finite at macro iteration " << v << "; trace:";
                for (double o : fit.objective_trace) os << ' ' << o;
                throw Error(ErrorKind::divergence, os.str());
            }
            if (obj < best_obj) {
                best = candidate;
                best_obj = obj;
            }
            if (std::abs(norm - prev_norm) / (prev_norm + 1e-12) < config.early_stop_tol) {
                if (record) fit.converged_at = v;
                break;
            }
            prev_norm = norm;
        }
    };
    macro(start, true);

    // greedy pruning on the exact objective, then a refit on the reduced support
    if (lambda > 0.0 && alpha < 1.0) {
        for (int pass = 0; pass < kPrunePasses; ++pass) {
            std::vector<Index> order;
            for (Index i = 0; i < best.size(); ++i) {
                if (best.data()[i] != 0.0) order.push_back(i);
            }
            std::stable_sort(order.begin(), order.end(), [&](Index a, Index b) {
                return std::abs(best.data()[a]) < std::abs(best.data()[b]);
            });
            Matrix pruned = best;
            double pruned_obj = best_obj;
            for (Index i : order) {
                const double keep = pruned.data()[i];
                pruned.data()[i] = 0.0;
                const double obj = bridge_objective(prob, pruned, lambda, alpha);
                if (obj < pruned_obj) {
                    pruned_obj = obj;
                } else {
                    pruned.data()[i] = keep;
                }
            }
            if (!(pruned_obj < best_obj)) break;
            best = pruned;
            best_obj = pruned_obj;
            macro(pruned, false);
        }
    }

    fit.gamma = std::move(best);
    fit.objective = best_obj;
    fit.D = lasso_weights(prob, fit.gamma, alpha);
    return fit;
}

}  // namespace fgb
