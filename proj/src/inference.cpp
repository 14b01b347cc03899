#include "fgb/inference.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>
#include <thread>

namespace fgb {

std::vector<CoefIndex> support_of(const Matrix& gamma) {
    std::vector<CoefIndex> out;
    for (Index j = 0; j < gamma.rows(); ++j) {
        for (Index k = 0; k < gamma.cols(); ++k) {
            if (gamma(j, k) != 0.0) out.emplace_back(j, k);
        }
    }
    return out;
}

std::vector<CoefIndex> full_index(Index p, Index K) {
    std::vector<CoefIndex> out;
    out.reserve(static_cast<std::size_t>(p * K));
    for (Index j = 0; j < p; ++j) {
        for (Index k = 0; k < K; ++k) out.emplace_back(j, k);
    }
    return out;
}

namespace {

Matrix kron_restricted(const Matrix& A, const Matrix& Bm, const std::vector<CoefIndex>& idx) {
    const Index s = static_cast<Index>(idx.size());
    Matrix out(s, s);
    for (Index r = 0; r < s; ++r) {
        const auto [j, k] = idx[static_cast<std::size_t>(r)];
        for (Index c = 0; c < s; ++c) {
            const auto [j2, k2] = idx[static_cast<std::size_t>(c)];
            out(r, c) = A(j, j2) * Bm(k, k2);
        }
    }
    return out;
}

}  // namespace

Matrix build_P(const BridgeProblem& prob, const std::vector<CoefIndex>& idx, double lambda,
               const Matrix& D) {
    require(!idx.empty(), ErrorKind::degenerate_support, "the fit has an empty support");
    require(D.rows() == prob.p() && D.cols() == prob.K(), ErrorKind::dimension_mismatch,
            "D must be p x K");
    Matrix P = kron_restricted(prob.xtx(), prob.gram_b(), idx);
    for (Index r = 0; r < P.rows(); ++r) {
        const auto [j, k] = idx[static_cast<std::size_t>(r)];
        P(r, r) += lambda * D(j, k);
    }
    return P;
}

Matrix build_Q_dense(const BridgeProblem& prob, const std::vector<CoefIndex>& idx) {
    const Index n = prob.n();
    const Index T = prob.T();
    Matrix Q(static_cast<Index>(idx.size()), n * T);
    for (Index r = 0; r < Q.rows(); ++r) {
        const auto [j, k] = idx[static_cast<std::size_t>(r)];
        for (Index i = 0; i < n; ++i) {
            Q.row(r).segment(i * T, T) = prob.X()(i, j) * prob.wwb().col(k).transpose();
        }
    }
    return Q;
}

Matrix build_QSQ(const BridgeProblem& prob, const std::vector<CoefIndex>& idx,
                 const Matrix& sigma) {
    require(sigma.rows() == prob.T() && sigma.cols() == prob.T(), ErrorKind::dimension_mismatch,
            "noise covariance must be T x T");
    const Matrix H = prob.wwb().transpose() * sigma * prob.wwb();
    return kron_restricted(prob.xtx(), H, idx);
}

Matrix clip_psd(const Matrix& S) {
    const Eigen::SelfAdjointEigenSolver<Matrix> eig(0.5 * (S + S.transpose()));
    const Vector ev = eig.eigenvalues().cwiseMax(0.0);
    Matrix out = eig.eigenvectors() * ev.asDiagonal() * eig.eigenvectors().transpose();
    return 0.5 * (out + out.transpose());
}

Matrix sandwich(const Matrix& P, const Matrix& qsq) {
    const Eigen::SelfAdjointEigenSolver<Matrix> eig(0.5 * (P + P.transpose()));
    const Vector& ev = eig.eigenvalues();
    const double hi = ev.cwiseAbs().maxCoeff();
    const double lo = ev.cwiseAbs().minCoeff();
    if (!(hi > 0.0) || !(lo > 1e-13 * hi)) {
        std::ostringstream os;
        os << "P_lambda is numerically singular (condition number "
           << (lo > 0.0 ? hi / lo : std::numeric_limits<double>::infinity()) << ")";
        throw Error(ErrorKind::degenerate_support, os.str());
    }
    const Matrix pinv =
        eig.eigenvectors() * ev.cwiseInverse().asDiagonal() * eig.eigenvectors().transpose();
    return clip_psd(pinv * qsq * pinv);
}

GammaCovariance covariance_gamma(const BridgeProblem& prob, const Matrix& gamma, double lambda,
                                 const Matrix& D, const Matrix& sigma) {
    GammaCovariance out;
    out.support = support_of(gamma);
    out.cov = sandwich(build_P(prob, out.support, lambda, D), build_QSQ(prob, out.support, sigma));
    return out;
}

Matrix expand_covariance(const BridgeProblem& prob, const Matrix& gamma, const Matrix& D,
                         const Matrix& sigma, const ExpansionConfig& config) {
    const double top = gamma.cwiseAbs().maxCoeff();
    const double eps = config.eps ? *config.eps : (top > 0.0 ? 1e-4 * top : 1e-4);
    require(eps > 0.0, ErrorKind::invalid_configuration, "perturbation size must be positive");

    Matrix g = gamma;
    bool perturbed = false;
    std::mt19937_64 rng(config.seed);
    std::uniform_real_distribution<double> unif(-eps, eps);
    for (Index j = 0; j < g.rows(); ++j) {
        for (Index k = 0; k < g.cols(); ++k) {
            if (g(j, k) == 0.0) {
                double v = 0.0;
                while (v == 0.0) v = unif(rng);
                g(j, k) = v;
                perturbed = true;
            }
        }
    }
    const Matrix Dp = perturbed ? lasso_weights(prob, g, config.alpha) : D;
    const auto idx = full_index(prob.p(), prob.K());
    return sandwich(build_P(prob, idx, config.lambda, Dp), build_QSQ(prob, idx, sigma));
}

Matrix beta_covariance(const Matrix& full_cov, const Matrix& B, Index j) {
    const Index K = B.rows();
    require(full_cov.rows() == full_cov.cols() && full_cov.rows() % K == 0 &&
                (j + 1) * K <= full_cov.rows() && j >= 0,
            ErrorKind::dimension_mismatch, "covariance does not match the basis");
    const Matrix block = full_cov.block(j * K, j * K, K, K);
    return B.transpose() * block * B;
}

std::vector<double> simulate_statistic(const Matrix& cov, int draws, std::uint64_t seed,
                                       int threads,
                                       const std::function<double(const Vector&)>& stat) {
    require(draws >= 1, ErrorKind::invalid_configuration, "need at least one draw");
    require(cov.rows() == cov.cols(), ErrorKind::dimension_mismatch, "covariance must be square");
    const Eigen::SelfAdjointEigenSolver<Matrix> eig(0.5 * (cov + cov.transpose()));
    const Vector& ev = eig.eigenvalues();
    const double scale = ev.cwiseAbs().maxCoeff();
    if (ev.minCoeff() < -1e-8 * std::max(scale, 1.0)) {
        std::ostringstream os;
        os << "covariance has eigenvalue " << ev.minCoeff() << " after symmetrization";
        throw Error(ErrorKind::not_psd, os.str());
    }
    // basis-projected covariances are low rank; drop the null directions
    Index rank = 0;
    while (rank < ev.size() && ev[ev.size() - 1 - rank] > 1e-12 * scale) ++rank;
    const Matrix factor = eig.eigenvectors().rightCols(std::max<Index>(rank, 1)) *
                          ev.tail(std::max<Index>(rank, 1)).cwiseMax(0.0).cwiseSqrt().asDiagonal();

    const int chunks = (draws + kDrawChunk - 1) / kDrawChunk;
    std::vector<double> out(static_cast<std::size_t>(draws));
    auto work = [&](int worker, int stride) {
        Matrix Z(factor.cols(), kDrawChunk);
        Vector g(factor.rows());
        for (int c = worker; c < chunks; c += stride) {
            std::mt19937_64 rng(derive_seed(seed, static_cast<std::uint64_t>(c)));
            std::normal_distribution<double> normal;
            const int m = std::min(kDrawChunk, draws - c * kDrawChunk);
            for (int col = 0; col < m; ++col) {
                for (Index r = 0; r < Z.rows(); ++r) Z(r, col) = normal(rng);
            }
            const Matrix G = factor * Z.leftCols(m);
            for (int col = 0; col < m; ++col) {
                g = G.col(col);
                out[static_cast<std::size_t>(c * kDrawChunk + col)] = stat(g);
            }
        }
    };
    const int nt = std::max(1, std::min(threads, chunks));
    if (nt == 1) {
        work(0, 1);
    } else {
        std::vector<std::thread> pool;
        for (int w = 0; w < nt; ++w) pool.emplace_back(work, w, nt);
        for (auto& t : pool) t.join();
    }
    return out;
}

namespace {

Vector pointwise_sd(const Matrix& cov) {
    return cov.diagonal().cwiseMax(0.0).cwiseSqrt();
}

}  // namespace

ConfidenceBand joint_band(const Vector& beta_hat, const Matrix& beta_cov, double level, int draws,
                          std::uint64_t seed, int threads) {
    require(level > 0.0 && level < 1.0, ErrorKind::invalid_configuration,
            "band level must lie in (0, 1)");
    require(draws >= 1000, ErrorKind::invalid_configuration, "need at least 1000 draws");
    require(beta_cov.rows() == beta_hat.size() && beta_cov.cols() == beta_hat.size(),
            ErrorKind::dimension_mismatch, "covariance does not match the curve");
    ConfidenceBand band;
    band.level = level;
    band.draws = draws;
    band.estimate = beta_hat;
    band.sd = pointwise_sd(beta_cov);

    std::vector<Index> active;
    for (Index t = 0; t < band.sd.size(); ++t) {
        if (band.sd[t] > 0.0) active.push_back(t);
    }
    if (!active.empty()) {
        const Vector sd = band.sd;
        auto maxima = simulate_statistic(beta_cov, draws, seed, threads, [&](const Vector& g) {
            double m = 0.0;
            for (Index t : active) m = std::max(m, std::abs(g[t]) / sd[t]);
            return m;
        });
        std::sort(maxima.begin(), maxima.end());
        const auto pos = static_cast<std::size_t>(std::ceil(level * draws)) - 1;
        band.critical = maxima[std::min(pos, maxima.size() - 1)];
    }
    band.lower = beta_hat - band.critical * band.sd;
    band.upper = beta_hat + band.critical * band.sd;
    return band;
}

double suppression_test(const Vector& beta_hat, const Matrix& beta_cov, Index first, Index last,
                        int draws, std::uint64_t seed, int threads) {
    require(beta_cov.rows() == beta_hat.size() && beta_cov.cols() == beta_hat.size(),
            ErrorKind::dimension_mismatch, "covariance does not match the curve");
    if (first < 0 || last > beta_hat.size() || first >= last) {
        throw Error(ErrorKind::empty_window, "suppression window is empty");
    }
    const Vector sd = pointwise_sd(beta_cov);
    std::vector<Index> active;
    for (Index t = first; t < last; ++t) {
        if (sd[t] > 0.0) active.push_back(t);
    }
    require(!active.empty(), ErrorKind::empty_window,
            "standard deviation is zero everywhere on the window");
    double z = std::numeric_limits<double>::infinity();
    for (Index t : active) z = std::min(z, beta_hat[t] / sd[t]);

    const auto minima = simulate_statistic(beta_cov, draws, seed, threads, [&](const Vector& g) {
        double m = std::numeric_limits<double>::infinity();
        for (Index t : active) m = std::min(m, g[t] / sd[t]);
        return m;
    });
    const auto hits = std::count_if(minima.begin(), minima.end(), [&](double v) { return v <= z; });
    return static_cast<double>(hits) / static_cast<double>(draws);
}

}  // namespace fgb
