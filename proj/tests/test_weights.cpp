#include "fgb/solver.hpp"
#include "fgb/weights.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

using namespace fgb;

namespace {

Matrix random_matrix(Index r, Index c, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> nd;
    Matrix m(r, c);
    for (Index i = 0; i < m.size(); ++i) m.data()[i] = nd(rng);
    return m;
}

}  // namespace

TEST_SUITE("weights") {

TEST_CASE("pointwise OLS") {
    const Matrix X = random_matrix(20, 3, 1);
    const Matrix C = random_matrix(3, 7, 2);
    CHECK((ols_pointwise(X, X * C) - C).cwiseAbs().maxCoeff() < 1e-10);

    const Matrix x = (Matrix(2, 1) << 1.5, -2.0).finished();
    const Matrix y = (Matrix(2, 1) << 3.0, 1.0).finished();
    CHECK(ols_pointwise(x, y)(0, 0) == doctest::Approx((1.5 * 3.0 - 2.0 * 1.0) / (1.5 * 1.5 + 4.0)));

    const Matrix Y = random_matrix(20, 7, 3);
    std::vector<int> perm(20);
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), std::mt19937_64(4));
    Matrix Xp(20, 3), Yp(20, 7);
    for (int i = 0; i < 20; ++i) {
        Xp.row(i) = X.row(perm[i]);
        Yp.row(i) = Y.row(perm[i]);
    }
    CHECK((ols_pointwise(X, Y) - ols_pointwise(Xp, Yp)).cwiseAbs().maxCoeff() < 1e-12);

    Matrix Xs = X;
    Xs.col(2) = Xs.col(0);
    try {
        ols_pointwise(Xs, Y);
        FAIL("expected an error");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::rank_deficient);
    }
}

TEST_CASE("local linear reproduces constants and lines") {
    const Vector grid = uniform_grid(41);
    const std::vector<Phase> phases{{0, 41}};
    Matrix c = Matrix::Constant(2, 41, 3.25);
    const auto fc = local_linear_theta(c, grid, phases, std::vector<double>{0.1});
    CHECK((fc.theta.array() - 3.25).abs().maxCoeff() < 1e-12);
    CHECK(fc.slope.cwiseAbs().maxCoeff() < 1e-12);

    Matrix line(1, 41);
    for (Index m = 0; m < 41; ++m) line(0, m) = 2.0 - 3.0 * grid[m];
    const auto fl = local_linear_theta(line, grid, phases, std::vector<double>{1.0});
    CHECK((fl.theta - line).cwiseAbs().maxCoeff() < 1e-8);
}

TEST_CASE("phases are smoothed separately") {
    const Vector grid = uniform_grid(40);
    const std::vector<Phase> phases{{0, 20}, {20, 40}};
    Matrix r = random_matrix(3, 40, 7);
    r.rightCols(20).array() += 5.0;
    const std::vector<double> bw{0.2, 0.3};
    const auto joint = local_linear_theta(r, grid, phases, bw);
    for (int p = 0; p < 2; ++p) {
        const Phase& ph = phases[p];
        const Vector sub = grid.segment(ph.begin, ph.size());
        const auto alone = local_linear_theta(r.middleCols(ph.begin, ph.size()), sub,
                                              std::vector<Phase>{{0, ph.size()}},
                                              std::vector<double>{bw[p]});
        CHECK((joint.theta.middleCols(ph.begin, ph.size()) - alone.theta).cwiseAbs().maxCoeff() <
              1e-12);
    }
}

TEST_CASE("tiny bandwidth is rejected") {
    const Vector grid = uniform_grid(30);
    CHECK_THROWS_AS(local_linear_smoother(grid, 1e-4), Error);
    const std::vector<Phase> phases{{0, 30}};
    try {
        select_bandwidth_gcv(random_matrix(2, 30, 1), grid, phases, {{1e-5, 2e-5}});
        FAIL("expected an error");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::degenerate_smoother);
    }
}

TEST_CASE("single candidate is returned unchanged") {
    const Vector grid = uniform_grid(30);
    const std::vector<Phase> phases{{0, 30}};
    const auto b = select_bandwidth_gcv(random_matrix(2, 30, 1), grid, phases, {{0.123}});
    CHECK(b[0] == 0.123);
}

TEST_CASE("pure noise favours wide bandwidths") {
    const Vector grid = uniform_grid(50);
    const std::vector<Phase> phases{{0, 50}};
    const auto cand = default_bandwidth_candidates(grid, phases[0]);
    const double mid = cand[cand.size() / 2 - 1];
    int upper = 0;
    for (int s = 0; s < 100; ++s) {
        const auto b = select_bandwidth_gcv(random_matrix(20, 50, 100 + s), grid, phases);
        if (b[0] > mid) ++upper;
    }
    CHECK(upper >= 80);
}

TEST_CASE("noiseless smooth residuals are reproduced") {
    const Vector grid = uniform_grid(200);
    const std::vector<Phase> phases{{0, 200}};
    Matrix r(1, 200);
    for (Index m = 0; m < 200; ++m) r(0, m) = 0.01 * std::sin(2.0 * M_PI * grid[m]);
    const auto cand = default_bandwidth_candidates(grid, phases[0]);
    const auto b = select_bandwidth_gcv(r, grid, phases);
    const auto fit = local_linear_theta(r, grid, phases, b);
    CHECK((fit.theta - r).squaredNorm() < 1e-6);
    const double chosen = gcv_score(r, grid, phases[0], b[0]);
    for (double c : cand) CHECK(chosen <= gcv_score(r, grid, phases[0], c));
    CHECK(gcv_score(r, grid, phases[0], cand.back()) > chosen);
}

TEST_CASE("weight matrix from variance components") {
    const auto wi = weight_model_from_components(Matrix::Zero(5, 5), 1.0);
    CHECK((wi.sigma - Matrix::Identity(5, 5)).cwiseAbs().maxCoeff() < 1e-15);
    CHECK((wi.W - Matrix::Identity(5, 5)).cwiseAbs().maxCoeff() < 1e-12);

    Matrix st = Matrix::Zero(2, 2);
    st(0, 0) = 3.0;
    const auto wd = weight_model_from_components(st, 1.0);
    CHECK(wd.W(0, 0) == doctest::Approx(0.5));
    CHECK(wd.W(1, 1) == doctest::Approx(1.0));
    CHECK(std::abs(wd.W(0, 1)) < 1e-14);

    const Matrix A = random_matrix(6, 6, 9);
    const auto wr = weight_model_from_components(A * A.transpose(), 0.3);
    CHECK((wr.W - wr.W.transpose()).cwiseAbs().maxCoeff() < 1e-14);
    CHECK((wr.W * wr.W.transpose() * wr.sigma - Matrix::Identity(6, 6)).cwiseAbs().maxCoeff() <
          1e-8);

    Matrix indefinite = Matrix::Identity(3, 3);
    indefinite(0, 0) = -0.5;
    const auto wc = weight_model_from_components(indefinite, 1.0);
    CHECK(Eigen::SelfAdjointEigenSolver<Matrix>(wc.sigma_theta).eigenvalues().minCoeff() >= -1e-8);

    try {
        weight_model_from_components(Matrix::Zero(3, 3), 1e-13);
        FAIL("expected an error");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::degenerate_noise);
    }
}

TEST_CASE("estimated weights on data with zero random effects") {
    const Index n = 40, T = 30;
    const Matrix X = random_matrix(n, 2, 1);
    const Matrix E = random_matrix(n, T, 2);
    const FunctionalDataset ds(X * random_matrix(2, T, 3) + E, X, uniform_grid(T), {});
    const Matrix beta = ols_pointwise(ds.X(), ds.Y());
    const auto wm = estimate_weight_model(ds, beta, Matrix::Zero(n, T));
    CHECK(wm.sigma_theta.isZero());
    const Matrix resid = ds.Y() - ds.X() * beta;
    CHECK(wm.sigma2 == doctest::Approx(resid.squaredNorm() / (n * T)));
    CHECK((wm.W - Matrix::Identity(T, T) / std::sqrt(wm.sigma2)).cwiseAbs().maxCoeff() < 1e-10);

    const auto full = estimate_weights(ds);
    CHECK(full.bandwidth.size() == 1);
    const Eigen::SelfAdjointEigenSolver<Matrix> eig(full.sigma);
    const Eigen::SelfAdjointEigenSolver<Matrix> ew(full.W * full.W.transpose());
    CHECK(ew.eigenvalues().minCoeff() >= 1.0 / eig.eigenvalues().maxCoeff() * (1 - 1e-8));
    CHECK(ew.eigenvalues().maxCoeff() <= 1.0 / eig.eigenvalues().minCoeff() * (1 + 1e-8));
    const auto id = with_identity_weight(full);
    CHECK(id.W == Matrix::Identity(T, T));
    CHECK(id.sigma == full.sigma);
}

TEST_CASE("homogeneous weights leave the unpenalized argmin unchanged") {
    const Index n = 12, T = 20;
    const BasisSystem bs = eval_basis(make_knots(6, 4), uniform_grid(T));
    const Matrix X = random_matrix(n, 2, 5);
    const Matrix Y = X * random_matrix(2, 6, 6) * bs.values;
    const BridgeProblem a(X, Y, bs, Matrix::Identity(T, T));
    const BridgeProblem b(X, Y, bs, Matrix::Identity(T, T) / 0.7);
    CHECK((a.gls() - b.gls()).cwiseAbs().maxCoeff() < 1e-10);
}

}
