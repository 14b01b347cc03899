#include "fgb/tuning.hpp"

#include <doctest.h>

#include <cmath>
#include <random>

using namespace fgb;

namespace {

Matrix random_matrix(Index r, Index c, std::uint64_t seed, double sd = 1.0) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> nd(0.0, sd);
    Matrix m(r, c);
    for (Index i = 0; i < m.size(); ++i) m.data()[i] = nd(rng);
    return m;
}

GridCell cell(double lambda, double alpha, double score) {
    GridCell c;
    c.lambda = lambda;
    c.alpha = alpha;
    c.score = score;
    c.ok = std::isfinite(score);
    return c;
}

}  // namespace

TEST_SUITE("tuning") {

TEST_CASE("GLS recovers noiseless coefficients") {
    const BasisSystem bs = eval_basis(make_knots(7, 4), uniform_grid(30));
    const Matrix X = random_matrix(20, 3, 1);
    const Matrix gamma = random_matrix(3, 7, 2);
    const BridgeProblem prob(X, X * gamma * bs.values, bs, Matrix::Identity(30, 30));
    const auto g = gls_estimate(prob);
    CHECK((g.gamma - gamma).cwiseAbs().maxCoeff() < 1e-8);
    CHECK(g.sigma2 < 1e-12);
}

TEST_CASE("GLS with identity weights is the two-sided projection") {
    const BasisSystem bs = eval_basis(make_knots(5, 4), uniform_grid(12));
    const Matrix X = random_matrix(9, 2, 3);
    const Matrix Y = random_matrix(9, 12, 4);
    const BridgeProblem prob(X, Y, bs, Matrix::Identity(12, 12));
    Matrix design(9 * 12, 10);
    Vector y(9 * 12);
    for (Index i = 0; i < 9; ++i) {
        for (Index m = 0; m < 12; ++m) {
            y[i * 12 + m] = Y(i, m);
            for (Index j = 0; j < 2; ++j) {
                for (Index k = 0; k < 5; ++k) design(i * 12 + m, j * 5 + k) = X(i, j) * bs.values(k, m);
            }
        }
    }
    const Vector v = design.colPivHouseholderQr().solve(y);
    const auto g = gls_estimate(prob);
    for (Index j = 0; j < 2; ++j) {
        for (Index k = 0; k < 5; ++k) CHECK(std::abs(g.gamma(j, k) - v[j * 5 + k]) < 1e-10);
    }
    CHECK(g.rss == doctest::Approx((y - design * v).squaredNorm()).epsilon(1e-10));
    CHECK(g.sigma2 == doctest::Approx(g.rss / (9 * 12)));
    CHECK((g.gamma - prob.ridge(0.0)).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("EBIC constant") {
    CHECK(ebic_nu(100, 3, 30) == doctest::Approx(0.5));
    CHECK(ebic_nu(90, 3, 30) == doctest::Approx(0.5));
    CHECK(ebic_nu(10, 1, 1000000) == doctest::Approx(1.0 - 1.0 / 12.0).epsilon(1e-12));
}

TEST_CASE("adjusted EBIC") {
    CHECK(adjusted_ebic(3.7, 3.7, 0, 100, 50, 3, 30, 0.5) == 50.0);
    const double a = adjusted_ebic(5.0, 2.0, 10, 100, 50, 3, 30, 0.5);
    const double b = adjusted_ebic(5.0, 2.0, 20, 100, 50, 3, 30, 0.5);
    CHECK(b - a == doctest::Approx(10.0 * (std::log(100.0) + 0.5 * std::log(90.0)) / 100.0));
    CHECK(b - a == doctest::Approx(0.6855).epsilon(1e-3));
    try {
        adjusted_ebic(1.0, 0.0, 1, 100, 50, 3, 30, 0.5);
        FAIL("expected an error");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::degenerate_gls);
    }
}

TEST_CASE("EBIC of the GLS and null fits") {
    const BasisSystem bs = eval_basis(make_knots(6, 4), uniform_grid(20));
    const Matrix X = random_matrix(30, 2, 5);
    const BridgeProblem prob(X, X * random_matrix(2, 6, 6) * bs.values + random_matrix(30, 20, 7),
                             bs, Matrix::Identity(20, 20));
    const auto g = gls_estimate(prob);
    const double nu = ebic_nu(30, 2, 6);
    const Index df = degrees_of_freedom(g.gamma);
    CHECK(df == 12);
    const double s = adjusted_ebic(prob.weighted_rss(g.gamma), g.rss, df, 30, 20, 2, 6, nu);
    CHECK(s - df * (std::log(30.0) + nu * std::log(12.0)) / 30.0 == doctest::Approx(20.0));
    const double z = adjusted_ebic(prob.weighted_rss(Matrix::Zero(2, 6)), g.rss, 0, 30, 20, 2, 6, nu);
    CHECK(z == doctest::Approx(20.0 * prob.yw_squared() / g.rss));
}

TEST_CASE("unadjusted EBIC") {
    const double v = unadjusted_ebic(8.0, 0.5, 4, 10, 6, 2, 5, 0.5);
    CHECK(v == doctest::Approx(8.0 / 5.0 + 6 * std::log(0.5) + 4 * (std::log(10.0) + 0.5 * std::log(10.0)) / 10));
}

TEST_CASE("grid specification") {
    const GridSpec def;
    const auto l = def.lambdas();
    const auto a = def.alphas();
    CHECK(l.size() == 100);
    CHECK(a.size() == 18);
    CHECK(l.front() == doctest::Approx(0.1));
    CHECK(l.back() == doctest::Approx(100.0));
    CHECK(a.front() == doctest::Approx(0.05));
    CHECK(a.back() == doctest::Approx(0.95));
    CHECK(std::log(l[1] / l[0]) == doctest::Approx(std::log(l[99] / l[98])));

    const auto p = GridSpec::parse("5:0.5:50,3:0.2:0.8");
    CHECK(p.num_lambda == 5);
    CHECK(p.lambda_max == 50.0);
    CHECK(p.alphas()[1] == doctest::Approx(0.5));
    CHECK(GridSpec::parse(p.to_string()).lambdas() == p.lambdas());
    CHECK_THROWS_AS(GridSpec::parse("5:0.5"), Error);
    CHECK_THROWS_AS(GridSpec::parse("5:0.5:50,3:0.2:1.5"), Error);
    CHECK_THROWS_AS(GridSpec::parse("5:-1:50,3:0.2:0.8"), Error);
}

TEST_CASE("tie breaking") {
    std::vector<GridCell> cells{cell(1, 0.1, 2.0), cell(1, 0.5, 1.0), cell(2, 0.5, 1.0),
                                cell(2, 0.3, 1.0), cell(3, 0.1, 5.0)};
    CHECK(select_best(cells) == 3);
    std::vector<GridCell> failed{cell(1, 0.1, INFINITY), cell(2, 0.1, INFINITY)};
    failed[0].ok = failed[1].ok = false;
    try {
        select_best(failed);
        FAIL("expected an error");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::all_fits_failed);
    }
}

TEST_CASE("grid search") {
    const BasisSystem bs = eval_basis(make_knots(8, 4), uniform_grid(25));
    const Matrix X = random_matrix(30, 3, 8);
    Matrix gamma = random_matrix(3, 8, 9);
    gamma.row(0).setZero();
    const BridgeProblem prob(X, X * gamma * bs.values + random_matrix(30, 25, 10, 0.5), bs,
                             Matrix::Identity(25, 25));
    TuningOptions opt;

    GridSpec one;
    one.num_lambda = 1;
    one.lambda_min = one.lambda_max = 2.0;
    one.num_alpha = 1;
    one.alpha_min = one.alpha_max = 0.4;
    const auto g1 = grid_search(prob, one, opt);
    CHECK(g1.cells.size() == 1);
    CHECK(g1.best_cell().lambda == 2.0);
    CHECK(g1.best_cell().alpha == 0.4);

    const GridSpec small = GridSpec::parse("6:0.1:100,4:0.1:0.9");
    const auto a = grid_search(prob, small, opt);
    opt.threads = 3;
    const auto b = grid_search(prob, small, opt);
    REQUIRE(a.cells.size() == 24);
    for (std::size_t i = 0; i < a.cells.size(); ++i) {
        CHECK(a.cells[i].score == b.cells[i].score);
        CHECK(a.cells[i].gamma == b.cells[i].gamma);
    }
    CHECK(a.best == b.best);
    for (const auto& c : a.cells) {
        CHECK(c.ok);
        CHECK(c.score >= a.best_cell().score);
        CHECK(c.df == degrees_of_freedom(c.gamma));
    }
    CHECK(a.at(2, 1).lambda == a.lambdas[2]);
    CHECK(a.at(2, 1).alpha == a.alphas[1]);
    CHECK(a.scores()(2, 1) == a.at(2, 1).score);
}

}
