#include "fgb/model_data.hpp"
#include "fgb/simbench.hpp"

#include <doctest.h>

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

TEST_SUITE("model_data") {

TEST_CASE("dataset validation") {
    const Vector grid = uniform_grid(4);
    CHECK_NOTHROW(FunctionalDataset(Matrix::Zero(3, 4), Matrix::Ones(3, 1), grid, {}));
    CHECK_THROWS_AS(FunctionalDataset(Matrix::Zero(1, 4), Matrix::Ones(1, 1), grid, {}), Error);
    CHECK_THROWS_AS(FunctionalDataset(Matrix::Zero(3, 4), Matrix::Ones(2, 1), grid, {}), Error);
    Matrix bad = Matrix::Zero(3, 4);
    bad(1, 2) = std::numeric_limits<double>::quiet_NaN();
    CHECK_THROWS_AS(FunctionalDataset(bad, Matrix::Ones(3, 1), grid, {}), Error);
    CHECK_THROWS_AS(FunctionalDataset(Matrix::Zero(3, 4), Matrix::Ones(3, 1), grid, {{0, 2}}),
                    Error);
}

TEST_CASE("phases from starts and boundaries") {
    const Vector grid = uniform_grid(11);
    const auto ph = phases_from_starts(grid, {0.4, 0.8});
    REQUIRE(ph.size() == 3);
    CHECK(ph[0].begin == 0);
    CHECK(ph[0].end == 4);
    CHECK(ph[1].end == 8);
    CHECK(ph[2].end == 11);
    try {
        phases_from_starts(grid, {0.45});
        FAIL("expected an error");
    } catch (const Error& e) {
        CHECK(std::string(e.what()).find("0.45") != std::string::npos);
    }
    const auto pb = phases_from_boundaries(uniform_grid(100), {0.4, 0.8});
    CHECK(uniform_grid(100)[pb[1].begin] >= 0.4);
    CHECK(uniform_grid(100)[pb[1].begin - 1] < 0.4);
    const FunctionalDataset ds(Matrix::Zero(2, 11), Matrix::Ones(2, 1), grid, ph);
    CHECK(ds.phase_of(3) == 0);
    CHECK(ds.phase_of(4) == 1);
    CHECK(ds.phase_of(10) == 2);
}

TEST_CASE("predict") {
    const BasisSystem bs = eval_basis(make_knots(6, 4), uniform_grid(9));
    CHECK(predict(Matrix::Ones(3, 2), Matrix::Zero(2, 6), bs).isZero());

    const BasisSystem b1 = eval_basis(make_knots(1, 1), uniform_grid(5));
    const Matrix g = (Matrix(1, 1) << 2.5).finished();
    CHECK((predict(Matrix::Ones(4, 1), g, b1).array() == 2.5).all());

    const Matrix X = random_matrix(5, 3, 1);
    const Matrix G = random_matrix(3, 6, 2);
    const Matrix P = predict(X, G, bs);
    double worst = 0.0;
    for (Index i = 0; i < 5; ++i) {
        for (Index m = 0; m < 9; ++m) {
            double s = 0.0;
            for (Index j = 0; j < 3; ++j) {
                for (Index k = 0; k < 6; ++k) s += X(i, j) * G(j, k) * bs.values(k, m);
            }
            worst = std::max(worst, std::abs(s - P(i, m)));
        }
    }
    CHECK(worst < 1e-12);
    const Matrix X2 = random_matrix(5, 3, 3);
    const Matrix G2 = random_matrix(3, 6, 4);
    CHECK((predict(X + X2, G, bs) - P - predict(X2, G, bs)).cwiseAbs().maxCoeff() < 1e-12);
    CHECK((predict(X, G + G2, bs) - P - predict(X, G2, bs)).cwiseAbs().maxCoeff() < 1e-12);
    CHECK_THROWS_AS(predict(X, random_matrix(2, 6, 5), bs), Error);
}

TEST_CASE("coefficient functions and zero flags") {
    const BasisSystem bs = eval_basis(make_knots(8, 4), uniform_grid(50));
    Matrix g = Matrix::Zero(2, 8);
    g(1, 3) = 1.7;
    const auto cc = coefficient_functions(g, bs);
    CHECK(cc.values.row(0).isZero());
    CHECK(cc.zero.row(0).all());
    for (Index m = 0; m < 50; ++m) {
        CHECK(cc.values(1, m) == doctest::Approx(1.7 * bs.values(3, m)));
        const bool group_zero = bs.values(3, m) == 0.0;
        CHECK(cc.zero(1, m) == group_zero);
    }
}

TEST_CASE("sparse oracle coefficients are flagged zero where the truth vanishes") {
    const auto oracle = sparse_spline_oracle([](double t) { return true_beta(3, t); }, 30, 4);
    const Vector grid = uniform_grid(201);
    const auto cc = coefficient_functions(oracle.gamma_tilde.transpose(), make_knots(30, 4), grid);
    for (Index m = 0; m < grid.size(); ++m) {
        if (grid[m] < 0.2 || grid[m] >= 0.8) CHECK(cc.zero(0, m));
    }
}

TEST_CASE("intercept column") {
    const FunctionalDataset ds(random_matrix(3, 4, 1), random_matrix(3, 2, 2), uniform_grid(4), {});
    const auto di = ds.with_intercept();
    CHECK(di.p() == 3);
    CHECK((di.X().col(0).array() == 1.0).all());
    CHECK(di.X().rightCols(2) == ds.X());
}

}
