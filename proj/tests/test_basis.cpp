#include "fgb/basis.hpp"

#include <doctest.h>

#include <cmath>
#include <functional>

using namespace fgb;

namespace {

// plain Cox-de Boor recursion on the full knot vector
double cox_de_boor(const std::vector<double>& u, int k, int order, double t) {
    if (order == 1) {
        if (u[k] <= t && t < u[k + 1]) return 1.0;
        return 0.0;
    }
    double a = 0.0, b = 0.0;
    if (u[k + order - 1] > u[k]) a = (t - u[k]) / (u[k + order - 1] - u[k]) * cox_de_boor(u, k, order - 1, t);
    if (u[k + order] > u[k + 1]) {
        b = (u[k + order] - t) / (u[k + order] - u[k + 1]) * cox_de_boor(u, k + 1, order - 1, t);
    }
    return a + b;
}

}  // namespace

TEST_SUITE("basis") {

TEST_CASE("make_knots layouts") {
    const auto k11 = make_knots(1, 1);
    CHECK(k11.knots() == std::vector<double>{0.0, 1.0});
    const auto k44 = make_knots(4, 4);
    CHECK(k44.knots() == std::vector<double>{0, 0, 0, 0, 1, 1, 1, 1});
    const auto k64 = make_knots(6, 4);
    REQUIRE(k64.knots().size() == 10);
    CHECK(k64[4] == doctest::Approx(1.0 / 3.0));
    CHECK(k64[5] == doctest::Approx(2.0 / 3.0));
    CHECK_THROWS_AS(make_knots(3, 4), Error);
    try {
        make_knots(3, 4);
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::invalid_configuration);
    }
}

TEST_CASE("degree zero single indicator") {
    const auto k = make_knots(1, 1);
    CHECK(eval_basis_at(k, 0.0)[0] == 1.0);
    CHECK(eval_basis_at(k, 0.5)[0] == 1.0);
    CHECK(eval_basis_at(k, 1.0)[0] == 1.0);
}

TEST_CASE("Bernstein basis for K = q = 4") {
    const auto k = make_knots(4, 4);
    for (double t : {0.0, 0.2, 0.5, 0.9}) {
        const Vector v = eval_basis_at(k, t);
        const double s = 1.0 - t;
        CHECK(v[0] == doctest::Approx(s * s * s).epsilon(1e-14));
        CHECK(v[1] == doctest::Approx(3 * t * s * s).epsilon(1e-14));
        CHECK(v[2] == doctest::Approx(3 * t * t * s).epsilon(1e-14));
        CHECK(v[3] == doctest::Approx(t * t * t).epsilon(1e-14));
    }
}

TEST_CASE("K = 6, q = 4 matches an independent recursion") {
    const auto k = make_knots(6, 4);
    for (double t : {0.0, 0.1, 1.0 / 3.0, 0.5, 0.7, 0.99}) {
        const Vector v = eval_basis_at(k, t);
        for (int b = 0; b < 6; ++b) CHECK(std::abs(v[b] - cox_de_boor(k.knots(), b, 4, t)) < 1e-14);
    }
}

TEST_CASE("degree zero, K = 2") {
    const auto k = make_knots(2, 1);
    const BasisSystem bs = eval_basis(k, (Vector(1) << 0.25).finished());
    CHECK(bs.values(0, 0) == 1.0);
    CHECK(bs.values(1, 0) == 0.0);
    const auto ind = support_indicator(bs, 0);
    CHECK(ind == std::vector<bool>{true, false});
}

TEST_CASE("partition of unity, non-negativity and local support") {
    for (int K : {10, 30, 50}) {
        for (int q : {1, 2, 3, 4}) {
            const BasisSystem bs = eval_basis(make_knots(K, q), uniform_grid(257));
            CHECK((bs.values.colwise().sum().array() - 1.0).abs().maxCoeff() < 1e-12);
            CHECK(bs.values.minCoeff() >= 0.0);
            for (Index m = 0; m < bs.values.cols(); ++m) {
                CHECK((bs.values.col(m).array() != 0.0).count() <= q);
            }
            for (Index r = 0; r < bs.values.rows(); ++r) {
                Index first = -1, last = -1;
                for (Index m = 0; m < bs.values.cols(); ++m) {
                    if (bs.values(r, m) != 0.0) {
                        if (first < 0) first = m;
                        last = m;
                    }
                }
                if (first < 0) continue;
                for (Index m = first; m <= last; ++m) CHECK(bs.values(r, m) != 0.0);
            }
        }
    }
}

TEST_CASE("K = 30, q = 4, T = 100: at most four non-zeros per column") {
    const BasisSystem bs = eval_basis(make_knots(30, 4), uniform_grid(100));
    for (Index m = 0; m < 100; ++m) {
        const auto ind = support_indicator(bs, m);
        int count = 0;
        for (bool b : ind) count += b;
        CHECK(count <= 4);
        CHECK(count == bs.column_support[m].size());
    }
}

TEST_CASE("interior point has exactly q contiguous supporting bases") {
    const BasisSystem bs = eval_basis(make_knots(10, 4), (Vector(1) << 0.43).finished());
    const auto ind = support_indicator(bs, 0);
    int count = 0, first = -1, last = -1;
    for (int k = 0; k < 10; ++k) {
        if (ind[k]) {
            ++count;
            if (first < 0) first = k;
            last = k;
        }
    }
    CHECK(count == 4);
    CHECK(last - first == 3);
}

TEST_CASE("right endpoint belongs to the last q bases") {
    // with exact structural zeros only the last basis is non-zero at t = 1
    const int K = 12, q = 4;
    const BasisSystem bs = eval_basis(make_knots(K, q), (Vector(1) << 1.0).finished());
    const auto ind = support_indicator(bs, 0);
    for (int k = 0; k < K - q; ++k) CHECK_FALSE(ind[k]);
    CHECK(ind[K - 1]);
    CHECK(bs.values(K - 1, 0) == 1.0);
    CHECK(std::abs(bs.values.col(0).sum() - 1.0) < 1e-15);
}

TEST_CASE("grid validation and index errors") {
    const auto k = make_knots(5, 3);
    CHECK_THROWS_AS(eval_basis(k, (Vector(2) << 0.5, 0.2).finished()), Error);
    CHECK_THROWS_AS(eval_basis(k, (Vector(2) << 0.5, 1.2).finished()), Error);
    const BasisSystem bs = eval_basis(k, uniform_grid(5));
    try {
        support_indicator(bs, 5);
        FAIL("expected an error");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::index_out_of_range);
    }
}

TEST_CASE("equally spaced knots keep the span ratio bounded") {
    for (int K : {10, 30, 50}) CHECK(make_knots(K, 4).span_ratio() <= 4.0 + 1e-12);
}

TEST_CASE("scaled Gram eigenvalues stay in a fixed interval") {
    double prev_lo = 0.0, prev_hi = 0.0;
    for (int K : {10, 20, 40}) {
        const BasisSystem bs = eval_basis(make_knots(K, 4), uniform_grid(10 * K));
        const Matrix G = (static_cast<double>(K) / (10.0 * K)) * bs.values * bs.values.transpose();
        const Eigen::SelfAdjointEigenSolver<Matrix> eig(G);
        const double lo = eig.eigenvalues().minCoeff();
        const double hi = eig.eigenvalues().maxCoeff();
        CHECK(lo > 0.0);
        CHECK(hi / lo < 50.0);
        if (prev_hi > 0.0) {
            CHECK(lo >= 0.8 * prev_lo);
            CHECK(hi <= 1.25 * prev_hi);
        }
        prev_lo = lo;
        prev_hi = hi;
    }
}

}
