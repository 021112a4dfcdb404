#include <doctest.h>

#include <cmath>

#include "dpmtl/estimation.hpp"
#include "oracles.hpp"

using namespace dpmtl;
using estimation::Matrix;

namespace {

dynamics::Graph cycle4() { return dynamics::Graph(4, {{0, 1}, {0, 3}, {1, 2}, {2, 3}}); }

bool psd(const Matrix& S) {
    Eigen::SelfAdjointEigenSolver<Matrix> es(S);
    return es.eigenvalues().minCoeff() >= -1e-12;
}

}  // namespace

TEST_SUITE("estimation") {

TEST_CASE("scalar Kalman recursion has a closed form") {
    for (double s0 : {0.5, 1.0, 4.0}) {
        for (double w : {0.1, 0.6, 2.0}) {
            const auto ks = estimation::kalman_schedule(Matrix::Constant(1, 1, s0), Matrix::Constant(1, 1, w), 500);
            for (int t = 0; t <= 500; ++t) {
                CHECK(std::abs(ks.covariance(t)(0, 0) - s0 * w / (w + t * s0)) < 1e-12);
            }
            CHECK(ks.gain(1)(0, 0) == doctest::Approx(s0 / (s0 + w)));
        }
    }
}

TEST_CASE("matrix Kalman schedule stays symmetric PSD and shrinks") {
    Matrix S0(3, 3);
    S0 << 2.0, 0.3, 0.1, 0.3, 1.0, 0.2, 0.1, 0.2, 0.5;
    const Matrix W = Eigen::Vector3d(0.4, 0.9, 0.2).asDiagonal();
    const auto ks = estimation::kalman_schedule(S0, W, 200);
    for (int t = 1; t <= 200; ++t) {
        const Matrix& S = ks.covariance(t);
        CHECK((S - S.transpose()).norm() < 1e-14);
        CHECK(psd(S));
        CHECK(S.trace() <= ks.covariance(t - 1).trace() + 1e-15);
    }
    CHECK_THROWS_AS(ks.gain(0), estimation::EstimationError);
    CHECK_THROWS_AS(ks.gain(201), estimation::EstimationError);
}

TEST_CASE("Kalman update hand value") {
    const Matrix A = 0.1 * Matrix::Identity(1, 1);
    const Matrix K = 0.5 * Matrix::Identity(1, 1);
    const Matrix x = Matrix::Constant(1, 1, 1.0);
    const Matrix u = Matrix::Constant(1, 1, 1.0);
    const Matrix y = Matrix::Constant(1, 1, 0.5);
    CHECK(estimation::kalman_update(x, u, y, K, A, A)(0, 0) == doctest::Approx(0.35));
    // Zero gain reduces to the model prediction.
    CHECK(estimation::kalman_update(x, u, y, Matrix::Zero(1, 1), A, A)(0, 0) == doctest::Approx(0.2));
}

TEST_CASE("gossip matrices") {
    SUBCASE("two agents") {
        const dynamics::Graph g(2, {{0, 1}});
        const auto gm = estimation::expected_gossip_matrix(estimation::build_gossip_probabilities(g));
        // One averaging matrix I - (e0 - e1)(e0 - e1)^T / 2, reached with total probability 1.
        CHECK(gm.V(0, 0) == 0.5);
        CHECK(gm.V(0, 1) == 0.5);
        CHECK(gm.lambda2 == doctest::Approx(0.0).epsilon(1e-14));
    }
    SUBCASE("four-cycle") {
        const auto g = cycle4();
        const Matrix P = estimation::build_gossip_probabilities(g);
        CHECK(P(0, 1) == 0.5);
        CHECK(P(0, 3) == 0.5);
        CHECK(P(0, 2) == 0.0);
        const auto gm = estimation::expected_gossip_matrix(P);
        const Matrix L = Matrix(g.adjacency()).rowwise().sum().asDiagonal().toDenseMatrix() - g.adjacency();
        CHECK((gm.V - (Matrix::Identity(4, 4) - L / 8.0)).norm() < 1e-15);
        CHECK(std::abs(gm.lambda2 - oracle::lambda2_reference(gm.V)) < 1e-9);
        CHECK(gm.lambda2 == doctest::Approx(0.75));
    }
    SUBCASE("rejections") {
        Matrix P = Matrix::Zero(3, 3);
        P(0, 1) = 1.0;
        P(1, 0) = 1.0;
        P(2, 0) = 1.0;
        P(0, 0) = 0.0;
        CHECK_NOTHROW(estimation::expected_gossip_matrix(P));
        P(1, 1) = 0.5;
        CHECK_THROWS_AS(estimation::expected_gossip_matrix(P), estimation::EstimationError);
        CHECK_THROWS_AS(estimation::build_gossip_probabilities(dynamics::Graph(3, {{0, 1}})),
                        estimation::EstimationError);
    }
}

TEST_CASE("Jacobi eigenvalues agree with Eigen on random symmetric matrices") {
    oracle::Rng rng(8);
    for (int k = 0; k < 50; ++k) {
        const int n = oracle::uniform_int(rng, 1, 7);
        Matrix S(n, n);
        for (int i = 0; i < n; ++i) {
            for (int j = 0; j <= i; ++j) S(i, j) = S(j, i) = oracle::uniform(rng, -2.0, 2.0);
        }
        auto ours = estimation::symmetric_eigenvalues(S);
        Eigen::SelfAdjointEigenSolver<Matrix> es(S);
        std::vector<double> ref(es.eigenvalues().data(), es.eigenvalues().data() + n);
        std::sort(ref.begin(), ref.end(), std::greater<>());
        for (int i = 0; i < n; ++i) CHECK(ours[static_cast<std::size_t>(i)] == doctest::Approx(ref[static_cast<std::size_t>(i)]).epsilon(1e-10));
    }
}

TEST_CASE("refined probabilities never worsen lambda2") {
    const dynamics::Graph g(5, {{0, 1}, {1, 2}, {2, 3}, {3, 4}, {0, 2}, {1, 3}});
    const Matrix P0 = estimation::build_gossip_probabilities(g);
    const Matrix P1 = estimation::refine_gossip_probabilities(g, P0, 400, 3);
    CHECK(estimation::expected_gossip_matrix(P1).lambda2 <= estimation::expected_gossip_matrix(P0).lambda2 + 1e-12);
    CHECK((P1.rowwise().sum().array() - 1.0).abs().maxCoeff() < 1e-12);
    CHECK((estimation::refine_gossip_probabilities(g, P0, 400, 3) - P1).norm() == 0.0);
}

TEST_CASE("pairwise gossip step") {
    const auto g = cycle4();
    Matrix z(4, 1);
    z << 4.0, 0.0, -2.0, 6.0;
    const Matrix x0 = Matrix::Zero(4, 1);
    Matrix x1 = Matrix::Zero(4, 1);
    x1(2, 0) = 1.0;
    const Matrix out = estimation::gossip_pair_update(z, 0, 1, x1, x0, g);
    CHECK(out(0, 0) == 2.0);
    CHECK(out(1, 0) == 2.0);
    CHECK(out(2, 0) == -1.0);
    CHECK(out.sum() == z.sum() + 1.0);
    CHECK_THROWS_AS(estimation::gossip_pair_update(z, 0, 2, x1, x0, g), estimation::EstimationError);
}

TEST_CASE("error bound") {
    CHECK(estimation::delta_max(1, 4, 1.0, 1.0) == doctest::Approx(8.0));
    CHECK(estimation::delta_max(0, 3, 2.0, 0.5) == doctest::Approx(9.0 * 2.0));
    estimation::ErrorBoundParams p;
    p.lambda = 0.75;
    p.zeta_max = 100.0;
    p.N = 4;
    p.s_max = 1.0;
    p.v_max = 0.8;
    p.u_max = 2.0;
    CHECK(estimation::error_bound(0, p) ==
          doctest::Approx(2.0 * 100.0 + p.L2 * 4.0 * std::sqrt(1.0)));
    // Hand evaluation at t = 1.
    const double d0 = estimation::delta_max(0, 4, 1.0, 0.8), d1 = estimation::delta_max(1, 4, 1.0, 0.8);
    const double drift = 2.0 * 4 * 4.0;
    CHECK(estimation::error_bound(1, p) ==
          doctest::Approx(0.75 * 2.0 * 100.0 + std::sqrt(d1 + d0 + drift) + std::sqrt(d1)));
    const auto trace = estimation::error_bound_trace(60, p);
    CHECK(trace.size() == 61);
    for (std::size_t t = 2; t < trace.size(); ++t) CHECK(trace[t] <= trace[t - 1] + 1e-12);
    p.lambda = 1.0;
    CHECK_THROWS_AS(estimation::error_bound(1, p), estimation::EstimationError);
}

}  // TEST_SUITE
