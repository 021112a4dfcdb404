#include <doctest.h>

#include <cmath>

#include "dpmtl/privacy.hpp"
#include "oracles.hpp"

using namespace dpmtl::privacy;

TEST_SUITE("privacy") {

TEST_CASE("Q function and its inverse") {
    CHECK(q_function(0.0) == doctest::Approx(0.5).epsilon(1e-15));
    CHECK(q_inverse(0.5) == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(std::abs(q_inverse(0.1) - 1.2815515655) < 1e-6);
    CHECK(std::abs(q_inverse(0.4) - 0.2533471031) < 1e-6);
    for (double y : {-2.0, -0.3, 0.7, 1.9, 4.0}) {
        CHECK(q_function(y) == doctest::Approx(oracle::q_quadrature(y)).epsilon(1e-10));
        CHECK(q_inverse(q_function(y)) == doctest::Approx(y).epsilon(1e-9));
    }
    CHECK_THROWS_AS(q_inverse(0.0), PrivacyError);
    CHECK_THROWS_AS(q_inverse(1.0), PrivacyError);
}

TEST_CASE("sensitivity and calibration") {
    CHECK(sensitivity_upper(0.1, 10.0) == doctest::Approx(1.0));
    CHECK_THROWS_AS(sensitivity_upper(0.1, -1.0), PrivacyError);
    for (double eps : {std::log(6.0), std::log(10.0)}) {
        for (double delta : {0.1, 0.4}) {
            const NoiseSpec s = calibrate_sigma(1.0, {eps, delta, 10.0});
            CHECK(std::abs(s.sigma - oracle::sigma_reference(1.0, eps, delta)) < 1e-6);
            CHECK(s.sensitivity == 1.0);
        }
    }
    // Larger epsilon or delta means less noise; sigma is linear in sensitivity.
    CHECK(calibrate_sigma(1.0, {2.0, 0.1, 0}).sigma < calibrate_sigma(1.0, {1.0, 0.1, 0}).sigma);
    CHECK(calibrate_sigma(1.0, {1.0, 0.3, 0}).sigma < calibrate_sigma(1.0, {1.0, 0.1, 0}).sigma);
    CHECK(calibrate_sigma(3.0, {1.0, 0.2, 0}).sigma == doctest::Approx(3.0 * calibrate_sigma(1.0, {1.0, 0.2, 0}).sigma));
    CHECK_THROWS_AS(calibrate_sigma(1.0, {1.0, 0.5, 0}), PrivacyError);
    CHECK_THROWS_AS(calibrate_sigma(1.0, {0.0, 0.1, 0}), PrivacyError);
    CHECK_THROWS_AS(calibrate_sigma(-1.0, {1.0, 0.1, 0}), PrivacyError);
}

TEST_CASE("Gaussian mechanism") {
    GaussianStream a(99), b(99);
    const std::vector<double> y = {1.0, -2.0};
    const NoiseSpec spec{0.7, 1.0};
    for (int k = 0; k < 10; ++k) CHECK(gaussian_mechanism(y, spec, a) == gaussian_mechanism(y, spec, b));

    GaussianStream c(1);
    CHECK(gaussian_mechanism(y, {0.0, 0.0}, c) == y);
    GaussianStream d(1);
    CHECK(c.uniform() == d.uniform());

    GaussianStream s(2024);
    const int n = 200000;
    double sum = 0.0, sq = 0.0;
    for (int k = 0; k < n; ++k) {
        const double v = gaussian_mechanism({0.0}, {2.0, 1.0}, s)[0];
        sum += v;
        sq += v * v;
    }
    const double mean = sum / n;
    CHECK(std::abs(mean) < 0.03);
    CHECK(sq / n - mean * mean == doctest::Approx(4.0).epsilon(0.02));
    CHECK_THROWS_AS(gaussian_mechanism(y, {-1.0, 0.0}, s), PrivacyError);
}

}  // TEST_SUITE
