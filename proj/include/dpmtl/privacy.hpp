#pragma once

// Gaussian mechanism calibration for (epsilon, delta)-differential privacy of
// agent outputs.

#include <cstdint>
#include <random>
#include <stdexcept>
#include <vector>

namespace dpmtl::privacy {

class PrivacyError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct PrivacyParams {
    double epsilon = 1.0;
    double delta = 0.1;
    double nu = 0.0;  // adjacency radius
};

struct NoiseSpec {
    double sigma = 0.0;
    double sensitivity = 0.0;
};

/// Upper tail of the standard normal, Q(y) = P(Z > y).
double q_function(double y);

/// y with q_function(y) == delta, by bisection.
double q_inverse(double delta);

double sensitivity_upper(double c_gain, double nu);

/// sigma = (sensitivity / (2 eps)) * (k + sqrt(k^2 + 2 eps)), k = q_inverse(delta).
NoiseSpec calibrate_sigma(double sensitivity, const PrivacyParams& p);

/// Deterministic N(0,1) source: Box-Muller over a 64-bit Mersenne Twister,
/// with uniforms built from the top 53 bits so results do not depend on the
/// standard library's distribution implementations.
class GaussianStream {
public:
    explicit GaussianStream(std::uint64_t seed) : engine_(seed) {}

    double uniform();  // in (0, 1)
    double normal();
    std::mt19937_64& engine() noexcept { return engine_; }

private:
    std::mt19937_64 engine_;
    bool has_spare_ = false;
    double spare_ = 0.0;
};

/// y + v with v_k ~ N(0, sigma^2) i.i.d.
std::vector<double> gaussian_mechanism(const std::vector<double>& y, const NoiseSpec& spec, GaussianStream& rng);

}  // namespace dpmtl::privacy
