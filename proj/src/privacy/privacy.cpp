#include "dpmtl/privacy.hpp"

#include <cmath>
#include <numbers>

namespace dpmtl::privacy {

double q_function(double y) {
    if (std::isnan(y)) throw PrivacyError("q_function argument is NaN");
    return 0.5 * std::erfc(y / std::numbers::sqrt2);
}

double q_inverse(double delta) {
    if (!(delta > 0.0 && delta < 1.0)) throw PrivacyError("q_inverse needs delta in (0, 1)");
    // Q is strictly decreasing; bracket then bisect.
    double lo = -1.0;
    double hi = 1.0;
    while (q_function(lo) < delta) lo *= 2.0;
    while (q_function(hi) > delta) hi *= 2.0;
    for (int it = 0; it < 200 && hi - lo > 1e-15; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (q_function(mid) > delta) lo = mid; else hi = mid;
    }
    return 0.5 * (lo + hi);
}

double sensitivity_upper(double c_gain, double nu) {
    if (!(nu >= 0.0)) throw PrivacyError("adjacency radius must be non-negative");
    return std::abs(c_gain) * nu;
}

NoiseSpec calibrate_sigma(double sensitivity, const PrivacyParams& p) {
    if (!(sensitivity >= 0.0) || !std::isfinite(sensitivity)) throw PrivacyError("sensitivity must be finite and >= 0");
    if (!(p.epsilon > 0.0) || !std::isfinite(p.epsilon)) throw PrivacyError("epsilon must be positive");
    if (!(p.delta > 0.0 && p.delta < 0.5)) throw PrivacyError("delta must lie in (0, 0.5)");
    const double k = q_inverse(p.delta);
    const double sigma = sensitivity / (2.0 * p.epsilon) * (k + std::sqrt(k * k + 2.0 * p.epsilon));
    return NoiseSpec{sigma, sensitivity};
}

double GaussianStream::uniform() {
    for (;;) {
        const std::uint64_t bits = engine_() >> 11;
        if (bits != 0) return static_cast<double>(bits) * 0x1.0p-53;
    }
}

double GaussianStream::normal() {
    if (has_spare_) {
        has_spare_ = false;
        return spare_;
    }
    const double u1 = uniform();
    const double u2 = uniform();
    const double radius = std::sqrt(-2.0 * std::log(u1));
    const double angle = 2.0 * std::numbers::pi * u2;
    spare_ = radius * std::sin(angle);
    has_spare_ = true;
    return radius * std::cos(angle);
}

std::vector<double> gaussian_mechanism(const std::vector<double>& y, const NoiseSpec& spec, GaussianStream& rng) {
    if (!(spec.sigma >= 0.0) || !std::isfinite(spec.sigma)) throw PrivacyError("sigma must be finite and >= 0");
    std::vector<double> out = y;
    if (spec.sigma == 0.0) return out;
    for (double& v : out) v += spec.sigma * rng.normal();
    return out;
}

}  // namespace dpmtl::privacy
