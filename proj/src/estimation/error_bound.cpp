#include <cmath>

#include "dpmtl/estimation.hpp"

namespace dpmtl::estimation {

double delta_max(int t, int N, double s_max, double v_max) {
    if (!(s_max > 0.0) || !(v_max > 0.0)) throw EstimationError("s_max and v_max must be positive");
    if (t < 0) throw EstimationError("time step must be non-negative");
    const double n = static_cast<double>(N);
    return n * n * s_max * v_max / (v_max + static_cast<double>(t) * s_max);
}

namespace {

void validate(const ErrorBoundParams& p) {
    if (p.N < 1) throw EstimationError("agent count must be positive");
    if (!(p.lambda >= 0.0 && p.lambda < 1.0)) throw EstimationError("lambda must lie in [0, 1)");
    for (double v : {p.L1, p.L2, p.zeta_max, p.u_max}) {
        if (!(v >= 0.0) || !std::isfinite(v)) throw EstimationError("error bound parameters must be finite and >= 0");
    }
}

}  // namespace

double error_bound(int t, const ErrorBoundParams& p) {
    validate(p);
    if (t < 0) throw EstimationError("time step must be non-negative");
    const double n = static_cast<double>(p.N);
    const double drift = 2.0 * n * p.u_max * p.u_max;
    double sum = 0.0;
    for (int k = 1; k <= t; ++k) {
        sum += std::pow(p.lambda, t - k) *
               std::sqrt(delta_max(k, p.N, p.s_max, p.v_max) + delta_max(k - 1, p.N, p.s_max, p.v_max) + drift);
    }
    const double initial = std::pow(p.lambda, t) * std::sqrt(n) * p.zeta_max;
    const double noise = p.L2 * std::sqrt(delta_max(t, p.N, p.s_max, p.v_max));
    if (p.multiplicative) return initial * p.L1 * sum + noise;
    return initial + p.L1 * sum + noise;
}

std::vector<double> error_bound_trace(int T, const ErrorBoundParams& p) {
    if (T < 0) throw EstimationError("trace length must be non-negative");
    std::vector<double> eps;
    eps.reserve(static_cast<std::size_t>(T) + 1);
    for (int t = 0; t <= T; ++t) eps.push_back(error_bound(t, p));
    return eps;
}

}  // namespace dpmtl::estimation
