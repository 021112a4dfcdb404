#pragma once

// Kalman filtering of privatised outputs, randomized gossip towards the
// system-level average and the resulting estimation error bound.
//
// Stacked quantities (state estimates, gossip vectors, inputs) are N x D
// matrices: one row per agent, one column per state dimension.

#include <cstdint>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>

#include "dpmtl/dynamics.hpp"

namespace dpmtl::estimation {

using Matrix = Eigen::MatrixXd;

class EstimationError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Gains K_t and covariances Sigma_t for t = 0..T. K_0 is zero and unused.
struct KalmanSchedule {
    std::vector<Matrix> gains;
    std::vector<Matrix> covariances;

    int horizon() const noexcept { return static_cast<int>(gains.size()) - 1; }
    const Matrix& gain(int t) const;
    const Matrix& covariance(int t) const;
};

/// K_t = S_{t-1} (S_{t-1} + W)^-1, S_t = (I - K_t) S_{t-1}.
KalmanSchedule kalman_schedule(const Matrix& sigma0, const Matrix& W, int T);

/// A xhat + B u + K (y - A xhat - B u).
Matrix kalman_update(const Matrix& xhat_prev, const Matrix& u_prev, const Matrix& y_noisy, const Matrix& K,
                     const Matrix& A, const Matrix& B);

/// P_il = 1/deg(i) for neighbours l of i.
Matrix build_gossip_probabilities(const dynamics::Graph& graph);

struct GossipMatrix {
    Matrix V;
    Matrix P;
    double lambda2 = 0.0;  // second largest eigenvalue magnitude of V
};

/// V = (1/N) sum_il P_il (I - (e_i - e_l)(e_i - e_l)^T / 2).
GossipMatrix expected_gossip_matrix(const Matrix& P);

/// Eigenvalues of a symmetric matrix by cyclic Jacobi rotations, descending.
std::vector<double> symmetric_eigenvalues(const Matrix& S, double tol = 1e-10);

/// Local search over P rows (mass moved between neighbour entries) that keeps
/// improvements of lambda2. Deterministic for a given seed.
Matrix refine_gossip_probabilities(const dynamics::Graph& graph, Matrix P, int iterations, std::uint64_t seed);

/// One asynchronous gossip step between neighbours i and l: both rows become
/// their average, then every row k adds its own change xhat_now_k - xhat_prev_k.
Matrix gossip_pair_update(const Matrix& zeta, int i, int l, const Matrix& xhat_now, const Matrix& xhat_prev,
                          const dynamics::Graph& graph);

struct ErrorBoundParams {
    double lambda = 0.0;
    double L1 = 1.0;
    double L2 = 1.0;
    double zeta_max = 0.0;
    double s_max = 1.0;
    double v_max = 1.0;
    double u_max = 1.0;
    int N = 1;
    bool multiplicative = false;  // alternative grouping of the first two terms
};

double delta_max(int t, int N, double s_max, double v_max);

double error_bound(int t, const ErrorBoundParams& p);

/// error_bound for t = 0..T.
std::vector<double> error_bound_trace(int T, const ErrorBoundParams& p);

}  // namespace dpmtl::estimation
