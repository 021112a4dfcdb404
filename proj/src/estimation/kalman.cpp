#include "dpmtl/estimation.hpp"

namespace dpmtl::estimation {

const Matrix& KalmanSchedule::gain(int t) const {
    if (t < 1 || t > horizon()) throw EstimationError("no Kalman gain for time step " + std::to_string(t));
    return gains[static_cast<std::size_t>(t)];
}

const Matrix& KalmanSchedule::covariance(int t) const {
    if (t < 0 || t > horizon()) throw EstimationError("no covariance for time step " + std::to_string(t));
    return covariances[static_cast<std::size_t>(t)];
}

KalmanSchedule kalman_schedule(const Matrix& sigma0, const Matrix& W, int T) {
    if (sigma0.rows() != sigma0.cols() || W.rows() != W.cols() || sigma0.rows() != W.rows()) {
        throw EstimationError("covariance matrices must be square and of equal size");
    }
    if (T < 0) throw EstimationError("Kalman horizon must be non-negative");
    const auto n = sigma0.rows();
    const Matrix I = Matrix::Identity(n, n);
    KalmanSchedule s;
    s.gains.reserve(static_cast<std::size_t>(T) + 1);
    s.covariances.reserve(static_cast<std::size_t>(T) + 1);
    s.gains.push_back(Matrix::Zero(n, n));
    s.covariances.push_back(sigma0);
    for (int t = 1; t <= T; ++t) {
        const Matrix& prev = s.covariances.back();
        const Matrix S = prev + W;
        // K = prev * S^-1, solved as S^T K^T = prev^T.
        Eigen::FullPivLU<Matrix> lu(S.transpose());
        if (!lu.isInvertible()) throw EstimationError("singular innovation covariance at t=" + std::to_string(t));
        Matrix K = lu.solve(prev.transpose()).transpose();
        Matrix next = (I - K) * prev;
        next = 0.5 * (next + next.transpose());
        s.gains.push_back(std::move(K));
        s.covariances.push_back(std::move(next));
    }
    return s;
}

Matrix kalman_update(const Matrix& xhat_prev, const Matrix& u_prev, const Matrix& y_noisy, const Matrix& K,
                     const Matrix& A, const Matrix& B) {
    const auto n = xhat_prev.rows();
    if (u_prev.rows() != n || y_noisy.rows() != n || K.rows() != n || K.cols() != n || A.rows() != n ||
        A.cols() != n || B.rows() != n || B.cols() != n || u_prev.cols() != xhat_prev.cols() ||
        y_noisy.cols() != xhat_prev.cols()) {
        throw EstimationError("kalman_update dimension mismatch");
    }
    const Matrix pred = A * xhat_prev + B * u_prev;
    return pred + K * (y_noisy - pred);
}

}  // namespace dpmtl::estimation
