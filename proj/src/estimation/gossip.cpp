#include <algorithm>
#include <cmath>
#include <random>

#include "dpmtl/estimation.hpp"

namespace dpmtl::estimation {

Matrix build_gossip_probabilities(const dynamics::Graph& graph) {
    if (!graph.connected()) throw EstimationError("gossip needs a connected graph");
    const int n = graph.size();
    Matrix P = Matrix::Zero(n, n);
    for (int i = 0; i < n; ++i) {
        const auto& nb = graph.neighbors(i);
        for (int l : nb) P(i, l) = 1.0 / static_cast<double>(nb.size());
    }
    return P;
}

std::vector<double> symmetric_eigenvalues(const Matrix& S, double tol) {
    if (S.rows() != S.cols()) throw EstimationError("eigenvalues need a square matrix");
    const auto n = S.rows();
    Matrix a = 0.5 * (S + S.transpose());
    for (int sweep = 0; sweep < 100; ++sweep) {
        double off = 0.0;
        for (Eigen::Index p = 0; p < n; ++p) {
            for (Eigen::Index q = p + 1; q < n; ++q) off += a(p, q) * a(p, q);
        }
        if (std::sqrt(off) < tol * 1e-3) break;
        for (Eigen::Index p = 0; p < n; ++p) {
            for (Eigen::Index q = p + 1; q < n; ++q) {
                if (std::abs(a(p, q)) < 1e-300) continue;
                const double theta = (a(q, q) - a(p, p)) / (2.0 * a(p, q));
                const double t = (theta >= 0 ? 1.0 : -1.0) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
                const double c = 1.0 / std::sqrt(t * t + 1.0);
                const double s = t * c;
                for (Eigen::Index k = 0; k < n; ++k) {
                    const double akp = a(k, p);
                    const double akq = a(k, q);
                    a(k, p) = c * akp - s * akq;
                    a(k, q) = s * akp + c * akq;
                }
                for (Eigen::Index k = 0; k < n; ++k) {
                    const double apk = a(p, k);
                    const double aqk = a(q, k);
                    a(p, k) = c * apk - s * aqk;
                    a(q, k) = s * apk + c * aqk;
                }
            }
        }
    }
    std::vector<double> ev(static_cast<std::size_t>(n));
    for (Eigen::Index i = 0; i < n; ++i) ev[static_cast<std::size_t>(i)] = a(i, i);
    std::sort(ev.begin(), ev.end(), std::greater<>());
    return ev;
}

namespace {

double second_magnitude(const Matrix& V) {
    std::vector<double> ev = symmetric_eigenvalues(V);
    // The all-ones direction carries eigenvalue 1; drop one copy of it.
    auto top = std::min_element(ev.begin(), ev.end(), [](double x, double y) {
        return std::abs(x - 1.0) < std::abs(y - 1.0);
    });
    ev.erase(top);
    double best = 0.0;
    for (double v : ev) best = std::max(best, std::abs(v));
    return best;
}

}  // namespace

GossipMatrix expected_gossip_matrix(const Matrix& P) {
    if (P.rows() != P.cols() || P.rows() == 0) throw EstimationError("P must be square and non-empty");
    const auto n = P.rows();
    for (Eigen::Index i = 0; i < n; ++i) {
        if (P(i, i) != 0.0) throw EstimationError("P must have a zero diagonal");
        for (Eigen::Index l = 0; l < n; ++l) {
            if (P(i, l) < 0.0) throw EstimationError("P entries must be non-negative");
        }
        if (n > 1 && std::abs(P.row(i).sum() - 1.0) > 1e-10) throw EstimationError("P rows must sum to one");
    }
    Matrix V = Matrix::Zero(n, n);
    const Matrix I = Matrix::Identity(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index l = 0; l < n; ++l) {
            if (P(i, l) == 0.0) continue;
            Eigen::VectorXd e = Eigen::VectorXd::Zero(n);
            e(i) = 1.0;
            e(l) = -1.0;
            V += P(i, l) * (I - 0.5 * e * e.transpose());
        }
    }
    V /= static_cast<double>(n);
    if (n == 1) V = I;
    for (Eigen::Index i = 0; i < n; ++i) {
        if (std::abs(V.row(i).sum() - 1.0) > 1e-10 || std::abs(V.col(i).sum() - 1.0) > 1e-10) {
            throw EstimationError("gossip matrix is not doubly stochastic");
        }
    }
    GossipMatrix g{V, P, n == 1 ? 0.0 : second_magnitude(V)};
    if (g.lambda2 >= 1.0 - 1e-12) throw EstimationError("gossip matrix has lambda2 = 1 (disconnected graph)");
    return g;
}

Matrix refine_gossip_probabilities(const dynamics::Graph& graph, Matrix P, int iterations, std::uint64_t seed) {
    if (iterations < 0) throw EstimationError("iterations must be non-negative");
    std::mt19937_64 rng(seed);
    double best = expected_gossip_matrix(P).lambda2;
    double step = 0.1;
    for (int it = 0; it < iterations; ++it) {
        const int i = static_cast<int>(rng() % static_cast<std::uint64_t>(graph.size()));
        const auto& nb = graph.neighbors(i);
        if (nb.size() < 2) continue;
        const int from = nb[rng() % nb.size()];
        const int to = nb[rng() % nb.size()];
        if (from == to) continue;
        const double moved = std::min(step, P(i, from));
        if (moved <= 0.0) continue;
        Matrix trial = P;
        trial(i, from) -= moved;
        trial(i, to) += moved;
        // Keep every edge usable so the graph stays connected in V.
        if (trial(i, from) < 1e-3) continue;
        const double lam = expected_gossip_matrix(trial).lambda2;
        if (lam < best - 1e-12) {
            best = lam;
            P = std::move(trial);
        } else if (it % 50 == 49) {
            step *= 0.5;
        }
    }
    return P;
}

Matrix gossip_pair_update(const Matrix& zeta, int i, int l, const Matrix& xhat_now, const Matrix& xhat_prev,
                          const dynamics::Graph& graph) {
    if (i == l) throw EstimationError("gossip pair needs two distinct agents");
    if (i < 0 || l < 0 || i >= graph.size() || l >= graph.size() || !graph.adjacent(i, l)) {
        throw EstimationError("agents " + std::to_string(i) + " and " + std::to_string(l) + " are not neighbours");
    }
    if (zeta.rows() != graph.size() || xhat_now.rows() != zeta.rows() || xhat_prev.rows() != zeta.rows() ||
        xhat_now.cols() != zeta.cols() || xhat_prev.cols() != zeta.cols()) {
        throw EstimationError("gossip_pair_update dimension mismatch");
    }
    Matrix out = zeta;
    const Eigen::RowVectorXd avg = 0.5 * (zeta.row(i) + zeta.row(l));
    out.row(i) = avg;
    out.row(l) = avg;
    out += xhat_now - xhat_prev;
    return out;
}

}  // namespace dpmtl::estimation
