#include "dpmtl/dynamics.hpp"

#include <algorithm>
#include <cmath>

namespace dpmtl::dynamics {

Graph::Graph(int nodes, const std::vector<std::pair<int, int>>& edges) {
    if (nodes <= 0) throw DynamicsError("graph needs at least one node");
    neighbors_.assign(static_cast<std::size_t>(nodes), {});
    for (auto [i, l] : edges) {
        if (i < 0 || l < 0 || i >= nodes || l >= nodes) {
            throw DynamicsError("edge (" + std::to_string(i) + "," + std::to_string(l) + ") references a missing node");
        }
        if (i == l) throw DynamicsError("self-loop at node " + std::to_string(i));
        if (i > l) std::swap(i, l);
        if (std::find(edges_.begin(), edges_.end(), std::make_pair(i, l)) != edges_.end()) continue;
        edges_.emplace_back(i, l);
        neighbors_[static_cast<std::size_t>(i)].push_back(l);
        neighbors_[static_cast<std::size_t>(l)].push_back(i);
    }
    std::sort(edges_.begin(), edges_.end());
    for (auto& n : neighbors_) std::sort(n.begin(), n.end());
}

bool Graph::adjacent(int i, int l) const {
    const auto& n = neighbors(i);
    return std::binary_search(n.begin(), n.end(), l);
}

bool Graph::connected() const {
    if (neighbors_.empty()) return false;
    std::vector<char> seen(neighbors_.size(), 0);
    std::vector<int> stack{0};
    seen[0] = 1;
    std::size_t count = 1;
    while (!stack.empty()) {
        const int v = stack.back();
        stack.pop_back();
        for (int w : neighbors(v)) {
            if (!seen[static_cast<std::size_t>(w)]) {
                seen[static_cast<std::size_t>(w)] = 1;
                ++count;
                stack.push_back(w);
            }
        }
    }
    return count == neighbors_.size();
}

Eigen::MatrixXd Graph::adjacency() const {
    Eigen::MatrixXd D = Eigen::MatrixXd::Zero(size(), size());
    for (auto [i, l] : edges_) D(i, l) = D(l, i) = 1.0;
    return D;
}

void LinearDynamics::validate() const {
    if (a.empty()) throw DynamicsError("dynamics need at least one agent");
    if (b.size() != a.size() || c.size() != a.size()) throw DynamicsError("a, b and c must have one entry per agent");
    if (dims == 0) throw DynamicsError("state dimension must be positive");
    if (!(u_min <= u_max)) throw DynamicsError("input bounds need u_min <= u_max");
    for (const Vec* v : {&a, &b, &c}) {
        for (double x : *v) {
            if (!std::isfinite(x)) throw DynamicsError("dynamics coefficients must be finite");
        }
    }
}

Eigen::MatrixXd LinearDynamics::as_diagonal(const Vec& v) {
    Eigen::VectorXd d(static_cast<Eigen::Index>(v.size()));
    for (std::size_t i = 0; i < v.size(); ++i) d(static_cast<Eigen::Index>(i)) = v[i];
    return d.asDiagonal();
}

namespace {

void check_agent(const LinearDynamics& dyn, int i) {
    if (i < 0 || i >= dyn.agents()) throw DynamicsError("agent index " + std::to_string(i) + " out of range");
}

}  // namespace

Vec step_agent(const Vec& x, const Vec& u, const LinearDynamics& dyn, int i) {
    check_agent(dyn, i);
    if (x.size() != u.size()) throw DynamicsError("state and input dimensions differ");
    constexpr double tol = 1e-9;
    Vec out(x.size());
    for (std::size_t d = 0; d < x.size(); ++d) {
        if (u[d] < dyn.u_min - tol || u[d] > dyn.u_max + tol) {
            throw DynamicsError("input " + std::to_string(u[d]) + " of agent " + std::to_string(i) +
                                " outside [" + std::to_string(dyn.u_min) + ", " + std::to_string(dyn.u_max) + "]");
        }
        out[d] = dyn.a[static_cast<std::size_t>(i)] * x[d] + dyn.b[static_cast<std::size_t>(i)] * u[d];
    }
    return out;
}

Vec system_average(const std::vector<Vec>& states) {
    if (states.empty()) throw DynamicsError("system average of an empty state set");
    Vec eta(states.front().size(), 0.0);
    for (const auto& x : states) {
        if (x.size() != eta.size()) throw DynamicsError("agents have different state dimensions");
        for (std::size_t d = 0; d < x.size(); ++d) eta[d] += x[d];
    }
    for (double& v : eta) v /= static_cast<double>(states.size());
    return eta;
}

Vec output(const Vec& x, const LinearDynamics& dyn, int i) {
    check_agent(dyn, i);
    Vec y(x.size());
    for (std::size_t d = 0; d < x.size(); ++d) y[d] = dyn.c[static_cast<std::size_t>(i)] * x[d];
    return y;
}

}  // namespace dpmtl::dynamics
