#pragma once

// Per-agent linear dynamics with scalar (diagonal) coefficients and the
// undirected communication graph.

#include <stdexcept>
#include <utility>
#include <vector>

#include <Eigen/Dense>

namespace dpmtl::dynamics {

class DynamicsError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

using Vec = std::vector<double>;

/// Undirected simple graph on nodes 0..n-1.
class Graph {
public:
    Graph() = default;
    Graph(int nodes, const std::vector<std::pair<int, int>>& edges);

    int size() const noexcept { return static_cast<int>(neighbors_.size()); }
    const std::vector<std::pair<int, int>>& edges() const noexcept { return edges_; }
    const std::vector<int>& neighbors(int i) const { return neighbors_.at(static_cast<std::size_t>(i)); }
    int degree(int i) const { return static_cast<int>(neighbors(i).size()); }
    bool adjacent(int i, int l) const;
    bool connected() const;
    Eigen::MatrixXd adjacency() const;

private:
    std::vector<std::pair<int, int>> edges_;  // i < l, sorted
    std::vector<std::vector<int>> neighbors_;  // sorted
};

/// x_i[t] = a_i x_i[t-1] + b_i u_i[t-1], y_i = c_i x_i, applied to every coordinate.
struct LinearDynamics {
    Vec a, b, c;
    std::size_t dims = 1;
    double u_min = -1.0;
    double u_max = 1.0;

    int agents() const noexcept { return static_cast<int>(a.size()); }
    void validate() const;
    Eigen::MatrixXd A() const { return as_diagonal(a); }
    Eigen::MatrixXd B() const { return as_diagonal(b); }
    Eigen::MatrixXd C() const { return as_diagonal(c); }

private:
    static Eigen::MatrixXd as_diagonal(const Vec& v);
};

Vec step_agent(const Vec& x, const Vec& u, const LinearDynamics& dyn, int i);

Vec system_average(const std::vector<Vec>& states);

Vec output(const Vec& x, const LinearDynamics& dyn, int i);

}  // namespace dpmtl::dynamics
