#include <algorithm>
#include <cmath>
#include <queue>

#include "lp_engine.hpp"

namespace dpmtl::milp {
namespace {

struct Node {
    double bound = -kInfinity;
    int depth = 0;
    long seq = 0;
    std::vector<std::pair<int, char>> fixings;  // (variable, 0 or 1)
};

// Best bound first; deeper nodes first among equal bounds, then creation order.
struct WorseNode {
    bool operator()(const Node& a, const Node& b) const {
        if (a.bound != b.bound) return a.bound > b.bound;
        if (a.depth != b.depth) return a.depth < b.depth;
        return a.seq > b.seq;
    }
};

}  // namespace

Solution solve_milp(const Model& model, const SolverOptions& options) {
    std::vector<int> binaries;
    for (std::size_t j = 0; j < model.num_variables(); ++j) {
        if (model.variables()[j].kind == VarKind::Binary) binaries.push_back(static_cast<int>(j));
    }
    if (binaries.empty()) {
        Solution s = solve_lp(model, options);
        s.nodes = 1;
        return s;
    }
    if (options.dump) model.write_lp(*options.dump);

    detail::LpEngine engine(model, options.iteration_limit, options.feasibility_tol);
    // Currently applied branching state per variable: -1 means model bounds.
    std::vector<char> applied(model.num_variables(), -1);
    std::vector<char> wanted(model.num_variables(), -1);

    Solution best;
    best.status = Status::Infeasible;
    bool have_incumbent = false;
    long nodes = 0;
    long seq = 0;

    std::priority_queue<Node, std::vector<Node>, WorseNode> open;
    open.push(Node{-kInfinity, 0, seq++, {}});

    while (!open.empty()) {
        Node node = open.top();
        open.pop();
        if (have_incumbent && node.bound >= best.objective - options.objective_tol) break;
        if (++nodes > options.node_limit) {
            best.nodes = nodes - 1;
            best.iterations = engine.iterations();
            throw NodeLimitError(options.node_limit, best, have_incumbent);
        }

        for (int j : binaries) wanted[static_cast<std::size_t>(j)] = -1;
        for (const auto& [j, v] : node.fixings) wanted[static_cast<std::size_t>(j)] = v;
        for (int j : binaries) {
            const auto k = static_cast<std::size_t>(j);
            if (wanted[k] == applied[k]) continue;
            const auto& var = model.variables()[k];
            if (wanted[k] < 0) {
                engine.set_bounds(j, var.lower, var.upper);
            } else {
                const double v = wanted[k];
                if (v < var.lower || v > var.upper) {
                    engine.set_bounds(j, var.lower, var.upper);
                    applied[k] = -1;
                    continue;
                }
                engine.set_bounds(j, v, v);
            }
            applied[k] = wanted[k];
        }

        const auto result = engine.solve();
        if (result == detail::LpResult::Unbounded) {
            Solution s;
            s.status = Status::Unbounded;
            s.objective = -kInfinity;
            s.nodes = nodes;
            s.iterations = engine.iterations();
            return s;
        }
        if (result == detail::LpResult::Infeasible) continue;
        const double obj = engine.objective();
        if (have_incumbent && obj >= best.objective - options.objective_tol) continue;

        std::vector<double> x = engine.structural_values();
        int branch = -1;
        double most = options.integrality_tol;
        for (int j : binaries) {
            const double v = x[static_cast<std::size_t>(j)];
            const double frac = std::abs(v - std::round(v));
            if (frac > most) {
                most = frac;
                branch = j;
            }
        }
        if (branch < 0) {
            for (int j : binaries) x[static_cast<std::size_t>(j)] = std::round(x[static_cast<std::size_t>(j)]);
            best.status = Status::Optimal;
            best.values = std::move(x);
            best.objective = obj;
            have_incumbent = true;
            continue;
        }

        const double v = x[static_cast<std::size_t>(branch)];
        const char first = v >= 0.5 ? 1 : 0;
        for (char side : {first, static_cast<char>(1 - first)}) {
            Node child{obj, node.depth + 1, seq++, node.fixings};
            child.fixings.emplace_back(branch, side);
            open.push(std::move(child));
        }
    }

    best.nodes = nodes;
    best.iterations = engine.iterations();
    return best;
}

}  // namespace dpmtl::milp
