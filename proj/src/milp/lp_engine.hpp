#pragma once

// Dense bounded-variable simplex on an explicit tableau. Each row i of the
// model becomes a_i.x - s_i = 0 with a logical column s_i carrying the row
// bounds, so every constraint is an equality over bounded columns and the
// all-logical basis is always available as a starting point.

#include <vector>

#include "dpmtl/milp.hpp"

namespace dpmtl::milp::detail {

enum class LpResult { Optimal, Infeasible, Unbounded };

class LpEngine {
public:
    LpEngine(const Model& model, long iteration_limit, double feasibility_tol);

    /// Change bounds of structural column j; the current basis is kept so
    /// the next solve() can warm start.
    void set_bounds(int j, double lower, double upper);

    LpResult solve();

    double objective() const;
    std::vector<double> structural_values() const;
    long iterations() const noexcept { return iterations_; }

private:
    enum class State : unsigned char { Basic, Lower, Upper, Free };

    double* row(int i) { return &tableau_[static_cast<std::size_t>(i) * static_cast<std::size_t>(ncol_)]; }
    const double* row(int i) const {
        return &tableau_[static_cast<std::size_t>(i) * static_cast<std::size_t>(ncol_)];
    }

    void build_tableau();
    void place_nonbasic(int j);
    void compute_basic_values();
    void compute_reduced_costs();
    bool make_dual_feasible();
    void pivot(int r, int q);
    void refactor();
    void count_iteration();

    LpResult dual_simplex();
    // phase_one: minimise the sum of bound violations of basic columns.
    LpResult primal_simplex(bool phase_one);

    bool primal_feasible() const;
    double violation() const;

    const Model& model_;
    int m_ = 0;
    int n_ = 0;
    int ncol_ = 0;
    long iteration_limit_;
    long iterations_ = 0;
    long since_refactor_ = 0;
    double ftol_;

    std::vector<double> tableau_;
    std::vector<double> lower_, upper_, cost_, value_, reduced_;
    std::vector<int> basis_;
    std::vector<State> state_;
    std::vector<int> scratch_;
    std::vector<double> work_;
};

}  // namespace dpmtl::milp::detail
