#include <algorithm>
#include <cmath>

#include "lp_engine.hpp"

namespace dpmtl::milp {
namespace detail {
namespace {

constexpr double kPivotTol = 1e-9;
constexpr double kPrimalTol = 1e-9;
constexpr double kDualTol = 1e-9;
constexpr double kDropTol = 1e-13;
constexpr long kRefactorInterval = 400;
constexpr int kDegenerateSwitch = 40;

double primal_tol(double bound) { return kPrimalTol * (1.0 + std::abs(bound)); }

}  // namespace

LpEngine::LpEngine(const Model& model, long iteration_limit, double feasibility_tol)
    : model_(model),
      m_(static_cast<int>(model.num_constraints())),
      n_(static_cast<int>(model.num_variables())),
      ncol_(m_ + n_),
      iteration_limit_(iteration_limit),
      ftol_(feasibility_tol) {
    lower_.assign(static_cast<std::size_t>(ncol_), 0.0);
    upper_.assign(static_cast<std::size_t>(ncol_), 0.0);
    cost_.assign(static_cast<std::size_t>(ncol_), 0.0);
    for (int j = 0; j < n_; ++j) {
        const auto& v = model.variables()[static_cast<std::size_t>(j)];
        lower_[static_cast<std::size_t>(j)] = v.lower;
        upper_[static_cast<std::size_t>(j)] = v.upper;
    }
    for (int i = 0; i < m_; ++i) {
        const auto& c = model.constraints()[static_cast<std::size_t>(i)];
        const auto k = static_cast<std::size_t>(n_ + i);
        lower_[k] = c.relation == Relation::LessEqual ? -kInfinity : c.rhs;
        upper_[k] = c.relation == Relation::GreaterEqual ? kInfinity : c.rhs;
    }
    for (const auto& [idx, c] : model.objective().terms()) cost_[static_cast<std::size_t>(idx)] = c;

    value_.assign(static_cast<std::size_t>(ncol_), 0.0);
    state_.assign(static_cast<std::size_t>(ncol_), State::Lower);
    basis_.resize(static_cast<std::size_t>(m_));
    build_tableau();
    for (int j = 0; j < n_; ++j) {
        // Start on the bound that makes the reduced cost dual feasible when possible.
        const auto k = static_cast<std::size_t>(j);
        const bool has_lo = std::isfinite(lower_[k]);
        const bool has_hi = std::isfinite(upper_[k]);
        if (has_lo && (!has_hi || cost_[k] >= 0.0)) {
            state_[k] = State::Lower;
        } else if (has_hi) {
            state_[k] = State::Upper;
        } else {
            state_[k] = State::Free;
        }
        place_nonbasic(j);
    }
    compute_reduced_costs();
}

void LpEngine::build_tableau() {
    tableau_.assign(static_cast<std::size_t>(m_) * static_cast<std::size_t>(ncol_), 0.0);
    for (int i = 0; i < m_; ++i) {
        double* r = row(i);
        for (const auto& [idx, c] : model_.constraints()[static_cast<std::size_t>(i)].terms) r[idx] = -c;
        r[n_ + i] = 1.0;
        basis_[static_cast<std::size_t>(i)] = n_ + i;
        state_[static_cast<std::size_t>(n_ + i)] = State::Basic;
    }
    since_refactor_ = 0;
}

void LpEngine::place_nonbasic(int j) {
    const auto k = static_cast<std::size_t>(j);
    if (lower_[k] == upper_[k]) state_[k] = State::Lower;
    switch (state_[k]) {
        case State::Lower: value_[k] = lower_[k]; break;
        case State::Upper: value_[k] = upper_[k]; break;
        case State::Free: value_[k] = 0.0; break;
        case State::Basic: break;
    }
}

void LpEngine::compute_basic_values() {
    scratch_.clear();
    for (int j = 0; j < ncol_; ++j) {
        const auto k = static_cast<std::size_t>(j);
        if (state_[k] != State::Basic && value_[k] != 0.0) scratch_.push_back(j);
    }
    for (int i = 0; i < m_; ++i) {
        const double* r = row(i);
        double v = 0.0;
        for (int j : scratch_) v -= r[j] * value_[static_cast<std::size_t>(j)];
        value_[static_cast<std::size_t>(basis_[static_cast<std::size_t>(i)])] = v;
    }
}

void LpEngine::compute_reduced_costs() {
    reduced_ = cost_;
    for (int i = 0; i < m_; ++i) {
        const double cb = cost_[static_cast<std::size_t>(basis_[static_cast<std::size_t>(i)])];
        if (cb == 0.0) continue;
        const double* r = row(i);
        for (int j = 0; j < ncol_; ++j) reduced_[static_cast<std::size_t>(j)] -= cb * r[j];
    }
    for (int i = 0; i < m_; ++i) reduced_[static_cast<std::size_t>(basis_[static_cast<std::size_t>(i)])] = 0.0;
}

void LpEngine::set_bounds(int j, double lower, double upper) {
    const auto k = static_cast<std::size_t>(j);
    lower_[k] = lower;
    upper_[k] = upper;
    if (state_[k] != State::Basic) {
        if (state_[k] == State::Lower && !std::isfinite(lower)) state_[k] = std::isfinite(upper) ? State::Upper : State::Free;
        if (state_[k] == State::Upper && !std::isfinite(upper)) state_[k] = std::isfinite(lower) ? State::Lower : State::Free;
        place_nonbasic(j);
    }
}

bool LpEngine::make_dual_feasible() {
    bool ok = true;
    for (int j = 0; j < ncol_; ++j) {
        const auto k = static_cast<std::size_t>(j);
        if (state_[k] == State::Basic || lower_[k] == upper_[k]) continue;
        const double d = reduced_[k];
        if (state_[k] == State::Lower && d < -kDualTol) {
            if (std::isfinite(upper_[k])) state_[k] = State::Upper; else ok = false;
        } else if (state_[k] == State::Upper && d > kDualTol) {
            if (std::isfinite(lower_[k])) state_[k] = State::Lower; else ok = false;
        } else if (state_[k] == State::Free && std::abs(d) > kDualTol) {
            ok = false;
        }
        place_nonbasic(j);
    }
    return ok;
}

void LpEngine::count_iteration() {
    if (++iterations_ > iteration_limit_) {
        throw SolverError("simplex iteration limit of " + std::to_string(iteration_limit_) + " exceeded");
    }
}

void LpEngine::pivot(int r, int q) {
    double* pr = row(r);
    const double p = pr[q];
    if (!std::isfinite(p) || std::abs(p) < kPivotTol) throw SolverError("numerically unstable pivot");
    const double inv = 1.0 / p;
    scratch_.clear();
    for (int j = 0; j < ncol_; ++j) {
        if (pr[j] != 0.0) {
            pr[j] *= inv;
            scratch_.push_back(j);
        }
    }
    pr[q] = 1.0;
    for (int i = 0; i < m_; ++i) {
        if (i == r) continue;
        double* ri = row(i);
        const double f = ri[q];
        if (f == 0.0) continue;
        for (int j : scratch_) {
            double v = ri[j] - f * pr[j];
            ri[j] = std::abs(v) < kDropTol ? 0.0 : v;
        }
        ri[q] = 0.0;
    }
    const double fd = reduced_[static_cast<std::size_t>(q)];
    if (fd != 0.0) {
        for (int j : scratch_) reduced_[static_cast<std::size_t>(j)] -= fd * pr[j];
    }
    reduced_[static_cast<std::size_t>(q)] = 0.0;

    basis_[static_cast<std::size_t>(r)] = q;
    state_[static_cast<std::size_t>(q)] = State::Basic;
    ++since_refactor_;
}

void LpEngine::refactor() {
    const std::vector<int> target = basis_;
    std::vector<char> in_target(static_cast<std::size_t>(ncol_), 0);
    for (int j : target) in_target[static_cast<std::size_t>(j)] = 1;
    const std::vector<State> old_state = state_;

    build_tableau();
    for (int q : target) {
        if (q >= n_) continue;
        int best = -1;
        double best_abs = kPivotTol;
        for (int i = 0; i < m_; ++i) {
            const int b = basis_[static_cast<std::size_t>(i)];
            if (b < n_ || in_target[static_cast<std::size_t>(b)]) continue;
            const double a = std::abs(row(i)[q]);
            if (a > best_abs) {
                best_abs = a;
                best = i;
            }
        }
        if (best < 0) {
            // Dependent column: leave it out of the basis at a bound.
            const auto k = static_cast<std::size_t>(q);
            state_[k] = std::isfinite(lower_[k]) ? State::Lower : std::isfinite(upper_[k]) ? State::Upper : State::Free;
            continue;
        }
        const int leaving = basis_[static_cast<std::size_t>(best)];
        pivot(best, q);
        const auto lk = static_cast<std::size_t>(leaving);
        if (old_state[lk] != State::Basic) {
            state_[lk] = old_state[lk];
        } else {
            state_[lk] = std::isfinite(lower_[lk]) ? State::Lower : std::isfinite(upper_[lk]) ? State::Upper : State::Free;
        }
    }
    for (int j = 0; j < ncol_; ++j) {
        if (state_[static_cast<std::size_t>(j)] != State::Basic) place_nonbasic(j);
    }
    compute_reduced_costs();
    compute_basic_values();
    since_refactor_ = 0;
}

bool LpEngine::primal_feasible() const {
    for (int i = 0; i < m_; ++i) {
        const auto b = static_cast<std::size_t>(basis_[static_cast<std::size_t>(i)]);
        if (value_[b] < lower_[b] - primal_tol(lower_[b]) || value_[b] > upper_[b] + primal_tol(upper_[b])) return false;
    }
    return true;
}

LpResult LpEngine::dual_simplex() {
    for (;;) {
        if (since_refactor_ > kRefactorInterval) refactor();
        // Leaving row: largest bound violation, lowest row on ties.
        int r = -1;
        double worst = 0.0;
        bool below = false;
        for (int i = 0; i < m_; ++i) {
            const auto b = static_cast<std::size_t>(basis_[static_cast<std::size_t>(i)]);
            const double lo_gap = lower_[b] - value_[b];
            const double hi_gap = value_[b] - upper_[b];
            if (lo_gap > primal_tol(lower_[b]) && lo_gap > worst) {
                worst = lo_gap;
                r = i;
                below = true;
            } else if (hi_gap > primal_tol(upper_[b]) && hi_gap > worst) {
                worst = hi_gap;
                r = i;
                below = false;
            }
        }
        if (r < 0) return LpResult::Optimal;
        count_iteration();

        // x_B[r] moves by -T[r][j] * dx_j. Below its lower bound it must rise.
        const double* pr = row(r);
        auto eligible = [&](int j, double& ratio) {
            const auto k = static_cast<std::size_t>(j);
            const State s = state_[k];
            if (s == State::Basic || lower_[k] == upper_[k]) return false;
            const double t = pr[j];
            if (std::abs(t) <= kPivotTol) return false;
            const bool can_up = s == State::Lower || s == State::Free;
            const bool can_down = s == State::Upper || s == State::Free;
            const bool up_helps = below ? t < 0.0 : t > 0.0;
            if (!((up_helps && can_up) || (!up_helps && can_down))) return false;
            ratio = std::abs(reduced_[k]) / std::abs(t);
            return true;
        };
        double bound = kInfinity;
        for (int j = 0; j < ncol_; ++j) {
            double ratio;
            if (!eligible(j, ratio)) continue;
            bound = std::min(bound, (std::abs(reduced_[static_cast<std::size_t>(j)]) + kDualTol) / std::abs(pr[j]));
        }
        if (bound == kInfinity) return LpResult::Infeasible;
        int q = -1;
        double best_piv = 0.0;
        for (int j = 0; j < ncol_; ++j) {
            double ratio;
            if (!eligible(j, ratio) || ratio > bound) continue;
            if (std::abs(pr[j]) > best_piv) {
                best_piv = std::abs(pr[j]);
                q = j;
            }
        }

        const int leaving = basis_[static_cast<std::size_t>(r)];
        const auto lk = static_cast<std::size_t>(leaving);
        const double target = below ? lower_[lk] : upper_[lk];
        const double dx = (value_[lk] - target) / pr[q];
        for (int i = 0; i < m_; ++i) {
            const double t = row(i)[q];
            if (t != 0.0) value_[static_cast<std::size_t>(basis_[static_cast<std::size_t>(i)])] -= t * dx;
        }
        value_[static_cast<std::size_t>(q)] += dx;
        pivot(r, q);
        state_[lk] = below ? State::Lower : State::Upper;
        value_[lk] = target;
        if (lower_[lk] == upper_[lk]) state_[lk] = State::Lower;
    }
}

LpResult LpEngine::primal_simplex(bool phase_one) {
    int degenerate = 0;
    bool bland = false;
    std::vector<double>& d = work_;
    for (;;) {
        if (since_refactor_ > kRefactorInterval) refactor();
        if (phase_one) {
            // g_i = -1 below, +1 above; d_j = -sum_i g_i T[i][j].
            d.assign(static_cast<std::size_t>(ncol_), 0.0);
            bool any = false;
            for (int i = 0; i < m_; ++i) {
                const auto b = static_cast<std::size_t>(basis_[static_cast<std::size_t>(i)]);
                double g = 0.0;
                if (value_[b] < lower_[b] - primal_tol(lower_[b])) g = -1.0;
                else if (value_[b] > upper_[b] + primal_tol(upper_[b])) g = 1.0;
                if (g == 0.0) continue;
                any = true;
                const double* ri = row(i);
                for (int j = 0; j < ncol_; ++j) d[static_cast<std::size_t>(j)] -= g * ri[j];
            }
            if (!any) return LpResult::Optimal;
        }
        const std::vector<double>& dj = phase_one ? d : reduced_;

        int q = -1;
        double best = 0.0;
        for (int j = 0; j < ncol_; ++j) {
            const auto k = static_cast<std::size_t>(j);
            const State s = state_[k];
            if (s == State::Basic || lower_[k] == upper_[k]) continue;
            const double v = dj[k];
            double score = 0.0;
            if ((s == State::Lower || s == State::Free) && v < -kDualTol) score = -v;
            if ((s == State::Upper || s == State::Free) && v > kDualTol) score = v;
            if (score <= 0.0) continue;
            if (bland) {
                q = j;
                break;
            }
            if (score > best) {
                best = score;
                q = j;
            }
        }
        if (q < 0) return phase_one ? LpResult::Infeasible : LpResult::Optimal;
        count_iteration();

        const auto qk = static_cast<std::size_t>(q);
        const double dir = dj[qk] < 0.0 ? 1.0 : -1.0;

        // Ratio test; rate of x_B[i] per unit step is -T[i][q] * dir.
        auto limit = [&](int i, bool relaxed, double& lim, bool& to_upper) {
            const double t = row(i)[q];
            if (std::abs(t) <= kPivotTol) return false;
            const double alpha = -t * dir;
            const auto b = static_cast<std::size_t>(basis_[static_cast<std::size_t>(i)]);
            const double x = value_[b];
            const double lo = lower_[b];
            const double hi = upper_[b];
            if (phase_one && x < lo - primal_tol(lo)) {
                if (alpha <= 0.0) return false;
                lim = (lo + (relaxed ? primal_tol(lo) : 0.0) - x) / alpha;
                to_upper = false;
            } else if (phase_one && x > hi + primal_tol(hi)) {
                if (alpha >= 0.0) return false;
                lim = (hi - (relaxed ? primal_tol(hi) : 0.0) - x) / alpha;
                to_upper = true;
            } else if (alpha > 0.0) {
                if (!std::isfinite(hi)) return false;
                lim = (hi + (relaxed ? primal_tol(hi) : 0.0) - x) / alpha;
                to_upper = true;
            } else {
                if (!std::isfinite(lo)) return false;
                lim = (lo - (relaxed ? primal_tol(lo) : 0.0) - x) / alpha;
                to_upper = false;
            }
            lim = std::max(lim, 0.0);
            return true;
        };

        int r = -1;
        bool r_to_upper = false;
        double theta = kInfinity;
        if (bland) {
            int best_var = ncol_;
            for (int i = 0; i < m_; ++i) {
                double lim;
                bool up;
                if (!limit(i, false, lim, up)) continue;
                const int b = basis_[static_cast<std::size_t>(i)];
                if (lim < theta - 1e-12 || (lim <= theta + 1e-12 && b < best_var)) {
                    theta = lim;
                    r = i;
                    r_to_upper = up;
                    best_var = b;
                }
            }
        } else {
            // Two-pass test: relaxed bound first, then the largest pivot under it.
            double relaxed = kInfinity;
            for (int i = 0; i < m_; ++i) {
                double lim;
                bool up;
                if (limit(i, true, lim, up)) relaxed = std::min(relaxed, lim);
            }
            double best_piv = 0.0;
            for (int i = 0; i < m_; ++i) {
                double lim;
                bool up;
                if (!limit(i, false, lim, up) || lim > relaxed) continue;
                const double a = std::abs(row(i)[q]);
                if (a > best_piv) {
                    best_piv = a;
                    r = i;
                    r_to_upper = up;
                    theta = lim;
                }
            }
        }

        const double range = upper_[qk] - lower_[qk];
        const bool flip = std::isfinite(range) && range <= theta;
        if (flip) theta = range;
        if (!std::isfinite(theta)) {
            if (phase_one) throw SolverError("phase one ratio test found no blocking row");
            return LpResult::Unbounded;
        }

        if (theta <= 1e-12) {
            if (++degenerate > kDegenerateSwitch) bland = true;
        } else {
            degenerate = 0;
            bland = false;
        }

        for (int i = 0; i < m_; ++i) {
            const double t = row(i)[q];
            if (t != 0.0) value_[static_cast<std::size_t>(basis_[static_cast<std::size_t>(i)])] -= t * dir * theta;
        }
        value_[qk] += dir * theta;
        if (flip) {
            state_[qk] = dir > 0.0 ? State::Upper : State::Lower;
            place_nonbasic(q);
            continue;
        }
        const auto lk = static_cast<std::size_t>(basis_[static_cast<std::size_t>(r)]);
        pivot(r, q);
        state_[lk] = r_to_upper ? State::Upper : State::Lower;
        place_nonbasic(static_cast<int>(lk));
    }
}

LpResult LpEngine::solve() {
    for (int attempt = 0; attempt < 2; ++attempt) {
        compute_reduced_costs();
        const bool dual_ok = make_dual_feasible();
        compute_basic_values();
        if (dual_ok) {
            if (dual_simplex() == LpResult::Infeasible) return LpResult::Infeasible;
        } else if (!primal_feasible()) {
            if (primal_simplex(true) == LpResult::Infeasible) return LpResult::Infeasible;
        }
        if (primal_simplex(false) == LpResult::Unbounded) return LpResult::Unbounded;

        if (violation() <= ftol_) return LpResult::Optimal;
        refactor();
    }
    throw SolverError("simplex lost primal feasibility after refactorisation");
}

double LpEngine::violation() const {
    double worst = 0.0;
    for (int j = 0; j < n_; ++j) {
        const auto k = static_cast<std::size_t>(j);
        worst = std::max({worst, lower_[k] - value_[k], value_[k] - upper_[k]});
    }
    for (int i = 0; i < m_; ++i) {
        const auto& c = model_.constraints()[static_cast<std::size_t>(i)];
        double lhs = 0.0;
        for (const auto& [idx, a] : c.terms) lhs += a * value_[static_cast<std::size_t>(idx)];
        const auto k = static_cast<std::size_t>(n_ + i);
        worst = std::max({worst, lower_[k] - lhs, lhs - upper_[k]});
    }
    return worst;
}

double LpEngine::objective() const {
    double z = model_.objective().constant();
    for (int j = 0; j < n_; ++j) z += cost_[static_cast<std::size_t>(j)] * value_[static_cast<std::size_t>(j)];
    return z;
}

std::vector<double> LpEngine::structural_values() const {
    return {value_.begin(), value_.begin() + n_};
}

}  // namespace detail

Solution solve_lp(const Model& model, const SolverOptions& options) {
    if (options.dump) model.write_lp(*options.dump);
    detail::LpEngine engine(model, options.iteration_limit, options.feasibility_tol);
    Solution sol;
    const auto r = engine.solve();
    sol.iterations = engine.iterations();
    if (r == detail::LpResult::Infeasible) {
        sol.status = Status::Infeasible;
        return sol;
    }
    if (r == detail::LpResult::Unbounded) {
        sol.status = Status::Unbounded;
        sol.objective = -kInfinity;
        return sol;
    }
    sol.status = Status::Optimal;
    sol.values = engine.structural_values();
    sol.objective = engine.objective();
    return sol;
}

}  // namespace dpmtl::milp
