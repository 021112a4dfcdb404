#pragma once

// Reference implementations used only by the tests. None of them share code
// with the library beyond the model/formula data structures they inspect.

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <random>
#include <vector>

#include <Eigen/Dense>

#include "dpmtl/milp.hpp"
#include "dpmtl/mtl.hpp"

namespace oracle {

using Rng = std::mt19937_64;

inline double uniform(Rng& rng, double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng); }
inline int uniform_int(Rng& rng, int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); }

// ---------------------------------------------------------------- formulas

/// A few boxes and halfspace regions in `dims` dimensions.
inline dpmtl::mtl::PredicateTable random_predicates(Rng& rng, std::size_t dims, int count = 3) {
    dpmtl::mtl::PredicateTable table;
    for (int k = 0; k < count; ++k) {
        const std::string name = "p" + std::to_string(k);
        if (k % 2 == 0) {
            dpmtl::mtl::State lo(dims), hi(dims);
            for (std::size_t d = 0; d < dims; ++d) {
                const double c = uniform(rng, -1.5, 1.5);
                const double w = uniform(rng, 0.3, 2.0);
                lo[d] = c - w;
                hi[d] = c + w;
            }
            table.emplace(name, std::make_shared<const dpmtl::mtl::Predicate>(dpmtl::mtl::Predicate::box(name, lo, hi)));
        } else {
            std::vector<dpmtl::mtl::Halfspace> faces;
            const int n = uniform_int(rng, 1, 2);
            for (int f = 0; f < n; ++f) {
                dpmtl::mtl::Halfspace h;
                for (std::size_t d = 0; d < dims; ++d) h.normal.push_back(uniform(rng, -1.0, 1.0));
                h.normal[0] += h.normal[0] >= 0 ? 0.2 : -0.2;
                h.offset = uniform(rng, -1.0, 1.0);
                faces.push_back(h);
            }
            table.emplace(name, std::make_shared<const dpmtl::mtl::Predicate>(name, faces));
        }
    }
    return table;
}

/// Random formula without `true` leaves; temporal bounds keep horizon(f) <= budget.
inline dpmtl::mtl::FormulaPtr random_formula(Rng& rng, const dpmtl::mtl::PredicateTable& preds, int depth, int budget) {
    using namespace dpmtl::mtl;
    auto atom = [&] {
        auto it = preds.begin();
        std::advance(it, uniform_int(rng, 0, static_cast<int>(preds.size()) - 1));
        return make_atom(it->second);
    };
    if (depth == 0) return uniform_int(rng, 0, 4) == 0 ? make_not(atom()) : atom();
    auto interval = [&] {
        const int b = uniform_int(rng, 0, budget);
        return Interval(uniform_int(rng, 0, b), b);
    };
    switch (uniform_int(rng, 0, 7)) {
        case 0: return atom();
        case 1: return make_not(random_formula(rng, preds, depth - 1, budget));
        case 2: return make_and(random_formula(rng, preds, depth - 1, budget), random_formula(rng, preds, depth - 1, budget));
        case 3: return make_or(random_formula(rng, preds, depth - 1, budget), random_formula(rng, preds, depth - 1, budget));
        case 4: {
            const Interval iv = interval();
            return make_eventually(iv, random_formula(rng, preds, depth - 1, budget - iv.b));
        }
        case 5: {
            const Interval iv = interval();
            return make_globally(iv, random_formula(rng, preds, depth - 1, budget - iv.b));
        }
        default: {
            const Interval iv = interval();
            return make_until(iv, random_formula(rng, preds, depth - 1, budget - iv.b),
                              random_formula(rng, preds, depth - 1, budget - iv.b));
        }
    }
}

inline dpmtl::mtl::Trajectory random_trajectory(Rng& rng, std::size_t length, std::size_t dims) {
    std::vector<dpmtl::mtl::State> s(length, dpmtl::mtl::State(dims));
    for (auto& x : s) {
        for (double& v : x) v = uniform(rng, -3.0, 3.0);
    }
    return dpmtl::mtl::Trajectory(std::move(s));
}

// ---------------------------------------------------------------- MILP

/// Minimum of a MILP by enumerating every binary assignment and, for each,
/// every vertex of the remaining polytope (all continuous variables must be
/// bounded). Returns nullopt when infeasible.
inline std::optional<double> brute_force_milp(const dpmtl::milp::Model& m, double tol = 1e-7) {
    using namespace dpmtl::milp;
    const auto& vars = m.variables();
    std::vector<int> bins, conts;
    for (int j = 0; j < static_cast<int>(vars.size()); ++j) {
        (vars[static_cast<std::size_t>(j)].kind == VarKind::Binary ? bins : conts).push_back(j);
    }
    const int n = static_cast<int>(conts.size());
    std::vector<int> col(vars.size(), -1);
    for (int k = 0; k < n; ++k) col[static_cast<std::size_t>(conts[static_cast<std::size_t>(k)])] = k;

    // Rows over the continuous variables: a.x (rel) rhs - a_bin.z.
    struct Row {
        Eigen::VectorXd a;
        double rhs;
        Relation rel;
    };
    std::optional<double> best;
    std::vector<double> x(vars.size(), 0.0);
    for (long mask = 0; mask < (1L << bins.size()); ++mask) {
        for (std::size_t b = 0; b < bins.size(); ++b) x[static_cast<std::size_t>(bins[b])] = (mask >> b) & 1 ? 1.0 : 0.0;
        std::vector<Row> rows;
        for (const auto& c : m.constraints()) {
            Row r{Eigen::VectorXd::Zero(n), c.rhs, c.relation};
            for (auto [j, a] : c.terms) {
                if (col[static_cast<std::size_t>(j)] >= 0) {
                    r.a(col[static_cast<std::size_t>(j)]) += a;
                } else {
                    r.rhs -= a * x[static_cast<std::size_t>(j)];
                }
            }
            rows.push_back(r);
        }
        for (int k = 0; k < n; ++k) {
            const auto& v = vars[static_cast<std::size_t>(conts[static_cast<std::size_t>(k)])];
            Eigen::VectorXd e = Eigen::VectorXd::Zero(n);
            e(k) = 1.0;
            rows.push_back({e, v.lower, Relation::GreaterEqual});
            rows.push_back({e, v.upper, Relation::LessEqual});
        }
        auto feasible = [&](const Eigen::VectorXd& p) {
            for (const auto& r : rows) {
                const double lhs = r.a.dot(p);
                const double slack = tol * (1.0 + std::abs(r.rhs));
                if (r.rel != Relation::GreaterEqual && lhs > r.rhs + slack) return false;
                if (r.rel != Relation::LessEqual && lhs < r.rhs - slack) return false;
            }
            return true;
        };
        auto objective = [&](const Eigen::VectorXd& p) {
            for (int k = 0; k < n; ++k) x[static_cast<std::size_t>(conts[static_cast<std::size_t>(k)])] = p(k);
            return m.objective().evaluate(x);
        };
        if (n == 0) {
            if (feasible(Eigen::VectorXd())) {
                const double v = objective(Eigen::VectorXd());
                if (!best || v < *best) best = v;
            }
            continue;
        }
        // Choose n rows to be tight.
        const int R = static_cast<int>(rows.size());
        std::vector<int> pick(static_cast<std::size_t>(n));
        for (int k = 0; k < n; ++k) pick[static_cast<std::size_t>(k)] = k;
        while (true) {
            Eigen::MatrixXd A(n, n);
            Eigen::VectorXd b(n);
            for (int k = 0; k < n; ++k) {
                A.row(k) = rows[static_cast<std::size_t>(pick[static_cast<std::size_t>(k)])].a.transpose();
                b(k) = rows[static_cast<std::size_t>(pick[static_cast<std::size_t>(k)])].rhs;
            }
            Eigen::FullPivLU<Eigen::MatrixXd> lu(A);
            if (lu.rank() == n) {
                const Eigen::VectorXd p = lu.solve(b);
                if (feasible(p)) {
                    const double v = objective(p);
                    if (!best || v < *best) best = v;
                }
            }
            int k = n - 1;
            while (k >= 0 && pick[static_cast<std::size_t>(k)] == R - n + k) --k;
            if (k < 0) break;
            ++pick[static_cast<std::size_t>(k)];
            for (int q = k + 1; q < n; ++q) pick[static_cast<std::size_t>(q)] = pick[static_cast<std::size_t>(q - 1)] + 1;
        }
    }
    return best;
}

/// Random bounded MILP: binaries in {0,1}, continuous variables in small
/// boxes, a handful of rows with integer-ish coefficients.
inline dpmtl::milp::Model random_milp(Rng& rng, int binaries, int continuous, int rows) {
    using namespace dpmtl::milp;
    Model m;
    std::vector<VarId> vars;
    for (int k = 0; k < binaries; ++k) vars.push_back(m.add_binary("z" + std::to_string(k)));
    for (int k = 0; k < continuous; ++k) {
        const double lo = uniform_int(rng, -4, 0);
        vars.push_back(m.add_continuous("x" + std::to_string(k), lo, lo + uniform_int(rng, 1, 8)));
    }
    std::shuffle(vars.begin(), vars.end(), rng);
    for (int r = 0; r < rows; ++r) {
        LinearExpr e;
        for (VarId v : vars) {
            if (uniform_int(rng, 0, 2) == 0) continue;
            e.add(v, uniform_int(rng, -6, 6) + (uniform_int(rng, 0, 3) == 0 ? 0.5 : 0.0));
        }
        const int kind = uniform_int(rng, 0, 9);
        const Relation rel = kind < 5 ? Relation::LessEqual : kind < 9 ? Relation::GreaterEqual : Relation::Equal;
        m.add_constraint(e, rel, uniform_int(rng, -6, 8));
    }
    LinearExpr obj;
    for (VarId v : vars) obj.add(v, uniform_int(rng, -10, 10) + uniform(rng, -0.5, 0.5));
    m.set_objective(obj);
    return m;
}

// ---------------------------------------------------------------- privacy

/// Upper normal tail by composite Gauss-Legendre quadrature of the density
/// over [y, y + 40].
inline double q_quadrature(double y) {
    static const double nodes[] = {-0.9061798459386640, -0.5384693101056831, 0.0, 0.5384693101056831,
                                   0.9061798459386640};
    static const double weights[] = {0.2369268850561891, 0.4786286704993665, 0.5688888888888889, 0.4786286704993665,
                                     0.2369268850561891};
    if (y < 0) return 1.0 - q_quadrature(-y);
    const int panels = 4000;
    const double h = 40.0 / panels;
    double sum = 0.0;
    for (int p = 0; p < panels; ++p) {
        const double mid = y + (p + 0.5) * h;
        for (int k = 0; k < 5; ++k) {
            const double s = mid + 0.5 * h * nodes[k];
            sum += weights[k] * 0.5 * h * std::exp(-0.5 * s * s);
        }
    }
    return sum / std::sqrt(2.0 * M_PI);
}

inline double q_inverse_bisection(double delta) {
    double lo = -10.0, hi = 10.0;
    for (int it = 0; it < 200; ++it) {
        const double mid = 0.5 * (lo + hi);
        (q_quadrature(mid) > delta ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
}

inline double sigma_reference(double sensitivity, double eps, double delta) {
    const double k = q_inverse_bisection(delta);
    return sensitivity / (2.0 * eps) * (k + std::sqrt(k * k + 2.0 * eps));
}

// ---------------------------------------------------------------- spectra

/// Second largest eigenvalue magnitude of a symmetric doubly stochastic matrix.
inline double lambda2_reference(const Eigen::MatrixXd& V) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(V);
    std::vector<double> ev(es.eigenvalues().data(), es.eigenvalues().data() + es.eigenvalues().size());
    std::sort(ev.begin(), ev.end(), [](double a, double b) { return std::abs(a) > std::abs(b); });
    return ev.size() < 2 ? 0.0 : std::abs(ev[1]);
}

}  // namespace oracle
