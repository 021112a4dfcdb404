#pragma once

// Small dense mixed-integer linear programming: a model container, a
// bounded-variable simplex for the relaxation and best-first branch and bound.

#include <cstddef>
#include <iosfwd>
#include <limits>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace dpmtl::milp {

constexpr double kInfinity = std::numeric_limits<double>::infinity();

class SolverError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct VarId {
    int index = -1;
    bool operator==(const VarId&) const = default;
    bool operator<(const VarId& o) const { return index < o.index; }
};

/// Sparse affine expression sum_k coeff_k * x_k + constant. Terms stay
/// sorted by variable index with no zero coefficients.
class LinearExpr {
public:
    using Term = std::pair<int, double>;

    LinearExpr() = default;
    LinearExpr(double constant) : constant_(constant) {}  // NOLINT(implicit)
    LinearExpr(VarId v, double coeff = 1.0);

    LinearExpr& add(VarId v, double coeff);
    LinearExpr& operator+=(const LinearExpr& other);
    LinearExpr& operator-=(const LinearExpr& other);
    LinearExpr& operator*=(double s);
    LinearExpr& operator+=(double c) { constant_ += c; return *this; }

    /// this += s * other, without a temporary.
    LinearExpr& add_scaled(const LinearExpr& other, double s);

    const std::vector<Term>& terms() const noexcept { return terms_; }
    double constant() const noexcept { return constant_; }
    bool is_constant() const noexcept { return terms_.empty(); }

    double evaluate(const std::vector<double>& values) const;

private:
    std::vector<Term> terms_;
    double constant_ = 0.0;
};

LinearExpr operator+(LinearExpr a, const LinearExpr& b);
LinearExpr operator-(LinearExpr a, const LinearExpr& b);
LinearExpr operator-(LinearExpr a);
LinearExpr operator*(LinearExpr a, double s);
LinearExpr operator*(double s, LinearExpr a);

enum class VarKind { Continuous, Binary };
enum class Relation { LessEqual, Equal, GreaterEqual };

struct Variable {
    std::string name;
    VarKind kind = VarKind::Continuous;
    double lower = 0.0;
    double upper = kInfinity;
};

/// Stored as terms (relation) rhs; the expression constant is folded into rhs.
struct Constraint {
    std::vector<LinearExpr::Term> terms;
    Relation relation = Relation::LessEqual;
    double rhs = 0.0;
    std::string name;
};

/// Minimisation model.
class Model {
public:
    VarId add_variable(std::string name, VarKind kind, double lower, double upper);
    VarId add_continuous(std::string name, double lower = 0.0, double upper = kInfinity) {
        return add_variable(std::move(name), VarKind::Continuous, lower, upper);
    }
    VarId add_binary(std::string name) { return add_variable(std::move(name), VarKind::Binary, 0.0, 1.0); }

    void set_bounds(VarId v, double lower, double upper);

    void add_constraint(const LinearExpr& expr, Relation relation, double rhs, std::string name = {});
    void set_objective(LinearExpr objective);

    const std::vector<Variable>& variables() const noexcept { return variables_; }
    const std::vector<Constraint>& constraints() const noexcept { return constraints_; }
    const LinearExpr& objective() const noexcept { return objective_; }
    std::size_t num_variables() const noexcept { return variables_.size(); }
    std::size_t num_constraints() const noexcept { return constraints_.size(); }
    std::size_t num_binaries() const;

    /// Plain-text dump in LP-like syntax, one constraint per line.
    void write_lp(std::ostream& os) const;

private:
    void check_var(VarId v) const;

    std::vector<Variable> variables_;
    std::vector<Constraint> constraints_;
    LinearExpr objective_;
};

enum class Status { Optimal, Infeasible, Unbounded };

const char* to_string(Status s);

struct Solution {
    Status status = Status::Infeasible;
    std::vector<double> values;
    double objective = kInfinity;
    long nodes = 0;
    long iterations = 0;

    bool optimal() const noexcept { return status == Status::Optimal; }
    double value(VarId v) const { return values.at(static_cast<std::size_t>(v.index)); }
    double value(const LinearExpr& e) const { return e.evaluate(values); }
};

struct SolverOptions {
    double feasibility_tol = 1e-7;
    double integrality_tol = 1e-6;
    double objective_tol = 1e-6;
    long node_limit = 200000;
    long iteration_limit = 200000;  // per LP
    std::ostream* dump = nullptr;   // receives write_lp output before solving
};

/// Thrown by solve_milp when the node budget runs out. Carries the best
/// integer solution found so far, if any.
class NodeLimitError : public SolverError {
public:
    NodeLimitError(long nodes, Solution incumbent, bool has_incumbent);
    const Solution& incumbent() const noexcept { return incumbent_; }
    bool has_incumbent() const noexcept { return has_incumbent_; }

private:
    Solution incumbent_;
    bool has_incumbent_;
};

/// Solves the continuous relaxation (binaries treated as [0,1]).
Solution solve_lp(const Model& model, const SolverOptions& options = {});

Solution solve_milp(const Model& model, const SolverOptions& options = {});

/// Largest violation of bounds and constraints by `values`.
double max_violation(const Model& model, const std::vector<double>& values);

}  // namespace dpmtl::milp
