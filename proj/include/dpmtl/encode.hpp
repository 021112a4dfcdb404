#pragma once

// MILP encodings of MTL robustness and the confidence-level recursion used
// to turn an estimation error bound into a robustness threshold.

#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <tuple>
#include <vector>

#include "dpmtl/milp.hpp"
#include "dpmtl/mtl.hpp"

namespace dpmtl::encode {

class EncodeError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Raised after a solve when a robustness value sits at the big-M limit.
class BigMError : public EncodeError {
public:
    using EncodeError::EncodeError;
};

struct EncodingConfig {
    double big_M = 1000.0;
    std::optional<double> r_min;  // adds rho >= r_min on the encoded root
    int window_offset = 0;
};

/// Maps (time step, dimension) to an affine expression over model variables.
/// A plain decision variable is the special case of a single unit term.
class StateTable {
public:
    explicit StateTable(std::size_t dimension);

    void set(int t, const std::vector<milp::LinearExpr>& state);
    void set(int t, std::size_t d, milp::LinearExpr e);
    const milp::LinearExpr& at(int t, std::size_t d) const;
    bool has(int t) const;
    std::size_t dimension() const noexcept { return dimension_; }

    /// Table of constants, one row per sample of the trajectory.
    static StateTable constant(const mtl::Trajectory& traj);

private:
    std::size_t dimension_;
    std::map<int, std::vector<milp::LinearExpr>> rows_;
};

/// Face slack (offset - normal.s) / |normal| of one halfspace at time t.
milp::LinearExpr face_slack(const mtl::Halfspace& face, const StateTable& states, int t);

/// Lower and upper bound of an affine expression over the model's variable bounds.
std::pair<double, double> expression_range(const milp::LinearExpr& e, const milp::Model& model);

/// Two-sided big-M encoding: at any feasible point the returned variable
/// equals the robustness of `f` at time t of the trajectory in `states`.
class RobustnessEncoder {
public:
    RobustnessEncoder(milp::Model& model, const StateTable& states, EncodingConfig cfg);

    milp::VarId encode(const mtl::Formula& f, int t);

    /// Throws BigMError if any auxiliary robustness value is within 1e-3 of big_M.
    void check_big_m(const milp::Solution& sol) const;

    std::size_t binaries() const noexcept { return binaries_; }

private:
    struct Value {
        milp::LinearExpr expr;
        int infinite = 0;  // +1: +inf, -1: -inf
    };

    Value value(const mtl::Formula& f, int t);
    Value extremum(std::vector<Value> operands, bool is_min);

    milp::Model& model_;
    const StateTable& states_;
    EncodingConfig cfg_;
    std::map<std::pair<const mtl::Formula*, int>, Value> memo_;
    std::vector<milp::VarId> aux_;
    std::size_t binaries_ = 0;
};

/// Convenience wrapper: encodes f at t and applies cfg.r_min if present.
milp::VarId encode_robustness(const mtl::Formula& f, const StateTable& states, int t, milp::Model& model,
                              const EncodingConfig& cfg);

/// One-sided encoding for constraints of the form rho(f, t) >= r. Only the
/// implication "literal -> rho >= r" is modelled, so conjunctive operators
/// need no binaries; disjunctive operators introduce one literal per branch.
/// Big-M values are tightened per row from the expression range when the
/// variables involved are bounded.
class ThresholdEncoder {
public:
    ThresholdEncoder(milp::Model& model, const StateTable& states, double big_M);

    void require_at_least(const mtl::Formula& f, int t, double r);

    /// True if some requirement is violated by constants alone.
    bool trivially_infeasible() const noexcept { return infeasible_; }
    std::size_t binaries() const noexcept { return binaries_; }
    std::size_t rows() const noexcept { return rows_; }

private:
    using Literal = std::optional<milp::VarId>;

    void imply(const mtl::Formula& f, int t, double r, bool geq, Literal lit);
    void imply_face(const milp::LinearExpr& slack, double r, bool geq, Literal lit);
    // Disjunction over branches: at least one branch literal is on when `lit` is.
    void any_of(const std::vector<std::tuple<const mtl::Formula*, int, bool>>& branches, double r, Literal lit);
    milp::VarId branch_literal(const mtl::Formula* f, int t, double r, bool geq);
    void mark_infeasible();

    milp::Model& model_;
    const StateTable& states_;
    double big_M_;
    bool infeasible_ = false;
    std::size_t binaries_ = 0;
    std::size_t rows_ = 0;
    std::map<std::tuple<const mtl::Formula*, int, double, bool>, milp::VarId> literals_;
    std::set<std::tuple<const mtl::Formula*, int, double, bool, int>> done_;
};

enum class ConfidenceMode { PaperFaithful, Sound };

/// Lower bound on the probability that the true average trajectory satisfies
/// f at time t, given per-step error bounds eps[k] (indexed by absolute time).
double confidence_lower_bound(const mtl::Formula& f, const std::vector<double>& eps, double r_min, int t,
                              ConfidenceMode mode);

/// Smallest r with confidence_lower_bound(f, eps, r, t, mode) >= gamma_min for
/// every t in [t_first, t_last]. Throws EncodeError if no finite r reaches it.
double required_rmin(const mtl::Formula& f, const std::vector<double>& eps, double gamma_min, ConfidenceMode mode,
                     int t_first = 0, int t_last = 0);

}  // namespace dpmtl::encode
